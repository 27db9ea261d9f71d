# When does colluding with clients pay?  The trusted first chunk costs the
# attacker x every time; each later chunk is free with probability m and pays
# y in expectation.  Break-even sits at y = x(1/m - 1).

import numpy as np

from podnet import econ
from podnet.sim import SimConfig, run_sybil_sweep

x, y, l = 1000, 2000, 20
print("threshold m for y = 2x:", econ.max_collusion_fraction(x, y))

for m in np.linspace(0.1, 0.6, 6):
    params = econ.EconParams(x=x, y=y, m=m, l=l)
    net = econ.attack_payment(l, params) - econ.attack_cost(l, params)
    print(f"m={m:.1f}  closed-form net per download {net:+8.0f}  unfeasible={econ.feasibility_verdict(params).sybil_unfeasible}")

# the same thing by simulation, 30 hosts so m = k/30
cfg = SimConfig(scenario="sybil", num_peers=30, l=l, x=x, y=y, n=20, num_downloads=50_000)
for row in run_sybil_sweep(cfg, [0.2, 0.3, 1 / 3, 0.4, 0.5]):
    print(f"m={row.m:.3f}  simulated net {row.net:+8.0f} +/- {row.net_se:.0f}   "
          f"oracle {row.oracle_payment - row.oracle_cost:+8.0f}")

# Exactly at m = 1/3 the later chunks break even and only the first chunk is
# lost, so the attacker is down x per download whatever l is.
