# Probabilistic payments: only PoDs whose signature hash is divisible by N
# settle, so the ledger sees 1/N of the traffic at N times the price.

import numpy as np

from podnet import econ
from podnet.sim import SimConfig, run_payment_variance, run_scenario

cfg = SimConfig(num_peers=10, n=10, l=10, num_downloads=500, seed=1)
m = run_scenario(cfg).metrics
chunks = cfg.l * cfg.num_downloads
print(f"{chunks} chunks, {m.settled_payouts} payouts (expected {chunks / cfg.n:.0f})")
print("paid in total:", m.total_paid, "micro-units; conserved:", m.conserved)
print("per peer:", m.per_peer_payouts)

# A peer that earns 10 payouts a day sees about 300 a month.  The monthly
# count is Binomial, so its spread is close to sqrt(300).
stats = econ.payout_stats(300, 1 / 20)
print(f"closed form: mean 300, std {stats.std:.1f}, relative {stats.relative_std:.1%}")

# a shorter run than the acceptance test; 40 months
res = run_payment_variance(SimConfig(n=20, payouts_per_peer_per_day=10, days_per_period=30), days=40 * 30)
counts = np.array(res.counts)
print(f"simulated {res.periods} months: mean {counts.mean():.1f}, std {counts.std(ddof=1):.1f}")
hist, edges = np.histogram(counts, bins=6)
for h, lo in zip(hist, edges):
    print(f"{lo:6.0f} {'#' * h}")
