# Four misbehaviours and how the protocol reacts to each.

from podnet.sim import SimConfig, run_detection_trials, run_scenario

base = dict(num_peers=8, l=8, n=10, p=0.1, num_downloads=60, seed=4)

# A peer that pretends to serve: the client checks the chunk hash and goes to
# the backup node; the peer never sees a prefix digest, so it can never sign.
m = run_scenario(SimConfig(scenario="malicious-peer", num_malicious_peers=3, **base)).metrics
print("non-serving peers -> fallbacks:", m.fallbacks, "payouts:",
      {k: v for k, v in m.per_peer_payouts.items() if k in ("peer-0", "peer-1", "peer-2")})

# A provider that reissues an unpaid certificate to dodge payments: the first
# replayed nonce gets it quarantined by every peer that sees it.
m = run_scenario(SimConfig(scenario="malicious-provider-nonce", **base)).metrics
print("nonce replays:", m.provider_replays, "quarantined by:", [q["peer"] for q in m.quarantines])

# Clients that never hand over their chain are caught at the first audit.
for scenario in ("client-provider-collusion", "dos"):
    m = run_scenario(SimConfig(scenario=scenario, **base)).metrics
    print(scenario, "detections:", m.detections, "chunks before each:", m.time_to_detect[:10])

# How long a withholding client lasts against one peer, for a few audit rates
for p in (0.05, 0.1, 0.2):
    res = run_detection_trials(SimConfig(p=p, n=10**6, l=20), 1000)
    print(f"p={p}: {res.mean:.1f} chunks before detection (1/p = {res.oracle:.0f})")
