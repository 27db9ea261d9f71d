# How many peers can a chain with Ethereum-like throughput pay, if every
# peer settles 10 payouts a day?

from podnet import econ
from podnet.ledger import ETHEREUM_DAILY_TX
from podnet.sim import SimConfig, run_capacity_probe

print("peers supported:", econ.peer_capacity(ETHEREUM_DAILY_TX, 10))
print("with 100x the throughput:", econ.peer_capacity(100 * ETHEREUM_DAILY_TX, 10))

# a toy ledger that takes 1000 transactions a day, probed around its limit
for peers in (50, 100, 150):
    res = run_capacity_probe(SimConfig(daily_capacity=1000, payouts_per_peer_per_day=10, n=1), peers)
    print(f"{peers} peers: {res.settled} settled, {res.capacity_rejections} turned away")

# Raising N cuts transactions per chunk by N; the payment per eligible PoD
# rises by the same factor so the expected pay per chunk does not change.
for n in (1, 10, 100):
    print(f"N={n:3d}: chunks a day a ledger slot can cover = {n}, payment per eligible PoD = {2000 * n}")
