# One download, start to finish: contract, certificate, proofs of delivery,
# a saved chain file, and what happens when a single byte is changed.

import random

from podnet import cli
from podnet.actors import chunk_data
from podnet.contract import is_payment_eligible, new_contract
from podnet.podchain import (
    ProviderState, append_pod, chain_digest, dumps_chain, generate_pod,
    issue_ic, new_chain, pod_tick, verify_chain, write_chain_file,
)
from podnet.primitives import hash_bytes, keypair_for

provider = keypair_for("provider")
backup = keypair_for("backup")
peers = [keypair_for(f"peer-{i}") for i in range(3)]

# the file is 5 chunks; one PoD in 4 pays 8000 micro-units, so 2000 per chunk on average
chunks = [chunk_data(b"movie.mp4", k) for k in range(5)]
contract = new_contract(b"movie.mp4", provider.verifying_key, 8000, 4,
                        [hash_bytes(c) for c in chunks], p=0.05)
print("expected payment per chunk:", contract.expected_payment_per_chunk)

state = ProviderState(provider, backup.verifying_key, "backup.cdn:443")
for i, kp in enumerate(peers):
    state.register_host(b"movie.mp4", kp.verifying_key, f"10.0.0.{i}:7000")

ic = issue_ic(state, contract, random.Random(1), now=100)
names = {kp.verifying_key: name for name, kp in [("backup", backup)] + [(f"peer-{i}", kp) for i, kp in enumerate(peers)]}
keys = {kp.verifying_key: kp for kp in [backup, *peers]}
print("nonce", ic.nonce, "assignments:", [names[a.peer_key] for a in ic.peer_assignments])

# each server signs the digest of everything that came before its chunk
chain = new_chain(ic)
for k in range(contract.chunk_count_l):
    server = keys[ic.peer_assignments[k].peer_key]
    pod = generate_pod(server, chain_digest(chain), k, pod_tick(ic, k))
    chain = append_pod(chain, pod)
    print(f"chunk {k}: {names[pod.peer_key]:7s} eligible={is_payment_eligible(pod, contract)}")

print("verify:", verify_chain(chain, contract))

write_chain_file("/tmp/demo_chain.podc", chain)
cli.main(["verify", "/tmp/demo_chain.podc"])

# flip one bit in the middle of the file and ask again
data = bytearray(dumps_chain(chain))
data[len(data) // 2] ^= 1
with open("/tmp/demo_chain_bad.podc", "wb") as fh:
    fh.write(data)
print("exit code:", cli.main(["verify", "/tmp/demo_chain_bad.podc"]))
