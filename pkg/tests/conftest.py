import random

import pytest

from podnet.actors import chunk_data
from podnet.contract import new_contract
from podnet.podchain import (
    ProviderState,
    append_pod,
    chain_digest,
    generate_pod,
    issue_ic,
    new_chain,
    pod_tick,
)
from podnet.primitives import hash_bytes, keygen_from_seed


def seed_of(n: int) -> bytes:
    return bytes([n]) * 32


@pytest.fixture(scope="session")
def provider_kp():
    return keygen_from_seed(seed_of(1))


@pytest.fixture(scope="session")
def backup_kp():
    return keygen_from_seed(seed_of(2))


@pytest.fixture(scope="session")
def peer_kps():
    return [keygen_from_seed(seed_of(10 + i)) for i in range(4)]


def make_contract(provider_kp, l=3, n=1, payment=2000, p=0.01, file_id=b"file-0"):
    hashes = [hash_bytes(chunk_data(file_id, k)) for k in range(l)]
    return new_contract(file_id, provider_kp.verifying_key, payment, n, hashes, p)


def make_provider(provider_kp, backup_kp, peer_kps, file_id=b"file-0"):
    state = ProviderState(provider_kp, backup_kp.verifying_key, "backup.cdn:443")
    for i, kp in enumerate(peer_kps):
        state.register_host(file_id, kp.verifying_key, f"10.0.0.{i}:7000")
    return state


def build_chain(state, contract, keys_by_vk, seed=0, upto=None):
    """Honest chain: every assigned party signs its prefix in order."""
    ic = issue_ic(state, contract, random.Random(seed), now=100)
    chain = new_chain(ic)
    count = contract.chunk_count_l if upto is None else upto
    for k in range(count):
        kp = keys_by_vk[ic.peer_assignments[k].peer_key]
        pod = generate_pod(kp, chain_digest(chain), k, pod_tick(ic, k))
        chain = append_pod(chain, pod)
    return chain


@pytest.fixture
def contract(provider_kp):
    return make_contract(provider_kp)


@pytest.fixture
def provider_state(provider_kp, backup_kp, peer_kps):
    return make_provider(provider_kp, backup_kp, peer_kps)


@pytest.fixture
def keys_by_vk(backup_kp, peer_kps):
    return {kp.verifying_key: kp for kp in [backup_kp, *peer_kps]}


@pytest.fixture
def honest_chain(provider_state, contract, keys_by_vk):
    return build_chain(provider_state, contract, keys_by_vk)


# -- acceptance report --------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
