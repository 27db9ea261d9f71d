"""Initial Certificates, Proofs of Delivery and the PoD chain.

A download produces a chain rooted at a provider-signed Initial Certificate
(IC).  After chunk ``k`` is delivered the client hands the serving peer the
digest of the chain so far; the peer signs that digest and the resulting PoD
is appended.  Because every prefix digest covers the IC (and so its nonce),
a PoD cannot be moved to another position or another download.

Chunk 0 is always assigned to the backup node inside the IC, so the
first-chunk rule can be checked from the chain alone.  The backup node may
also stand in for any other assigned peer.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
import struct
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

from .contract import SmartContract
from .primitives import (
    KEY_SIZE,
    EncodingError,
    KeyPair,
    PodnetError,
    Reader,
    Writer,
    canonical_decode,
    canonical_encode,
    hash_bytes,
    sign_digest,
    verify_signature,
)

CHAIN_FILE_MAGIC = b"PODC0001"
DEFAULT_WINDOW_SIZE = 1024


class ChainError(PodnetError, ValueError):
    reason = "invalid-chain"


class OutOfOrder(ChainError):
    reason = "out-of-order"


class WrongPeer(ChainError):
    reason = "wrong-peer"


class StalePrefix(ChainError):
    reason = "stale-prefix"


class InvalidSignature(ChainError):
    reason = "invalid-signature"


class BadTimestamp(ChainError):
    reason = "bad-timestamp"


# -- records ---------------------------------------------------------------

@dataclass(frozen=True)
class PeerAssignment:
    chunk_index: int
    peer_key: bytes
    peer_address: str

    @cached_property
    def encoded(self) -> bytes:
        return Writer().u64(self.chunk_index).bytes_(self.peer_key).text(self.peer_address).getvalue()

    def write_to(self, w: Writer) -> None:
        w.raw(self.encoded)

    @classmethod
    def read_from(cls, r: Reader) -> "PeerAssignment":
        return cls(r.u64(), r.bytes_(), r.text())


@dataclass(frozen=True)
class InitialCertificate:
    nonce: int
    file_id: bytes
    peer_assignments: tuple[PeerAssignment, ...]
    backup_key: bytes
    backup_address: str
    provider_key: bytes
    timestamp: int
    provider_signature: bytes = b""

    def _write_unsigned(self, w: Writer) -> None:
        w.u64(self.nonce)
        w.bytes_(self.file_id)
        w.list_(self.peer_assignments, lambda w_, a: a.write_to(w_))
        w.bytes_(self.backup_key)
        w.text(self.backup_address)
        w.bytes_(self.provider_key)
        w.u64(self.timestamp)

    @cached_property
    def _unsigned(self) -> bytes:
        w = Writer()
        self._write_unsigned(w)
        return w.getvalue()

    @cached_property
    def signing_digest(self) -> bytes:
        """Digest of every field preceding the provider signature."""
        return hash_bytes(self._unsigned)

    @cached_property
    def encoded(self) -> bytes:
        return Writer().raw(self._unsigned).bytes_(self.provider_signature).getvalue()

    def write_to(self, w: Writer) -> None:
        w.raw(self.encoded)

    @classmethod
    def read_from(cls, r: Reader) -> "InitialCertificate":
        return cls(
            nonce=r.u64(),
            file_id=r.bytes_(),
            peer_assignments=tuple(r.list_(PeerAssignment.read_from)),
            backup_key=r.bytes_(),
            backup_address=r.text(),
            provider_key=r.bytes_(),
            timestamp=r.u64(),
            provider_signature=r.bytes_(),
        )

    def assignment(self, chunk_index: int) -> PeerAssignment:
        return self.peer_assignments[chunk_index]


@dataclass(frozen=True)
class ProofOfDelivery:
    chunk_index: int
    peer_key: bytes
    prefix_digest: bytes
    timestamp: int
    signature: bytes

    @cached_property
    def encoded(self) -> bytes:
        return (
            Writer()
            .u64(self.chunk_index)
            .bytes_(self.peer_key)
            .bytes_(self.prefix_digest)
            .u64(self.timestamp)
            .bytes_(self.signature)
            .getvalue()
        )

    @property
    def digest(self) -> bytes:
        return hash_bytes(self.encoded)

    def write_to(self, w: Writer) -> None:
        w.raw(self.encoded)

    @classmethod
    def read_from(cls, r: Reader) -> "ProofOfDelivery":
        return cls(r.u64(), r.bytes_(), r.bytes_(), r.u64(), r.bytes_())


@dataclass(frozen=True)
class PoDChain:
    ic: InitialCertificate
    pods: tuple[ProofOfDelivery, ...] = ()

    def __len__(self) -> int:
        return len(self.pods)

    @property
    def last(self) -> Optional[ProofOfDelivery]:
        return self.pods[-1] if self.pods else None

    def truncated(self, k: int) -> "PoDChain":
        return PoDChain(self.ic, self.pods[:k])

    def write_to(self, w: Writer) -> None:
        w.raw(self.ic.encoded)
        w.u32(len(self.pods))
        for pod in self.pods:
            w.raw(pod.encoded)

    @classmethod
    def read_from(cls, r: Reader) -> "PoDChain":
        ic = InitialCertificate.read_from(r)
        return cls(ic, tuple(r.list_(ProofOfDelivery.read_from)))


@dataclass(frozen=True)
class ChainVerdict:
    """Outcome of :func:`verify_chain`; truthy iff the chain is valid."""

    valid: bool
    reason: Optional[str] = None
    index: Optional[int] = None

    def __bool__(self) -> bool:
        return self.valid


# -- provider side ---------------------------------------------------------

@dataclass
class HostEntry:
    key: bytes
    address: str
    chunks: Optional[frozenset[int]] = None  # None means the whole file
    live: bool = True

    def hosts(self, chunk_index: int) -> bool:
        return self.live and (self.chunks is None or chunk_index in self.chunks)


@dataclass
class ProviderState:
    """What a provider needs to issue certificates: keys, hosts, last nonce."""

    keypair: KeyPair
    backup_key: bytes
    backup_address: str
    hosts: dict[bytes, list[HostEntry]] = field(default_factory=dict)
    last_nonce: int = 0

    def register_host(self, file_id: bytes, key: bytes, address: str,
                      chunks: Optional[Iterable[int]] = None) -> None:
        entry = HostEntry(key, address, None if chunks is None else frozenset(chunks))
        self.hosts.setdefault(file_id, []).append(entry)

    def set_live(self, key: bytes, live: bool) -> None:
        for entries in self.hosts.values():
            for entry in entries:
                if entry.key == key:
                    entry.live = live


def sign_ic(ic: InitialCertificate, provider: KeyPair) -> InitialCertificate:
    unsigned = replace(ic, provider_key=provider.verifying_key, provider_signature=b"")
    return replace(unsigned, provider_signature=sign_digest(provider, unsigned.signing_digest))


def issue_ic(state: ProviderState, contract: SmartContract, rng, now: int = 0) -> InitialCertificate:
    """Issue a fresh signed IC with a strictly larger nonce.

    Chunk 0 goes to the backup node; every other chunk goes to a live host
    drawn uniformly with ``rng.randrange``, or to the backup node when no
    host is available for it.
    """
    state.last_nonce += 1
    pool = state.hosts.get(contract.file_id, [])
    assignments = [PeerAssignment(0, state.backup_key, state.backup_address)]
    for k in range(1, contract.chunk_count_l):
        candidates = [h for h in pool if h.hosts(k)]
        if candidates:
            pick = candidates[rng.randrange(len(candidates))]
            assignments.append(PeerAssignment(k, pick.key, pick.address))
        else:
            assignments.append(PeerAssignment(k, state.backup_key, state.backup_address))
    ic = InitialCertificate(
        nonce=state.last_nonce,
        file_id=contract.file_id,
        peer_assignments=tuple(assignments),
        backup_key=state.backup_key,
        backup_address=state.backup_address,
        provider_key=state.keypair.verifying_key,
        timestamp=now,
    )
    return sign_ic(ic, state.keypair)


def verify_ic(ic: InitialCertificate, contract: Optional[SmartContract] = None) -> bool:
    assignments = ic.peer_assignments
    if not assignments:
        return False
    for k, a in enumerate(assignments):
        if a.chunk_index != k or len(a.peer_key) != KEY_SIZE:
            return False
    first = assignments[0]
    if first.peer_key != ic.backup_key or first.peer_address != ic.backup_address:
        return False
    if contract is not None:
        if (ic.file_id != contract.file_id
                or ic.provider_key != contract.provider_key
                or len(assignments) != contract.chunk_count_l):
            return False
    return verify_signature(ic.provider_key, ic.signing_digest, ic.provider_signature)


# -- chain construction and verification -----------------------------------

def _prefix_digest(ic_encoded: bytes, pods: tuple[ProofOfDelivery, ...], k: int) -> bytes:
    h = hashlib.sha256(ic_encoded)
    h.update(struct.pack(">I", k))
    for pod in pods[:k]:
        h.update(pod.encoded)
    return h.digest()


def chain_digest(chain: PoDChain) -> bytes:
    """SHA-256 of the canonical encoding of ``chain``."""
    return _prefix_digest(chain.ic.encoded, chain.pods, len(chain.pods))


def pod_tick(ic: InitialCertificate, chunk_index: int) -> int:
    """Logical time of the exchange for ``chunk_index`` within a download.

    Exchanges happen one per tick after the IC is issued, so the timestamp
    carried by each PoD is fixed by its position and cannot be altered.
    """
    return ic.timestamp + chunk_index + 1


def new_chain(ic: InitialCertificate) -> PoDChain:
    return PoDChain(ic, ())


def generate_pod(peer: KeyPair, prefix_digest: bytes, chunk_index: int, now: int) -> ProofOfDelivery:
    return ProofOfDelivery(
        chunk_index=chunk_index,
        peer_key=peer.verifying_key,
        prefix_digest=bytes(prefix_digest),
        timestamp=now,
        signature=sign_digest(peer, prefix_digest),
    )


def verify_pod(pod: ProofOfDelivery, prefix_digest: Optional[bytes] = None) -> bool:
    if prefix_digest is not None and pod.prefix_digest != prefix_digest:
        return False
    return verify_signature(pod.peer_key, pod.prefix_digest, pod.signature)


def _check_link(ic: InitialCertificate, k: int, pod: ProofOfDelivery, expected_prefix: bytes) -> None:
    if pod.chunk_index != k or k >= len(ic.peer_assignments):
        raise OutOfOrder(f"expected chunk {k}, got {pod.chunk_index}")
    assigned = ic.peer_assignments[k].peer_key
    if pod.peer_key != assigned and pod.peer_key != ic.backup_key:
        raise WrongPeer(f"chunk {k} is not assigned to this peer")
    if pod.timestamp != pod_tick(ic, k):
        raise BadTimestamp(f"chunk {k} timestamp {pod.timestamp} != {pod_tick(ic, k)}")
    if pod.prefix_digest != expected_prefix:
        raise StalePrefix(f"chunk {k} signs a different chain prefix")
    if not verify_signature(pod.peer_key, pod.prefix_digest, pod.signature):
        raise InvalidSignature(f"chunk {k} signature does not verify")


def append_pod(chain: PoDChain, pod: ProofOfDelivery) -> PoDChain:
    """Return ``chain`` extended by ``pod``; raises a :class:`ChainError` subclass."""
    _check_link(chain.ic, len(chain.pods), pod, chain_digest(chain))
    return PoDChain(chain.ic, chain.pods + (pod,))


def verify_chain(chain: PoDChain, contract: Optional[SmartContract] = None) -> ChainVerdict:
    """Check the IC and every link, recomputing each prefix digest from scratch."""
    if not verify_ic(chain.ic, contract):
        return ChainVerdict(False, "invalid-ic")
    ic_encoded = chain.ic.encoded
    for k, pod in enumerate(chain.pods):
        try:
            _check_link(chain.ic, k, pod, _prefix_digest(ic_encoded, chain.pods, k))
        except ChainError as exc:
            return ChainVerdict(False, exc.reason, k)
    return ChainVerdict(True)


# -- nonce window ----------------------------------------------------------

class NonceVerdict(str, enum.Enum):
    ACCEPT = "accept"
    REJECT_REPLAY = "reject-replay"
    REJECT_STALE = "reject-stale"


@dataclass(frozen=True)
class NonceWindow:
    """Recently admitted nonces (sorted) plus the largest evicted one."""

    nonces: tuple[int, ...] = ()
    floor: int = 0
    size: int = DEFAULT_WINDOW_SIZE

    def __contains__(self, nonce: int) -> bool:
        i = bisect.bisect_left(self.nonces, nonce)
        return i < len(self.nonces) and self.nonces[i] == nonce


def nonce_admit(window: NonceWindow, nonce: int) -> tuple[NonceVerdict, NonceWindow]:
    if nonce in window:
        return NonceVerdict.REJECT_REPLAY, window
    if nonce <= window.floor:
        return NonceVerdict.REJECT_STALE, window
    nonces = list(window.nonces)
    bisect.insort(nonces, nonce)
    floor = window.floor
    if len(nonces) > window.size:
        floor = nonces.pop(0)
    return NonceVerdict.ACCEPT, NonceWindow(tuple(nonces), floor, window.size)


# -- chain files -----------------------------------------------------------

def dumps_chain(chain: PoDChain) -> bytes:
    return CHAIN_FILE_MAGIC + canonical_encode(chain)


def loads_chain(data: bytes) -> PoDChain:
    if data[:len(CHAIN_FILE_MAGIC)] != CHAIN_FILE_MAGIC:
        raise EncodingError("missing PODC0001 header")
    return canonical_decode(PoDChain, data[len(CHAIN_FILE_MAGIC):])


def write_chain_file(path, chain: PoDChain) -> None:
    Path(path).write_bytes(dumps_chain(chain))


def read_chain_file(path) -> PoDChain:
    return loads_chain(Path(path).read_bytes())


def check_chain_bytes(data: bytes, contract: Optional[SmartContract] = None) -> ChainVerdict:
    """Decode and verify a serialized chain; decoding failures are invalid."""
    try:
        chain = loads_chain(data)
    except EncodingError:
        return ChainVerdict(False, "malformed", None)
    return verify_chain(chain, contract)


__all__ = [
    "CHAIN_FILE_MAGIC", "ChainError", "OutOfOrder", "WrongPeer", "StalePrefix",
    "InvalidSignature", "BadTimestamp", "PeerAssignment", "InitialCertificate",
    "ProofOfDelivery", "PoDChain", "ChainVerdict", "HostEntry", "ProviderState",
    "issue_ic", "sign_ic", "verify_ic", "chain_digest", "pod_tick", "new_chain",
    "generate_pod", "verify_pod", "append_pod", "verify_chain", "NonceVerdict",
    "NonceWindow", "nonce_admit", "dumps_chain", "loads_chain",
    "write_chain_file", "read_chain_file", "check_chain_bytes",
]
