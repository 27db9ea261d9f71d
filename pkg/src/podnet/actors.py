"""Provider, peer, client and backup-node behaviour.

Each actor is a small sequential state machine.  The simulator owns all of
them and mediates every message, so none of them share mutable state.
Honest and adversarial strategies live side by side; the strategy is a
plain string enum on the actor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, Optional

from .contract import SmartContract, is_payment_eligible
from .ledger import Ledger, TxResult
from .podchain import (
    ChainError,
    InitialCertificate,
    NonceVerdict,
    NonceWindow,
    PoDChain,
    ProofOfDelivery,
    ProviderState,
    append_pod,
    chain_digest,
    generate_pod,
    issue_ic,
    new_chain,
    nonce_admit,
    pod_tick,
    sign_ic,
    verify_chain,
    verify_ic,
)
from .primitives import KeyPair, PodnetError, hash_bytes

EventSink = Callable[[int, str, str, dict], None]

CHUNK_SIZE = 64


class NoSuchFile(PodnetError, KeyError):
    pass


class ProviderStrategy(str, enum.Enum):
    HONEST = "honest"
    NONCE_REPLAYER = "nonce-replayer"
    PODC_WITHHOLDER_COLLUDER = "podc-withholder-colluder"


class PeerStrategy(str, enum.Enum):
    HONEST = "honest"
    NON_SERVER = "non-server"
    SYBIL_COLLUDER = "sybil-colluder"


class ClientStrategy(str, enum.Enum):
    HONEST = "honest"
    PODC_WITHHOLDER = "podc-withholder"
    SYBIL = "sybil"
    DOS = "dos"


class SpotCheck(str, enum.Enum):
    SKIPPED = "skipped"
    PASSED = "passed"
    WITHHELD = "withheld"


@lru_cache(maxsize=1 << 14)
def chunk_data(file_id: bytes, index: int, seed: bytes = b"", size: int = CHUNK_SIZE) -> bytes:
    """Deterministic stand-in content for chunk ``index`` of a file."""
    out = b""
    block = 0
    while len(out) < size:
        out += hash_bytes(seed + file_id + index.to_bytes(8, "big") + block.to_bytes(4, "big"))
        block += 1
    return out[:size]


@dataclass
class Clock:
    """Logical time; one tick per chunk exchange.

    ``on_new_day`` fires once per day boundary crossed when
    ``ticks_per_day`` is set.
    """

    now: int = 0
    ticks_per_day: Optional[int] = None
    on_new_day: Optional[Callable[[], None]] = None

    def advance_to(self, t: int) -> None:
        if t < self.now:
            raise ValueError("time cannot go backwards")
        if self.ticks_per_day and self.on_new_day is not None:
            for _ in range(t // self.ticks_per_day - self.now // self.ticks_per_day):
                self.on_new_day()
        self.now = t


# -- provider --------------------------------------------------------------

@dataclass
class ProviderActor:
    name: str
    keypair: KeyPair
    state: ProviderState
    strategy: ProviderStrategy = ProviderStrategy.HONEST
    contracts: dict[bytes, SmartContract] = field(default_factory=dict)
    history: list[InitialCertificate] = field(default_factory=list)
    paid_nonces: set[int] = field(default_factory=set)
    requests: int = 0
    replay_warmup: int = 1
    replays: int = 0

    @property
    def key(self) -> bytes:
        return self.keypair.verifying_key

    def add_contract(self, contract: SmartContract) -> None:
        self.contracts[contract.file_id] = contract

    def record_payment(self, nonce: int) -> None:
        self.paid_nonces.add(nonce)


def provider_handle_request(provider: ProviderActor, file_id: bytes, rng, now: int = 0) -> InitialCertificate:
    contract = provider.contracts.get(file_id)
    if contract is None:
        raise NoSuchFile(file_id.hex())
    provider.requests += 1
    if (provider.strategy is ProviderStrategy.NONCE_REPLAYER
            and provider.requests > provider.replay_warmup):
        unpaid = [ic for ic in provider.history
                  if ic.file_id == file_id and ic.nonce not in provider.paid_nonces]
        if unpaid:
            provider.replays += 1
            # re-signing is byte-identical: the signature scheme is deterministic
            return sign_ic(unpaid[-1], provider.keypair)
    ic = issue_ic(provider.state, contract, rng, now)
    provider.history.append(ic)
    return ic


# -- peers -----------------------------------------------------------------

@dataclass(frozen=True)
class ChunkRequest:
    nonce: int
    chunk_index: int
    provider_key: bytes
    file_id: bytes


@dataclass(frozen=True)
class ChunkReply:
    data: Optional[bytes] = None
    reason: Optional[str] = None

    @property
    def served(self) -> bool:
        return self.data is not None


@dataclass
class PeerActor:
    name: str
    keypair: KeyPair
    address: str
    strategy: PeerStrategy = PeerStrategy.HONEST
    hosted: dict[bytes, Optional[frozenset[int]]] = field(default_factory=dict)
    contracts: dict[bytes, SmartContract] = field(default_factory=dict)
    spot_check_prob: Optional[float] = None  # None: use the contract's p
    enforce_nonces: bool = True
    window_size: int = 1024
    quarantine_threshold: int = 1
    content_seed: bytes = b""

    windows: dict[bytes, NonceWindow] = field(default_factory=dict)
    served_under: dict[tuple[bytes, int], set[int]] = field(default_factory=dict)
    violations: dict[bytes, int] = field(default_factory=dict)
    quarantined: set[bytes] = field(default_factory=set)
    chunks_since_check: dict[str, int] = field(default_factory=dict)
    pending: list[PoDChain] = field(default_factory=list)

    served: int = 0
    uncompensated: int = 0
    payouts: int = 0
    revenue: int = 0
    detections: list[dict] = field(default_factory=list)
    refusals: dict[str, int] = field(default_factory=dict)

    @property
    def key(self) -> bytes:
        return self.keypair.verifying_key

    def host(self, contract: SmartContract, chunks=None) -> None:
        self.contracts[contract.file_id] = contract
        self.hosted[contract.file_id] = None if chunks is None else frozenset(chunks)

    def hosts(self, file_id: bytes, chunk_index: int) -> bool:
        if file_id not in self.hosted:
            return False
        chunks = self.hosted[file_id]
        return chunks is None or chunk_index in chunks

    def flag(self, provider_key: bytes) -> None:
        self.violations[provider_key] = self.violations.get(provider_key, 0) + 1
        if self.violations[provider_key] >= self.quarantine_threshold:
            self.quarantined.add(provider_key)

    def _refuse(self, reason: str) -> ChunkReply:
        self.refusals[reason] = self.refusals.get(reason, 0) + 1
        return ChunkReply(None, reason)


@dataclass
class BackupNode(PeerActor):
    """Trusted server run for the provider; always available, stores every file.

    It signs PoDs like any peer but does not police provider nonces.
    """

    enforce_nonces: bool = False

    def hosts(self, file_id: bytes, chunk_index: int) -> bool:
        return file_id in self.contracts

    def flag(self, provider_key: bytes) -> None:
        # never cuts off the provider it works for
        self.violations[provider_key] = self.violations.get(provider_key, 0) + 1


def _admit_request(peer: PeerActor, request: ChunkRequest) -> Optional[str]:
    """Nonce bookkeeping; returns a refusal reason or None."""
    provider = request.provider_key
    key = (provider, request.nonce)
    seen = peer.served_under.get(key)
    if seen is not None:
        # same download continuing; a repeated chunk means the IC was replayed
        return "nonce-replay" if request.chunk_index in seen else None
    window = peer.windows.get(provider) or NonceWindow(size=peer.window_size)
    verdict, window = nonce_admit(window, request.nonce)
    if verdict is NonceVerdict.REJECT_REPLAY:
        return "nonce-replay"
    if verdict is NonceVerdict.REJECT_STALE:
        return "nonce-stale"
    if window.floor != peer.windows.get(provider, window).floor:
        for stale in [k for k in peer.served_under if k[0] == provider and k[1] <= window.floor]:
            del peer.served_under[stale]
    peer.windows[provider] = window
    peer.served_under[key] = set()
    return None


def peer_handle_chunk(peer: PeerActor, request: ChunkRequest) -> ChunkReply:
    """Serve or refuse one chunk request.

    A quarantined provider is refused before any nonce processing.  A
    replayed or stale nonce is refused and counts as a violation by the
    provider named in the request.
    """
    if request.provider_key in peer.quarantined:
        return peer._refuse("quarantined")
    if not peer.hosts(request.file_id, request.chunk_index):
        return peer._refuse("not-hosting")
    if peer.enforce_nonces:
        reason = _admit_request(peer, request)
        if reason is not None:
            peer.flag(request.provider_key)
            return peer._refuse(reason)
        peer.served_under[(request.provider_key, request.nonce)].add(request.chunk_index)
    if peer.strategy is PeerStrategy.NON_SERVER:
        # claims to serve but uploads nothing useful
        return ChunkReply(b"\x00" * CHUNK_SIZE)
    peer.served += 1
    peer.uncompensated += 1
    return ChunkReply(chunk_data(request.file_id, request.chunk_index, peer.content_seed))


def peer_exchange_pod(peer: PeerActor, client: "ClientActor", request: ChunkRequest,
                      prefix_digest: bytes, rng, now: int) -> tuple[Optional[ProofOfDelivery], SpotCheck]:
    """Sign the client's prefix digest and, when required, audit the chain.

    The full chain is demanded when the new PoD is payment-eligible (it is
    needed for settlement) and otherwise with probability p.  A missing or
    inconsistent chain quarantines the provider and the PoD is not released.
    """
    contract = peer.contracts[request.file_id]
    pod = generate_pod(peer.keypair, prefix_digest, request.chunk_index, now)
    eligible = is_payment_eligible(pod, contract)
    p = contract.podc_request_prob_p if peer.spot_check_prob is None else peer.spot_check_prob
    draw = rng.random()
    since = peer.chunks_since_check.get(client.name, 0) + 1
    peer.chunks_since_check[client.name] = since
    if not (eligible or draw < p):
        return pod, SpotCheck.SKIPPED

    chain = client.provide_chain(prefix_digest)
    if (chain is None or chain_digest(chain) != prefix_digest
            or not verify_chain(chain, contract)):
        peer.detections.append({
            "client": client.name,
            "provider": request.provider_key.hex(),
            "chunks": since,
            "eligible": eligible,
            "tick": now,
        })
        peer.flag(request.provider_key)
        peer.chunks_since_check[client.name] = 0
        return None, SpotCheck.WITHHELD
    peer.chunks_since_check[client.name] = 0
    if eligible:
        peer.pending.append(PoDChain(chain.ic, chain.pods + (pod,)))
    return pod, SpotCheck.PASSED


def peer_submit_eligible(peer: PeerActor, chain: PoDChain, contract: SmartContract,
                         ledger: Ledger, block_time: int) -> Optional[TxResult]:
    """Submit ``chain`` for payout if its last PoD is eligible; None if not submitted."""
    pod = chain.last
    if pod is None or pod.peer_key != peer.key:
        raise ValueError("the chain's last PoD was not signed by this peer")
    if not is_payment_eligible(pod, contract):
        return None
    result = ledger.submit_payout(chain, contract, block_time)
    if result.settled:
        peer.payouts += 1
        peer.revenue += result.tx.amount
        peer.uncompensated = 0
    return result


def settle_pending(peer: PeerActor, contract: SmartContract, ledger: Ledger,
                   block_time: int) -> list[TxResult]:
    results = []
    for chain in peer.pending:
        result = peer_submit_eligible(peer, chain, contract, ledger, block_time)
        if result is not None:
            results.append(result)
    peer.pending.clear()
    return results


# -- clients ---------------------------------------------------------------

@dataclass
class ClientActor:
    name: str
    strategy: ClientStrategy = ClientStrategy.HONEST
    colluders: frozenset[bytes] = frozenset()
    abort_on_honest: bool = False
    chain: Optional[PoDChain] = None

    def provide_chain(self, prefix_digest: bytes) -> Optional[PoDChain]:
        if self.strategy in (ClientStrategy.PODC_WITHHOLDER, ClientStrategy.DOS):
            return None
        return self.chain


@dataclass
class DownloadOutcome:
    chain: Optional[PoDChain]
    chunks_ok: int = 0
    cost_incurred: float = 0.0
    detections: int = 0
    aborted: Optional[str] = None
    served_by_peers: int = 0
    served_by_backup: int = 0
    fallbacks: int = 0
    fabricated: int = 0
    payouts: list[TxResult] = field(default_factory=list)


def _emit(log: Optional[EventSink], tick: int, actor: str, kind: str, **details) -> None:
    if log is not None:
        log(tick, actor, kind, details)


def client_download_file(
    client: ClientActor,
    provider: Optional[ProviderActor],
    peers: Mapping[bytes, PeerActor],
    backup: BackupNode,
    ledger: Ledger,
    contract: SmartContract,
    rng,
    *,
    clock: Optional[Clock] = None,
    cost_per_chunk: float = 0.0,
    log: Optional[EventSink] = None,
) -> DownloadOutcome:
    """Run one download end to end and settle any eligible payouts.

    Chunks are fetched in order from the peers named in the IC.  A refusal
    or an integrity mismatch sends the client to the backup node for that
    chunk, and the failing peer never sees a prefix digest.
    """
    clock = clock or Clock()
    if provider is None:
        return DownloadOutcome(None, aborted="provider-unreachable")
    ic = provider_handle_request(provider, contract.file_id, rng, clock.now)
    _emit(log, clock.now, provider.name, "ic", nonce=ic.nonce, client=client.name)
    if not verify_ic(ic, contract):
        return DownloadOutcome(None, aborted="invalid-ic")

    chain = new_chain(ic)
    client.chain = chain
    out = DownloadOutcome(chain)
    paid_before = len(ledger.txs)

    for k in range(contract.chunk_count_l):
        now = pod_tick(ic, k)
        clock.advance_to(max(now, clock.now))
        assigned = ic.peer_assignments[k]
        is_backup = assigned.peer_key == backup.key
        server = backup if is_backup else peers.get(assigned.peer_key)
        request = ChunkRequest(ic.nonce, k, ic.provider_key, ic.file_id)

        if client.strategy is ClientStrategy.SYBIL and not is_backup:
            if server is not None and server.key in client.colluders:
                # nothing is transferred; the colluding peer just signs
                pod, check = peer_exchange_pod(server, client, request, chain_digest(chain), rng, now)
                out.fabricated += 1
                chain = _accept_pod(client, chain, pod, server, log, clock.now)
                out.payouts += settle_pending(server, contract, ledger, now)
                continue
            if client.abort_on_honest:
                out.aborted = "honest-peer-assigned"
                break

        reply = peer_handle_chunk(server, request) if server is not None else ChunkReply(None, "unreachable")
        if reply.data is not None:
            out.cost_incurred += cost_per_chunk
        if reply.data is None or hash_bytes(reply.data) != contract.chunk_hashes[k]:
            _emit(log, clock.now, client.name, "fallback", chunk=k,
                  peer=server.name if server else None, reason=reply.reason or "integrity-mismatch")
            out.fallbacks += 1
            server = backup
            reply = peer_handle_chunk(backup, request)
            out.cost_incurred += cost_per_chunk
            if reply.data is None or hash_bytes(reply.data) != contract.chunk_hashes[k]:
                out.aborted = "backup-failed"
                break
        out.chunks_ok += 1
        if server is backup:
            out.served_by_backup += 1
        else:
            out.served_by_peers += 1

        pod, check = peer_exchange_pod(server, client, request, chain_digest(chain), rng, now)
        if check is SpotCheck.WITHHELD:
            out.detections += 1
            _emit(log, clock.now, server.name, "detection", client=client.name, chunk=k)
        if pod is None:
            out.aborted = "podc-withheld"
            break
        chain = _accept_pod(client, chain, pod, server, log, clock.now)
        out.payouts += settle_pending(server, contract, ledger, now)

    out.chain = chain
    for result in out.payouts:
        _emit(log, clock.now, "ledger", "payout" if result.settled else "payout-rejected",
              reason=result.reason,
              chunk=result.tx.pod.chunk_index if result.tx else None)
    if len(ledger.txs) > paid_before:
        provider.record_payment(ic.nonce)
    return out


def _accept_pod(client: ClientActor, chain: PoDChain, pod: ProofOfDelivery,
                server: PeerActor, log, tick: int) -> PoDChain:
    try:
        chain = append_pod(chain, pod)
    except ChainError as exc:
        _emit(log, tick, client.name, "bad-pod", peer=server.name, reason=exc.reason)
        raise
    client.chain = chain
    return chain
