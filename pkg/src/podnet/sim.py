"""Deterministic scenario driver.

One tick is one chunk exchange.  Every stochastic choice in a run (peer
assignment, spot checks) comes from a single ``random.Random`` seeded from
the config, and payment eligibility comes from real signatures, so a seed
reproduces a run byte for byte.

The Sybil sweep is the exception: it needs ~10^7 chunk events, so it samples
the same assignment and eligibility distributions with numpy instead of
signing every PoD.  :func:`run_scenario` with ``scenario = "sybil"`` runs the
same attack through the full protocol at smaller scale.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import math
import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import econ
from .actors import (
    BackupNode,
    ChunkRequest,
    ClientActor,
    ClientStrategy,
    Clock,
    PeerActor,
    PeerStrategy,
    ProviderActor,
    ProviderStrategy,
    SpotCheck,
    chunk_data,
    client_download_file,
    peer_exchange_pod,
    peer_handle_chunk,
    provider_handle_request,
)
from .contract import SmartContract, is_payment_eligible, new_contract
from .ledger import Ledger
from .podchain import (
    PoDChain,
    ProviderState,
    chain_digest,
    generate_pod,
    issue_ic,
    new_chain,
    pod_tick,
)
from .primitives import KeyPair, PodnetError, hash_bytes, keypair_for

SCENARIOS = (
    "honest-baseline",
    "malicious-peer",
    "malicious-provider-nonce",
    "client-provider-collusion",
    "sybil",
    "dos",
)

SWEEP_COLUMNS = ("m", "attacker_cost", "attacker_revenue", "net", "oracle_cost", "oracle_payment")


class ConfigError(PodnetError, ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    scenario: str = "honest-baseline"
    num_peers: int = 10
    num_malicious_peers: int = 0
    num_clients: int = 1
    l: int = 10
    n: int = 20
    p: float = 0.01
    x: int = 1000  # micro-units per chunk
    y: int = 2000
    z: int = 500
    num_downloads: int = 100
    daily_capacity: int = 2_200_000
    ticks_per_day: int = 0  # 0: a single unbounded day
    payouts_per_peer_per_day: Optional[int] = None
    chunks_per_peer_per_day: Optional[int] = None
    days_per_period: int = 30
    window_size: int = 1024
    quarantine_threshold: int = 1
    replay_warmup: int = 1
    sybil_abort_on_honest: bool = False
    provider_balance: Optional[int] = None
    colluding_peers: tuple[str, ...] = ()
    colluding_clients: tuple[str, ...] = ()
    m_values: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if self.num_peers < 1:
            raise ConfigError("num_peers must be >= 1")
        if not 0 <= self.num_malicious_peers <= self.num_peers:
            raise ConfigError("num_malicious_peers must lie in [0, num_peers]")
        if self.l < 1 or self.n < 1 or self.num_clients < 1:
            raise ConfigError("l, N and num_clients must be >= 1")
        if not 0 <= self.p <= 1:
            raise ConfigError("p must lie in [0, 1]")
        if min(self.x, self.y, self.z) < 0:
            raise ConfigError("x, y, z are non-negative")
        if self.num_downloads < 0 or self.daily_capacity < 0 or self.ticks_per_day < 0:
            raise ConfigError("counts must be non-negative")
        for name in self.colluding_peers:
            if name not in self.peer_names:
                raise ConfigError(f"collusion registry names unknown peer {name!r}")

    @property
    def peer_names(self) -> list[str]:
        return [f"peer-{i}" for i in range(self.num_peers)]

    @property
    def client_names(self) -> list[str]:
        return [f"client-{i}" for i in range(self.num_clients)]

    @property
    def malicious_peer_names(self) -> list[str]:
        if self.colluding_peers:
            return list(self.colluding_peers)
        return self.peer_names[: self.num_malicious_peers]

    @property
    def m(self) -> float:
        return len(self.malicious_peer_names) / self.num_peers

    @property
    def effective_n(self) -> int:
        if self.payouts_per_peer_per_day and self.chunks_per_peer_per_day:
            return max(1, round(self.chunks_per_peer_per_day / self.payouts_per_peer_per_day))
        return self.n

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


# -- config files ----------------------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}
_ALIASES = {"N": "n", "name": "scenario", "peers": "colluding_peers", "clients": "colluding_clients"}


def _parse_value(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    if name in ("colluding_peers", "colluding_clients"):
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if name == "m_values":
        return tuple(Fraction(s.strip()) for s in raw.split(",") if s.strip())
    if kind == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    if kind == "float":
        return float(Fraction(raw))
    if kind == "str":
        return raw
    if raw.lower() in ("", "none"):
        return None
    return int(raw.replace("_", ""))


def config_from_mapping(values: dict) -> SimConfig:
    kwargs = {}
    for key, raw in values.items():
        name = _ALIASES.get(key, key)
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[name] = _parse_value(name, str(raw)) if isinstance(raw, str) else raw
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return SimConfig(**kwargs)


def load_config(path) -> SimConfig:
    """Read an INI-style scenario file.

    Keys may sit in any section; ``[collusion]`` takes ``peers`` and
    ``clients`` lists and ``[sweep]`` takes ``m_values``.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep "N" distinct from "n" for readability
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values: dict[str, str] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            values[key] = raw
    return config_from_mapping(values)


# -- world construction ----------------------------------------------------

@dataclass
class World:
    config: SimConfig
    provider: ProviderActor
    backup: BackupNode
    peers: dict[bytes, PeerActor]
    clients: list[ClientActor]
    contract: SmartContract
    ledger: Ledger
    rng: random.Random
    clock: Clock

    def peer_by_name(self, name: str) -> PeerActor:
        for peer in self.peers.values():
            if peer.name == name:
                return peer
        raise KeyError(name)


def _identity(config: SimConfig, name: str) -> KeyPair:
    return keypair_for(name, namespace=config.seed.to_bytes(8, "big"))


def _address(i: int) -> str:
    return f"10.{(i >> 16) & 255}.{(i >> 8) & 255}.{i & 255}:7000"


def build_world(config: SimConfig, *, n: Optional[int] = None) -> World:
    n = n or config.effective_n
    rng = random.Random(config.seed)
    content_seed = config.seed.to_bytes(8, "big")
    file_id = b"file-0"

    provider_kp = _identity(config, "provider")
    backup_kp = _identity(config, "backup")
    hashes = [hash_bytes(chunk_data(file_id, k, content_seed)) for k in range(config.l)]
    contract = new_contract(file_id, provider_kp.verifying_key, n * config.y, n, hashes, config.p)

    state = ProviderState(provider_kp, backup_kp.verifying_key, "backup.cdn:443")
    provider = ProviderActor("provider", provider_kp, state, replay_warmup=config.replay_warmup)
    provider.add_contract(contract)
    backup = BackupNode("backup", backup_kp, "backup.cdn:443", content_seed=content_seed)
    backup.host(contract)

    malicious = set(config.malicious_peer_names)
    peers: dict[bytes, PeerActor] = {}
    for i, name in enumerate(config.peer_names):
        kp = _identity(config, name)
        peer = PeerActor(name, kp, _address(i), window_size=config.window_size,
                         quarantine_threshold=config.quarantine_threshold,
                         content_seed=content_seed)
        if name in malicious:
            if config.scenario == "malicious-peer":
                peer.strategy = PeerStrategy.NON_SERVER
            elif config.scenario == "sybil":
                peer.strategy = PeerStrategy.SYBIL_COLLUDER
        peer.host(contract)
        state.register_host(file_id, kp.verifying_key, peer.address)
        peers[kp.verifying_key] = peer

    colluder_keys = frozenset(p.key for p in peers.values() if p.name in malicious)
    registry = set(config.colluding_clients) or set(config.client_names)
    clients = []
    for name in config.client_names:
        client = ClientActor(name)
        if name in registry:
            if config.scenario == "sybil":
                client.strategy = ClientStrategy.SYBIL
                client.colluders = colluder_keys
                client.abort_on_honest = config.sybil_abort_on_honest
            elif config.scenario == "client-provider-collusion":
                client.strategy = ClientStrategy.PODC_WITHHOLDER
            elif config.scenario == "dos":
                client.strategy = ClientStrategy.DOS
        clients.append(client)

    if config.scenario == "malicious-provider-nonce":
        provider.strategy = ProviderStrategy.NONCE_REPLAYER
    elif config.scenario == "client-provider-collusion":
        provider.strategy = ProviderStrategy.PODC_WITHHOLDER_COLLUDER

    ledger = Ledger(daily_capacity=config.daily_capacity)
    balance = config.provider_balance
    if balance is None:
        balance = max(1, config.num_downloads) * config.l * contract.payment_per_eligible_pod
    ledger.open_account(provider_kp.verifying_key, balance)
    ledger.open_account(backup_kp.verifying_key, 0)
    for peer in peers.values():
        ledger.open_account(peer.key, 0)

    clock = Clock(ticks_per_day=config.ticks_per_day or None, on_new_day=ledger.advance_day)
    return World(config, provider, backup, peers, clients, contract, ledger, rng, clock)


# -- metrics ---------------------------------------------------------------

class EventLog:
    """Ordered (tick, actor, kind, details) records."""

    def __init__(self) -> None:
        self.records: list[tuple[int, str, str, dict]] = []

    def __call__(self, tick: int, actor: str, kind: str, details: dict) -> None:
        if self.records and tick < self.records[-1][0]:
            raise ValueError("event ticks must be nondecreasing")
        self.records.append((tick, actor, kind, details))

    def __len__(self) -> int:
        return len(self.records)

    def count(self, kind: str) -> int:
        return sum(1 for r in self.records if r[2] == kind)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"tick": t, "actor": a, "kind": k, "details": d}, sort_keys=True) + "\n"
            for t, a, k, d in self.records
        )


def _mean_se(samples: Sequence[float]) -> tuple[float, float]:
    if not samples:
        return 0.0, 0.0
    mean = statistics.fmean(samples)
    if len(samples) < 2:
        return mean, 0.0
    return mean, statistics.stdev(samples) / math.sqrt(len(samples))


@dataclass
class SimMetrics:
    scenario: str
    seed: int
    downloads: int = 0
    downloads_completed: int = 0
    downloads_aborted: dict[str, int] = field(default_factory=dict)
    chunks_served_by_peers: int = 0
    chunks_served_by_backup: int = 0
    fallbacks: int = 0
    fabricated_pods: int = 0
    settled_payouts: int = 0
    rejected_payouts: dict[str, int] = field(default_factory=dict)
    total_paid: int = 0
    attacker_cost: float = 0.0
    attacker_revenue: float = 0.0
    attacker_cost_per_download: float = 0.0
    attacker_cost_se: float = 0.0
    attacker_revenue_per_download: float = 0.0
    attacker_revenue_se: float = 0.0
    oracle_cost: Optional[float] = None
    oracle_payment: Optional[float] = None
    honest_load_on_colluders: int = 0
    detections: int = 0
    time_to_detect: list[int] = field(default_factory=list)
    quarantines: list[dict] = field(default_factory=list)
    provider_replays: int = 0
    ledger_tx_per_day: list[int] = field(default_factory=list)
    per_peer_payouts: dict[str, int] = field(default_factory=dict)
    initial_total_balance: int = 0
    final_total_balance: int = 0
    conserved: bool = True
    double_spends: int = 0
    fees: int = 0

    @property
    def backup_fraction(self) -> float:
        total = self.chunks_served_by_backup + self.chunks_served_by_peers
        return self.chunks_served_by_backup / total if total else 0.0

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["backup_fraction"] = self.backup_fraction
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


@dataclass
class SimResult:
    metrics: SimMetrics
    events: EventLog
    world: World


def run_scenario(config: SimConfig) -> SimResult:
    """Run ``config.num_downloads`` downloads of one file and collect metrics."""
    world = build_world(config)
    log = EventLog()
    ledger = world.ledger
    metrics = SimMetrics(config.scenario, config.seed)
    metrics.initial_total_balance = ledger.total_balance()
    colluder_names = set(config.malicious_peer_names) if config.scenario == "sybil" else set()
    colluder_keys = {p.key for p in world.peers.values() if p.name in colluder_names}
    attacking = config.scenario in ("sybil", "client-provider-collusion", "dos")

    costs: list[float] = []
    revenues: list[float] = []
    for d in range(config.num_downloads):
        client = world.clients[d % len(world.clients)]
        world.clock.advance_to(world.clock.now + 1)
        outcome = client_download_file(
            client, world.provider, world.peers, world.backup, ledger, world.contract,
            world.rng, clock=world.clock, cost_per_chunk=config.x, log=log,
        )
        metrics.downloads += 1
        if outcome.aborted:
            metrics.downloads_aborted[outcome.aborted] = metrics.downloads_aborted.get(outcome.aborted, 0) + 1
        else:
            metrics.downloads_completed += 1
        metrics.chunks_served_by_peers += outcome.served_by_peers
        metrics.chunks_served_by_backup += outcome.served_by_backup
        metrics.fallbacks += outcome.fallbacks
        metrics.fabricated_pods += outcome.fabricated
        revenue = 0
        for result in outcome.payouts:
            if result.settled:
                metrics.settled_payouts += 1
                metrics.total_paid += result.tx.amount
                if result.tx.payee in colluder_keys:
                    revenue += result.tx.amount
            else:
                metrics.rejected_payouts[result.reason] = metrics.rejected_payouts.get(result.reason, 0) + 1
        if attacking and client.strategy is not ClientStrategy.HONEST:
            costs.append(outcome.cost_incurred)
            revenues.append(revenue)

    metrics.attacker_cost = float(sum(costs))
    metrics.attacker_revenue = float(sum(revenues))
    metrics.attacker_cost_per_download, metrics.attacker_cost_se = _mean_se(costs)
    metrics.attacker_revenue_per_download, metrics.attacker_revenue_se = _mean_se(revenues)
    if config.scenario == "sybil":
        params = econ.EconParams(x=config.x, y=config.y, z=config.z, m=config.m, l=config.l,
                                 p=config.p, n=world.contract.eligibility_modulus_n)
        metrics.oracle_cost = econ.attack_cost(config.l, params)
        metrics.oracle_payment = econ.attack_payment(config.l, params)

    for peer in sorted(world.peers.values(), key=lambda p: p.name):
        metrics.per_peer_payouts[peer.name] = peer.payouts
        if peer.key in colluder_keys:
            metrics.honest_load_on_colluders += peer.served
        for det in peer.detections:
            metrics.time_to_detect.append(det["chunks"])
        if world.provider.key in peer.quarantined:
            metrics.quarantines.append({"peer": peer.name, "violations": peer.violations[world.provider.key]})
    metrics.per_peer_payouts["backup"] = world.backup.payouts
    metrics.time_to_detect.extend(d["chunks"] for d in world.backup.detections)
    metrics.detections = len(metrics.time_to_detect)
    metrics.provider_replays = world.provider.replays
    metrics.ledger_tx_per_day = list(ledger.tx_per_day)
    metrics.final_total_balance = ledger.total_balance()
    metrics.conserved = metrics.final_total_balance == metrics.initial_total_balance
    digests = [tx.pod.digest for tx in ledger.txs]
    metrics.double_spends = len(digests) - len(set(digests))
    return SimResult(metrics, log, world)


# -- Sybil sweep -----------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    m: float
    attacker_cost: float
    attacker_revenue: float
    net: float
    oracle_cost: float
    oracle_payment: float
    net_se: float
    downloads: int

    def as_csv_row(self) -> list:
        return [getattr(self, c) for c in SWEEP_COLUMNS]


def _colluder_count(m, num_peers: int) -> int:
    k = round(float(m) * num_peers)
    if abs(k / num_peers - float(m)) > 1e-9:
        raise ConfigError(f"m={m} is not a multiple of 1/{num_peers}; adjust num_peers")
    return k


def run_sybil_sweep(config: SimConfig, m_values: Optional[Sequence] = None) -> list[SweepRow]:
    """Per collusion level, mean attacker cost/revenue per full-length download.

    Assignments are uniform over ``num_peers`` hosts with ``m * num_peers``
    colluders; each PoD from a colluder is eligible with probability 1/N and
    then pays N*y.  Values are per download, with the closed-form oracles at
    i = l alongside.
    """
    m_values = list(m_values if m_values is not None else config.m_values)
    if not m_values:
        raise ConfigError("sweep needs at least one m value")
    if any(not 0 < float(m) <= 1 for m in m_values):
        raise ConfigError("sweep m values must lie in (0, 1]")
    n = config.effective_n
    downloads = config.num_downloads
    later = config.l - 1
    rows = []
    for idx, m in enumerate(m_values):
        k = _colluder_count(m, config.num_peers)
        rng = np.random.default_rng([config.seed, idx])
        colluding = np.zeros(downloads, dtype=np.int64)
        batch = max(1, 2_000_000 // max(later, 1))
        for start in range(0, downloads, batch):
            size = min(batch, downloads - start)
            picks = rng.integers(0, config.num_peers, size=(size, later))
            colluding[start:start + size] = (picks < k).sum(axis=1)
        eligible = rng.binomial(colluding, 1.0 / n)
        revenue = eligible * (n * config.y)
        cost = config.x * (1 + later - colluding)
        net = revenue - cost
        params = econ.EconParams(x=config.x, y=config.y, z=config.z, m=float(m), l=config.l, n=n)
        rows.append(SweepRow(
            m=float(m),
            attacker_cost=float(cost.mean()),
            attacker_revenue=float(revenue.mean()),
            net=float(net.mean()),
            oracle_cost=econ.attack_cost(config.l, params),
            oracle_payment=econ.attack_payment(config.l, params),
            net_se=float(net.std(ddof=1) / math.sqrt(downloads)) if downloads > 1 else 0.0,
            downloads=downloads,
        ))
    return rows


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row.as_csv_row()])
    return buf.getvalue()


# -- payout variance -------------------------------------------------------

@dataclass(frozen=True)
class VarianceResult:
    mean: float
    std: float
    relative_std: float
    periods: int
    expected: float
    low_confidence: bool
    counts: tuple[int, ...] = ()


def run_payment_variance(config: SimConfig, days: int, min_periods: int = 200) -> VarianceResult:
    """Count one active peer's eligible PoDs per period of ``days_per_period`` days.

    Each chunk the peer serves gets a distinct prefix digest and a real
    signature; the period count is how many of those signatures pass the
    eligibility test.
    """
    n = config.effective_n
    if config.chunks_per_peer_per_day:
        per_day = config.chunks_per_peer_per_day
    elif config.payouts_per_peer_per_day:
        per_day = config.payouts_per_peer_per_day * n
    else:
        raise ConfigError("set payouts_per_peer_per_day or chunks_per_peer_per_day")
    periods = days // config.days_per_period
    if periods < 1:
        raise ConfigError("days must cover at least one period")
    peer = _identity(config, "peer-0")
    contract = new_contract(b"file-0", b"\x00" * 32, n * config.y, n, [b"\x00" * 32], config.p)
    salt = config.seed.to_bytes(8, "big")
    per_period = per_day * config.days_per_period
    counts = []
    counter = 0
    for _ in range(periods):
        eligible = 0
        for _ in range(per_period):
            prefix = hash_bytes(salt + counter.to_bytes(8, "big"))
            pod = generate_pod(peer, prefix, 1, counter)
            eligible += is_payment_eligible(pod, contract)
            counter += 1
        counts.append(eligible)
    mean = statistics.fmean(counts)
    std = statistics.stdev(counts) if len(counts) > 1 else 0.0
    return VarianceResult(
        mean=mean,
        std=std,
        relative_std=std / mean if mean else float("nan"),
        periods=periods,
        expected=per_period / n,
        low_confidence=periods < min_periods,
        counts=tuple(counts),
    )


# -- detection time --------------------------------------------------------

@dataclass(frozen=True)
class DetectionResult:
    samples: tuple[int, ...]
    mean: float
    se: float
    oracle: float  # 1/p
    oracle_with_eligibility: float


def run_detection_trials(config: SimConfig, trials: int,
                         strategy: ClientStrategy = ClientStrategy.PODC_WITHHOLDER,
                         max_chunks: int = 10**7) -> DetectionResult:
    """Chunks a withholding client gets from one fresh peer before being caught.

    Every non-backup chunk of the file is hosted by that single peer; the
    client keeps requesting new downloads until the peer's audit fails.
    """
    if strategy not in (ClientStrategy.PODC_WITHHOLDER, ClientStrategy.DOS):
        raise ConfigError("detection trials need a withholding client strategy")
    world = build_world(config.replace(num_peers=1, num_malicious_peers=0,
                                       colluding_peers=(), scenario="honest-baseline"))
    contract = world.contract
    template = next(iter(world.peers.values()))
    client = ClientActor("client-0", strategy)
    rng = world.rng
    clock = world.clock
    samples = []
    for _ in range(trials):
        peer = PeerActor(template.name, template.keypair, template.address,
                         window_size=config.window_size, content_seed=template.content_seed)
        peer.host(contract)
        served = 0
        detected = None
        while detected is None and served < max_chunks:
            clock.advance_to(clock.now + 1)
            ic = provider_handle_request(world.provider, contract.file_id, rng, clock.now)
            chain = new_chain(ic)
            for k in range(contract.chunk_count_l):
                now = pod_tick(ic, k)
                clock.advance_to(now)
                server = world.backup if k == 0 else peer
                request = ChunkRequest(ic.nonce, k, ic.provider_key, ic.file_id)
                if peer_handle_chunk(server, request).data is None:
                    break
                if server is peer:
                    served += 1
                pod, check = peer_exchange_pod(server, client, request, chain_digest(chain), rng, now)
                if check is SpotCheck.WITHHELD and server is peer:
                    detected = peer.detections[-1]["chunks"]
                    break
                if pod is None:
                    break
                # the withholding client keeps an unchecked local chain
                chain = PoDChain(ic, chain.pods + (pod,))
        samples.append(detected if detected is not None else served)
    mean, se = _mean_se(samples)
    n = contract.eligibility_modulus_n
    return DetectionResult(
        samples=tuple(samples),
        mean=mean,
        se=se,
        oracle=econ.dos_detection_cost(config.p),
        oracle_with_eligibility=econ.detection_cost_with_eligibility(config.p, n),
    )


# -- ledger capacity -------------------------------------------------------

@dataclass(frozen=True)
class CapacityResult:
    peers: int
    settled: int
    capacity_rejections: int


def run_capacity_probe(config: SimConfig, num_peers: int) -> CapacityResult:
    """One simulated day in which each of ``num_peers`` peers submits its payouts.

    Every PoD is eligible (N = 1) and each peer earns
    ``payouts_per_peer_per_day`` payouts, so rejections appear exactly when
    the ledger's daily capacity is exhausted.
    """
    per_peer = config.payouts_per_peer_per_day or 10
    provider_kp = _identity(config, "provider")
    backup_kp = _identity(config, "backup")
    hashes = [hash_bytes(chunk_data(b"file-0", k)) for k in range(2)]
    contract = new_contract(b"file-0", provider_kp.verifying_key, config.y, 1, hashes, config.p)
    ledger = Ledger(daily_capacity=config.daily_capacity)
    ledger.open_account(provider_kp.verifying_key, num_peers * per_peer * config.y)
    rng = random.Random(config.seed)
    settled = rejected = 0
    tick = 0
    for i in range(num_peers):
        peer_kp = _identity(config, f"peer-{i}")
        state = ProviderState(provider_kp, backup_kp.verifying_key, "backup.cdn:443",
                              last_nonce=i * per_peer)
        state.register_host(b"file-0", peer_kp.verifying_key, _address(i))
        for _ in range(per_peer):
            ic = issue_ic(state, contract, rng, tick)
            chain = new_chain(ic)
            for k, kp in enumerate((backup_kp, peer_kp)):
                pod = generate_pod(kp, chain_digest(chain), k, pod_tick(ic, k))
                chain = PoDChain(ic, chain.pods + (pod,))
            tick += contract.chunk_count_l + 1
            result = ledger.submit_payout(chain, contract, tick)
            if result.settled:
                settled += 1
            elif result.reason == "capacity-exceeded":
                rejected += 1
            else:
                raise RuntimeError(f"unexpected rejection: {result.reason}")
    return CapacityResult(num_peers, settled, rejected)


def write_outputs(result: SimResult, out: Optional[Path] = None,
                  events: Optional[Path] = None, ledger_out: Optional[Path] = None) -> str:
    text = result.metrics.to_json()
    if out is not None:
        Path(out).write_text(text)
    if events is not None:
        Path(events).write_text(result.events.to_jsonl())
    if ledger_out is not None:
        with open(ledger_out, "w") as fh:
            result.world.ledger.export_jsonl(fh)
    return text
