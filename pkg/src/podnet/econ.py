"""Closed-form attack economics, capacity and payout statistics.

Amounts are real-valued; callers quantize to micro-units only when
reporting.  ``x`` is the per-chunk download cost, ``y`` the expected
per-chunk payment, ``z`` the per-chunk upload cost, ``m`` the fraction of a
file's hosts colluding with clients and ``l`` the number of chunks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from .primitives import PodnetError


class EconError(PodnetError, ValueError):
    pass


class Unbounded(EconError):
    """The quantity has no finite value for these parameters."""


@dataclass(frozen=True)
class EconParams:
    x: float
    y: float
    z: float = 0.0
    m: float = 0.0
    l: int = 1
    p: float = 1.0
    n: int = 1

    def __post_init__(self):
        if not 0.0 <= self.m <= 1.0:
            raise EconError(f"m must lie in [0, 1], got {self.m}")
        if self.l < 1:
            raise EconError("l must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise EconError(f"p must lie in [0, 1], got {self.p}")
        if self.n < 1:
            raise EconError("N must be >= 1")
        if min(self.x, self.y, self.z) < 0:
            raise EconError("costs and payments are non-negative")


def _check_index(i: int) -> None:
    if i < 1:
        raise EconError(f"chunk index must be >= 1, got {i}")


def attack_cost(i: int, params: EconParams) -> float:
    """Expected colluding-client cost to fetch chunks up to ``i``.

    The first chunk always comes from the trusted node at cost ``x``; each
    later chunk is free with probability ``m`` and costs ``x`` otherwise.
    """
    _check_index(i)
    return params.x + (i - 1) * (1.0 - params.m) * params.x


def attack_payment(i: int, params: EconParams) -> float:
    """Expected payments to colluding peers for chunks up to ``i``."""
    _check_index(i)
    return (i - 1) * params.m * params.y


def max_safe_payment(x: float, m: float) -> float:
    """Largest per-chunk payment for which collusion at level ``m`` loses money."""
    if m == 0:
        raise Unbounded("with no colluders any payment is safe")
    if not 0 < m <= 1:
        raise EconError(f"m must lie in (0, 1], got {m}")
    return x * (1.0 / m - 1.0)


def max_collusion_fraction(x: float, y: float) -> float:
    """Collusion fraction below which the attack is unprofitable: x / (x + y)."""
    if x + y <= 0:
        raise EconError("x + y must be positive")
    return x / (x + y)


@dataclass(frozen=True)
class FeasibilityVerdict:
    sybil_unfeasible: bool
    peer_profitable: bool
    break_even: bool = False
    degenerate: bool = False  # m == 0: nothing to collude with


def feasibility_verdict(params: EconParams) -> FeasibilityVerdict:
    # Boundary y == x(1/m - 1) counts as unfeasible and is flagged break-even.
    peer_profitable = params.y > params.z
    if params.m == 0:
        return FeasibilityVerdict(True, peer_profitable, False, True)
    bound = max_safe_payment(params.x, params.m)
    break_even = math.isclose(params.y, bound, rel_tol=1e-12, abs_tol=1e-12)
    return FeasibilityVerdict(params.y <= bound or break_even, peer_profitable, break_even)


def peer_capacity(daily_tx: int, payouts_per_peer_per_day: int) -> int:
    if payouts_per_peer_per_day < 1:
        raise EconError("payouts per peer per day must be >= 1")
    return daily_tx // payouts_per_peer_per_day


@dataclass(frozen=True)
class PayoutStats:
    mean: float
    std: float
    relative_std: float


def payout_stats(expected_payouts: float, trial_probability: float = 0.0) -> PayoutStats:
    """Spread of the payout count in a period.

    The count is Binomial; with a small per-chunk probability the standard
    deviation tends to ``sqrt(mean)``.  Pass ``trial_probability`` (1/N) for
    the exact Binomial value ``sqrt(mean * (1 - q))``.
    """
    if expected_payouts <= 0:
        raise EconError("expected payouts must be positive")
    if not 0 <= trial_probability <= 1:
        raise EconError("trial probability must lie in [0, 1]")
    std = math.sqrt(expected_payouts * (1.0 - trial_probability))
    return PayoutStats(expected_payouts, std, std / expected_payouts)


def backup_fraction(l: int) -> float:
    if l < 1:
        raise EconError("l must be >= 1")
    return 1.0 / l


def dos_detection_cost(p: float) -> float:
    """Expected chunks a withholding client downloads from a peer before a check."""
    if p == 0:
        raise Unbounded("a peer that never checks never detects")
    if not 0 < p <= 1:
        raise EconError(f"p must lie in (0, 1], got {p}")
    return 1.0 / p


def detection_cost_with_eligibility(p: float, n: int) -> float:
    """Like :func:`dos_detection_cost` but counting the forced check on eligible PoDs."""
    if n < 1:
        raise EconError("N must be >= 1")
    rate = p + (1.0 - p) / n
    if rate == 0:
        raise Unbounded("no checks are ever requested")
    return 1.0 / rate


def econ_summary(params: EconParams, daily_tx: int = 2_200_000,
                 payouts_per_peer_per_day: int = 10,
                 days_per_period: int = 30) -> dict:
    """All closed-form quantities for one parameter set, JSON-ready.

    Unbounded quantities appear as ``None`` and are listed under
    ``"unbounded"``.
    """
    unbounded: list[str] = []

    def guarded(name: str, fn, *args) -> Optional[float]:
        try:
            return fn(*args)
        except Unbounded:
            unbounded.append(name)
            return None

    verdict = feasibility_verdict(params)
    stats = payout_stats(payouts_per_peer_per_day * days_per_period, 1.0 / params.n)
    return {
        "params": asdict(params),
        "attack_cost": attack_cost(params.l, params),
        "attack_payment": attack_payment(params.l, params),
        "max_safe_payment": guarded("max_safe_payment", max_safe_payment, params.x, params.m),
        "max_collusion_fraction": (
            max_collusion_fraction(params.x, params.y) if params.x + params.y > 0 else None
        ),
        "sybil_unfeasible": verdict.sybil_unfeasible,
        "peer_profitable": verdict.peer_profitable,
        "break_even": verdict.break_even,
        "peer_capacity": peer_capacity(daily_tx, payouts_per_peer_per_day),
        "payout_stats": asdict(stats),
        "backup_fraction": backup_fraction(params.l),
        "dos_detection_cost": guarded("dos_detection_cost", dos_detection_cost, params.p),
        "unbounded": unbounded,
    }
