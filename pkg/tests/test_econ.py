import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from podnet import econ
from podnet.econ import EconParams, Unbounded


def test_attack_cost_and_payment_at_l():
    params = EconParams(x=1000, y=2000, m=0.25, l=20)
    assert econ.attack_cost(20, params) == pytest.approx(1000 + 19 * 0.75 * 1000)
    assert econ.attack_payment(20, params) == pytest.approx(19 * 0.25 * 2000)


def test_index_must_be_positive():
    with pytest.raises(econ.EconError):
        econ.attack_cost(0, EconParams(x=1, y=1))


@pytest.mark.parametrize("x,m,expected", [(1, 0.5, 1), (1, 0.25, 3), (3, 1, 0), (2, Fraction(1, 3), 4)])
def test_max_safe_payment(x, m, expected):
    assert econ.max_safe_payment(x, float(m)) == pytest.approx(expected)


def test_max_safe_payment_unbounded_without_colluders():
    with pytest.raises(Unbounded):
        econ.max_safe_payment(1, 0)


def test_one_third_threshold():
    assert econ.max_collusion_fraction(1, 2) == pytest.approx(1 / 3)


def brute_force_unfeasible(x, y, m, l=50):
    """Unfeasible iff the marginal chunk never pays: m*y <= (1-m)*x, checked on exact rationals."""
    x, y, m = Fraction(x), Fraction(y), Fraction(m)
    marginal = [m * y - (1 - m) * x for _ in range(1, l)]
    return all(v <= 0 for v in marginal)


def test_verdict_matches_brute_force_grid():
    for xi in range(1, 6):
        for yi in range(0, 12):
            for mi in range(1, 21):
                m = Fraction(mi, 20)
                verdict = econ.feasibility_verdict(EconParams(x=xi, y=yi, m=float(m), l=20))
                assert verdict.sybil_unfeasible == brute_force_unfeasible(xi, yi, m), (xi, yi, m)


def test_boundary_is_break_even():
    verdict = econ.feasibility_verdict(EconParams(x=1, y=2, m=1 / 3))
    assert verdict.sybil_unfeasible and verdict.break_even


def test_zero_collusion_is_degenerate():
    verdict = econ.feasibility_verdict(EconParams(x=1, y=2, m=0))
    assert verdict.sybil_unfeasible and verdict.degenerate


@given(x=st.floats(1, 1e4), y=st.floats(1, 1e4))
def test_bound_and_threshold_are_inverse(x, y):
    m = econ.max_collusion_fraction(x, y)
    assert econ.max_safe_payment(x, m) == pytest.approx(y, rel=1e-9)


@given(x=st.floats(0.01, 1e3), m1=st.floats(0.01, 1), m2=st.floats(0.01, 1))
def test_bound_decreases_in_m(x, m1, m2):
    lo, hi = sorted((m1, m2))
    assert econ.max_safe_payment(x, lo) >= econ.max_safe_payment(x, hi)


@given(i=st.integers(1, 200), m=st.floats(1e-3, 1))
def test_net_at_threshold_is_minus_first_chunk(i, m):
    # at y = x(1/m - 1) every later chunk breaks even, so only chunk 0 is lost
    params = EconParams(x=10.0, y=econ.max_safe_payment(10.0, m), m=m)
    net = econ.attack_payment(i, params) - econ.attack_cost(i, params)
    assert net == pytest.approx(-10.0, abs=1e-6 * i)


def test_peer_profitability():
    assert econ.feasibility_verdict(EconParams(x=1, y=2, z=1, m=0.1)).peer_profitable
    assert not econ.feasibility_verdict(EconParams(x=1, y=1, z=1, m=0.1)).peer_profitable


def test_capacity_arithmetic():
    assert econ.peer_capacity(2_200_000, 10) == 220_000
    assert econ.peer_capacity(220_000_000, 10) == 22_000_000
    with pytest.raises(econ.EconError):
        econ.peer_capacity(10, 0)


def test_payout_stats():
    s = econ.payout_stats(300)
    assert s.std == pytest.approx(17.32, abs=0.01)
    assert s.relative_std == pytest.approx(0.0577, abs=1e-4)
    assert econ.payout_stats(300, 1 / 20).std == pytest.approx(math.sqrt(285))


def test_detection_costs():
    assert econ.dos_detection_cost(0.01) == pytest.approx(100)
    with pytest.raises(Unbounded):
        econ.dos_detection_cost(0)
    assert econ.detection_cost_with_eligibility(0, 20) == pytest.approx(20)
    assert econ.detection_cost_with_eligibility(0.1, 10**9) == pytest.approx(10, rel=1e-6)


def test_backup_fraction():
    assert [econ.backup_fraction(l) for l in (1, 10, 100)] == [1, 0.1, 0.01]


@pytest.mark.parametrize("bad", [dict(m=1.5), dict(m=-0.1), dict(l=0), dict(p=2), dict(n=0), dict(x=-1)])
def test_params_validated(bad):
    with pytest.raises(econ.EconError):
        EconParams(**dict(dict(x=1, y=1), **bad))


def test_summary_reports_unbounded_as_none():
    summary = econ.econ_summary(EconParams(x=1, y=2, m=0, p=0))
    assert summary["max_safe_payment"] is None and summary["dos_detection_cost"] is None
    assert set(summary["unbounded"]) == {"max_safe_payment", "dos_detection_cost"}
