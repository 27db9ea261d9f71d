import io
import json
import math

import pytest

from conftest import build_chain, make_contract
from podnet.ledger import (
    AlreadyExists,
    InvalidRecord,
    Ledger,
    QoSRecord,
    summarize_jsonl,
)
from podnet.podchain import PoDChain


@pytest.fixture
def n1_contract(provider_kp):
    return make_contract(provider_kp, n=1, payment=2000)


@pytest.fixture
def ledger(provider_kp):
    led = Ledger()
    led.open_account(provider_kp.verifying_key, 10_000)
    return led


@pytest.fixture
def chain(provider_state, n1_contract, keys_by_vk):
    return build_chain(provider_state, n1_contract, keys_by_vk)


def test_settles_and_moves_money(ledger, chain, n1_contract, provider_kp):
    result = ledger.submit_payout(chain, n1_contract, 5)
    assert result and result.tx.amount == 2000
    assert ledger.balance(provider_kp.verifying_key) == 8000
    assert ledger.balance(chain.last.peer_key) == 2000
    assert ledger.total_balance() == 10_000


def test_replay_rejected(ledger, chain, n1_contract):
    assert ledger.submit_payout(chain, n1_contract, 5)
    again = ledger.submit_payout(chain, n1_contract, 6)
    assert not again and again.reason == "replay"
    assert len(ledger.txs) == 1


def test_every_prefix_pays_once(ledger, chain, n1_contract):
    results = [ledger.submit_payout(chain.truncated(k), n1_contract, k) for k in range(1, 4)]
    assert all(results)
    results = [ledger.submit_payout(chain.truncated(k), n1_contract, k) for k in range(1, 4)]
    assert [r.reason for r in results] == ["replay"] * 3


def test_invalid_chain_rejected(ledger, chain, n1_contract):
    tampered = PoDChain(chain.ic, chain.pods[1:])
    assert ledger.submit_payout(tampered, n1_contract, 0).reason == "invalid-chain"
    assert ledger.submit_payout(PoDChain(chain.ic), n1_contract, 0).reason == "invalid-chain"


def test_ineligible_rejected(provider_kp, provider_state, keys_by_vk):
    contract = make_contract(provider_kp, n=2**40)
    chain = build_chain(provider_state, contract, keys_by_vk)
    led = Ledger()
    led.open_account(provider_kp.verifying_key, 10**9)
    assert led.submit_payout(chain, contract, 0).reason == "ineligible-pod"


def test_insufficient_funds(provider_kp, chain, n1_contract):
    led = Ledger()
    led.open_account(provider_kp.verifying_key, 1999)
    assert led.submit_payout(chain, n1_contract, 0).reason == "insufficient-funds"
    assert Ledger().submit_payout(chain, n1_contract, 0).reason == "insufficient-funds"


def test_daily_capacity(provider_kp, chain, n1_contract):
    led = Ledger(daily_capacity=2)
    led.open_account(provider_kp.verifying_key, 10**6)
    reasons = [led.submit_payout(chain.truncated(k), n1_contract, k).reason for k in (1, 2, 3)]
    assert reasons == [None, None, "capacity-exceeded"]
    led.advance_day()
    assert led.submit_payout(chain, n1_contract, 9)
    assert led.tx_per_day == [2, 1]


def test_duplicate_account(ledger, provider_kp):
    with pytest.raises(AlreadyExists):
        ledger.open_account(provider_kp.verifying_key)
    with pytest.raises(InvalidRecord):
        ledger.open_account(b"\x01" * 32, -5)


def test_qos(ledger):
    key = b"\x02" * 32
    assert ledger.peer_qos_summary(key).count == 0
    ledger.record_qos(QoSRecord(key, 1, 8e6, 20.0, 0))
    ledger.record_qos(QoSRecord(key, 2, 4e6, 40.0, 1))
    summary = ledger.peer_qos_summary(key)
    assert (summary.mean_speed, summary.mean_latency, summary.count) == (6e6, 30.0, 2)
    for bad in (-1.0, math.nan, math.inf):
        with pytest.raises(InvalidRecord):
            ledger.record_qos(QoSRecord(key, 1, bad, 1.0, 0))


def test_export_and_summary(ledger, chain, n1_contract):
    for k in range(1, 4):
        ledger.submit_payout(chain.truncated(k), n1_contract, k)
    buf = io.StringIO()
    ledger.export_jsonl(buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0])["fee"] == 0
    summary = summarize_jsonl(lines)
    assert summary["transactions"] == 3
    assert summary["total_paid"] == 6000
    assert sum(p["payouts"] for p in summary["payees"].values()) == 3
