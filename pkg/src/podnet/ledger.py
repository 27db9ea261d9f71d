"""Simulated settlement ledger.

Accounts, payouts backed by a full PoD chain, replay protection, QoS records
and a daily transaction cap.  Transaction fees are modelled as zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .contract import SmartContract, add_money, is_payment_eligible
from .podchain import PoDChain, ProofOfDelivery, verify_chain
from .primitives import PodnetError

#: Ethereum-scale throughput, transactions per day
ETHEREUM_DAILY_TX = 2_200_000

REJECT_REASONS = (
    "invalid-chain",
    "ineligible-pod",
    "replay",
    "insufficient-funds",
    "capacity-exceeded",
)


class LedgerError(PodnetError):
    pass


class AlreadyExists(LedgerError, KeyError):
    pass


class InvalidRecord(LedgerError, ValueError):
    pass


@dataclass
class Account:
    key: bytes
    balance: int = 0


@dataclass(frozen=True)
class PayoutTx:
    pod: ProofOfDelivery
    podc: PoDChain
    payer: bytes
    payee: bytes
    amount: int
    block_time: int

    def to_json(self) -> dict:
        return {
            "block_time": self.block_time,
            "payer": self.payer.hex(),
            "payee": self.payee.hex(),
            "amount": self.amount,
            "nonce": self.podc.ic.nonce,
            "file_id": self.podc.ic.file_id.hex(),
            "chunk_index": self.pod.chunk_index,
            "pod_digest": self.pod.digest.hex(),
            "chain_length": len(self.podc.pods),
            "fee": 0,
        }


@dataclass(frozen=True)
class TxResult:
    settled: bool
    reason: Optional[str] = None
    tx: Optional[PayoutTx] = None

    def __bool__(self) -> bool:
        return self.settled


@dataclass(frozen=True)
class QoSRecord:
    peer_key: bytes
    chunk_index: int
    download_speed: float  # bits/s
    latency: float  # ms
    block_time: int


@dataclass(frozen=True)
class QoSSummary:
    mean_speed: Optional[float]
    mean_latency: Optional[float]
    count: int


@dataclass
class Ledger:
    daily_capacity: int = ETHEREUM_DAILY_TX
    accounts: dict[bytes, Account] = field(default_factory=dict)
    txs: list[PayoutTx] = field(default_factory=list)
    qos: list[QoSRecord] = field(default_factory=list)
    seen_pods: set[bytes] = field(default_factory=set)
    tx_count_today: int = 0
    day: int = 0
    tx_per_day: list[int] = field(default_factory=lambda: [0])

    def open_account(self, key: bytes, initial_balance: int = 0) -> Account:
        if key in self.accounts:
            raise AlreadyExists(key.hex())
        if initial_balance < 0:
            raise InvalidRecord("initial balance must be non-negative")
        acct = self.accounts[key] = Account(key, initial_balance)
        return acct

    def balance(self, key: bytes) -> int:
        acct = self.accounts.get(key)
        return acct.balance if acct else 0

    def total_balance(self) -> int:
        return sum(a.balance for a in self.accounts.values())

    def submit_payout(self, podc: PoDChain, contract: SmartContract, block_time: int) -> TxResult:
        """Settle the payout for the last PoD of ``podc``.

        Checks run in a fixed order and the first failure names the result:
        chain validity, eligibility, replay, funds, daily capacity.
        """
        pod = podc.last
        if pod is None or not verify_chain(podc, contract):
            return TxResult(False, "invalid-chain")
        if not is_payment_eligible(pod, contract):
            return TxResult(False, "ineligible-pod")
        pod_digest = pod.digest
        if pod_digest in self.seen_pods:
            return TxResult(False, "replay")
        amount = contract.payment_per_eligible_pod
        payer = self.accounts.get(contract.provider_key)
        if payer is None or payer.balance < amount:
            return TxResult(False, "insufficient-funds")
        if self.tx_count_today >= self.daily_capacity:
            return TxResult(False, "capacity-exceeded")

        payee = self.accounts.get(pod.peer_key)
        if payee is None:
            payee = self.open_account(pod.peer_key, 0)
        new_payee_balance = add_money(payee.balance, amount)
        payer.balance -= amount
        payee.balance = new_payee_balance

        tx = PayoutTx(pod, podc, payer.key, payee.key, amount, block_time)
        self.txs.append(tx)
        self.seen_pods.add(pod_digest)
        self.tx_count_today += 1
        self.tx_per_day[-1] += 1
        return TxResult(True, None, tx)

    def record_qos(self, record: QoSRecord) -> None:
        for value in (record.download_speed, record.latency):
            if not math.isfinite(value) or value < 0:
                raise InvalidRecord(f"QoS metrics must be finite and non-negative: {record}")
        self.qos.append(record)

    def peer_qos_summary(self, peer_key: bytes) -> QoSSummary:
        rows = [q for q in self.qos if q.peer_key == peer_key]
        if not rows:
            return QoSSummary(None, None, 0)
        n = len(rows)
        return QoSSummary(
            sum(q.download_speed for q in rows) / n,
            sum(q.latency for q in rows) / n,
            n,
        )

    def advance_day(self) -> None:
        self.day += 1
        self.tx_count_today = 0
        self.tx_per_day.append(0)

    def export_jsonl(self, fp: IO[str]) -> None:
        for tx in self.txs:
            fp.write(json.dumps(tx.to_json(), sort_keys=True) + "\n")


def summarize_jsonl(lines: Iterable[str]) -> dict:
    """Aggregate an exported ledger (one JSON tx per line)."""
    count = 0
    total = 0
    per_payee: dict[str, dict] = {}
    for line in lines:
        line = line.strip()
        if not line:
            continue
        tx = json.loads(line)
        count += 1
        total += tx["amount"]
        row = per_payee.setdefault(tx["payee"], {"payouts": 0, "amount": 0})
        row["payouts"] += 1
        row["amount"] += tx["amount"]
    return {
        "transactions": count,
        "total_paid": total,
        "payees": dict(sorted(per_payee.items())),
        "fees": 0,
        "note": "transaction fees are modelled as zero",
    }
