"""Per-file payment terms and the probabilistic payment-eligibility rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .primitives import (
    DIGEST_SIZE,
    U64_MAX,
    PodnetError,
    Reader,
    Writer,
    hash_bytes,
)

if TYPE_CHECKING:
    from .podchain import ProofOfDelivery

#: money is held as integer micro-units (1 unit = 10**6 micro-units)
MICRO = 1_000_000
PROB_SCALE = 10**9


class ContractError(PodnetError, ValueError):
    pass


class InvalidModulus(ContractError):
    pass


class InvalidFile(ContractError):
    pass


class InvalidProbability(ContractError):
    pass


class MoneyOverflow(PodnetError, OverflowError):
    pass


def add_money(a: int, b: int) -> int:
    """Checked u64 addition of two micro-unit amounts."""
    if a < 0 or b < 0:
        raise ValueError("money amounts are unsigned")
    total = a + b
    if total > U64_MAX:
        raise MoneyOverflow(f"{a} + {b} overflows u64")
    return total


def to_micro(units: float) -> int:
    return int(round(units * MICRO))


def _quantize_probability(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"probability {p} outside [0, 1]")
    return round(p * PROB_SCALE) / PROB_SCALE


@dataclass(frozen=True)
class SmartContract:
    """Terms a provider publishes for one file.

    ``payment_per_eligible_pod`` is what one eligible PoD pays out; the
    expected payment per chunk is that amount divided by
    ``eligibility_modulus_n``.
    """

    file_id: bytes
    provider_key: bytes
    payment_per_eligible_pod: int
    eligibility_modulus_n: int
    chunk_hashes: tuple[bytes, ...]
    podc_request_prob_p: float

    @property
    def chunk_count_l(self) -> int:
        return len(self.chunk_hashes)

    @property
    def expected_payment_per_chunk(self) -> float:
        return self.payment_per_eligible_pod / self.eligibility_modulus_n

    def write_to(self, w: Writer) -> None:
        w.bytes_(self.file_id)
        w.bytes_(self.provider_key)
        w.u64(self.payment_per_eligible_pod)
        w.u64(self.eligibility_modulus_n)
        w.u64(self.chunk_count_l)
        w.list_(self.chunk_hashes, Writer.bytes_)
        w.u64(round(self.podc_request_prob_p * PROB_SCALE))

    @classmethod
    def read_from(cls, r: Reader) -> "SmartContract":
        file_id = r.bytes_()
        provider_key = r.bytes_()
        payment = r.u64()
        n = r.u64()
        count = r.u64()
        hashes = r.list_(Reader.bytes_)
        p_scaled = r.u64()
        if count != len(hashes):
            raise InvalidFile("chunk count does not match chunk hash list")
        return new_contract(file_id, provider_key, payment, n, hashes, p_scaled / PROB_SCALE)


def new_contract(
    file_id: bytes,
    provider_key: bytes,
    payment: int,
    n: int,
    chunk_hashes,
    p: float,
) -> SmartContract:
    if n < 1:
        raise InvalidModulus(f"eligibility modulus must be >= 1, got {n}")
    hashes = tuple(bytes(h) for h in chunk_hashes)
    if not hashes:
        raise InvalidFile("a file needs at least one chunk")
    if any(len(h) != DIGEST_SIZE for h in hashes):
        raise InvalidFile("chunk hashes must be 32-byte digests")
    if payment < 0 or payment > U64_MAX:
        raise ContractError("payment must be a u64 micro-unit amount")
    return SmartContract(
        file_id=bytes(file_id),
        provider_key=bytes(provider_key),
        payment_per_eligible_pod=int(payment),
        eligibility_modulus_n=int(n),
        chunk_hashes=hashes,
        podc_request_prob_p=_quantize_probability(float(p)),
    )


def eligibility_value(pod_signature: bytes) -> int:
    """First 8 bytes of SHA-256(signature) read as a big-endian u64."""
    return int.from_bytes(hash_bytes(pod_signature)[:8], "big")


def is_payment_eligible(pod: "ProofOfDelivery", contract: SmartContract) -> bool:
    return eligibility_value(pod.signature) % contract.eligibility_modulus_n == 0
