"""Digests, deterministic Ed25519 signatures and the canonical byte encoding.

Every record that gets hashed or signed goes through :func:`canonical_encode`
so that all parties hash identical bytes.  The layout is fixed:

* unsigned integers: fixed-width big-endian (u64 = 8 bytes, u32 = 4 bytes)
* byte strings: u32 length followed by the bytes
* lists: u32 count followed by the elements
* records: concatenation of their fields in declaration order

There is no padding and no alignment.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Protocol, TypeVar

import nacl.exceptions
import nacl.signing

DIGEST_SIZE = 32
SIGNATURE_SIZE = 64
KEY_SIZE = 32
SEED_SIZE = 32

U64_MAX = (1 << 64) - 1
U32_MAX = (1 << 32) - 1


class PodnetError(Exception):
    """Base class for every error raised by this package."""


class InvalidSeed(PodnetError, ValueError):
    pass


class EncodingError(PodnetError, ValueError):
    """Raised when bytes cannot be decoded into the requested record."""


def hash_bytes(data: bytes) -> bytes:
    """SHA-256 of ``data`` (32 bytes)."""
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 key pair derived from a 32-byte seed.

    ``signing_key`` is the seed itself; ``verifying_key`` is the 32-byte
    public key that identifies a party in certificates and ledger accounts.
    """

    signing_key: bytes = field(repr=False)
    verifying_key: bytes
    _signer: nacl.signing.SigningKey = field(repr=False, compare=False)

    def sign(self, digest: bytes) -> bytes:
        return sign_digest(self, digest)


def keygen_from_seed(seed: bytes) -> KeyPair:
    if not isinstance(seed, (bytes, bytearray)) or len(seed) != SEED_SIZE:
        raise InvalidSeed(f"seed must be exactly {SEED_SIZE} bytes")
    signer = nacl.signing.SigningKey(bytes(seed))
    return KeyPair(bytes(seed), bytes(signer.verify_key), signer)


def keypair_for(label: str, namespace: bytes = b"") -> KeyPair:
    """Reproducible test identity: the seed is ``SHA-256(namespace || label)``."""
    return keygen_from_seed(hash_bytes(namespace + label.encode()))


def sign_digest(kp: KeyPair, digest: bytes) -> bytes:
    # Ed25519 is deterministic: same key and message give the same 64 bytes.
    return kp._signer.sign(bytes(digest)).signature


@lru_cache(maxsize=1 << 17)
def _verify(vk: bytes, digest: bytes, sig: bytes) -> bool:
    try:
        nacl.signing.VerifyKey(vk).verify(digest, sig)
    except (nacl.exceptions.BadSignatureError, nacl.exceptions.ValueError,
            nacl.exceptions.TypeError, ValueError, TypeError):
        return False
    return True


def verify_signature(vk: bytes, digest: bytes, sig: bytes) -> bool:
    """True iff ``sig`` is a valid signature of ``digest`` under ``vk``.

    Malformed inputs give False.  Results are memoised on the exact byte
    triple, which is sound because verification is a pure function.
    """
    if len(vk) != KEY_SIZE or len(sig) != SIGNATURE_SIZE:
        return False
    return _verify(bytes(vk), bytes(digest), bytes(sig))


# -- canonical encoding ----------------------------------------------------

class Writer:
    __slots__ = ("_parts",)

    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u64(self, value: int) -> "Writer":
        if not 0 <= value <= U64_MAX:
            raise EncodingError(f"u64 out of range: {value}")
        self._parts.append(struct.pack(">Q", value))
        return self

    def u32(self, value: int) -> "Writer":
        if not 0 <= value <= U32_MAX:
            raise EncodingError(f"u32 out of range: {value}")
        self._parts.append(struct.pack(">I", value))
        return self

    def bytes_(self, value: bytes) -> "Writer":
        self.u32(len(value))
        self._parts.append(bytes(value))
        return self

    def text(self, value: str) -> "Writer":
        return self.bytes_(value.encode("utf-8"))

    def raw(self, value: bytes) -> "Writer":
        self._parts.append(value)
        return self

    def list_(self, items: Iterable, write_item: Callable[["Writer", object], object]) -> "Writer":
        items = list(items)
        self.u32(len(items))
        for item in items:
            write_item(self, item)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    __slots__ = ("_data", "_pos")

    def __init__(self, data: bytes) -> None:
        self._data = memoryview(bytes(data))
        self._pos = 0

    def _take(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._data):
            raise EncodingError("truncated input")
        out = self._data[self._pos:end].tobytes()
        self._pos = end
        return out

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def bytes_(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.bytes_().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError("invalid utf-8 text") from exc

    def list_(self, read_item: Callable[["Reader"], T]) -> list[T]:
        count = self.u32()
        # each element occupies at least one byte; reject absurd counts early
        if count > len(self._data) - self._pos:
            raise EncodingError("list count exceeds input size")
        return [read_item(self) for _ in range(count)]

    def finish(self) -> None:
        if self._pos != len(self._data):
            raise EncodingError("trailing bytes after record")


T = TypeVar("T")


class Record(Protocol):
    def write_to(self, w: Writer) -> None: ...

    @classmethod
    def read_from(cls, r: Reader): ...


def canonical_encode(value: Record) -> bytes:
    w = Writer()
    value.write_to(w)
    return w.getvalue()


def canonical_decode(cls: type[T], data: bytes) -> T:
    """Inverse of :func:`canonical_encode`; the whole input must be consumed."""
    r = Reader(data)
    try:
        value = cls.read_from(r)
    except PodnetError:
        raise
    except (ValueError, TypeError) as exc:
        raise EncodingError(str(exc)) from exc
    r.finish()
    return value
