"""Checked 128-bit amounts, canonical byte/JSON encodings, and hashing.

One fixed serialization scheme is used everywhere a value is hashed or
signed: length-prefixed big-endian fields written in declaration order.
"""

import hashlib
import json

from .errors import AmountOverflow

U128_MAX = (1 << 128) - 1


def u128(value):
    """Validate an unsigned 128-bit token amount (overflow is an error)."""
    if not isinstance(value, int) or isinstance(value, bool):
        raise AmountOverflow(f"not an integer amount: {value!r}")
    if value < 0 or value > U128_MAX:
        raise AmountOverflow(f"out of u128 range: {value}")
    return value


def checked_add(a, b):
    return u128(u128(a) + u128(b))


def checked_sub(a, b):
    return u128(u128(a) - u128(b))


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class Writer:
    """Canonical byte writer: length-prefixed big-endian fields."""

    def __init__(self):
        self._parts = []

    def bytes_(self, b: bytes):
        self._parts.append(len(b).to_bytes(4, "big"))
        self._parts.append(b)
        return self

    def str_(self, s: str):
        return self.bytes_(s.encode("utf-8"))

    def u128_(self, v: int):
        self._parts.append(u128(v).to_bytes(16, "big"))
        return self

    def i64_(self, v: int):
        self._parts.append(int(v).to_bytes(8, "big", signed=True))
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


def canonical_json(obj) -> str:
    """Canonical JSON: sorted keys, no whitespace, amounts as decimal strings.

    Integers must already be converted to strings by the caller's to_json
    methods; this only fixes key order and separators.
    """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def state_hash(obj) -> bytes:
    return sha256(canonical_json(obj).encode("utf-8"))
