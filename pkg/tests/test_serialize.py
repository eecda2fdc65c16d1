"""Checked amounts and canonical encodings."""

import hashlib

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sidepool.errors import AmountOverflow
from sidepool.serialize import (
    U128_MAX,
    Writer,
    canonical_json,
    checked_add,
    checked_sub,
    sha256,
    state_hash,
    u128,
)


def test_u128_accepts_bounds():
    assert u128(0) == 0
    assert u128(U128_MAX) == U128_MAX


@pytest.mark.parametrize("bad", [-1, U128_MAX + 1, 1.0, "5", True, None])
def test_u128_rejects_non_amounts(bad):
    with pytest.raises(AmountOverflow):
        u128(bad)


def test_checked_ops():
    assert checked_add(U128_MAX - 1, 1) == U128_MAX
    assert checked_sub(5, 5) == 0
    with pytest.raises(AmountOverflow):
        checked_add(U128_MAX, 1)
    with pytest.raises(AmountOverflow):
        checked_sub(4, 5)


@given(st.integers(0, U128_MAX), st.integers(0, U128_MAX))
def test_checked_add_matches_plain_int_or_raises(a, b):
    if a + b <= U128_MAX:
        assert checked_add(a, b) == a + b
    else:
        with pytest.raises(AmountOverflow):
            checked_add(a, b)


def test_writer_byte_layout():
    # length-prefixed (4-byte big-endian) bytes, 16-byte u128, signed 8-byte i64
    out = Writer().bytes_(b"ab").getvalue()
    assert out == b"\x00\x00\x00\x02ab"
    assert Writer().str_("hi").getvalue() == b"\x00\x00\x00\x02hi"
    assert Writer().u128_(1).getvalue() == b"\x00" * 15 + b"\x01"
    assert Writer().i64_(-1).getvalue() == b"\xff" * 8
    assert (Writer().str_("a").i64_(2).getvalue()
            == b"\x00\x00\x00\x01a" + b"\x00" * 7 + b"\x02")


def test_writer_is_unambiguous():
    # the length prefix separates fields that would otherwise collide
    assert (Writer().str_("ab").str_("c").getvalue()
            != Writer().str_("a").str_("bc").getvalue())


def test_sha256_matches_hashlib():
    assert sha256(b"x") == hashlib.sha256(b"x").digest()


def test_canonical_json_sorted_and_compact():
    assert canonical_json({"b": 1, "a": {"d": 2, "c": 3}}) == \
        '{"a":{"c":3,"d":2},"b":1}'


def test_state_hash_is_order_independent():
    assert state_hash({"a": 1, "b": 2}) == state_hash({"b": 2, "a": 1})
    assert state_hash({"a": 1}) != state_hash({"a": 2})
