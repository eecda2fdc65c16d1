"""Threshold-signature quorum certificates.

Shamir-shared Schnorr-style scheme over a fixed prime-order subgroup:
the group secret x is shared with threshold t = 2f + 2 among 3f + 2
members; a partial signature is share_i * H(m) and t partials combine
(Lagrange at zero) to S = x * H(m), verified as g^S == vk^H(m).

Key generation is dealer-simulated and seeded. Serialized sizes are
padded to match the on-chain storage accounting: 128-byte verification
keys and 64-byte signatures.
"""

import hashlib
import random
from dataclasses import dataclass

from .errors import BadCommitteeSize, DuplicateShare, InsufficientShares

# prime-order subgroup: q prime, p = 114*q + 1 prime, g = 2^114 mod p
Q = 0x800000000000000000000000000000000000000000000000000000000000005F
P = 0x390000000000000000000000000000000000000000000000000000000000002A4F
G = 0x40000000000000000000000000000

VK_BYTES = 128
SIG_BYTES = 64


def _hash_to_scalar(message: bytes) -> int:
    h = int.from_bytes(hashlib.sha256(message).digest(), "big") % Q
    return h or 1


def serialize_vk(vk_int: int) -> bytes:
    return vk_int.to_bytes(VK_BYTES, "big")


@dataclass
class PartialSignature:
    member_index: int  # 1-based x-coordinate of the share
    value: int


@dataclass
class ThresholdSignature:
    data: bytes  # 64-byte serialized scalar
    contributors: tuple


@dataclass
class ThresholdKeySet:
    vk: bytes  # 128-byte serialized group element
    shares: dict  # member index (1-based) -> share scalar
    threshold: int
    group_size: int

    def sign_share(self, member_index: int, message: bytes) -> PartialSignature:
        share = self.shares[member_index]
        return PartialSignature(member_index, share * _hash_to_scalar(message) % Q)


def keygen(group_size: int, f: int, seed) -> ThresholdKeySet:
    if group_size != 3 * f + 2:
        raise BadCommitteeSize(f"{group_size} != 3*{f}+2")
    t = 2 * f + 2
    rng = random.Random(f"tsqc-keygen:{seed!r}")
    secret = rng.randrange(1, Q)
    coeffs = [secret] + [rng.randrange(Q) for _ in range(t - 1)]
    shares = {}
    for i in range(1, group_size + 1):
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * i + c) % Q
        shares[i] = acc
    vk = serialize_vk(pow(G, secret, P))
    return ThresholdKeySet(vk, shares, t, group_size)


def _lagrange_combine(partials) -> int:
    indices = [p.member_index for p in partials]
    acc = 0
    for p in partials:
        num = den = 1
        for j in indices:
            if j == p.member_index:
                continue
            num = num * (-j) % Q
            den = den * (p.member_index - j) % Q
        acc = (acc + p.value * num * pow(den, Q - 2, Q)) % Q
    return acc


def combine(partials, threshold: int) -> ThresholdSignature:
    seen = set()
    for p in partials:
        if p.member_index in seen:
            raise DuplicateShare(f"member {p.member_index}")
        seen.add(p.member_index)
    if len(partials) < threshold:
        raise InsufficientShares(f"{len(partials)} < {threshold}")
    scalar = _lagrange_combine(list(partials))
    return ThresholdSignature(scalar.to_bytes(SIG_BYTES, "big"),
                              tuple(sorted(seen)))


def combine_unchecked(partials) -> ThresholdSignature:
    """Combine without the threshold guard; for negative testing only."""
    return ThresholdSignature(_lagrange_combine(list(partials)).to_bytes(SIG_BYTES, "big"),
                              tuple(sorted(p.member_index for p in partials)))


def verify(vk: bytes, message: bytes, signature: bytes) -> bool:
    if len(vk) != VK_BYTES or len(signature) != SIG_BYTES:
        return False
    vk_int = int.from_bytes(vk, "big")
    if not 1 < vk_int < P:
        return False
    s = int.from_bytes(signature, "big")
    return pow(G, s, P) == pow(vk_int, _hash_to_scalar(message), P)
