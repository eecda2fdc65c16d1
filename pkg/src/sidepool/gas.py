"""Mainchain gas and byte-size accounting.

Itemized model for the epoch sync call (per-payout constant, per-word
storage, hash-to-point, scalar multiplication, pairing check), flat
costs for two-token deposits, and the measured per-operation averages
for the baseline deployment that processes every transaction on the
mainchain.
"""

from .errors import UnknownOp

# sync call components
PAYOUT_BASE_GAS = 15_771
WORD_GAS = 22_100
PAYOUT_WORDS = 11       # 352-byte mainchain payout entry
POSITION_WORDS = 13     # 416-byte mainchain position entry
AUTH_WORDS = 6          # 192 bytes: 128-byte vk + 64-byte signature
PAIRING_GAS = 113_000
ECMUL_GAS = 6_000

DEPOSIT_GAS = 105_392   # two-token deposit

# baseline per-operation averages
BASELINE_GAS = {
    "swap": 160_601,
    "mint": 435_610,
    "burn": 158_473,
    "collect": 163_743,
}

# mainchain byte sizes
# deposit calldata: two token ids, two amounts, sender, call overhead
DEPOSIT_MAIN_BYTES = 192.0
PAYOUT_ENTRY_MAIN_BYTES = 352
POSITION_ENTRY_MAIN_BYTES = 416
AUTH_MAIN_BYTES = 192
BASELINE_TX_BYTES = {
    "swap": 365.27,
    "mint": 565.55,
    "burn": 280.21,
    "collect": 150.18,
}

# sidechain summary encoding
PAYOUT_ENTRY_SIDE_BYTES = 97
POSITION_ENTRY_SIDE_BYTES = 215


def hash_gas(summary_bytes: int) -> int:
    return 30 + 6 * -(-summary_bytes // 256)


def sync_gas(n_payouts: int, n_positions: int, summary_bytes: int) -> int:
    words = PAYOUT_WORDS * n_payouts + POSITION_WORDS * n_positions + AUTH_WORDS
    return (PAYOUT_BASE_GAS * n_payouts + WORD_GAS * words
            + PAIRING_GAS + ECMUL_GAS + hash_gas(summary_bytes))


def sync_bytes(n_payouts: int, n_positions: int) -> int:
    return (PAYOUT_ENTRY_MAIN_BYTES * n_payouts
            + POSITION_ENTRY_MAIN_BYTES * n_positions + AUTH_MAIN_BYTES)


def gas_cost(op: dict) -> int:
    """Gas units for an operation descriptor.

    Descriptors: {"op": "sync", "payouts": n, "positions": n, "sum_bytes": n},
    {"op": "deposit"}, or {"op": <baseline kind>}.
    """
    kind = op.get("op")
    if kind == "sync":
        return sync_gas(op["payouts"], op["positions"], op["sum_bytes"])
    if kind == "deposit":
        return DEPOSIT_GAS
    if kind in BASELINE_GAS:
        return BASELINE_GAS[kind]
    raise UnknownOp(repr(kind))
