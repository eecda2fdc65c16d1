"""Pool pricing and liquidity-position logic.

Constant-product pricing over checked integer amounts. Positions carry a
tick range; the default configuration is full-range, and a trade that
would move the active price past any position boundary (changing the
in-range set mid-swap) is rejected with PriceLimitHit rather than
crossed.

Swap fees accrue to a per-pool pending balance and are distributed to
the in-range positions proportionally to liquidity whenever the
in-range set can change (mint, burn, collect, or an explicit
settle_fees call). Position liquidity is untouched by swaps, so the
split over a whole window equals a proportional split and stays O(1)
per swap. The integer remainder of each settlement goes to the largest
in-range position, ties broken by smallest id, so distributed amounts
always sum exactly to the fees taken.

All operations validate first and mutate the pool only on success, so a
raised error leaves the PoolState untouched.
"""

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

from .errors import (
    BadRange,
    ExpiredDeadline,
    InsufficientReserve,
    NoActiveLiquidity,
    NotOwner,
    PriceLimitHit,
    SlippageExceeded,
    UnknownPosition,
    ZeroAmount,
    ZeroLiquidity,
)
from .serialize import Writer, checked_add, checked_sub, sha256, u128

PPM = 1_000_000
MIN_TICK = -887_272
MAX_TICK = 887_272
FULL_RANGE = (MIN_TICK, MAX_TICK)

_LOG_TICK_BASE = math.log(1.0001)


def price_tick(num: int, den: int) -> int:
    """Tick index of the price num/den (floor of the log-1.0001 price)."""
    if num <= 0 or den <= 0:
        raise ZeroAmount("tick of a degenerate price")
    return math.floor((math.log(num) - math.log(den)) / _LOG_TICK_BASE)


def position_id_for(tx_hash: bytes, owner: str) -> bytes:
    return sha256(Writer().bytes_(tx_hash).str_(owner).getvalue())


@dataclass
class Position:
    position_id: bytes
    pool_id: bytes
    owner: str
    amount_a: int = 0
    amount_b: int = 0
    lower_tick: int = MIN_TICK
    upper_tick: int = MAX_TICK
    fees_a: int = 0
    fees_b: int = 0

    @property
    def liquidity(self) -> int:
        return isqrt(self.amount_a * self.amount_b)

    def in_range(self, tick: int) -> bool:
        return self.lower_tick <= tick < self.upper_tick

    def is_empty(self) -> bool:
        return (self.amount_a | self.amount_b | self.fees_a | self.fees_b) == 0

    def copy(self) -> "Position":
        return Position(self.position_id, self.pool_id, self.owner,
                        self.amount_a, self.amount_b,
                        self.lower_tick, self.upper_tick,
                        self.fees_a, self.fees_b)

    def to_json(self):
        return {
            "position_id": self.position_id.hex(),
            "pool_id": self.pool_id.hex(),
            "owner": self.owner,
            "amount_a": str(self.amount_a),
            "amount_b": str(self.amount_b),
            "lower_tick": self.lower_tick,
            "upper_tick": self.upper_tick,
            "fees_a": str(self.fees_a),
            "fees_b": str(self.fees_b),
        }

    @classmethod
    def from_json(cls, d):
        return cls(bytes.fromhex(d["position_id"]), bytes.fromhex(d["pool_id"]),
                   d["owner"], int(d["amount_a"]), int(d["amount_b"]),
                   d["lower_tick"], d["upper_tick"],
                   int(d["fees_a"]), int(d["fees_b"]))


@dataclass
class PoolState:
    pool_id: bytes
    token_a: str
    token_b: str
    reserve_a: int = 0
    reserve_b: int = 0
    fee_rate_ppm: int = 3000
    current_tick: int = 0
    positions: dict = field(default_factory=dict)  # position_id -> Position
    pending_fees_a: int = 0    # swap fees not yet settled onto positions
    pending_fees_b: int = 0
    _boundaries: list = field(default=None, repr=False, compare=False)

    @property
    def total_liquidity(self) -> int:
        return sum(p.liquidity for p in self.positions.values())

    def boundary_ticks(self) -> list:
        """Sorted tick boundaries of all positions (cached; invalidated
        whenever the position set changes)."""
        if self._boundaries is None:
            ticks = set()
            for p in self.positions.values():
                ticks.add(p.lower_tick)
                ticks.add(p.upper_tick)
            self._boundaries = sorted(ticks)
        return self._boundaries

    def invalidate_boundaries(self):
        self._boundaries = None

    def reserve_of(self, token: str) -> int:
        if token == self.token_a:
            return self.reserve_a
        if token == self.token_b:
            return self.reserve_b
        raise KeyError(token)

    def other_token(self, token: str) -> str:
        if token == self.token_a:
            return self.token_b
        if token == self.token_b:
            return self.token_a
        raise KeyError(token)

    def copy(self) -> "PoolState":
        return PoolState(self.pool_id, self.token_a, self.token_b,
                         self.reserve_a, self.reserve_b, self.fee_rate_ppm,
                         self.current_tick,
                         {pid: p.copy() for pid, p in self.positions.items()},
                         self.pending_fees_a, self.pending_fees_b)

    def to_json(self):
        return {
            "pool_id": self.pool_id.hex(),
            "token_a": self.token_a,
            "token_b": self.token_b,
            "reserve_a": str(self.reserve_a),
            "reserve_b": str(self.reserve_b),
            "fee_rate_ppm": self.fee_rate_ppm,
            "current_tick": self.current_tick,
            "positions": {pid.hex(): p.to_json() for pid, p in self.positions.items()},
            "pending_fees_a": str(self.pending_fees_a),
            "pending_fees_b": str(self.pending_fees_b),
        }

    @classmethod
    def from_json(cls, d):
        return cls(bytes.fromhex(d["pool_id"]), d["token_a"], d["token_b"],
                   int(d["reserve_a"]), int(d["reserve_b"]), d["fee_rate_ppm"],
                   d["current_tick"],
                   {bytes.fromhex(k): Position.from_json(v)
                    for k, v in d["positions"].items()},
                   int(d["pending_fees_a"]), int(d["pending_fees_b"]))


@dataclass
class SwapResult:
    amount_in_charged: int
    amount_out: int
    fee_paid: int
    positions_credited: list  # [(position_id, fee_a_delta, fee_b_delta)]


def _active_positions(pool: PoolState, tick: int):
    return [p for p in pool.positions.values() if p.in_range(tick)]


def refresh_tick(pool: PoolState):
    """Keep current_tick consistent with the reserve ratio after
    liquidity events; swaps set it on their own exact post-trade ratio."""
    if pool.reserve_a > 0 and pool.reserve_b > 0:
        pool.current_tick = price_tick(pool.reserve_b, pool.reserve_a)


def split_fee(pool: PoolState, fee: int, active_tick: int):
    """Proportional fee split over in-range positions.

    Each in-range position gets floor(fee * L_pos / L_active); the integer
    remainder goes to the in-range position with the largest liquidity
    (ties broken by smallest id). The deltas always sum to exactly fee.
    """
    u128(fee)
    if fee == 0:
        return []
    active = _active_positions(pool, active_tick)
    total = sum(p.liquidity for p in active)
    if total == 0:
        raise NoActiveLiquidity("fee with no in-range liquidity")
    shares = [(p, fee * p.liquidity // total) for p in active]
    remainder = fee - sum(s for _, s in shares)
    if remainder:
        sink = min(active, key=lambda p: (-p.liquidity, p.position_id))
        shares = [(p, s + remainder) if p is sink else (p, s) for p, s in shares]
    return [(p.position_id, s) for p, s in shares if s > 0]


def distribute_fee(pool: PoolState, token_in: str, fee: int, active_tick: int):
    """Credit a fee amount (paid in token_in) to the in-range positions."""
    shares = split_fee(pool, fee, active_tick)
    credited = []
    a_side = token_in == pool.token_a
    for pid, delta in shares:
        pos = pool.positions[pid]
        if a_side:
            pos.fees_a = checked_add(pos.fees_a, delta)
            credited.append((pid, delta, 0))
        else:
            pos.fees_b = checked_add(pos.fees_b, delta)
            credited.append((pid, 0, delta))
    return credited


def settle_fees(pool: PoolState):
    """Distribute the pool's pending swap fees onto in-range positions.

    Called before anything that can change the in-range set or read a
    position's fee balance; a no-op when nothing is pending.
    """
    credited = []
    if pool.pending_fees_a:
        credited += distribute_fee(pool, pool.token_a, pool.pending_fees_a,
                                   pool.current_tick)
        pool.pending_fees_a = 0
    if pool.pending_fees_b:
        credited += distribute_fee(pool, pool.token_b, pool.pending_fees_b,
                                   pool.current_tick)
        pool.pending_fees_b = 0
    return credited


def crosses_boundary(pool: PoolState, old_tick: int, new_tick: int) -> bool:
    """Whether moving the price from old_tick to new_tick changes any
    position's in-range membership (a boundary lies in the moved span)."""
    if old_tick == new_tick:
        return False
    lo, hi = min(old_tick, new_tick), max(old_tick, new_tick)
    ticks = pool.boundary_ticks()
    # membership flips iff some boundary falls in the half-open span (lo, hi]
    return bisect_right(ticks, hi) > bisect_right(ticks, lo)


def _quote_exact_input(reserve_in, reserve_out, amount_in, fee_rate_ppm):
    effective = amount_in * (PPM - fee_rate_ppm) // PPM
    out = reserve_out * effective // (reserve_in + effective)
    return effective, out


def swap_exact_input(pool: PoolState, token_in: str, amount_in: int,
                     min_out: int, price_limit=None, deadline: int = 0,
                     now: int = 0) -> SwapResult:
    if amount_in == 0:
        raise ZeroAmount("swap of zero input")
    u128(amount_in)
    if now > deadline:
        raise ExpiredDeadline(f"now={now} > deadline={deadline}")
    token_out = pool.other_token(token_in)
    reserve_in = pool.reserve_of(token_in)
    reserve_out = pool.reserve_of(token_out)
    if reserve_in == 0 or reserve_out == 0:
        raise InsufficientReserve("pool has an empty reserve")

    effective, out = _quote_exact_input(reserve_in, reserve_out, amount_in,
                                        pool.fee_rate_ppm)
    if out < min_out:
        raise SlippageExceeded(f"out {out} < min_out {min_out}")
    fee = amount_in - effective

    new_in = checked_add(reserve_in, effective)
    new_out = checked_sub(reserve_out, out)
    if new_out == 0:
        raise InsufficientReserve("swap would drain the pool")

    if token_in == pool.token_a:
        new_a, new_b = new_in, new_out
    else:
        new_a, new_b = new_out, new_in

    # price limit: bound on the post-trade reserve ratio reserve_in/reserve_out
    if price_limit is not None:
        limit = Fraction(price_limit)
        if Fraction(new_in, new_out) > limit:
            raise PriceLimitHit(f"post-trade ratio above {limit}")

    new_tick = price_tick(new_b, new_a)
    if crosses_boundary(pool, pool.current_tick, new_tick):
        raise PriceLimitHit("trade would cross a position boundary")

    if fee:
        if token_in == pool.token_a:
            pool.pending_fees_a = checked_add(pool.pending_fees_a, fee)
        else:
            pool.pending_fees_b = checked_add(pool.pending_fees_b, fee)
    pool.reserve_a, pool.reserve_b = new_a, new_b
    pool.current_tick = new_tick
    return SwapResult(amount_in, out, fee, [])


def swap_exact_output(pool: PoolState, token_out: str, amount_out: int,
                      max_in: int, price_limit=None, deadline: int = 0,
                      now: int = 0) -> SwapResult:
    if amount_out == 0:
        raise ZeroAmount("swap for zero output")
    u128(amount_out)
    if now > deadline:
        raise ExpiredDeadline(f"now={now} > deadline={deadline}")
    token_in = pool.other_token(token_out)
    reserve_in = pool.reserve_of(token_in)
    reserve_out = pool.reserve_of(token_out)
    if amount_out >= reserve_out:
        raise InsufficientReserve(f"want {amount_out} of reserve {reserve_out}")

    def out_for(gross):
        return _quote_exact_input(reserve_in, reserve_out, gross,
                                  pool.fee_rate_ppm)[1]

    # smallest gross input whose exact-input output covers amount_out
    hi = 1
    while out_for(hi) < amount_out:
        hi *= 2
        if hi > (max_in or 0) * 4 + (1 << 130):
            raise SlippageExceeded("no affordable input reaches the output")
    lo = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if out_for(mid) >= amount_out:
            hi = mid
        else:
            lo = mid + 1
    gross = hi
    if gross > max_in:
        raise SlippageExceeded(f"needed {gross} > max_in {max_in}")
    return swap_exact_input(pool, token_in, gross, amount_out, price_limit,
                            deadline, now)


def mint(pool: PoolState, owner: str, desired_a: int, desired_b: int,
         lower_tick: int = MIN_TICK, upper_tick: int = MAX_TICK,
         existing_position: bytes = None, tx_hash: bytes = b""):
    u128(desired_a)
    u128(desired_b)
    if desired_a == 0 and desired_b == 0:
        raise ZeroLiquidity("mint of nothing")
    if lower_tick >= upper_tick:
        raise BadRange(f"[{lower_tick}, {upper_tick})")

    settle_fees(pool)
    total = pool.total_liquidity
    if total == 0:
        liquidity = isqrt(desired_a * desired_b)
        if liquidity == 0:
            raise ZeroLiquidity("amounts too small for any liquidity")
        used_a, used_b = desired_a, desired_b
    else:
        liquidity = min(desired_a * total // pool.reserve_a,
                        desired_b * total // pool.reserve_b)
        if liquidity == 0:
            raise ZeroLiquidity("amounts too small for any liquidity")
        used_a = -(-liquidity * pool.reserve_a // total)  # ceil, never > desired
        used_b = -(-liquidity * pool.reserve_b // total)

    if existing_position is not None:
        pos = pool.positions.get(existing_position)
        if pos is None:
            raise UnknownPosition(existing_position.hex())
        if pos.owner != owner:
            raise NotOwner(f"{owner} does not own {existing_position.hex()}")
        pos.amount_a = checked_add(pos.amount_a, used_a)
        pos.amount_b = checked_add(pos.amount_b, used_b)
    else:
        pid = position_id_for(tx_hash, owner)
        pos = Position(pid, pool.pool_id, owner, used_a, used_b,
                       lower_tick, upper_tick)
        pool.positions[pid] = pos
    pool.invalidate_boundaries()
    pool.reserve_a = checked_add(pool.reserve_a, used_a)
    pool.reserve_b = checked_add(pool.reserve_b, used_b)
    refresh_tick(pool)
    return pos, used_a, used_b


def burn(pool: PoolState, caller: str, position_id: bytes,
         requested_a: int, requested_b: int):
    pos = pool.positions.get(position_id)
    if pos is None:
        raise UnknownPosition(position_id.hex())
    if pos.owner != caller:
        raise NotOwner(f"{caller} does not own {position_id.hex()}")
    settle_fees(pool)
    withdrawn_a = min(u128(requested_a), pos.amount_a)
    withdrawn_b = min(u128(requested_b), pos.amount_b)
    if withdrawn_a > pool.reserve_a or withdrawn_b > pool.reserve_b:
        raise InsufficientReserve("burn exceeds pool reserves")

    pos.amount_a -= withdrawn_a
    pos.amount_b -= withdrawn_b
    pool.reserve_a -= withdrawn_a
    pool.reserve_b -= withdrawn_b

    fees_a = fees_b = 0
    deleted = False
    if pos.amount_a == 0 and pos.amount_b == 0:
        # a fully withdrawn position pays out its accrued fees and disappears
        fees_a, fees_b = pos.fees_a, pos.fees_b
        pos.fees_a = pos.fees_b = 0
        del pool.positions[position_id]
        pool.invalidate_boundaries()
        deleted = True
    refresh_tick(pool)
    return withdrawn_a, withdrawn_b, fees_a, fees_b, deleted


def collect(pool: PoolState, caller: str, position_id: bytes,
            want_a: int, want_b: int):
    pos = pool.positions.get(position_id)
    if pos is None:
        raise UnknownPosition(position_id.hex())
    if pos.owner != caller:
        raise NotOwner(f"{caller} does not own {position_id.hex()}")
    settle_fees(pool)
    paid_a = min(u128(want_a), pos.fees_a)
    paid_b = min(u128(want_b), pos.fees_b)
    pos.fees_a -= paid_a
    pos.fees_b -= paid_b
    return paid_a, paid_b
