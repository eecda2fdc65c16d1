"""Mainchain-resident base contract as a deterministic state machine.

Tracks pools, epoch-based deposits, positions of record, and the
committee verification key. An epoch sync call replaces position images,
disburses payouts, reconciles pool reserves from the reported lists, and
rotates the committee key, all atomically: any error leaves the input
state untouched.

A sync produced by a later committee (mass-sync after a missed or
rolled-back sync) authenticates through a vk chain: each link is a
threshold endorsement of the next committee key signed under the
previous one, starting from the key the bank has on record.
"""

from dataclasses import dataclass, field

from . import tsig
from .engine import PoolState, refresh_tick
from .errors import (
    BadSignature,
    EpochGap,
    InsufficientReserve,
    NegativeReserve,
    PoolExists,
    RepaymentFailed,
    SameToken,
    ZeroAmount,
)
from .serialize import Writer, canonical_json, checked_add, sha256, u128


def pool_id_for(token_a: str, token_b: str, fee_rate_ppm: int) -> bytes:
    return sha256(Writer().str_(token_a).str_(token_b).i64_(fee_rate_ppm).getvalue())


def endorsement_bytes(next_vk: bytes, epoch: int) -> bytes:
    return Writer().str_("vk-endorsement").bytes_(next_vk).i64_(epoch).getvalue()


@dataclass
class DepositBook:
    entries: dict = field(default_factory=dict)   # (user, token) -> amount
    pending: dict = field(default_factory=dict)   # epoch -> {(user, token) -> amount}

    def credit_pending(self, user, token, amount, epoch):
        u128(amount)
        bucket = self.pending.setdefault(epoch, {})
        key = (user, token)
        bucket[key] = checked_add(bucket.get(key, 0), amount)

    def mature_through(self, epoch):
        """Merge into entries every pending bucket tagged <= epoch."""
        for tag in sorted(e for e in self.pending if e <= epoch):
            for key, amount in sorted(self.pending.pop(tag).items()):
                self.entries[key] = checked_add(self.entries.get(key, 0), amount)

    def total(self, token):
        out = sum(a for (_, t), a in self.entries.items() if t == token)
        for bucket in self.pending.values():
            out += sum(a for (_, t), a in bucket.items() if t == token)
        return out

    def copy(self):
        return DepositBook(dict(self.entries),
                           {e: dict(b) for e, b in self.pending.items()})

    def to_json(self):
        return {
            "entries": {f"{u}|{t}": str(a)
                        for (u, t), a in sorted(self.entries.items()) if a},
            "pending": {str(e): {f"{u}|{t}": str(a)
                                 for (u, t), a in sorted(b.items()) if a}
                        for e, b in sorted(self.pending.items())},
        }

    @classmethod
    def from_json(cls, d):
        def unkey(m):
            out = {}
            for k, v in m.items():
                user, token = k.rsplit("|", 1)
                out[(user, token)] = int(v)
            return out
        return cls(unkey(d["entries"]),
                   {int(e): unkey(b) for e, b in d["pending"].items()})


@dataclass
class SyncPayload:
    epoch_first: int
    epoch_last: int
    payouts: list        # [(user, token, amount)] sorted
    positions: list      # [Position] full replacement images, sorted by id
    next_committee_vk: bytes
    vk_chain: list = field(default_factory=list)  # [(vk, endorsement sig)]
    signature: bytes = b""

    def signing_bytes(self) -> bytes:
        w = Writer().str_("sync").i64_(self.epoch_first).i64_(self.epoch_last)
        w.i64_(len(self.payouts))
        for user, token, amount in self.payouts:
            w.str_(user).str_(token).u128_(amount)
        w.i64_(len(self.positions))
        for p in self.positions:
            (w.bytes_(p.position_id).bytes_(p.pool_id).str_(p.owner)
             .u128_(p.amount_a).u128_(p.amount_b)
             .i64_(p.lower_tick).i64_(p.upper_tick)
             .u128_(p.fees_a).u128_(p.fees_b))
        w.bytes_(self.next_committee_vk)
        w.i64_(len(self.vk_chain))
        for vk, endorsement in self.vk_chain:
            w.bytes_(vk).bytes_(endorsement)
        return w.getvalue()


@dataclass
class BankState:
    pools: dict = field(default_factory=dict)  # pool_id -> PoolState
    deposits: DepositBook = field(default_factory=DepositBook)
    committee_vk: bytes = b"\x00" * tsig.VK_BYTES
    last_synced_epoch: int = -1
    carry_over_deposits: bool = False
    disbursed: dict = field(default_factory=dict)  # (user, token) -> cumulative

    @property
    def positions(self):
        out = {}
        for pool in self.pools.values():
            out.update(pool.positions)
        return out

    def pool_for_token(self, token):
        for pool in self.pools.values():
            if token in (pool.token_a, pool.token_b):
                return pool
        return None

    def create_pool(self, token_a, token_b, fee_rate_ppm=3000) -> bytes:
        if token_a == token_b:
            raise SameToken(token_a)
        pid = pool_id_for(token_a, token_b, fee_rate_ppm)
        if pid in self.pools:
            raise PoolExists(pid.hex())
        self.pools[pid] = PoolState(pid, token_a, token_b,
                                    fee_rate_ppm=fee_rate_ppm)
        return pid

    def deposit(self, user, token, amount, epoch):
        if amount == 0:
            raise ZeroAmount("deposit of zero")
        self.deposits.credit_pending(user, token, amount, epoch)
        return {"user": user, "token": token, "amount": amount, "epoch": epoch}

    def flash(self, pool_id, borrower_callback, amount_a, amount_b):
        pool = self.pools[pool_id]
        if u128(amount_a) > pool.reserve_a or u128(amount_b) > pool.reserve_b:
            raise InsufficientReserve("flash exceeds reserves")
        fee_a = -(-amount_a * pool.fee_rate_ppm // 1_000_000)
        fee_b = -(-amount_b * pool.fee_rate_ppm // 1_000_000)
        repay_a, repay_b = borrower_callback(amount_a, amount_b)
        if repay_a < amount_a + fee_a or repay_b < amount_b + fee_b:
            raise RepaymentFailed("loan not covered within the block")
        pool.reserve_a = checked_add(pool.reserve_a, fee_a)
        pool.reserve_b = checked_add(pool.reserve_b, fee_b)
        return True

    def fees_owed(self, token):
        out = 0
        for pool in self.pools.values():
            if token == pool.token_a:
                out += pool.pending_fees_a
                out += sum(p.fees_a for p in pool.positions.values())
            elif token == pool.token_b:
                out += pool.pending_fees_b
                out += sum(p.fees_b for p in pool.positions.values())
        return out

    def custody(self, token):
        """Tokens held on behalf of users: reserves + deposits + fees owed."""
        out = self.deposits.total(token)
        pool = self.pool_for_token(token)
        if pool is not None:
            out += pool.reserve_of(token) + self.fees_owed(token)
        return out

    def copy(self):
        return BankState({pid: p.copy() for pid, p in self.pools.items()},
                         self.deposits.copy(), self.committee_vk,
                         self.last_synced_epoch, self.carry_over_deposits,
                         dict(self.disbursed))

    def to_json(self):
        return {
            "pools": {pid.hex(): p.to_json() for pid, p in sorted(self.pools.items())},
            "deposits": self.deposits.to_json(),
            "committee_vk": self.committee_vk.hex(),
            "last_synced_epoch": self.last_synced_epoch,
            "carry_over_deposits": self.carry_over_deposits,
            "disbursed": {f"{u}|{t}": str(a)
                          for (u, t), a in sorted(self.disbursed.items()) if a},
        }

    def to_canonical_json(self) -> str:
        return canonical_json(self.to_json())

    @classmethod
    def from_json(cls, d):
        disbursed = {}
        for k, v in d["disbursed"].items():
            user, token = k.rsplit("|", 1)
            disbursed[(user, token)] = int(v)
        return cls({bytes.fromhex(k): PoolState.from_json(v)
                    for k, v in d["pools"].items()},
                   DepositBook.from_json(d["deposits"]),
                   bytes.fromhex(d["committee_vk"]),
                   d["last_synced_epoch"], d["carry_over_deposits"], disbursed)


def verify_payload_signature(bank: BankState, payload: SyncPayload) -> None:
    # the bank holds the key of the first unsynced epoch's committee; each
    # chain link hands authority to the following epoch's committee
    vk = bank.committee_vk
    epoch = bank.last_synced_epoch + 1
    for next_vk, endorsement in payload.vk_chain:
        epoch += 1
        if not tsig.verify(vk, endorsement_bytes(next_vk, epoch), endorsement):
            raise BadSignature(f"vk chain link for epoch {epoch} does not verify")
        vk = next_vk
    if not tsig.verify(vk, payload.signing_bytes(), payload.signature):
        raise BadSignature("sync signature does not verify")


def process_sync(bank: BankState, payload: SyncPayload):
    """Apply a sync call; returns (new BankState, disbursement list).

    All-or-nothing: errors are raised before the input state is shared,
    and the input BankState is never mutated.
    """
    verify_payload_signature(bank, payload)
    if payload.epoch_first != bank.last_synced_epoch + 1:
        raise EpochGap(f"payload starts at {payload.epoch_first}, "
                       f"expected {bank.last_synced_epoch + 1}")

    new = bank.copy()
    # deposits the sidechain had matured into its working state by epoch_last
    new.deposits.mature_through(payload.epoch_last - 1)
    basis = dict(new.deposits.entries)

    old_fees = {}
    for pool in new.pools.values():
        for token in (pool.token_a, pool.token_b):
            old_fees[token] = new.fees_owed(token)

    # position images are full replacements; empty images delete
    for image in payload.positions:
        pool = new.pools.get(image.pool_id)
        if pool is None:
            raise NegativeReserve(f"position for unknown pool {image.pool_id.hex()}")
        if image.is_empty():
            pool.positions.pop(image.position_id, None)
        else:
            pool.positions[image.position_id] = image.copy()

    # payouts: disburse and reset the covered deposit entries
    disbursements = []
    payout_totals = {}
    for user, token, amount in payload.payouts:
        u128(amount)
        if amount == 0:
            continue
        payout_totals[token] = payout_totals.get(token, 0) + amount
        if new.carry_over_deposits:
            continue
        disbursements.append((user, token, amount))
        key = (user, token)
        new.disbursed[key] = new.disbursed.get(key, 0) + amount
    if new.carry_over_deposits:
        new.deposits.entries = {(u, t): a for u, t, a in payload.payouts if a}
    else:
        new.deposits.entries = {}

    # reserve reconciliation from the reported lists
    for pool in new.pools.values():
        for token in (pool.token_a, pool.token_b):
            inflow = sum(a for (_, t), a in basis.items() if t == token)
            fee_delta = new.fees_owed(token) - old_fees[token]
            reserve = (pool.reserve_of(token) + inflow
                       - payout_totals.get(token, 0) - fee_delta)
            if reserve < 0:
                raise NegativeReserve(f"{token}: {reserve}")
            if token == pool.token_a:
                pool.reserve_a = u128(reserve)
            else:
                pool.reserve_b = u128(reserve)
        pool.invalidate_boundaries()
        refresh_tick(pool)

    # deposits confirmed during the last covered epoch become the next snapshot
    new.deposits.mature_through(payload.epoch_last)
    new.committee_vk = payload.next_committee_vk
    new.last_synced_epoch = payload.epoch_last
    return new, disbursements
