"""Sidechain ledger: per-round blocks, epoch summaries, and pruning.

Each epoch runs for a fixed number of rounds. Ordinary rounds pack
queued transactions into temporary blocks up to a byte capacity; the
last round of the epoch emits a permanent summary block instead. The
summary holds the net result of the epoch: final deposit balances as
payout entries and images of every position that changed. Once the
corresponding sync call is confirmed on the mainchain, the temporary
block bodies for that epoch can be dropped; only headers and summary
blocks remain.

Transactions spend from per-user deposit balances that were confirmed
on the mainchain at least one epoch boundary ago, so every transaction
in an epoch is backed by funds the mainchain already knows about.
"""

from dataclasses import dataclass, field

from . import engine
from .bank import SyncPayload
from .errors import (
    BlockOverCapacity,
    ExpiredDeadline,
    InconsistentReplay,
    InsufficientDeposit,
    InvalidTransaction,
    NotOwner,
    SidepoolError,
)
from .serialize import Writer, sha256


def _reason_for(exc: SidepoolError) -> str:
    if isinstance(exc, InsufficientDeposit):
        return "InsufficientDeposit"
    if isinstance(exc, NotOwner):
        return "NotOwner"
    if isinstance(exc, ExpiredDeadline):
        return "Expired"
    return "Malformed"

# measured average transaction sizes by kind, in bytes
TX_BYTES = {
    "swap_exact_in": 1007.83,
    "swap_exact_out": 1007.83,
    "mint": 814.49,
    "burn": 907.07,
    "collect": 921.80,
}

# summary block entry sizes, in bytes
PAYOUT_ENTRY_BYTES = 97
POSITION_ENTRY_BYTES = 215

DEFAULT_CAPACITY_BYTES = 1 << 20


@dataclass
class SidechainTx:
    seq: int          # unique arrival sequence number, sets the id
    kind: str         # swap_exact_in | swap_exact_out | mint | burn | collect
    sender: str
    pool_id: bytes
    args: dict
    deadline: int = 1 << 62
    submit_round: int = 0
    size_bytes: float = 0.0

    def __post_init__(self):
        if not self.size_bytes:
            self.size_bytes = TX_BYTES[self.kind]

    @property
    def tx_hash(self) -> bytes:
        return sha256(Writer().i64_(self.seq).str_(self.kind)
                      .str_(self.sender).getvalue())


@dataclass
class MetaBlock:
    height: int
    round_index: int
    epoch: int
    parent: bytes
    txs: list                 # None once pruned
    tx_count: int
    body_bytes: float

    @property
    def block_hash(self) -> bytes:
        w = Writer().str_("meta").i64_(self.height).i64_(self.round_index)
        w.i64_(self.epoch).bytes_(self.parent).i64_(self.tx_count)
        w.i64_(int(self.body_bytes * 100))
        return sha256(w.getvalue())

    @property
    def pruned(self) -> bool:
        return self.txs is None


@dataclass
class SummaryBlock:
    height: int
    round_index: int
    epoch: int
    parent: bytes
    payouts: list             # [(user, token, amount)] sorted
    position_images: list     # [Position] sorted by id
    meta_block_hashes: list = field(default_factory=list)

    @property
    def body_bytes(self) -> int:
        return (PAYOUT_ENTRY_BYTES * len(self.payouts)
                + POSITION_ENTRY_BYTES * len(self.position_images))

    @property
    def block_hash(self) -> bytes:
        w = Writer().str_("summary").i64_(self.height).i64_(self.round_index)
        w.i64_(self.epoch).bytes_(self.parent)
        for user, token, amount in self.payouts:
            w.str_(user).str_(token).u128_(amount)
        for p in self.position_images:
            w.bytes_(p.position_id).u128_(p.amount_a).u128_(p.amount_b)
            w.u128_(p.fees_a).u128_(p.fees_b)
        return sha256(w.getvalue())


@dataclass
class EpochState:
    """Working state for the epoch in progress."""
    epoch: int
    pools: dict                      # pool_id -> PoolState (working copies)
    balances: dict                   # (user, token) -> spendable amount
    snapshot_pools: dict = None      # state at epoch start
    snapshot_balances: dict = None
    deltas: dict = field(default_factory=dict)  # per-tx net balance changes
    applied: int = 0
    rejected: int = 0
    # documented-discrepancy switch: credit token B on mint instead of
    # deducting it; exists so the divergence it causes can be demonstrated
    mint_credits_token_b: bool = False

    def __post_init__(self):
        if self.snapshot_pools is None:
            self.snapshot_pools = {pid: p.copy() for pid, p in self.pools.items()}
        if self.snapshot_balances is None:
            self.snapshot_balances = dict(self.balances)

    def _shift(self, user, token, amount):
        key = (user, token)
        self.balances[key] = self.balances.get(key, 0) + amount
        self.deltas[key] = self.deltas.get(key, 0) + amount

    def _spend(self, user, token, amount):
        if self.balances.get((user, token), 0) < amount:
            raise InsufficientDeposit(f"{user} lacks {amount} {token}")
        self._shift(user, token, -amount)

    def apply(self, tx: SidechainTx, now: int):
        """Execute one transaction against the working state.

        Raises InvalidTransaction and leaves the state untouched on any
        failed check; the engine itself validates before mutating.
        """
        pool = self.pools.get(tx.pool_id)
        if pool is None:
            raise InvalidTransaction("Malformed", f"unknown pool {tx.pool_id.hex()}")
        try:
            handler = getattr(self, f"_apply_{tx.kind}", None)
            if handler is None:
                raise InvalidTransaction("Malformed", f"unknown kind {tx.kind!r}")
            return handler(pool, tx, now)
        except InvalidTransaction:
            raise
        except SidepoolError as exc:
            raise InvalidTransaction(_reason_for(exc), str(exc)) from exc

    def _apply_swap_exact_in(self, pool, tx, now):
        a = tx.args
        token_in = a["token_in"]
        self._spend(tx.sender, token_in, a["amount_in"])
        try:
            result = engine.swap_exact_input(
                pool, token_in, a["amount_in"], a.get("min_out", 0),
                a.get("price_limit"), tx.deadline, now)
        except SidepoolError:
            self._shift(tx.sender, token_in, a["amount_in"])
            raise
        self._shift(tx.sender, pool.other_token(token_in), result.amount_out)
        return result

    def _apply_swap_exact_out(self, pool, tx, now):
        a = tx.args
        token_out = a["token_out"]
        token_in = pool.other_token(token_out)
        max_in = a["max_in"]
        self._spend(tx.sender, token_in, max_in)
        try:
            result = engine.swap_exact_output(
                pool, token_out, a["amount_out"], max_in,
                a.get("price_limit"), tx.deadline, now)
        except SidepoolError:
            self._shift(tx.sender, token_in, max_in)
            raise
        self._shift(tx.sender, token_in, max_in - result.amount_in_charged)
        self._shift(tx.sender, token_out, result.amount_out)
        return result

    def _apply_mint(self, pool, tx, now):
        a = tx.args
        if self.mint_credits_token_b:
            # faithful transcription of the flawed rule: token B is
            # credited, not deducted
            self._spend(tx.sender, pool.token_a, a["amount_a"])
            try:
                result = engine.mint(
                    pool, tx.sender, a["amount_a"], a["amount_b"],
                    a.get("lower_tick", engine.MIN_TICK),
                    a.get("upper_tick", engine.MAX_TICK),
                    a.get("existing_position"), tx.tx_hash)
            except SidepoolError:
                self._shift(tx.sender, pool.token_a, a["amount_a"])
                raise
            self._shift(tx.sender, pool.token_b, a["amount_b"])
            return result
        # spendability is checked against the desired amounts; the engine
        # never uses more than desired
        self._spend(tx.sender, pool.token_a, a["amount_a"])
        self._spend(tx.sender, pool.token_b, a["amount_b"])
        try:
            pos, used_a, used_b = engine.mint(
                pool, tx.sender, a["amount_a"], a["amount_b"],
                a.get("lower_tick", engine.MIN_TICK),
                a.get("upper_tick", engine.MAX_TICK),
                a.get("existing_position"), tx.tx_hash)
        except SidepoolError:
            self._shift(tx.sender, pool.token_a, a["amount_a"])
            self._shift(tx.sender, pool.token_b, a["amount_b"])
            raise
        self._shift(tx.sender, pool.token_a, a["amount_a"] - used_a)
        self._shift(tx.sender, pool.token_b, a["amount_b"] - used_b)
        return pos, used_a, used_b

    def _apply_burn(self, pool, tx, now):
        a = tx.args
        wa, wb, fa, fb, deleted = engine.burn(
            pool, tx.sender, a["position_id"], a["amount_a"], a["amount_b"])
        self._shift(tx.sender, pool.token_a, wa + fa)
        self._shift(tx.sender, pool.token_b, wb + fb)
        return wa, wb, fa, fb, deleted

    def _apply_collect(self, pool, tx, now):
        a = tx.args
        pa, pb = engine.collect(pool, tx.sender, a["position_id"],
                                a.get("amount_a", (1 << 128) - 1),
                                a.get("amount_b", (1 << 128) - 1))
        self._shift(tx.sender, pool.token_a, pa)
        self._shift(tx.sender, pool.token_b, pb)
        return pa, pb

    def check_replay_consistency(self):
        """Cross-check the running per-tx deltas against the working state."""
        keys = set(self.snapshot_balances) | set(self.balances) | set(self.deltas)
        for key in sorted(keys):
            expect = self.snapshot_balances.get(key, 0) + self.deltas.get(key, 0)
            if self.balances.get(key, 0) != expect:
                raise InconsistentReplay(f"balance of {key}")

    def changed_positions(self):
        """Images of positions created, changed, or deleted this epoch."""
        images = []
        for pid, pool in sorted(self.pools.items()):
            before = self.snapshot_pools[pid].positions
            after = pool.positions
            for pos_id in sorted(set(before) | set(after)):
                old, new = before.get(pos_id), after.get(pos_id)
                if new is None:
                    gone = old.copy()
                    gone.amount_a = gone.amount_b = 0
                    gone.fees_a = gone.fees_b = 0
                    images.append(gone)
                elif old is None or old != new:
                    images.append(new.copy())
        return images


class SideLedger:
    """Block production and epoch lifecycle for one sidechain."""

    def __init__(self, rounds_per_epoch: int,
                 capacity_bytes: float = DEFAULT_CAPACITY_BYTES,
                 mint_credits_token_b: bool = False):
        self.rounds_per_epoch = rounds_per_epoch
        self.capacity_bytes = capacity_bytes
        self.mint_credits_token_b = mint_credits_token_b
        self.blocks = []              # meta and summary blocks, in order
        self.summaries = {}           # epoch -> SummaryBlock
        self.state = None             # EpochState in progress
        self.head = b"\x00" * 32
        self.invalid_count = 0

    # -- epoch lifecycle -------------------------------------------------

    def start_epoch(self, epoch: int, pools: dict, balances: dict):
        self.state = EpochState(
            epoch, {pid: p.copy() for pid, p in sorted(pools.items())},
            {k: v for k, v in balances.items() if v},
            mint_credits_token_b=self.mint_credits_token_b)

    def pack_block(self, round_index: int, pending, now: int,
                   exclude_sender: str = "") -> MetaBlock:
        """Fill one temporary block from the pending iterator, in order.

        Transactions are taken first come first served until the next one
        would not fit. Invalid transactions are skipped and counted; they
        consume no block space. A censoring leader passes exclude_sender:
        that sender's transactions are held back, in order, for the next
        block instead of being included.
        """
        taken = []
        censored = []
        used = 0.0
        for tx in pending:
            if tx.size_bytes > self.capacity_bytes:
                raise BlockOverCapacity(f"tx of {tx.size_bytes} bytes")
            if used + tx.size_bytes > self.capacity_bytes:
                pending.push_back(tx)
                break
            if exclude_sender and tx.sender == exclude_sender:
                censored.append(tx)
                continue
            try:
                self.state.apply(tx, now)
            except InvalidTransaction:
                self.state.rejected += 1
                self.invalid_count += 1
                continue
            self.state.applied += 1
            taken.append(tx)
            used += tx.size_bytes
        for tx in reversed(censored):
            pending.push_back(tx)
        block = MetaBlock(len(self.blocks), round_index, self.state.epoch,
                          self.head, taken, len(taken), used)
        self.blocks.append(block)
        self.head = block.block_hash
        return block

    def close_epoch(self, round_index: int) -> SummaryBlock:
        """Emit the permanent summary block and retire the working state."""
        for pool in self.state.pools.values():
            engine.settle_fees(pool)
        self.state.check_replay_consistency()
        payouts = sorted((u, t, a) for (u, t), a in self.state.balances.items()
                         if a)
        images = self.state.changed_positions()
        meta_hashes = [b.block_hash for b in self.blocks
                       if isinstance(b, MetaBlock) and b.epoch == self.state.epoch]
        block = SummaryBlock(len(self.blocks), round_index, self.state.epoch,
                             self.head, payouts, images, meta_hashes)
        self.blocks.append(block)
        self.summaries[self.state.epoch] = block
        self.head = block.block_hash
        return block

    # -- sync and pruning ------------------------------------------------

    def build_sync_payload(self, epoch_first: int, epoch_last: int,
                           next_vk: bytes = b"") -> SyncPayload:
        """Unsigned payload covering [epoch_first, epoch_last].

        Payouts of every covered summary are merged (each epoch's final
        balances are owed separately once the earlier sync was never
        confirmed); position images are merged with the latest epoch's
        image winning per position.
        """
        payouts = {}
        images = {}
        for epoch in range(epoch_first, epoch_last + 1):
            summary = self.summaries[epoch]
            for user, token, amount in summary.payouts:
                key = (user, token)
                payouts[key] = payouts.get(key, 0) + amount
            for image in summary.position_images:
                images[image.position_id] = image
        return SyncPayload(
            epoch_first, epoch_last,
            sorted((u, t, a) for (u, t), a in payouts.items() if a),
            [images[pid].copy() for pid in sorted(images)], next_vk)

    def prune_epoch(self, epoch: int) -> dict:
        """Drop temporary block bodies for a synced epoch; exact accounting."""
        dropped_blocks = 0
        dropped_bytes = 0.0
        for block in self.blocks:
            if (isinstance(block, MetaBlock) and block.epoch == epoch
                    and not block.pruned):
                dropped_blocks += 1
                dropped_bytes += block.body_bytes
                block.txs = None
        return {"epoch": epoch, "blocks_pruned": dropped_blocks,
                "bytes_pruned": dropped_bytes}

    def storage_report(self) -> dict:
        meta = [b for b in self.blocks if isinstance(b, MetaBlock)]
        summary = [b for b in self.blocks if isinstance(b, SummaryBlock)]
        return {
            "blocks": len(self.blocks),
            "meta_blocks": len(meta),
            "meta_blocks_pruned": sum(1 for b in meta if b.pruned),
            "summary_blocks": len(summary),
            "meta_body_bytes": sum(b.body_bytes for b in meta if not b.pruned),
            "summary_body_bytes": sum(b.body_bytes for b in summary),
        }
