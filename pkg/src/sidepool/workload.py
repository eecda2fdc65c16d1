"""Synthetic trading population.

Arrivals follow a daily-volume rate: each round receives
ceil(daily_volume * round_seconds / 86400) new transactions. Queued
arrivals are stored as counts and materialized into concrete
transactions first come first served only when a block is packed, so
multi-million-per-day backlogs cost almost no memory.

The generator keeps a decrement-only projection of every user's
balance: spends reduce the projection, credits are ignored. Since the
ledger processes transactions in the same order they are materialized,
the real working balance at processing time is always at least the
projection, so no generated transaction is rejected for insufficient
deposit backing.
"""

import math
import random
from collections import deque
from dataclasses import dataclass, field

from .engine import position_id_for
from .ledger import TX_BYTES, SidechainTx

KINDS = ("swap_exact_in", "mint", "burn", "collect")
DEFAULT_MIX = (0.9319, 0.0214, 0.0238, 0.0227)
DEPOSIT_STRATEGIES = ("once_per_epoch", "per_transaction", "mixed")

SECONDS_PER_DAY = 86_400


def rho(daily_volume: int, round_seconds: float) -> int:
    """Transactions arriving per round at the given daily volume."""
    return math.ceil(daily_volume * round_seconds / SECONDS_PER_DAY)


@dataclass
class TrafficProfile:
    daily_volume: int
    mix: tuple = DEFAULT_MIX                    # swap, mint, burn, collect
    sizes_bytes: dict = field(default_factory=lambda: dict(TX_BYTES))
    user_count: int = 100
    deposit_strategy: str = "once_per_epoch"
    trade_fraction: tuple = (0.01, 0.10)        # share of balance per trade
    endowment: int = 10 ** 12                   # per user, token, epoch
    deadline_rounds: int = 100_000

    def __post_init__(self):
        # measured mixes are rounded shares; they are used as sampling
        # weights, so small rounding slack is fine
        if abs(sum(self.mix) - 1.0) > 0.005:
            raise ValueError(f"mix sums to {sum(self.mix)}")
        if self.deposit_strategy not in DEPOSIT_STRATEGIES:
            raise ValueError(self.deposit_strategy)


class PendingQueue:
    """FIFO of queued arrivals; bulk arrivals stay as per-round counts
    until read, so a deep backlog costs almost no memory."""

    def __init__(self, materialize):
        self._front = deque()       # already materialized, next out first
        self._backlog = deque()     # [remaining count, arrival round]
        self._count = 0
        self._materialize = materialize

    def add(self, count: int, arrival_round: int):
        if count > 0:
            self._backlog.append([count, arrival_round])
            self._count += count

    def push_back(self, tx):
        self._front.appendleft(tx)

    def __len__(self):
        return len(self._front) + self._count

    def __iter__(self):
        return self

    def __next__(self):
        if self._front:
            return self._front.popleft()
        while self._backlog:
            bucket = self._backlog[0]
            if bucket[0] == 0:
                self._backlog.popleft()
                continue
            bucket[0] -= 1
            self._count -= 1
            return self._materialize(bucket[1])
        raise StopIteration


class WorkloadGenerator:
    def __init__(self, profile: TrafficProfile, pool_id: bytes,
                 token_a: str, token_b: str, seed: str = "workload"):
        self.profile = profile
        self.pool_id = pool_id
        self.tokens = (token_a, token_b)
        self.rng = random.Random(f"workload:{seed}")
        self.users = [f"user-{i:04d}" for i in range(profile.user_count)]
        self.round_seconds = 7.0    # harness overwrites from its config
        self.projection = {}        # (user, token) -> lower bound on balance
        self.positions = {}         # user -> [position_id] minted, burnable
        self.anchors = {}           # user -> position_id never burned
        self.seq = 0
        self.round_index = 0
        self._arrival_round = 0
        self.queue = PendingQueue(self._materialize)
        self.generated_bytes = 0.0
        self.generated_counts = {k: 0 for k in KINDS}
        self.deposit_intents = []   # drained by the caller each round

    # -- epoch boundary --------------------------------------------------

    def on_epoch_start(self, balances: dict):
        """Reset the projection to the actual working balances."""
        self.projection = dict(balances)

    def plan_epoch_deposits(self, epoch: int):
        """Deposits for users on the once_per_epoch strategy (made during
        this epoch, spendable from the next)."""
        out = []
        for i, user in enumerate(self.users):
            if self._strategy_for(i) != "once_per_epoch":
                continue
            for token in self.tokens:
                out.append((user, token, self.profile.endowment, epoch))
        return out

    def _strategy_for(self, user_index: int) -> str:
        strategy = self.profile.deposit_strategy
        if strategy == "mixed":
            return "once_per_epoch" if user_index % 2 == 0 else "per_transaction"
        return strategy

    # -- arrivals --------------------------------------------------------

    def generate_round(self, round_index: int) -> int:
        """Queue this round's arrivals; returns how many arrived."""
        self.round_index = round_index
        count = rho(self.profile.daily_volume, self.round_seconds)
        self.queue.add(count, round_index)
        return count

    def register_anchor(self, user: str, position_id: bytes):
        """Record a position the user owns that is never burned; collects
        against it give every user a transaction that cannot be rejected."""
        self.anchors[user] = position_id

    def _materialize(self, arrival_round: int) -> SidechainTx:
        rng = self.rng
        self._arrival_round = arrival_round
        idx = rng.randrange(len(self.users))
        user = self.users[idx]
        kind = rng.choices(KINDS, weights=self.profile.mix)[0]
        if kind == "burn" and not self.positions.get(user):
            kind = "swap_exact_in"   # nothing of their own to burn yet
        build = getattr(self, f"_build_{kind}")
        tx = build(user)
        if tx is None:
            tx = self._build_collect(user)
        if self._strategy_for(idx) == "per_transaction":
            spend = self._spend_of(tx)
            for token, amount in spend.items():
                if amount:
                    self.deposit_intents.append((user, token, amount,
                                                 self.round_index))
        self.generated_counts[tx.kind] += 1
        self.generated_bytes += tx.size_bytes
        return tx

    def _next_tx(self, kind, user, args):
        self.seq += 1
        arrival = self._arrival_round
        return SidechainTx(self.seq, kind, user, self.pool_id, args,
                           deadline=arrival + self.profile.deadline_rounds,
                           submit_round=arrival,
                           size_bytes=self.profile.sizes_bytes[kind])

    def _draw_amount(self, user, token):
        lo, hi = self.profile.trade_fraction
        balance = self.projection.get((user, token), 0)
        amount = int(balance * self.rng.uniform(lo, hi))
        return amount

    def _build_swap_exact_in(self, user):
        a, b = self.tokens
        token_in = a if self.rng.random() < 0.5 else b
        amount = self._draw_amount(user, token_in)
        if amount == 0:
            token_in = b if token_in == a else a
            amount = self._draw_amount(user, token_in)
        if amount == 0:
            return None
        self.projection[(user, token_in)] -= amount
        return self._next_tx("swap_exact_in", user,
                             {"token_in": token_in, "amount_in": amount,
                              "min_out": 0})

    def _build_mint(self, user):
        a, b = self.tokens
        amount_a = self._draw_amount(user, a)
        amount_b = self._draw_amount(user, b)
        if amount_a == 0 or amount_b == 0:
            return None
        self.projection[(user, a)] -= amount_a
        self.projection[(user, b)] -= amount_b
        owned = self.positions.get(user)
        if owned:
            # top up an existing position; keeping the set of live
            # positions small keeps epoch summaries small
            pos_id = owned[self.rng.randrange(len(owned))]
            return self._next_tx("mint", user,
                                 {"amount_a": amount_a, "amount_b": amount_b,
                                  "existing_position": pos_id})
        tx = self._next_tx("mint", user,
                           {"amount_a": amount_a, "amount_b": amount_b})
        # the ledger derives the same id from the same tx hash
        self.positions.setdefault(user, []).append(
            position_id_for(tx.tx_hash, user))
        return tx

    def _build_burn(self, user):
        owned = self.positions[user]
        pos_id = owned.pop(self.rng.randrange(len(owned)))
        # full withdrawal: requested amounts cap at the position balance
        return self._next_tx("burn", user,
                             {"position_id": pos_id,
                              "amount_a": (1 << 128) - 1,
                              "amount_b": (1 << 128) - 1})

    def _build_collect(self, user):
        """Collect on an owned position; the anchor position guarantees
        every user always has one, so this never fails to build."""
        owned = self.positions.get(user)
        if owned and self.rng.random() < 0.5:
            pos_id = owned[self.rng.randrange(len(owned))]
        else:
            pos_id = self.anchors[user]
        return self._next_tx("collect", user, {"position_id": pos_id})

    def _spend_of(self, tx):
        a, b = self.tokens
        if tx.kind == "swap_exact_in":
            return {tx.args["token_in"]: tx.args["amount_in"]}
        if tx.kind == "mint":
            return {a: tx.args["amount_a"], b: tx.args["amount_b"]}
        return {}

    def drain_deposit_intents(self):
        out, self.deposit_intents = self.deposit_intents, []
        return out
