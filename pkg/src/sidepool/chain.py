"""Event-driven mainchain model: blocks on a fixed interval, gas-limited
inclusion, confirmation depth, rollback, and growth accounting.

Block h seals at time h * block_interval. A transaction submitted at
time t goes into the first block sealing strictly after t that still
has gas room, and is confirmed once confirm_depth further blocks have
sealed. Rollback drops transactions included above a given height, as
a reorg would; the submitter must resubmit them.
"""

import csv
from dataclasses import dataclass

from . import gas
from .errors import OversizedTx, TooDeep, UnknownOp


@dataclass
class MainchainConfig:
    block_interval_s: float = 12.0
    confirm_depth: int = 2
    gas_limit_per_block: int = 30_000_000
    deposit_prelude_blocks: int = 3  # emulates sequential token approvals


def op_bytes(op: dict) -> float:
    kind = op.get("op")
    if kind == "sync":
        return float(gas.sync_bytes(op["payouts"], op["positions"]))
    if kind == "deposit":
        return gas.DEPOSIT_MAIN_BYTES
    if kind in gas.BASELINE_TX_BYTES:
        return gas.BASELINE_TX_BYTES[kind]
    raise UnknownOp(repr(kind))


@dataclass
class MainTx:
    op: dict
    submitted_at: float
    gas_used: int
    size_bytes: float
    included_height: int = 0
    confirmed_at: float = 0.0

    @property
    def latency(self) -> float:
        return self.confirmed_at - self.submitted_at


class Mainchain:
    def __init__(self, config: MainchainConfig = None):
        self.config = config or MainchainConfig()
        self.txs = []                   # all included MainTx, in order
        self.block_gas = {}             # height -> gas used
        self.block_txs = {}             # height -> [MainTx]

    def submit(self, op: dict, t: float) -> MainTx:
        """Include op in the earliest block after t with gas room; returns
        the transaction record with its confirmation time filled in."""
        cfg = self.config
        used = gas.gas_cost(op)
        if used > cfg.gas_limit_per_block:
            raise OversizedTx(f"{used} gas > block limit")
        if op.get("op") == "deposit":
            t = t + cfg.deposit_prelude_blocks * cfg.block_interval_s
        height = int(t // cfg.block_interval_s) + 1
        while self.block_gas.get(height, 0) + used > cfg.gas_limit_per_block:
            height += 1
        tx = MainTx(op, t, used, op_bytes(op), height,
                    (height + cfg.confirm_depth) * cfg.block_interval_s)
        self.block_gas[height] = self.block_gas.get(height, 0) + used
        self.block_txs.setdefault(height, []).append(tx)
        self.txs.append(tx)
        return tx

    def rollback(self, depth: int, now: float):
        """Reorg away the newest depth sealed blocks as of time now.

        Confirmed blocks are final: rolling back deeper than the
        unconfirmed suffix (or past genesis) raises TooDeep. Returns the
        dropped transactions; the submitter must resubmit them.
        """
        sealed = int(now // self.config.block_interval_s)
        if depth <= 0 or depth > min(sealed, self.config.confirm_depth):
            raise TooDeep(f"rollback of {depth} at height {sealed}")
        return self.rollback_above(sealed - depth)

    def rollback_above(self, height: int):
        """Drop every transaction included above height; returns them."""
        dropped = []
        for h in sorted(k for k in self.block_txs if k > height):
            dropped.extend(self.block_txs.pop(h))
            self.block_gas.pop(h, None)
        for tx in dropped:
            self.txs.remove(tx)
        return dropped

    def total_gas(self) -> int:
        return sum(tx.gas_used for tx in self.txs)

    def growth_report(self) -> dict:
        """Cumulative bytes by category."""
        out = {"sync": 0.0, "deposit": 0.0, "baseline": 0.0}
        for tx in self.txs:
            kind = tx.op.get("op")
            if kind == "sync":
                out["sync"] += tx.size_bytes
            elif kind == "deposit":
                out["deposit"] += tx.size_bytes
            else:
                out["baseline"] += tx.size_bytes
        out["total"] = out["sync"] + out["deposit"] + out["baseline"]
        return out

    def write_block_csv(self, path):
        """Per-block trace: height, timestamp, tx count, gas, bytes."""
        interval = self.config.block_interval_s
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["height", "timestamp_s", "tx_count",
                             "gas_used", "bytes"])
            for h in sorted(self.block_txs):
                txs = self.block_txs[h]
                writer.writerow([h, h * interval, len(txs),
                                 self.block_gas.get(h, 0),
                                 round(sum(t.size_bytes for t in txs), 2)])
