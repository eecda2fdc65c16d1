"""Experiment orchestration.

Wires the pool engine, deposit bank, sidechain ledger, committees, and
mainchain model into one deterministic event loop over simulated time:
per round, queued arrivals are packed into a capacity-bounded block
under leader agreement; the last round of each epoch emits the summary
block; the committee threshold-signs and submits the sync call, the
bank applies it at confirmation, and the covered temporary blocks are
pruned. Fault scenarios (silent or invalid leaders, censoring leaders,
invalid sync proposers, mainchain rollbacks) are injected per epoch
and recover through leader replacement or multi-epoch sync calls.

Two independent correctness oracles run alongside the simulation: a
shadow replay that applies every accepted transaction directly to a
cloned bank state and demands bit-identical results after each sync,
and a per-token custody conservation check with zero tolerance.
"""

import json
from dataclasses import dataclass, field, replace

from . import consensus, engine, gas, ledger
from .bank import BankState, process_sync
from .chain import Mainchain, MainchainConfig
from .engine import Position, position_id_for
from .errors import AssumptionViolated, BadSignature, ConfigInvalid, Divergence
from .serialize import sha256
from .workload import TrafficProfile, WorkloadGenerator

TOKEN_A = "TKA"
TOKEN_B = "TKB"

BASELINE_KIND = {
    "swap_exact_in": "swap",
    "swap_exact_out": "swap",
    "mint": "mint",
    "burn": "burn",
    "collect": "collect",
}


@dataclass
class ExperimentConfig:
    epochs: int = 11
    rounds_per_epoch: int = 30
    round_duration_s: float = 7.0
    block_size_limit: float = float(1 << 20)
    committee_size: int = 5
    miner_count: int = 0                  # 0 means committee_size + 6
    consensus_delay_s: float = 6.51       # measured agreement time, an input
    mainchain: MainchainConfig = field(default_factory=MainchainConfig)
    profile: TrafficProfile = field(
        default_factory=lambda: TrafficProfile(daily_volume=500_000))
    byzantine: list = field(default_factory=list)
    # each: {"epoch": e, "miner_id": id or "@leader", "profile": p,
    #        "target": victim sender (censor only)}
    rollback_epochs: tuple = ()
    carry_over_deposits: bool = False
    mint_credits_token_b: bool = False
    genesis_reserve_a: int = 10 ** 15
    genesis_reserve_b: int = 10 ** 15
    genesis_balance: int = 10 ** 12       # per user and token, epoch 0
    seed: str = "run"
    shadow: bool = True
    conservation_checks: bool = True
    track_senders: tuple = ()   # record per-tx latency for these senders

    def validate(self):
        if self.epochs <= 0 or self.rounds_per_epoch <= 0:
            raise ConfigInvalid("epochs and rounds_per_epoch must be positive")
        if self.round_duration_s <= 0 or self.block_size_limit <= 0:
            raise ConfigInvalid("durations and sizes must be positive")
        if self.committee_size < 2 or (self.committee_size - 2) % 3:
            raise ConfigInvalid(
                f"committee_size {self.committee_size} is not 3f+2")
        for inj in self.byzantine:
            if inj.get("profile") not in consensus.PROFILES:
                raise ConfigInvalid(f"unknown profile {inj.get('profile')!r}")
        sync_faults = self.rollback_epochs or any(
            inj.get("profile") == consensus.INVALID_SYNC_PROPOSER
            for inj in self.byzantine)
        if self.carry_over_deposits and sync_faults:
            raise ConfigInvalid("carry-over deposit accounting does not "
                                "compose with multi-epoch sync recovery")

    @property
    def epoch_seconds(self) -> float:
        return self.rounds_per_epoch * self.round_duration_s


@dataclass
class MetricsReport:
    throughput_tps: float = 0.0
    avg_sidechain_latency_s: float = 0.0
    avg_mainchain_latency_s: float = 0.0
    avg_payout_latency_s: float = 0.0
    avg_sync_confirm_s: float = 0.0
    total_gas: int = 0
    main_growth_bytes: dict = field(default_factory=dict)
    side_summary_bytes: float = 0.0
    side_retained_meta_bytes: float = 0.0
    side_pruned_bytes: float = 0.0
    arrivals: int = 0
    applied_txs: int = 0
    rejected_txs: int = 0
    applied_by_kind: dict = field(default_factory=dict)
    view_changes: int = 0
    mass_syncs: int = 0
    victim_max_delay_s: float = 0.0
    victim_delays: dict = field(default_factory=dict)  # tx seq -> latency s
    prune_events: list = field(default_factory=list)
    sync_confirm_s: list = field(default_factory=list)
    final_bank_json: str = ""

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out.pop("final_bank_json")
        return out


class ConservationChecker:
    """Per-token custody identity with zero tolerance.

    Custody (reserves + all deposit balances + fees owed) changes only
    by deposits (+) and disbursements (-); everything else conserves.
    """

    def __init__(self, bank: BankState):
        self.expected = {t: bank.custody(t) for t in (TOKEN_A, TOKEN_B)}

    def on_deposit(self, token, amount):
        self.expected[token] += amount

    def on_disbursement(self, token, amount):
        self.expected[token] -= amount

    def check(self, bank: BankState):
        for token, want in self.expected.items():
            got = bank.custody(token)
            if got != want:
                raise AssumptionViolated(
                    f"custody of {token}: {got} != expected {want}")


class ShadowReplay:
    """Independent replay oracle.

    Applies each accepted transaction straight onto a cloned bank state
    through the pool engine, performs payouts and deposit maturation
    itself, and must land on exactly the state the sync path produces.
    """

    def __init__(self, bank: BankState):
        self.state = bank.copy()

    def deposit(self, user, token, amount, tag):
        self.state.deposits.credit_pending(user, token, amount, tag)

    def _shift(self, user, token, amount):
        entries = self.state.deposits.entries
        key = (user, token)
        entries[key] = entries.get(key, 0) + amount
        if not entries[key]:
            del entries[key]

    def apply_tx(self, tx):
        pool = self.state.pools[tx.pool_id]
        a = tx.args
        if tx.kind == "swap_exact_in":
            result = engine.swap_exact_input(
                pool, a["token_in"], a["amount_in"], a.get("min_out", 0),
                a.get("price_limit"), tx.deadline, tx.submit_round)
            self._shift(tx.sender, a["token_in"], -result.amount_in_charged)
            self._shift(tx.sender, pool.other_token(a["token_in"]),
                        result.amount_out)
        elif tx.kind == "swap_exact_out":
            result = engine.swap_exact_output(
                pool, a["token_out"], a["amount_out"], a["max_in"],
                a.get("price_limit"), tx.deadline, tx.submit_round)
            token_in = pool.other_token(a["token_out"])
            self._shift(tx.sender, token_in, -result.amount_in_charged)
            self._shift(tx.sender, a["token_out"], result.amount_out)
        elif tx.kind == "mint":
            _, used_a, used_b = engine.mint(
                pool, tx.sender, a["amount_a"], a["amount_b"],
                a.get("lower_tick", engine.MIN_TICK),
                a.get("upper_tick", engine.MAX_TICK),
                a.get("existing_position"), tx.tx_hash)
            self._shift(tx.sender, pool.token_a, -used_a)
            self._shift(tx.sender, pool.token_b, -used_b)
        elif tx.kind == "burn":
            wa, wb, fa, fb, _ = engine.burn(
                pool, tx.sender, a["position_id"], a["amount_a"], a["amount_b"])
            self._shift(tx.sender, pool.token_a, wa + fa)
            self._shift(tx.sender, pool.token_b, wb + fb)
        elif tx.kind == "collect":
            pa, pb = engine.collect(pool, tx.sender, a["position_id"],
                                    a.get("amount_a", (1 << 128) - 1),
                                    a.get("amount_b", (1 << 128) - 1))
            self._shift(tx.sender, pool.token_a, pa)
            self._shift(tx.sender, pool.token_b, pb)
        else:
            raise AssumptionViolated(f"shadow cannot replay {tx.kind!r}")

    def epoch_close(self):
        """Settle pending swap fees, exactly as the summary round does;
        the fee split must happen epoch by epoch to round identically."""
        for pool in self.state.pools.values():
            engine.settle_fees(pool)

    def mature_only(self, epoch):
        """Boundary without a confirmed sync: deposits still mature."""
        self.state.deposits.mature_through(epoch)

    def sync_boundary(self, payload):
        """Mimic a confirmed sync end to end on the replayed state."""
        state = self.state
        state.deposits.mature_through(payload.epoch_last - 1)
        if state.carry_over_deposits:
            pass  # balances stay put; nothing leaves the sidechain
        else:
            for key, amount in sorted(state.deposits.entries.items()):
                if amount:
                    state.disbursed[key] = state.disbursed.get(key, 0) + amount
            state.deposits.entries = {}
        state.deposits.mature_through(payload.epoch_last)
        state.committee_vk = payload.next_committee_vk
        state.last_synced_epoch = payload.epoch_last

    def compare(self, bank: BankState):
        mine = self.state.to_canonical_json()
        theirs = bank.to_canonical_json()
        if mine != theirs:
            raise Divergence(_first_diff(json.loads(mine), json.loads(theirs)))


def _first_diff(a, b, path="$"):
    if isinstance(a, dict) and isinstance(b, dict):
        for key in sorted(set(a) | set(b)):
            if a.get(key) != b.get(key):
                return _first_diff(a.get(key), b.get(key), f"{path}.{key}")
    return path


class SimulationRun:
    def __init__(self, config: ExperimentConfig):
        config.validate()
        self.cfg = config
        self.report = MetricsReport()
        self._setup()

    # -- construction ----------------------------------------------------

    def _setup(self):
        cfg = self.cfg
        bank = BankState(carry_over_deposits=cfg.carry_over_deposits)
        self.pool_id = bank.create_pool(TOKEN_A, TOKEN_B)
        pool = bank.pools[self.pool_id]

        genesis_id = position_id_for(sha256(b"genesis-liquidity"), "genesis")
        pool.positions[genesis_id] = Position(
            genesis_id, self.pool_id, "genesis",
            cfg.genesis_reserve_a, cfg.genesis_reserve_b)
        pool.reserve_a = cfg.genesis_reserve_a
        pool.reserve_b = cfg.genesis_reserve_b

        self.gen = WorkloadGenerator(cfg.profile, self.pool_id,
                                     TOKEN_A, TOKEN_B, seed=cfg.seed)
        self.gen.round_seconds = cfg.round_duration_s
        for user in self.gen.users:
            # zero-liquidity marker position: collectable by its owner but
            # never credited fees, so it stays out of sync position images
            anchor_id = position_id_for(sha256(b"anchor|" + user.encode()),
                                        user)
            pool.positions[anchor_id] = Position(anchor_id, self.pool_id,
                                                 user, 1, 0)
            pool.reserve_a += 1
            self.gen.register_anchor(user, anchor_id)
            if cfg.genesis_balance:
                bank.deposits.entries[(user, TOKEN_A)] = cfg.genesis_balance
                bank.deposits.entries[(user, TOKEN_B)] = cfg.genesis_balance
        pool.invalidate_boundaries()
        engine.refresh_tick(pool)

        count = cfg.miner_count or cfg.committee_size + 6
        self.miners = [consensus.Miner(f"miner-{i:03d}", 100)
                       for i in range(count)]

        self.committee = self._elect(0)
        bank.committee_vk = self.committee.vk
        self.bank = bank
        self.shadow = ShadowReplay(bank) if cfg.shadow else None
        self.conservation = (ConservationChecker(bank)
                             if cfg.conservation_checks else None)
        self.mainchain = Mainchain(cfg.mainchain)
        self.ledger = ledger.SideLedger(cfg.rounds_per_epoch,
                                        cfg.block_size_limit,
                                        cfg.mint_credits_token_b)
        self.working_pools = {self.pool_id: pool.copy()}
        self.working_balances = dict(bank.deposits.entries)
        self.matured = {}            # deposit tag epoch -> {(user, token): amt}
        self.victims = {inj.get("target") for inj in cfg.byzantine
                        if inj.get("target")} | set(cfg.track_senders)
        # payout latency bookkeeping per not-yet-confirmed epoch
        self.pending_payout = {}     # epoch -> [applied count, arrival time sum]
        self.unsynced_from = 0
        self.chain_links = []        # vk chain for a pending multi-epoch sync

    def _elect(self, epoch):
        committee = consensus.elect(self.miners, self.cfg.seed,
                                    self.cfg.committee_size, epoch)
        committee.members = [replace(m) for m in committee.members]
        for inj in self.cfg.byzantine:
            if inj["epoch"] != epoch:
                continue
            target_id = inj["miner_id"]
            if target_id == "@leader":
                target_id = committee.leader.miner_id
            for member in committee.members:
                if member.miner_id == target_id:
                    member.profile = inj["profile"]
                    member.censor_target = inj.get("target", "")
        return committee

    # -- helpers ---------------------------------------------------------

    def _epoch_of_time(self, t: float) -> int:
        return int(t // self.cfg.epoch_seconds)

    def _submit_deposits(self, intents, t: float):
        """Group per-user token intents into two-token deposit calls."""
        by_user = {}
        for user, token, amount, _ in intents:
            by_user.setdefault(user, []).append((token, amount))
        for user in sorted(by_user):
            tx = self.mainchain.submit({"op": "deposit", "user": user}, t)
            tag = self._epoch_of_time(tx.confirmed_at)
            for token, amount in by_user[user]:
                self.bank.deposit(user, token, amount, tag)
                if self.shadow:
                    self.shadow.deposit(user, token, amount, tag)
                if self.conservation:
                    self.conservation.on_deposit(token, amount)
                bucket = self.matured.setdefault(tag, {})
                key = (user, token)
                bucket[key] = bucket.get(key, 0) + amount

    def _block_agreement(self):
        committee = self.committee

        def propose(leader):
            if leader.profile == consensus.SILENT_LEADER:
                return None
            return {"ok": leader.profile != consensus.INVALID_PROPOSER,
                    "leader": leader}

        result = consensus.run_agreement(committee, propose,
                                         lambda p: p["ok"])
        if result.status != consensus.AGREED:
            raise AssumptionViolated(
                f"agreement stalled in epoch {committee.epoch}")
        self.report.view_changes += result.view_changes
        return result.proposal["leader"]

    def _record_block(self, block, seal_t, epoch):
        b_t = self.cfg.round_duration_s
        stats = self.pending_payout.setdefault(epoch, [0, 0.0])
        for tx in block.txs:
            # a transaction arriving during round r is recorded when the
            # round completes; uniform arrivals then average out to the
            # epoch midpoint over the epoch's packing rounds
            arrival_t = (tx.submit_round + 1) * b_t
            self._sc_latency_sum += seal_t - tx.submit_round * b_t
            stats[0] += 1
            stats[1] += arrival_t
            kind = tx.kind
            self.report.applied_by_kind[kind] = \
                self.report.applied_by_kind.get(kind, 0) + 1
            if tx.sender in self.victims:
                delay = seal_t - arrival_t
                self.report.victim_delays[tx.seq] = delay
                self.report.victim_max_delay_s = max(
                    self.report.victim_max_delay_s, delay)
            if self.shadow:
                self.shadow.apply_tx(tx)

    def _sync_payload(self, epoch, next_vk):
        payload = self.ledger.build_sync_payload(self.unsynced_from, epoch,
                                                 next_vk)
        payload.vk_chain = list(self.chain_links)
        return payload

    def _sync_op(self, payload):
        return {"op": "sync",
                "payouts": len(payload.payouts),
                "positions": len(payload.positions),
                "sum_bytes": (ledger.PAYOUT_ENTRY_BYTES * len(payload.payouts)
                              + ledger.POSITION_ENTRY_BYTES
                              * len(payload.positions))}

    def _confirm_sync(self, payload, confirm_t):
        self.bank, disbursements = process_sync(self.bank, payload)
        if self.conservation:
            for _, token, amount in disbursements:
                self.conservation.on_disbursement(token, amount)
            self.conservation.check(self.bank)
        if self.shadow:
            self.shadow.sync_boundary(payload)
            self.shadow.compare(self.bank)
        if payload.epoch_last > payload.epoch_first:
            self.report.mass_syncs += 1
        for ep in range(payload.epoch_first, payload.epoch_last + 1):
            count, arrival_sum = self.pending_payout.pop(ep, (0, 0.0))
            self._payout_count += count
            self._payout_sum += count * confirm_t - arrival_sum
            epoch_end = (ep + 1) * self.cfg.epoch_seconds
            self.report.sync_confirm_s.append(confirm_t - epoch_end)
            self.report.prune_events.append(self.ledger.prune_epoch(ep))
        self.unsynced_from = payload.epoch_last + 1
        self.chain_links = []

    # -- main loop -------------------------------------------------------

    def run(self) -> MetricsReport:
        cfg = self.cfg
        b_t = cfg.round_duration_s
        omega = cfg.rounds_per_epoch
        self._sc_latency_sum = 0.0
        self._payout_sum = 0.0
        self._payout_count = 0
        global_round = 0

        for epoch in range(cfg.epochs):
            epoch_start = epoch * cfg.epoch_seconds
            committee = self.committee
            self.ledger.start_epoch(epoch, self.working_pools,
                                    self.working_balances)
            self.gen.on_epoch_start(dict(self.ledger.state.balances))
            self._submit_deposits(self.gen.plan_epoch_deposits(epoch),
                                  epoch_start)

            for r in range(omega):
                t_round = epoch_start + r * b_t
                self.report.arrivals += self.gen.generate_round(global_round)
                intents = self.gen.drain_deposit_intents()
                if intents:
                    self._submit_deposits(intents, t_round)
                if r < omega - 1:
                    leader = self._block_agreement()
                    exclude = (leader.censor_target
                               if leader.profile == consensus.TARGETED_CENSOR
                               else "")
                    block = self.ledger.pack_block(global_round,
                                                   self.gen.queue,
                                                   global_round, exclude)
                    self._record_block(block, t_round + b_t, epoch)
                else:
                    self.ledger.close_epoch(global_round)
                    if self.shadow:
                        self.shadow.epoch_close()
                global_round += 1

            epoch_end = epoch_start + omega * b_t
            if epoch + 1 < cfg.epochs:
                successor = self._elect(epoch + 1)
                handoff = consensus.epoch_handoff(committee, successor,
                                                  self.miners, cfg.seed)
                next_vk = successor.vk
            else:
                successor, handoff, next_vk = None, None, committee.vk

            sync_leader = committee.leader
            if sync_leader.profile == consensus.INVALID_SYNC_PROPOSER:
                # the corrupt leader cannot gather a signing quorum; its
                # forged submission bounces off the bank and the epoch
                # stays unsynced until the next committee covers it
                forged = self._sync_payload(epoch, next_vk)
                if forged.payouts:
                    user, token, amount = forged.payouts[0]
                    forged.payouts[0] = (user, token, amount * 2 + 1)
                forged.signature = b"\x00" * 64
                try:
                    process_sync(self.bank, forged)
                    raise AssumptionViolated("forged sync was accepted")
                except BadSignature:
                    pass
                committee.advance_leader()
                self.report.view_changes += 1
                if handoff:
                    self.chain_links.append(handoff.vk_chain_link)
            else:
                payload = self._sync_payload(epoch, next_vk)
                payload.signature = committee.sign(payload.signing_bytes()).data
                issue_t = epoch_end + cfg.consensus_delay_s
                main_tx = self.mainchain.submit(self._sync_op(payload), issue_t)
                if epoch in cfg.rollback_epochs:
                    self.mainchain.rollback(
                        1, main_tx.included_height
                        * cfg.mainchain.block_interval_s)
                    if handoff:
                        self.chain_links.append(handoff.vk_chain_link)
                else:
                    self._confirm_sync(payload, main_tx.confirmed_at)

            # hand the sidechain state across the boundary; balances
            # always reset to freshly matured deposits (a missed sync's
            # final balances are owed through the next multi-epoch sync)
            # unless deposits are configured to carry over
            synced = self.unsynced_from > epoch
            self.working_pools = {pid: p.copy()
                                  for pid, p in self.ledger.state.pools.items()}
            fresh = self.matured.pop(epoch, {})
            if self.shadow and not synced:
                self.shadow.mature_only(epoch)
            if cfg.carry_over_deposits:
                balances = dict(self.ledger.state.balances)
                for key, amount in fresh.items():
                    balances[key] = balances.get(key, 0) + amount
                self.working_balances = balances
            else:
                self.working_balances = dict(fresh)
            if successor is not None:
                self.committee = successor

        return self._finish()

    def _finish(self) -> MetricsReport:
        rep = self.report
        cfg = self.cfg
        total_s = cfg.epochs * cfg.epoch_seconds
        rep.applied_txs = sum(rep.applied_by_kind.values())
        rep.rejected_txs = self.ledger.invalid_count
        rep.throughput_tps = rep.applied_txs / total_s
        if rep.applied_txs:
            rep.avg_sidechain_latency_s = self._sc_latency_sum / rep.applied_txs
        if self._payout_count:
            rep.avg_payout_latency_s = self._payout_sum / self._payout_count
        if self.mainchain.txs:
            rep.avg_mainchain_latency_s = (
                sum(t.latency for t in self.mainchain.txs)
                / len(self.mainchain.txs))
        if rep.sync_confirm_s:
            rep.avg_sync_confirm_s = (sum(rep.sync_confirm_s)
                                      / len(rep.sync_confirm_s))
        rep.total_gas = self.mainchain.total_gas()
        rep.main_growth_bytes = self.mainchain.growth_report()
        storage = self.ledger.storage_report()
        rep.side_summary_bytes = storage["summary_body_bytes"]
        rep.side_retained_meta_bytes = storage["meta_body_bytes"]
        rep.side_pruned_bytes = sum(e["bytes_pruned"] for e in rep.prune_events)
        rep.final_bank_json = self.bank.to_canonical_json()
        return rep


def run(config: ExperimentConfig) -> MetricsReport:
    return SimulationRun(config).run()


def compare_baseline(config: ExperimentConfig) -> dict:
    """Run once; price the same accepted traffic as direct mainchain calls
    and report gas and growth reductions."""
    report = run(config)
    baseline_gas = 0
    baseline_bytes = 0.0
    for kind, count in report.applied_by_kind.items():
        op = BASELINE_KIND[kind]
        baseline_gas += gas.BASELINE_GAS[op] * count
        baseline_bytes += gas.BASELINE_TX_BYTES[op] * count
    ours_gas = report.total_gas
    ours_bytes = report.main_growth_bytes["total"]
    return {
        "report": report,
        "baseline_gas": baseline_gas,
        "baseline_bytes": baseline_bytes,
        "our_gas": ours_gas,
        "our_bytes": ours_bytes,
        "gas_reduction_pct": (100.0 * (1 - ours_gas / baseline_gas)
                              if baseline_gas else 0.0),
        "growth_reduction_pct": (100.0 * (1 - ours_bytes / baseline_bytes)
                                 if baseline_bytes else 0.0),
    }


def shadow_oracle(config: ExperimentConfig) -> bool:
    """Run with the replay oracle forced on; True means every sync matched
    the direct replay exactly (Divergence raises otherwise)."""
    config = replace(config, shadow=True)
    run(config)
    return True


def sweep(config: ExperimentConfig, param: str, values) -> list:
    """Re-run the experiment across values of one config field."""
    out = []
    for value in values:
        if not hasattr(config, param):
            raise ConfigInvalid(f"unknown sweep parameter {param!r}")
        out.append((value, run(replace(config, **{param: value}))))
    return out
