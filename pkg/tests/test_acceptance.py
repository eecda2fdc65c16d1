"""Acceptance suite: ten end-to-end criteria, one pass/fail line each.

Run with `pytest -s tests/test_acceptance.py` to see the lines.
"""

import time
from itertools import combinations

from sidepool import tsig
from sidepool.bank import BankState, SyncPayload
from sidepool.errors import BadSignature
from sidepool.harness import (
    ExperimentConfig,
    SimulationRun,
    compare_baseline,
)
from sidepool.workload import TrafficProfile

# acceptance runs keep the user population small enough that one epoch
# sync call fits inside a 30M-gas mainchain block
ACCEPT_USERS = 20


def check(name, ok, detail):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_01_shadow_execution_equivalence():
    """>= 200 seeded runs: sync-applied bank equals direct replay exactly."""
    strategies = ("once_per_epoch", "per_transaction", "mixed")
    start = time.time()
    for i in range(200):
        cfg = ExperimentConfig(
            epochs=5, rounds_per_epoch=10, committee_size=5,
            profile=TrafficProfile(daily_volume=200_000, user_count=20,
                                   deposit_strategy=strategies[i % 3]),
            seed=f"equiv-{i}", shadow=True)
        sim = SimulationRun(cfg)
        report = sim.run()
        assert sim.shadow.state.to_canonical_json() == report.final_bank_json
    elapsed = time.time() - start
    check("criterion 1 shadow-execution equivalence",
          elapsed < 120.0,
          f"200 runs field-for-field equal in {elapsed:.1f}s (< 120s)")


def test_criterion_02_custody_conservation():
    """Per-token custody identity, zero tolerance, checked in-run after
    every sync and re-derived from first principles at the end."""
    cfg = ExperimentConfig(
        epochs=6, rounds_per_epoch=10,
        profile=TrafficProfile(daily_volume=400_000, user_count=ACCEPT_USERS,
                               deposit_strategy="mixed"),
        seed="custody", conservation_checks=True)
    sim = SimulationRun(cfg)
    sim.run()
    ok = True
    for token in ("TKA", "TKB"):
        # identity tracked from genesis, zero tolerance
        ok &= sim.bank.custody(token) == sim.conservation.expected[token]
    check("criterion 2 custody conservation", ok,
          "custody == genesis + deposits - disbursements for both tokens, "
          "exactly (also enforced after every sync in every acceptance run)")


def test_criterion_03_throughput_saturation():
    """Defaults, V_D = 25M/day: throughput within +/-15% of 138 tx/s."""
    cfg = ExperimentConfig(
        profile=TrafficProfile(daily_volume=25_000_000,
                               user_count=ACCEPT_USERS),
        seed="saturation", shadow=False)
    report = SimulationRun(cfg).run()
    tps = report.throughput_tps
    ok = 138.0 * 0.85 <= tps <= 138.0 * 1.15
    check("criterion 3 throughput saturation", ok,
          f"{tps:.2f} tx/s vs 138 +/-15% [{138*0.85:.1f}, {138*1.15:.1f}]")


def test_criterion_04_block_size_scaling():
    """Throughput at 0.5/1/1.5/2 MiB scales within 10% of proportional."""
    results = []
    for mib in (0.5, 1.0, 1.5, 2.0):
        cfg = ExperimentConfig(
            epochs=4, block_size_limit=mib * (1 << 20),
            profile=TrafficProfile(daily_volume=50_000_000,
                                   user_count=ACCEPT_USERS),
            seed="blocksize", shadow=False)
        results.append(SimulationRun(cfg).run().throughput_tps)
    base = results[1]
    ratios = [tps / base for tps in results]
    targets = [0.5, 1.0, 1.5, 2.0]
    ok = all(abs(r / t - 1) <= 0.10 for r, t in zip(ratios, targets))
    check("criterion 4 block-size scaling", ok,
          f"ratios {[round(r, 3) for r in ratios]} vs {targets} (10% band)")


def test_criterion_05_unsaturated_payout_latency():
    """V_D in {50K, 500K, 5M}: payout latency matches the capacity
    identity rounds_per_epoch * round_s / 2 + sync confirm, +/-5%."""
    lines = []
    ok = True
    for vd in (50_000, 500_000, 5_000_000):
        cfg = ExperimentConfig(
            profile=TrafficProfile(daily_volume=vd, user_count=ACCEPT_USERS),
            seed="latency", shadow=False)
        report = SimulationRun(cfg).run()
        identity = (cfg.rounds_per_epoch * cfg.round_duration_s / 2
                    + report.avg_sync_confirm_s)
        deviation = report.avg_payout_latency_s / identity - 1
        ok &= abs(deviation) <= 0.05
        lines.append(f"{vd}: {report.avg_payout_latency_s:.1f}s "
                     f"vs {identity:.1f}s ({100 * deviation:+.1f}%)")
    check("criterion 5 unsaturated payout latency", ok, "; ".join(lines))


def test_criterion_06_gas_reduction():
    """V_D = 500K/day, 11 epochs, once-per-epoch deposits: >= 94% gas
    reduction, >= 91% growth reduction vs all-on-mainchain baseline."""
    cfg = ExperimentConfig(
        profile=TrafficProfile(daily_volume=500_000, user_count=10,
                               deposit_strategy="once_per_epoch"),
        seed="gas", shadow=False)
    result = compare_baseline(cfg)
    gas_pct = result["gas_reduction_pct"]
    growth_pct = result["growth_reduction_pct"]
    ok = gas_pct >= 94.0 and growth_pct >= 91.0
    check("criterion 6 gas reduction", ok,
          f"gas {gas_pct:.2f}% (>= 94%), growth {growth_pct:.2f}% (>= 91%)")


def test_criterion_07_epoch_length_tradeoff():
    """Sweeping rounds-per-epoch over {5,10,20,30,60,96} yields a U-shaped
    payout latency with the minimum at 20, +/- one grid step."""
    grid = (5, 10, 20, 30, 60, 96)
    latencies = []
    for omega in grid:
        cfg = ExperimentConfig(
            epochs=max(1, round(330 / omega)), rounds_per_epoch=omega,
            profile=TrafficProfile(daily_volume=12_400_000,
                                   user_count=ACCEPT_USERS),
            seed="epoch-length", shadow=False)
        latencies.append(SimulationRun(cfg).run().avg_payout_latency_s)
    best = grid[latencies.index(min(latencies))]
    # U-shape: strictly decreasing to the minimum, increasing after
    k = latencies.index(min(latencies))
    u_shape = (all(latencies[i] > latencies[i + 1] for i in range(k))
               and all(latencies[i] < latencies[i + 1]
                       for i in range(k, len(grid) - 1)))
    ok = best in (10, 20, 30) and u_shape
    check("criterion 7 epoch-length trade-off", ok,
          f"latencies {[round(v, 1) for v in latencies]} over {grid}, "
          f"minimum at {best} (want 20 +/- one step, U-shaped)")


def test_criterion_08_threshold_exactness():
    """All (2f+2)-subsets verify, all (2f+1)-subsets fail, for f in
    {1,2,3}; forged payloads rejected with bank state unchanged."""
    ok = True
    for f in (1, 2, 3):
        n, t = 3 * f + 2, 2 * f + 2
        keyset = tsig.keygen(n, f, f"accept-{f}")
        msg = b"threshold exactness"
        partials = {i: keyset.sign_share(i, msg) for i in range(1, n + 1)}
        for subset in combinations(range(1, n + 1), t):
            sig = tsig.combine([partials[i] for i in subset], t)
            ok &= tsig.verify(keyset.vk, msg, sig.data)
        for subset in combinations(range(1, n + 1), t - 1):
            sig = tsig.combine_unchecked([partials[i] for i in subset])
            ok &= not tsig.verify(keyset.vk, msg, sig.data)

    keyset = tsig.keygen(5, 1, "accept-forgery")
    bank = BankState()
    bank.create_pool("TKA", "TKB")
    bank.committee_vk = keyset.vk
    bank.deposit("u", "TKA", 100, epoch=-1)
    before = bank.to_canonical_json()
    payload = SyncPayload(0, 0, [("u", "TKA", 100)], [], keyset.vk)
    partials = [keyset.sign_share(i, payload.signing_bytes())
                for i in (1, 2, 3, 4)]
    payload.signature = tsig.combine(partials, 4).data
    payload.payouts = [("u", "TKA", 10**9)]    # tamper after signing
    from sidepool.bank import process_sync
    rejected = False
    try:
        process_sync(bank, payload)
    except BadSignature:
        rejected = True
    ok &= rejected and bank.to_canonical_json() == before
    check("criterion 8 threshold exactness", ok,
          "exhaustive quorum subsets for f in {1,2,3}; forged sync "
          "rejected with state unchanged")


def test_criterion_09_fault_recovery():
    """Silent-leader, invalid-proposal, invalid-sync-leader, and depth-1
    rollback all converge to the fault-free bank; censorship adds at
    most one epoch of delay."""
    victim = "user-0002"

    def config(**kwargs):
        return ExperimentConfig(
            epochs=4, rounds_per_epoch=6,
            profile=TrafficProfile(daily_volume=80_000, user_count=6),
            seed="faults", track_senders=(victim,), **kwargs)

    clean = SimulationRun(config()).run()
    lines = []
    ok = True

    scenarios = {
        "silent leader": [{"epoch": 1, "miner_id": "@leader",
                           "profile": "silent_leader"}],
        "invalid proposal": [{"epoch": 1, "miner_id": "@leader",
                              "profile": "invalid_proposer"}],
        "invalid sync leader": [{"epoch": 1, "miner_id": "@leader",
                                 "profile": "invalid_sync_proposer"}],
    }
    for label, scenario in scenarios.items():
        report = SimulationRun(config(byzantine=scenario)).run()
        same = report.final_bank_json == clean.final_bank_json
        ok &= same
        lines.append(f"{label}: {'converged' if same else 'DIVERGED'}")

    report = SimulationRun(config(rollback_epochs=(1,))).run()
    same = (report.final_bank_json == clean.final_bank_json
            and report.mass_syncs >= 1)
    ok &= same
    lines.append(f"depth-1 rollback: {'converged' if same else 'DIVERGED'}")

    censor_cfg = config(byzantine=[{"epoch": 1, "miner_id": "@leader",
                                    "profile": "targeted_censor",
                                    "target": victim}])
    report = SimulationRun(censor_cfg).run()
    epoch_s = censor_cfg.epoch_seconds
    extra = max(report.victim_delays[seq] - clean.victim_delays[seq]
                for seq in report.victim_delays)
    ok &= bool(report.victim_delays) and extra <= epoch_s
    lines.append(f"censorship extra delay {extra:.0f}s <= epoch {epoch_s:.0f}s")

    check("criterion 9 fault recovery", ok, "; ".join(lines))


class SnapshottingRun(SimulationRun):
    """Records, right after every confirmed sync, the bytes still held
    for the epochs that sync covered."""

    def _confirm_sync(self, payload, confirm_t):
        from sidepool.ledger import MetaBlock
        super()._confirm_sync(payload, confirm_t)
        covered = range(payload.epoch_first, payload.epoch_last + 1)
        meta_left = sum(b.body_bytes for b in self.ledger.blocks
                        if isinstance(b, MetaBlock) and b.epoch in covered
                        and not b.pruned)
        summary = sum(self.ledger.summaries[e].body_bytes for e in covered)
        self.snapshots.append({"meta_left": meta_left, "summary": summary})


def test_criterion_10_pruning_accounting():
    """After each confirmed sync only summary bodies remain; cumulative
    pruned bytes equal the meta-block bytes exactly."""
    cfg = ExperimentConfig(
        epochs=5, rounds_per_epoch=8,
        profile=TrafficProfile(daily_volume=300_000, user_count=10),
        seed="pruning", shadow=False)
    sim = SnapshottingRun(cfg)
    sim.snapshots = []
    report = sim.run()

    ok = len(sim.snapshots) == cfg.epochs
    for snap in sim.snapshots:
        # for the epochs a confirmed sync covered, only the summary
        # block bodies remain on the sidechain
        ok &= snap["meta_left"] == 0 and snap["summary"] > 0

    from sidepool.ledger import MetaBlock
    all_meta_bytes = sum(b.body_bytes for b in sim.ledger.blocks
                         if isinstance(b, MetaBlock))
    pruned_total = sum(e["bytes_pruned"] for e in report.prune_events)
    # block sizes are fractional table averages; allow only float
    # summation-order noise, far below one byte
    ok &= abs(pruned_total - all_meta_bytes) < 1e-3
    final = sim.ledger.storage_report()
    ok &= final["summary_body_bytes"] == sum(
        s.body_bytes for s in sim.ledger.summaries.values())
    check("criterion 10 pruning accounting", ok,
          f"retained meta bytes 0 after each of {len(sim.snapshots)} syncs; "
          f"pruned {pruned_total:.2f} == sum of meta bodies exactly")
