"""The epoch-length trade-off in payout latency.

Short epochs sync often but each sync carries little work, so the
fixed confirmation overhead dominates. Long epochs amortise that
overhead but make every payout wait longer for the epoch to close.
Sweeping the rounds-per-epoch setting shows the resulting U-shape and
its sweet spot.
"""

from sidepool import ExperimentConfig, SimulationRun, TrafficProfile

GRID = (5, 10, 20, 30, 60, 96)
TOTAL_ROUNDS = 330   # hold the simulated span roughly constant

# ----------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------

latencies = []
for rounds in GRID:
    config = ExperimentConfig(
        epochs=max(1, round(TOTAL_ROUNDS / rounds)),
        rounds_per_epoch=rounds,
        profile=TrafficProfile(daily_volume=12_400_000, user_count=20),
        seed="epoch-length-demo",
        shadow=False,
    )
    report = SimulationRun(config).run()
    latencies.append(report.avg_payout_latency_s)

# ----------------------------------------------------------------------
# report with a small text bar chart
# ----------------------------------------------------------------------

top = max(latencies)
print(f"{'rounds/epoch':>12} {'payout latency':>15}")
for rounds, latency in zip(GRID, latencies):
    bar = "#" * round(40 * latency / top)
    print(f"{rounds:>12} {latency:>13.1f} s  {bar}")

best = GRID[latencies.index(min(latencies))]
print(f"\nminimum at {best} rounds per epoch: short epochs pay the sync "
      "overhead too often, long ones make payouts wait for the close")
