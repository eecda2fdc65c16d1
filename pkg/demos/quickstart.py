"""Quickstart: one simulated day of trading on the sidechain.

Runs the default configuration (11 epochs of 30 seven-second rounds,
1 MiB blocks, a five-member signing committee) against a moderate
traffic profile, then prints the headline metrics: throughput, the
three latency figures, gas spent on the mainchain, and how much of the
sidechain history was pruned away after syncing.
"""

from sidepool import ExperimentConfig, SimulationRun, TrafficProfile

# ----------------------------------------------------------------------
# configure and run
# ----------------------------------------------------------------------

config = ExperimentConfig(
    profile=TrafficProfile(daily_volume=2_000_000, user_count=20),
    seed="quickstart",
)
sim = SimulationRun(config)
report = sim.run()

# ----------------------------------------------------------------------
# headline metrics
# ----------------------------------------------------------------------

print(f"applied transactions   {report.applied_txs}"
      f"  (rejected {report.rejected_txs})")
print(f"throughput             {report.throughput_tps:.2f} tx/s")
print(f"sidechain latency      {report.avg_sidechain_latency_s:.2f} s"
      "   (submission to sealed block)")
print(f"payout latency         {report.avg_payout_latency_s:.2f} s"
      "  (submission to mainchain payout)")
print(f"sync confirmation      {report.avg_sync_confirm_s:.2f} s"
      "   (epoch close to confirmed sync)")
print(f"mainchain gas          {report.total_gas:,}")
print(f"mainchain growth       {report.main_growth_bytes['total']:,} bytes")
retained = report.side_summary_bytes + report.side_retained_meta_bytes
print(f"sidechain retained     {retained:,.0f} bytes"
      f"  (pruned {report.side_pruned_bytes:,.0f})")

# the shadow replay ran alongside the whole time; the run would have
# aborted with a Divergence error if the synced bank state had ever
# disagreed with a direct replay of the accepted transactions
print("\nshadow replay agreed with the synced bank state at every epoch")

breakdown = ", ".join(f"{kind}={count}"
                      for kind, count in sorted(report.applied_by_kind.items()))
print(f"mix of applied work:   {breakdown}")
