"""Mainchain gas and storage saved by trading on the sidechain.

Processes a day of traffic two ways: through the sidechain (only
deposits and one signed sync per epoch touch the mainchain) and as a
baseline where every swap, mint, burn, and collect is its own mainchain
call. Prints both bills and the reductions.
"""

from sidepool import ExperimentConfig, TrafficProfile, compare_baseline

# once-per-epoch deposits keep the user-side mainchain traffic at its
# practical minimum, so the comparison isolates the trading costs
config = ExperimentConfig(
    profile=TrafficProfile(daily_volume=500_000, user_count=10,
                           deposit_strategy="once_per_epoch"),
    seed="gas-demo",
    shadow=False,
)
result = compare_baseline(config)

print(f"sidechain gas bill     {result['our_gas']:>15,}")
print(f"baseline gas bill      {result['baseline_gas']:>15,}")
print(f"gas reduction          {result['gas_reduction_pct']:>14.2f}%")
print()
print(f"sidechain growth       {result['our_bytes']:>15,.0f} bytes")
print(f"baseline growth        {result['baseline_bytes']:>15,.0f} bytes")
print(f"growth reduction       {result['growth_reduction_pct']:>14.2f}%")
print()
print("the sidechain bill is dominated by the per-epoch sync call; it "
      "grows with users and positions, not with trade count, which is "
      "where the savings come from")
