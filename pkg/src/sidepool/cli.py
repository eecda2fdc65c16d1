"""Command line front end.

Subcommands:
  run      one experiment from a config file; writes the metrics report
           (JSON), a per-mainchain-block CSV trace, and a JSON-lines
           dump of the sidechain blocks into the output directory
  compare  same, plus gas and growth reductions against a baseline that
           processes every transaction on the mainchain
  sweep    re-run the experiment across values of one parameter and
           write a CSV of the headline metrics per value

Config files are JSON or TOML and map onto ExperimentConfig fields.
The "profile" entry may be inline or a path to a separate traffic
profile file; "byzantine" may be inline or a path to a fault scenario
file (a JSON list of {"epoch", "miner_id", "profile", "target"?}).

Exit status: 0 on success, 1 on a usage or config error, 2 when a run
aborts on an invariant breach (conservation, replay divergence, or an
exceeded fault assumption).
"""

import argparse
import csv
import json
import sys
try:
    import tomllib
except ImportError:                      # Python 3.10
    import tomli as tomllib
from dataclasses import fields
from pathlib import Path

from .chain import MainchainConfig
from .errors import ConfigInvalid, SidepoolError
from .harness import ExperimentConfig, SimulationRun, compare_baseline
from .ledger import MetaBlock
from .workload import TrafficProfile

# sweep parameters that scale or live outside ExperimentConfig
SWEEP_SCALE = {"block_size": ("block_size_limit", float(1 << 20))}
PROFILE_FIELDS = {f.name for f in fields(TrafficProfile)}


def _load_structured(path: Path):
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def load_config(path: str, seed=None) -> ExperimentConfig:
    raw = _load_structured(Path(path))
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{path} does not hold a config table")
    base = Path(path).parent

    profile = raw.pop("profile", {})
    if isinstance(profile, str):
        profile = _load_structured(base / profile)
    unknown = set(profile) - PROFILE_FIELDS
    if unknown:
        raise ConfigInvalid(f"unknown profile fields {sorted(unknown)}")
    if "mix" in profile:
        profile["mix"] = tuple(profile["mix"])
    if "trade_fraction" in profile:
        profile["trade_fraction"] = tuple(profile["trade_fraction"])
    raw["profile"] = TrafficProfile(**profile)

    byzantine = raw.pop("byzantine", [])
    if isinstance(byzantine, str):
        byzantine = _load_structured(base / byzantine)
    raw["byzantine"] = list(byzantine)

    if "mainchain" in raw:
        raw["mainchain"] = MainchainConfig(**raw["mainchain"])
    if "rollback_epochs" in raw:
        raw["rollback_epochs"] = tuple(raw["rollback_epochs"])
    if seed is not None:
        raw["seed"] = str(seed)

    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigInvalid(f"unknown config fields {sorted(unknown)}")
    config = ExperimentConfig(**raw)
    config.validate()
    return config


def write_side_blocks(ledger, path: Path):
    """JSON-lines dump of the sidechain: one line per block."""
    with open(path, "w") as fh:
        for block in ledger.blocks:
            if isinstance(block, MetaBlock):
                line = {"type": "meta", "height": block.height,
                        "round": block.round_index, "epoch": block.epoch,
                        "tx_count": block.tx_count,
                        "body_bytes": round(block.body_bytes, 2),
                        "pruned": block.pruned,
                        "hash": block.block_hash.hex()}
            else:
                line = {"type": "summary", "height": block.height,
                        "round": block.round_index, "epoch": block.epoch,
                        "payouts": len(block.payouts),
                        "position_images": len(block.position_images),
                        "body_bytes": block.body_bytes,
                        "hash": block.block_hash.hex()}
            fh.write(json.dumps(line) + "\n")


def _write_outputs(sim, report, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
    sim.mainchain.write_block_csv(out_dir / "mainchain_blocks.csv")
    write_side_blocks(sim.ledger, out_dir / "sidechain_blocks.jsonl")


def cmd_run(args) -> int:
    config = load_config(args.config, args.seed)
    sim = SimulationRun(config)
    report = sim.run()
    _write_outputs(sim, report, Path(args.out))
    print(f"throughput {report.throughput_tps:.2f} tx/s, "
          f"{report.applied_txs} applied, {report.rejected_txs} rejected, "
          f"gas {report.total_gas}")
    return 0


def cmd_compare(args) -> int:
    config = load_config(args.config, args.seed)
    result = compare_baseline(config)
    report = result.pop("report")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_json(), fh, indent=2, sort_keys=True)
    with open(out_dir / "compare.json", "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
    print(f"gas reduction {result['gas_reduction_pct']:.2f}%, "
          f"growth reduction {result['growth_reduction_pct']:.2f}%")
    return 0


def _apply_sweep_value(config, param, value):
    from dataclasses import replace
    if param in SWEEP_SCALE:
        name, scale = SWEEP_SCALE[param]
        return replace(config, **{name: value * scale})
    if param in PROFILE_FIELDS:
        profile = replace(config.profile, **{param: value})
        return replace(config, profile=profile)
    if hasattr(config, param):
        kind = type(getattr(config, param))
        return replace(config, **{param: kind(value)})
    raise ConfigInvalid(f"unknown sweep parameter {param!r}")


def cmd_sweep(args) -> int:
    config = load_config(args.config, args.seed)
    param, _, values = args.param.partition("=")
    if not values:
        raise ConfigInvalid("--param expects name=v1,v2,...")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for text in values.split(","):
        value = float(text)
        run_cfg = _apply_sweep_value(config, param, value)
        sim = SimulationRun(run_cfg)
        report = sim.run()
        _write_outputs(sim, report, out_dir / f"{param}_{text}")
        rows.append((value, report))
        print(f"{param}={text}: throughput {report.throughput_tps:.2f} tx/s, "
              f"payout latency {report.avg_payout_latency_s:.1f} s, "
              f"gas {report.total_gas}")
    with open(out_dir / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([param, "throughput_tps", "avg_sidechain_latency_s",
                         "avg_payout_latency_s", "total_gas",
                         "main_growth_bytes", "applied_txs", "rejected_txs"])
        for value, report in rows:
            writer.writerow([value, report.throughput_tps,
                             report.avg_sidechain_latency_s,
                             report.avg_payout_latency_s, report.total_gas,
                             report.main_growth_bytes["total"],
                             report.applied_txs, report.rejected_txs])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidepool",
        description="deterministic sidechain-for-AMM simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (("run", cmd_run), ("compare", cmd_compare),
                       ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON or TOML config")
        p.add_argument("--seed", default=None, help="override the run seed")
        p.add_argument("--out", default="out", help="output directory")
        p.set_defaults(func=func)
    sub.choices["sweep"].add_argument(
        "--param", required=True, help="name=v1,v2,... e.g. block_size=0.5,1,2")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SidepoolError as exc:
        print(f"invariant breach: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
