"""Command line interface: run, compare, sweep, file formats, exit codes."""

import csv
import json

import pytest

from sidepool.cli import load_config, main
from sidepool.errors import ConfigInvalid

CONFIG = {
    "epochs": 2,
    "rounds_per_epoch": 4,
    "profile": {"daily_volume": 60000, "user_count": 5},
    "seed": "cli-tests",
}


def write_config(tmp_path, data=None, name="config.json"):
    path = tmp_path / name
    with open(path, "w") as fh:
        json.dump(data or CONFIG, fh)
    return str(path)


def test_load_config_json(tmp_path):
    cfg = load_config(write_config(tmp_path))
    assert cfg.epochs == 2
    assert cfg.profile.daily_volume == 60000
    assert load_config(write_config(tmp_path), seed="other").seed == "other"


def test_load_config_toml(tmp_path):
    path = tmp_path / "config.toml"
    path.write_text(
        'epochs = 2\nrounds_per_epoch = 4\nseed = "t"\n'
        "[profile]\ndaily_volume = 50000\nuser_count = 5\n")
    cfg = load_config(str(path))
    assert cfg.rounds_per_epoch == 4
    assert cfg.profile.user_count == 5


def test_load_config_external_profile_and_scenario(tmp_path):
    with open(tmp_path / "profile.json", "w") as fh:
        json.dump({"daily_volume": 40000, "user_count": 4,
                   "deposit_strategy": "mixed"}, fh)
    with open(tmp_path / "faults.json", "w") as fh:
        json.dump([{"epoch": 1, "miner_id": "@leader",
                    "profile": "silent_leader"}], fh)
    data = dict(CONFIG, profile="profile.json", byzantine="faults.json")
    cfg = load_config(write_config(tmp_path, data))
    assert cfg.profile.deposit_strategy == "mixed"
    assert cfg.byzantine[0]["profile"] == "silent_leader"


def test_load_config_rejects_unknown_fields(tmp_path):
    with pytest.raises(ConfigInvalid):
        load_config(write_config(tmp_path, dict(CONFIG, warp=9)))
    bad_profile = dict(CONFIG, profile={"daily_volume": 1, "warp": 9})
    with pytest.raises(ConfigInvalid):
        load_config(write_config(tmp_path, bad_profile))


def test_run_writes_report_csv_and_block_dump(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["run", "--config", write_config(tmp_path),
               "--out", str(out)])
    assert rc == 0
    assert "throughput" in capsys.readouterr().out

    with open(out / "report.json") as fh:
        report = json.load(fh)
    assert report["applied_txs"] > 0
    assert "final_bank_json" not in report

    with open(out / "mainchain_blocks.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "height" and len(rows) > 1

    with open(out / "sidechain_blocks.jsonl") as fh:
        lines = [json.loads(line) for line in fh]
    assert lines, "block dump must not be empty"
    types = {line["type"] for line in lines}
    assert types == {"meta", "summary"}
    assert sum(1 for line in lines if line["type"] == "summary") == 2
    # confirmed epochs are pruned in the dump
    assert all(line["pruned"] for line in lines if line["type"] == "meta")


def test_compare_command(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["compare", "--config", write_config(tmp_path),
               "--out", str(out)])
    assert rc == 0
    with open(out / "compare.json") as fh:
        result = json.load(fh)
    assert result["gas_reduction_pct"] > 0
    assert "reduction" in capsys.readouterr().out


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["sweep", "--config", write_config(tmp_path),
               "--param", "block_size=0.5,1", "--out", str(out)])
    assert rc == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][0] == "block_size"
    assert [row[0] for row in rows[1:]] == ["0.5", "1.0"]
    assert (out / "block_size_0.5" / "report.json").exists()


def test_usage_errors_exit_1(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o")]) == 1
    bad = write_config(tmp_path, dict(CONFIG, committee_size=6))
    assert main(["run", "--config", bad, "--out", str(tmp_path / "o")]) == 1
    assert main(["sweep", "--config", write_config(tmp_path),
                 "--param", "nonsense", "--out", str(tmp_path / "o")]) == 1


def test_invariant_breach_exits_2(tmp_path, monkeypatch):
    # force a divergence by sabotaging the shadow replay
    from sidepool import harness

    def sabotage(self, bank):
        from sidepool.errors import Divergence
        raise Divergence("$.pools")

    monkeypatch.setattr(harness.ShadowReplay, "compare", sabotage)
    rc = main(["run", "--config", write_config(tmp_path),
               "--out", str(tmp_path / "o")])
    assert rc == 2
