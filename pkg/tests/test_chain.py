"""Mainchain model: inclusion timing, gas spill, rollback, growth."""

import csv

import pytest

from sidepool import gas
from sidepool.chain import Mainchain, MainchainConfig, op_bytes
from sidepool.errors import OversizedTx, TooDeep, UnknownOp

SYNC = {"op": "sync", "payouts": 2, "positions": 1, "sum_bytes": 409}


def test_inclusion_and_confirmation_timing():
    # submitted at t=100, 12 s blocks: included in block 9 (seals at 108),
    # confirmed after 2 more blocks at t=132
    chain = Mainchain()
    tx = chain.submit(SYNC, 100.0)
    assert tx.included_height == 9
    assert tx.confirmed_at == 132.0
    assert tx.latency == 32.0


def test_deposit_prelude_shifts_submission():
    # three extra blocks of approval traffic before the deposit lands
    chain = Mainchain()
    tx = chain.submit({"op": "deposit"}, 100.0)
    assert tx.submitted_at == 136.0
    assert tx.included_height == 12
    assert tx.confirmed_at == 168.0


def test_gas_limit_spills_to_next_block():
    chain = Mainchain(MainchainConfig(gas_limit_per_block=250_000))
    first = chain.submit({"op": "swap"}, 0.0)     # 160,601 gas
    second = chain.submit({"op": "swap"}, 0.0)    # would exceed 250k
    assert first.included_height == 1
    assert second.included_height == 2
    assert chain.block_gas == {1: 160_601, 2: 160_601}


def test_oversized_tx_rejected():
    chain = Mainchain(MainchainConfig(gas_limit_per_block=100_000))
    with pytest.raises(OversizedTx):
        chain.submit({"op": "swap"}, 0.0)


def test_op_bytes_by_category():
    assert op_bytes(SYNC) == gas.sync_bytes(2, 1)
    assert op_bytes({"op": "deposit"}) == 192.0
    assert op_bytes({"op": "mint"}) == 565.55
    with pytest.raises(UnknownOp):
        op_bytes({"op": "warp"})


def test_rollback_depth_one_evicts_latest_block():
    chain = Mainchain()
    early = chain.submit(SYNC, 10.0)            # block 1
    late = chain.submit({"op": "swap"}, 100.0)  # block 9
    dropped = chain.rollback(1, late.included_height * 12.0)
    assert dropped == [late]
    assert chain.txs == [early]
    assert 9 not in chain.block_gas


def test_rollback_too_deep():
    chain = Mainchain()   # confirm_depth 2
    chain.submit(SYNC, 100.0)
    with pytest.raises(TooDeep):
        chain.rollback(3, 108.0)   # deeper than the unconfirmed suffix
    with pytest.raises(TooDeep):
        chain.rollback(0, 108.0)
    with pytest.raises(TooDeep):
        chain.rollback(2, 12.0)    # past genesis


def test_total_gas_and_growth_report():
    chain = Mainchain()
    chain.submit(SYNC, 0.0)
    chain.submit({"op": "deposit"}, 0.0)
    chain.submit({"op": "swap"}, 0.0)
    report = chain.growth_report()
    assert report["sync"] == gas.sync_bytes(2, 1)
    assert report["deposit"] == 192.0
    assert report["baseline"] == 365.27
    assert report["total"] == pytest.approx(sum(
        (report["sync"], report["deposit"], report["baseline"])))
    assert chain.total_gas() == (gas.gas_cost(SYNC) + gas.DEPOSIT_GAS
                                 + gas.BASELINE_GAS["swap"])


def test_block_csv_trace(tmp_path):
    chain = Mainchain()
    chain.submit(SYNC, 0.0)
    chain.submit({"op": "swap"}, 0.0)
    path = tmp_path / "blocks.csv"
    chain.write_block_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["height", "timestamp_s", "tx_count", "gas_used", "bytes"]
    assert rows[1][0] == "1" and rows[1][2] == "2"
