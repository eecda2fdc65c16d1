"""Deterministic simulator of a layer-2 sidechain for automated market
makers: deposit-backed trading on per-round blocks, epoch summaries,
threshold-signed mainchain syncs, and pruning of settled block bodies.
"""

from .bank import BankState, DepositBook, SyncPayload, process_sync
from .chain import Mainchain, MainchainConfig, MainTx
from .consensus import (
    AgreementResult,
    Committee,
    ElectionProof,
    HandoffRecord,
    Miner,
    elect,
    epoch_handoff,
    run_agreement,
    verify_election,
)
from .engine import PoolState, Position, SwapResult
from .errors import SidepoolError
from .harness import (
    ExperimentConfig,
    MetricsReport,
    SimulationRun,
    compare_baseline,
    run,
    shadow_oracle,
    sweep,
)
from .ledger import MetaBlock, SidechainTx, SideLedger, SummaryBlock
from .workload import TrafficProfile, WorkloadGenerator

__version__ = "0.1.0"

__all__ = [
    "AgreementResult", "BankState", "Committee", "DepositBook",
    "ElectionProof", "ExperimentConfig", "HandoffRecord", "Mainchain",
    "MainchainConfig", "MainTx", "MetaBlock", "MetricsReport", "Miner",
    "PoolState", "Position", "SidechainTx", "SideLedger", "SidepoolError",
    "SimulationRun", "SummaryBlock", "SwapResult", "SyncPayload",
    "TrafficProfile", "WorkloadGenerator", "compare_baseline", "elect",
    "epoch_handoff", "process_sync", "run", "run_agreement", "shadow_oracle",
    "sweep", "verify_election",
]
