"""Error types shared across the simulator."""


class SidepoolError(Exception):
    """Base class for all simulator errors."""


# --- amounts ---

class AmountOverflow(SidepoolError):
    """An arithmetic result left the unsigned 128-bit range."""


class ZeroAmount(SidepoolError):
    pass


# --- swap / liquidity engine ---

class ExpiredDeadline(SidepoolError):
    pass


class SlippageExceeded(SidepoolError):
    pass


class PriceLimitHit(SidepoolError):
    pass


class InsufficientReserve(SidepoolError):
    pass


class NotOwner(SidepoolError):
    pass


class UnknownPosition(SidepoolError):
    pass


class ZeroLiquidity(SidepoolError):
    pass


class BadRange(SidepoolError):
    pass


class NoActiveLiquidity(SidepoolError):
    pass


# --- bank ---

class PoolExists(SidepoolError):
    pass


class SameToken(SidepoolError):
    pass


class BadSignature(SidepoolError):
    pass


class EpochGap(SidepoolError):
    pass


class NegativeReserve(SidepoolError):
    pass


class RepaymentFailed(SidepoolError):
    pass


class UnknownOp(SidepoolError):
    pass


# --- sidechain ledger ---

class InvalidTransaction(SidepoolError):
    """Carries a structured rejection reason in .reason."""

    def __init__(self, reason, detail=""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


class InsufficientDeposit(SidepoolError):
    pass


class BlockOverCapacity(SidepoolError):
    pass


class InconsistentReplay(SidepoolError):
    pass


class SyncNotConfirmed(SidepoolError):
    pass


# --- consensus / election ---

class TooFewMiners(SidepoolError):
    pass


class BadSize(SidepoolError):
    pass


class BadElectionProof(SidepoolError):
    pass


class NoVkAgreement(SidepoolError):
    pass


# --- threshold signatures ---

class BadCommitteeSize(SidepoolError):
    pass


class InsufficientShares(SidepoolError):
    pass


class DuplicateShare(SidepoolError):
    pass


# --- mainchain ---

class OversizedTx(SidepoolError):
    pass


class TooDeep(SidepoolError):
    pass


# --- harness ---

class ConfigInvalid(SidepoolError):
    pass


class AssumptionViolated(SidepoolError):
    pass


class Divergence(SidepoolError):
    """Shadow replay disagreed with the sync-updated bank state."""

    def __init__(self, field, detail=""):
        super().__init__(f"divergence at {field}: {detail}" if detail else f"divergence at {field}")
        self.field = field
