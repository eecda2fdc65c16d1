"""Committee election, leader-based agreement, and epoch handoff.

A committee of n = 3f + 2 members is drawn per epoch by stake-weighted
sortition. Each candidate evaluates a keyed hash of the epoch seed (a
pseudo verifiable random function: revealing the output proves it),
the output is read as a uniform fraction, and the score -ln(u) / stake
ranks candidates; the n lowest win and the lowest leads. Scores are
recomputable from the proofs, so any observer can verify an election.

Agreement is leader based and vote counted: a proposal commits when
2f + 2 members vote for it. A silent or invalid leader triggers a view
change, and the replacement (next lowest score) keeps leading for the
rest of the epoch. Votes are tallied directly rather than transported;
the model captures outcomes and view counts, not message traffic.

At the end of its epoch a committee endorses its successor's threshold
verification key with a threshold signature. These endorsement links
let a later committee prove its authority to the mainchain contract
even when intermediate sync calls were never submitted.
"""

import hashlib
import math
from dataclasses import dataclass

from . import tsig
from .bank import endorsement_bytes
from .errors import (
    BadElectionProof,
    BadSize,
    InsufficientShares,
    NoVkAgreement,
    TooFewMiners,
)

HONEST = "honest"
SILENT_LEADER = "silent_leader"
INVALID_PROPOSER = "invalid_proposer"
INVALID_SYNC_PROPOSER = "invalid_sync_proposer"
TARGETED_CENSOR = "targeted_censor"

PROFILES = (HONEST, SILENT_LEADER, INVALID_PROPOSER, INVALID_SYNC_PROPOSER,
            TARGETED_CENSOR)

AGREED = "agreed"
STALLED = "stalled"


@dataclass
class Miner:
    miner_id: str
    stake: int
    profile: str = HONEST
    censor_target: str = ""   # sender censored when this miner leads

    @property
    def faulty(self) -> bool:
        return self.profile != HONEST


@dataclass(frozen=True)
class ElectionProof:
    miner_id: str
    seed: str
    output: bytes   # keyed hash the miner reveals; anyone can recompute

    def verify(self) -> bool:
        return self.output == _vrf_output(self.miner_id, self.seed)


def _vrf_output(miner_id: str, seed: str) -> bytes:
    # the "secret" key is derivable in the simulator so proofs stay
    # publicly checkable without key distribution
    return hashlib.sha256(f"vrf-secret:{miner_id}|{seed}".encode()).digest()


def election_score(proof: ElectionProof, stake: int) -> float:
    """Sortition score; lower wins, heavier stake wins more."""
    if stake <= 0:
        raise BadElectionProof(f"non-positive stake for {proof.miner_id}")
    u = (int.from_bytes(proof.output, "big") + 1) / (2 ** 256 + 1)
    return -math.log(u) / stake


@dataclass
class Committee:
    epoch: int
    f: int
    members: list                    # Miners in score order; [0] leads first
    proofs: list                     # ElectionProof per member, same order
    keyset: tsig.ThresholdKeySet
    leader_index: int = 0            # advanced permanently on view change
    view_changes: int = 0

    @property
    def size(self) -> int:
        return 3 * self.f + 2

    @property
    def quorum(self) -> int:
        return 2 * self.f + 2

    @property
    def vk(self) -> bytes:
        return self.keyset.vk

    @property
    def leader(self) -> Miner:
        return self.members[self.leader_index % self.size]

    def advance_leader(self):
        self.leader_index += 1
        self.view_changes += 1

    def honest_count(self) -> int:
        return sum(1 for m in self.members if not m.faulty)

    def sign(self, message: bytes, signer_indices=None) -> tsig.ThresholdSignature:
        """Threshold-sign with the given 1-based member indices (default:
        a quorum of honest members)."""
        if signer_indices is None:
            signer_indices = [i for i, m in enumerate(self.members, start=1)
                              if not m.faulty][:self.quorum]
        if len(signer_indices) < self.quorum:
            raise InsufficientShares(
                f"{len(signer_indices)} signers < quorum {self.quorum}")
        partials = [self.keyset.sign_share(i, message) for i in signer_indices]
        return tsig.combine(partials, self.keyset.threshold)


def committee_f(committee_size: int) -> int:
    if committee_size < 2 or (committee_size - 2) % 3:
        raise BadSize(f"{committee_size} is not 3f+2")
    return (committee_size - 2) // 3


def elect(miners, seed: str, committee_size: int, epoch: int = 0) -> Committee:
    f = committee_f(committee_size)
    if len(miners) < committee_size:
        raise TooFewMiners(
            f"{len(miners)} candidates for committee of {committee_size}")
    epoch_seed = f"{seed}|epoch-{epoch}"
    proofs = {m.miner_id: ElectionProof(m.miner_id, epoch_seed,
                                        _vrf_output(m.miner_id, epoch_seed))
              for m in miners}
    ranked = sorted(miners,
                    key=lambda m: (election_score(proofs[m.miner_id], m.stake),
                                   m.miner_id))
    chosen = ranked[:committee_size]
    keyset = tsig.keygen(committee_size, f, f"{epoch_seed}|keys")
    return Committee(epoch, f, chosen, [proofs[m.miner_id] for m in chosen],
                     keyset)


def verify_election(miners, committee: Committee, seed: str) -> None:
    """Re-derive the sortition from the proofs; raise if it disagrees."""
    for proof in committee.proofs:
        if not proof.verify():
            raise BadElectionProof(f"bad proof for {proof.miner_id}")
    expected = elect(miners, seed, committee.size, committee.epoch)
    got = [m.miner_id for m in committee.members]
    want = [m.miner_id for m in expected.members]
    if got != want:
        raise BadElectionProof(f"claimed {got}, sortition gives {want}")


@dataclass
class AgreementResult:
    status: str           # agreed | stalled
    proposal: object
    leader: Miner
    view_changes: int     # leader replacements consumed by this round
    votes: int


def run_agreement(committee: Committee, propose, validate,
                  max_views: int = None) -> AgreementResult:
    """One agreement round under the committee's current leader.

    propose(leader) returns the leader's proposal, or None if the leader
    stays silent. validate(proposal) says whether a correct member votes
    for it. Each failed view replaces the leader for the rest of the
    epoch. Stalled is only reachable when more than f members are
    faulty, which violates the adversary assumption.
    """
    if max_views is None:
        max_views = committee.size
    changes = 0
    last_leader, last_proposal = committee.leader, None
    for _ in range(max_views):
        leader = committee.leader
        proposal = propose(leader)
        last_leader, last_proposal = leader, proposal
        if proposal is None or not validate(proposal):
            committee.advance_leader()
            changes += 1
            continue
        votes = committee.honest_count()
        if votes >= committee.quorum:
            return AgreementResult(AGREED, proposal, leader, changes, votes)
        return AgreementResult(STALLED, proposal, leader, changes, votes)
    return AgreementResult(STALLED, last_proposal, last_leader, changes, 0)


def agree_on_vk(committee: Committee) -> bytes:
    """The incoming committee agrees on its own verification key."""
    result = run_agreement(committee, lambda leader: committee.vk,
                           lambda vk: vk == committee.vk)
    if result.status != AGREED:
        raise NoVkAgreement(f"only {result.votes} endorsements")
    return result.proposal


@dataclass
class HandoffRecord:
    epoch: int            # the successor's epoch
    next_vk: bytes
    endorsement: bytes    # old committee's threshold signature over the vk

    @property
    def vk_chain_link(self):
        return (self.next_vk, self.endorsement)


def epoch_handoff(old: Committee, new: Committee, miners, seed: str) -> HandoffRecord:
    """Old committee checks the successor's election and vk agreement,
    then endorses the successor's key for the bank's vk chain."""
    if new.epoch != old.epoch + 1:
        raise BadSize(f"handoff {old.epoch} -> {new.epoch} is not consecutive")
    verify_election(miners, new, seed)
    vk = agree_on_vk(new)
    signature = old.sign(endorsement_bytes(vk, new.epoch))
    return HandoffRecord(new.epoch, vk, signature.data)
