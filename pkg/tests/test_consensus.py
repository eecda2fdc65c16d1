"""Committee election, leader agreement, and epoch handoff."""

import math

import pytest

from sidepool import consensus, tsig
from sidepool.bank import endorsement_bytes
from sidepool.consensus import (
    AGREED,
    STALLED,
    Committee,
    ElectionProof,
    Miner,
    elect,
    election_score,
    epoch_handoff,
    run_agreement,
    verify_election,
)
from sidepool.errors import (
    BadElectionProof,
    BadSize,
    InsufficientShares,
    TooFewMiners,
)


def miners(n=12, stake=100):
    return [Miner(f"m-{i:03d}", stake) for i in range(n)]


def test_committee_size_must_be_3f_plus_2():
    with pytest.raises(BadSize):
        elect(miners(), "s", 6)
    committee = elect(miners(), "s", 8)
    assert committee.f == 2 and committee.size == 8 and committee.quorum == 6


def test_elect_requires_enough_candidates():
    with pytest.raises(TooFewMiners):
        elect(miners(4), "s", 5)


def test_election_deterministic_and_seed_epoch_sensitive():
    a = elect(miners(), "seed", 5, epoch=0)
    b = elect(miners(), "seed", 5, epoch=0)
    c = elect(miners(), "seed", 5, epoch=1)
    d = elect(miners(), "other", 5, epoch=0)
    ids = lambda com: [m.miner_id for m in com.members]
    assert ids(a) == ids(b)
    assert a.vk == b.vk
    assert ids(a) != ids(c) or a.vk != c.vk
    assert ids(a) != ids(d) or a.vk != d.vk


def test_members_ranked_by_score():
    committee = elect(miners(), "rank", 5)
    scores = [election_score(p, m.stake)
              for p, m in zip(committee.proofs, committee.members)]
    assert scores == sorted(scores)
    assert committee.leader is committee.members[0]


def test_stake_weighting_favors_heavy_miners():
    """A miner with overwhelming stake is selected essentially always."""
    wins = 0
    for trial in range(50):
        pool = miners(11) + [Miner("whale", 10**6)]
        committee = elect(pool, f"trial-{trial}", 5)
        wins += any(m.miner_id == "whale" for m in committee.members)
    assert wins >= 48


def test_election_score_formula():
    proof = ElectionProof("m", "s", consensus._vrf_output("m", "s"))
    u = (int.from_bytes(proof.output, "big") + 1) / (2 ** 256 + 1)
    assert election_score(proof, 100) == pytest.approx(-math.log(u) / 100)
    assert election_score(proof, 200) == pytest.approx(-math.log(u) / 200)


def test_verify_election_rejects_forged_membership():
    pool = miners()
    committee = elect(pool, "verify", 5)
    verify_election(pool, committee, "verify")

    tampered = elect(pool, "verify", 5)
    outsider = Miner("outsider", 100)
    tampered.members[0] = outsider
    tampered.proofs[0] = ElectionProof(
        "outsider", f"verify|epoch-0",
        consensus._vrf_output("outsider", "verify|epoch-0"))
    with pytest.raises(BadElectionProof):
        verify_election(pool + [outsider], tampered, "verify")

    faked = elect(pool, "verify", 5)
    faked.proofs[0] = ElectionProof(faked.proofs[0].miner_id, "verify|epoch-0",
                                    b"\x00" * 32)
    with pytest.raises(BadElectionProof):
        verify_election(pool, faked, "verify")


def test_agreement_honest_leader_first_try():
    committee = elect(miners(), "agree", 5)
    result = run_agreement(committee, lambda leader: {"n": 1},
                           lambda p: True)
    assert result.status == AGREED
    assert result.view_changes == 0
    assert result.votes >= committee.quorum


def test_agreement_view_change_is_permanent():
    committee = elect(miners(), "agree2", 5)
    committee.members[0].profile = consensus.SILENT_LEADER
    first_leader = committee.leader

    def propose(leader):
        return None if leader.profile == consensus.SILENT_LEADER else {"ok": 1}

    result = run_agreement(committee, propose, lambda p: True)
    assert result.status == AGREED
    assert result.view_changes == 1
    assert result.leader is not first_leader
    # the replacement keeps leading: no further view changes
    again = run_agreement(committee, propose, lambda p: True)
    assert again.view_changes == 0
    assert again.leader is result.leader


def test_agreement_invalid_proposal_also_rotates():
    committee = elect(miners(), "agree3", 5)
    committee.members[0].profile = consensus.INVALID_PROPOSER

    def propose(leader):
        return {"ok": leader.profile != consensus.INVALID_PROPOSER}

    result = run_agreement(committee, propose, lambda p: p["ok"])
    assert result.status == AGREED and result.view_changes == 1


def test_agreement_stalls_beyond_fault_assumption():
    committee = elect(miners(), "stall", 5)
    for member in committee.members[:2]:   # f + 1 faulty of f = 1
        member.profile = consensus.SILENT_LEADER
    result = run_agreement(committee,
                           lambda leader: None if leader.faulty else {"ok": 1},
                           lambda p: True)
    assert result.status == STALLED


def test_committee_sign_excludes_faulty_and_verifies():
    committee = elect(miners(), "sign", 5)
    committee.members[1].profile = consensus.SILENT_LEADER
    signature = committee.sign(b"payload")
    assert tsig.verify(committee.vk, b"payload", signature.data)
    committee.members[2].profile = consensus.SILENT_LEADER
    with pytest.raises(InsufficientShares):
        committee.sign(b"payload")   # only 3 honest < quorum 4


def test_epoch_handoff_produces_verifying_chain_link():
    pool = miners()
    old = elect(pool, "chain", 5, epoch=3)
    new = elect(pool, "chain", 5, epoch=4)
    record = epoch_handoff(old, new, pool, "chain")
    assert record.epoch == 4
    assert record.next_vk == new.vk
    vk, endorsement = record.vk_chain_link
    assert tsig.verify(old.vk, endorsement_bytes(vk, 4), endorsement)


def test_epoch_handoff_requires_consecutive_epochs():
    pool = miners()
    old = elect(pool, "chain", 5, epoch=3)
    skip = elect(pool, "chain", 5, epoch=5)
    with pytest.raises(BadSize):
        epoch_handoff(old, skip, pool, "chain")


def test_keyset_matches_committee_shape():
    committee = elect(miners(), "keys", 8)
    assert committee.keyset.group_size == 8
    assert committee.keyset.threshold == committee.quorum == 6
