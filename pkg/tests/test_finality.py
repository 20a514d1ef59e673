import pytest

from beaconsim.core import GENESIS, Attestation, ChainState, build_schedule
from beaconsim.finality import link_count, supermajority_link, update_finality
from beaconsim.fork_choice import epoch_boundary_block
from beaconsim.simulation import simulate_honest


def chain_to(last_slot: int, skip=()) -> ChainState:
    state = ChainState()
    parent = GENESIS
    for slot in range(1, last_slot + 1):
        if slot not in skip:
            parent = state.add_block(slot, slot, parent).id
    return state


def vote(state, count, slot, source, target, first_validator=0):
    for v in range(first_validator, first_validator + count):
        state.add_attestation(Attestation(v, slot, source, target, target))


def figure_state() -> ChainState:
    # blocks 1..63, no block at 64; ids equal slots
    state = chain_to(70, skip=range(64, 71))
    vote(state, 2731, 40, GENESIS, 32)
    vote(state, 2731, 70, 32, 63)
    return state


@pytest.mark.parametrize("count,expected", [(2731, True), (2730, False), (0, False)])
def test_supermajority_boundary(count, expected):
    state = chain_to(32)
    vote(state, count, 33, GENESIS, 32)
    assert supermajority_link(state.view(), GENESIS, 32, 1) is expected


def test_distinct_validators_counted_once():
    state = chain_to(32)
    vote(state, 2000, 33, GENESIS, 32)
    vote(state, 2000, 34, GENESIS, 32)
    assert link_count(state.view(), GENESIS, 32, 1) == 2000


def test_figure_script():
    v = figure_state().view()
    fin = update_finality(v, 2)
    assert fin.justified == {GENESIS, 32, 63}
    assert 32 in fin.finalized and 63 not in fin.finalized
    assert fin.finalized <= fin.justified
    assert fin.finalized_blocks == set(range(33))
    assert epoch_boundary_block(v, 2) == 63


def test_no_attestations():
    fin = update_finality(chain_to(100).view(), 3)
    assert fin.justified == {GENESIS}
    assert fin.finalized == set()


def test_stale_attestations_ignored():
    state = chain_to(70)
    # epoch-1 votes cast in an epoch-2 slot do not justify 32 for epoch 1
    vote(state, 2731, 66, GENESIS, 32)
    fin = update_finality(state.view(), 2)
    assert not fin.is_epoch_justified(1)


def test_justification_monotone_in_attestations():
    state = chain_to(70, skip=range(64, 71))
    vote(state, 2731, 40, GENESIS, 32)
    before = update_finality(state.view(), 2).justified
    vote(state, 2731, 70, 32, 63)
    vote(state, 100, 41, GENESIS, 31, first_validator=3000)
    after = update_finality(state.view(), 2).justified
    assert before <= after


def test_honest_three_epochs():
    schedules = {e: build_schedule(rng_seed=(3, e)) for e in range(3)}
    trace = simulate_honest(schedules, range(3))
    v = trace.view()
    ebb1, ebb2 = epoch_boundary_block(v, 1), epoch_boundary_block(v, 2)
    after1 = update_finality(v, 1)
    assert ebb1 in after1.justified and ebb1 not in after1.finalized
    after2 = update_finality(v, 2)
    assert ebb1 in after2.finalized and ebb2 in after2.justified
    assert after2.finalized <= after2.justified
    assert set(v.ancestors(ebb1)) <= after2.finalized_blocks
