import random

import pytest

from beaconsim.attack_reorg import (
    ReorgWindow,
    epoch_reorg_feasible,
    execute_reorg,
    reorg_cost,
    window_counts,
    window_feasible,
)
from beaconsim.cli import toy_reorg_schedule
from beaconsim.core import CommitteeSchedule, ConfigError, ScenarioError, build_schedule, check_slashable
from beaconsim.fork_choice import compute_weights
from beaconsim.rewards import RewardParams, base_reward, to_usd

from .oracles import recount_window


def crafted_schedule(attacker_seats: dict[int, int], attacker_proposes=(), spe=32, size=128):
    """Slot i gets ``attacker_seats[i]`` attackers (default 0); listed slots get
    an attacker proposer."""
    total = spe * size
    counts = [attacker_seats.get(i, 0) for i in range(spe)]
    attackers = iter(range(sum(counts)))
    honest = iter(range(sum(counts), total))
    committees = []
    for i in range(spe):
        red = [next(attackers) for _ in range(counts[i])]
        black = [next(honest) for _ in range(size - counts[i])]
        committees.append(red + black if i in attacker_proposes else black + red)
    return CommitteeSchedule.from_committees(committees, range(sum(counts)))


def test_toy_feasible():
    s = toy_reorg_schedule()
    w = ReorgWindow(1, 1, 1)
    assert window_counts(s, w) == (3, 2)
    assert window_feasible(s, w)


def test_toy_execution_reproduces_weights():
    trace = execute_reorg(toy_reorg_schedule(), ReorgWindow(1, 1, 1))
    info = trace.info
    assert (info["attacker_branch_weight"], info["honest_branch_weight"]) == (3, 2)
    assert trace.head() == info["fork_blocks"][-1]
    assert len(info["orphaned"]) == 1
    assert info["pre_release_head"] == info["orphaned"][0]
    assert check_slashable(trace.state) == []


def test_no_attacker_proposals_never_feasible():
    s = crafted_schedule({i: 60 for i in range(32)})
    assert epoch_reorg_feasible(s, 1) is None
    assert not window_feasible(s, ReorgWindow(0, 1, 1))


def test_window_crossing_epoch():
    s = build_schedule(rng_seed=1)
    with pytest.raises(ConfigError):
        window_feasible(s, ReorgWindow(30, 2, 1))


def test_first_feasible_window_order():
    # attacker proposes slots 5 and 6 with ~30% membership everywhere
    s = crafted_schedule({i: 38 for i in range(32)}, attacker_proposes={5, 6})
    # m=1: 76 attacker vs 90 honest fails; m=2: 114 vs 90 succeeds
    assert epoch_reorg_feasible(s, 1) == ReorgWindow(5, 2, 1)
    assert window_counts(s, ReorgWindow(5, 2, 1)) == (114, 90)


def test_full_length_reorg_impossible():
    s = build_schedule(stake_fraction=1.0, rng_seed=2)
    assert epoch_reorg_feasible(s, 32) is None


def test_all_honest_none():
    s = build_schedule(stake_fraction=0.0, rng_seed=2)
    assert all(epoch_reorg_feasible(s, n) is None for n in range(1, 5))


def test_feasibility_matches_recount():
    rng = random.Random(4)
    for seed in range(40):
        s = build_schedule(rng_seed=(99, seed))
        for _ in range(40):
            n = rng.randint(1, 6)
            start = rng.randrange(0, 32 - n)
            m = rng.randint(1, 32 - n - start)
            w = ReorgWindow(start, m, n)
            assert window_feasible(s, w) == recount_window(s.committees, s.attacker_set, start, m, n)


def test_feasibility_monotone_in_attacker_seats():
    rng = random.Random(8)
    for seed in range(30):
        s = build_schedule(rng_seed=(7, seed))
        w = ReorgWindow(rng.randrange(20), rng.randint(1, 3), rng.randint(1, 6))
        before = window_feasible(s, w)
        # flip one honest non-proposer seat inside the window to the attacker
        slot = rng.randrange(w.start_slot, w.end)
        honest = [v for v in s.committee(slot)[1:] if v not in s.attacker_set]
        if not honest:
            continue
        bigger = CommitteeSchedule(s.committees, s.attacker_set | {honest[0]})
        assert window_feasible(bigger, w) >= before


def test_infeasible_window_refused():
    s = crafted_schedule({1: 1}, attacker_proposes={1}, spe=4, size=3)
    with pytest.raises(ScenarioError):
        execute_reorg(s, ReorgWindow(1, 1, 1))


def test_reorg_cost():
    p = RewardParams()
    s = crafted_schedule({i: 38 for i in range(32)} | {7: 39}, attacker_proposes={5, 6})
    w = ReorgWindow(5, 2, 3)
    k = 38 + 39 + 38
    assert k == 115
    cost = reorg_cost(s, w, p)
    assert cost == k * base_reward(p) * 7 / 8
    assert to_usd(cost, p) == pytest.approx(2.25, abs=0.01)
    assert reorg_cost(crafted_schedule({}, attacker_proposes=()), w, p) == 0


def executed_windows(count):
    found = 0
    seed = 0
    while found < count:
        seed += 1
        s = build_schedule(rng_seed=(2024, seed))
        for n in (1, 2, 3):
            w = epoch_reorg_feasible(s, n)
            if w is not None:
                found += 1
                yield s, w


@pytest.mark.parametrize("case", range(6))
def test_full_scale_execution(case):
    s, w = list(executed_windows(6))[case]
    trace = execute_reorg(s, w)
    info = trace.info
    assert len(info["orphaned"]) == w.n
    assert info["attacker_branch_weight"] > info["honest_branch_weight"]
    assert check_slashable(trace.state) == []
    assert trace.head() in info["fork_blocks"] or trace.head() == info["fork_blocks"][-1]
    # honest fork-slot votes sit on the common ancestor and count for neither leaf
    v = trace.view()
    w8 = compute_weights(v)
    fork_root = info["fork_blocks"][0]
    rival = [c for c in v.children[info["fork_parent"]] if c != fork_root][0]
    fork_honest = sum(s.honest_seats(x) for x in w.fork_slots())
    parent_votes = sum(1 for a in v.attestations if a.head == info["fork_parent"])
    assert parent_votes >= fork_honest
    assert w8[info["fork_parent"]] >= w8[fork_root] + w8[rival] + fork_honest
    # release is monotone
    hist = trace.public_history
    assert all(a[1] <= b[1] and a[2] <= b[2] for a, b in zip(hist, hist[1:]))
