import pytest

from beaconsim.attack_finality import delay_probability
from beaconsim.attack_reorg import epoch_reorg_feasible
from beaconsim.core import build_schedule
from beaconsim.montecarlo import (
    Estimate,
    MCConfig,
    estimate_reorg_cost,
    estimate_reorg_probability,
    first_windows,
    red_matrix,
    reorg_estimate,
    run_reorg_trials,
    verify_delay_probability,
)

CFG = MCConfig()


def test_vectorised_scan_matches_scalar_path():
    trials = range(250)
    red = red_matrix(CFG, 31, trials)
    for n in (1, 2, 3, 4):
        found, k = first_windows(red, n)
        for i in trials:
            s = build_schedule(rng_seed=(31, i))
            w = epoch_reorg_feasible(s, n)
            assert found[i] == (w is not None)
            if w is not None:
                assert k[i] == sum(s.attacker_seats(x) for x in w.post_fork_slots())


def test_zero_stake():
    cfg = MCConfig(stake_fraction=0.0)
    for n in range(1, 4):
        assert estimate_reorg_probability(cfg, n, 500, 1).point == 0
    assert estimate_reorg_cost(cfg, 1, 500, 1).mean_gwei is None


def test_estimate_standard_error():
    e = Estimate.from_counts(30, 100, 0)
    assert e.std_error == pytest.approx((0.3 * 0.7 / 100) ** 0.5)


def test_deterministic_and_parallel_agnostic():
    serial = run_reorg_trials(CFG, [1, 2, 3], 5000, 9)
    again = run_reorg_trials(CFG, [1, 2, 3], 5000, 9)
    parallel = run_reorg_trials(MCConfig(workers=3), [1, 2, 3], 5000, 9)
    assert serial == again == parallel


def test_single_length_matches_shared_run():
    shared = run_reorg_trials(CFG, [1, 2, 3], 3000, 4)
    assert estimate_reorg_probability(CFG, 2, 3000, 4) == reorg_estimate(shared, 2)


def test_reorg_curve_shape_small():
    stats = run_reorg_trials(CFG, range(1, 7), 20_000, 12)
    est = [reorg_estimate(stats, n) for n in range(1, 7)]
    for a, b in zip(est, est[1:]):
        assert b.point <= a.point + 3 * (a.std_error + b.std_error)
    low = run_reorg_trials(MCConfig(stake_fraction=0.25), [2], 20_000, 12)
    assert reorg_estimate(low, 2).point <= est[1].point


def test_mean_cost_close_to_n_minus_one():
    for n in (1, 2, 3):
        cost = estimate_reorg_cost(CFG, n, 10_000, 3)
        assert abs(cost.mean_usd - (n - 1)) <= 1


def test_delay_estimate_n2():
    chk = verify_delay_probability(2, 0.91, 10**6, 5)
    assert chk.exact == pytest.approx(0.1719, abs=1e-12)
    assert abs(chk.z_score) < 3


def test_delay_trivial_cases():
    assert verify_delay_probability(1, 0.91, 1000, 1).estimate.point == 1.0
    for n in (2, 3, 7):
        chk = verify_delay_probability(n, 1.0, 1000, 1)
        assert chk.estimate.point == 0 and chk.z_score == 0


def test_delay_estimates_within_four_sigma():
    for n in range(1, 11):
        chk = verify_delay_probability(n, 0.91, 10**6, 100 + n)
        assert chk.exact == delay_probability(n, 0.91)
        assert abs(chk.z_score) < 4
