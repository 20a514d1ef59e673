"""Monte Carlo estimates over random epoch schedules and coin-flip sequences.

Trial ``i`` of a run with master seed ``s`` uses the schedule
``build_schedule(..., rng_seed=(s, i))``, so results do not depend on how
trials are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .attack_finality import delay_probability
from .core import ConfigError, attacker_count, committee_permutation
from .rewards import RewardParams, base_reward

CHUNK = 2048


@dataclass(frozen=True)
class MCConfig:
    stake_fraction: float = 0.3
    slots_per_epoch: int = 32
    committee_size: int = 128
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.stake_fraction <= 1:
            raise ConfigError("stake_fraction must lie in [0, 1]")
        if self.slots_per_epoch < 1 or self.committee_size < 1:
            raise ConfigError("slots_per_epoch and committee_size must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def total_validators(self) -> int:
        return self.slots_per_epoch * self.committee_size


@dataclass(frozen=True)
class Estimate:
    point: float
    std_error: float
    trials: int
    seed: int
    successes: int = 0

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int) -> "Estimate":
        p = successes / trials
        return cls(p, math.sqrt(p * (1 - p) / trials), trials, seed, successes)


@dataclass(frozen=True)
class CostEstimate:
    """Mean attacker cost over successful trials; ``mean_gwei`` is None when
    no trial succeeded."""

    successes: int
    mean_gwei: Optional[Fraction]
    std_error_gwei: Optional[float]
    usd_per_eth: float = 500.0

    @property
    def mean_usd(self) -> Optional[float]:
        if self.mean_gwei is None:
            return None
        return float(self.mean_gwei / 10**9 * Fraction(self.usd_per_eth))


@dataclass
class ReorgStats:
    """Per reorg length: success count and attacker post-fork seat totals."""

    trials: int
    seed: int
    successes: dict[int, int] = field(default_factory=dict)
    k_sum: dict[int, int] = field(default_factory=dict)
    k_sq_sum: dict[int, int] = field(default_factory=dict)


def red_matrix(config: MCConfig, seed: int, trials: Sequence[int]) -> np.ndarray:
    """Attacker mask of shape (len(trials), slots, committee_size)."""
    k = attacker_count(config.total_validators, config.stake_fraction)
    out = np.empty((len(trials), config.slots_per_epoch, config.committee_size), dtype=bool)
    for row, i in enumerate(trials):
        perm = committee_permutation(config.total_validators, (seed, i))
        out[row] = (perm < k).reshape(config.slots_per_epoch, config.committee_size)
    return out


def first_windows(red: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised first-feasible-window scan.

    Returns (found mask, attacker seats in the last ``n`` slots of the window).
    Windows are scanned in (start, m) order like ``epoch_reorg_feasible``.
    """
    trials, slots, size = red.shape
    seats = red.sum(axis=2)
    prefix = np.zeros((trials, slots + 1), dtype=np.int64)
    np.cumsum(seats, axis=1, out=prefix[:, 1:])
    prop = red[:, :, 0].astype(np.int64)
    pprefix = np.zeros((trials, slots + 1), dtype=np.int64)
    np.cumsum(prop, axis=1, out=pprefix[:, 1:])

    found = np.zeros(trials, dtype=bool)
    k = np.zeros(trials, dtype=np.int64)
    for start in range(slots):
        for m in range(1, slots - start - n + 1):
            end = start + m + n
            red_total = prefix[:, end] - prefix[:, start]
            red_tail = prefix[:, end] - prefix[:, start + m]
            ok = (pprefix[:, start + m] - pprefix[:, start] == m) & (red_total > n * size - red_tail)
            new = ok & ~found
            k[new] = red_tail[new]
            found |= ok
    return found, k


def _reorg_chunk(args) -> tuple[dict[int, int], dict[int, int], dict[int, int]]:
    config, seed, lo, hi, ns = args
    red = red_matrix(config, seed, range(lo, hi))
    succ, ks, ksq = {}, {}, {}
    for n in ns:
        found, k = first_windows(red, n)
        kk = k[found]
        succ[n] = int(found.sum())
        ks[n] = int(kk.sum())
        ksq[n] = int((kk * kk).sum())
    return succ, ks, ksq


def run_reorg_trials(config: MCConfig, ns: Sequence[int], trials: int, seed: int) -> ReorgStats:
    """Evaluate every reorg length in ``ns`` on the same set of schedules."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if any(n < 1 for n in ns):
        raise ValueError("reorg lengths must be >= 1")
    ns = sorted(set(ns))
    tasks = [(config, seed, lo, min(lo + CHUNK, trials), ns) for lo in range(0, trials, CHUNK)]
    if config.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_reorg_chunk, tasks))
    else:
        results = [_reorg_chunk(t) for t in tasks]
    stats = ReorgStats(trials, seed)
    for n in ns:
        stats.successes[n] = sum(r[0][n] for r in results)
        stats.k_sum[n] = sum(r[1][n] for r in results)
        stats.k_sq_sum[n] = sum(r[2][n] for r in results)
    return stats


def reorg_estimate(stats: ReorgStats, n: int) -> Estimate:
    return Estimate.from_counts(stats.successes[n], stats.trials, stats.seed)


def reorg_cost_estimate(stats: ReorgStats, n: int, params: RewardParams) -> CostEstimate:
    s = stats.successes[n]
    if s == 0:
        return CostEstimate(0, None, None, params.usd_per_eth)
    per_seat = base_reward(params) * 7 / 8
    mean_k = Fraction(stats.k_sum[n], s)
    var_k = max(0.0, stats.k_sq_sum[n] / s - float(mean_k) ** 2)
    se = float(per_seat) * math.sqrt(var_k / s)
    return CostEstimate(s, mean_k * per_seat, se, params.usd_per_eth)


def estimate_reorg_probability(config: MCConfig, n: int, trials: int, seed: int) -> Estimate:
    return reorg_estimate(run_reorg_trials(config, [n], trials, seed), n)


def estimate_reorg_cost(
    config: MCConfig, n: int, trials: int, seed: int, params: Optional[RewardParams] = None
) -> CostEstimate:
    if params is None:
        params = RewardParams(total_validators=config.total_validators)
    return reorg_cost_estimate(run_reorg_trials(config, [n], trials, seed), n, params)


@dataclass(frozen=True)
class DelayCheck:
    estimate: Estimate
    exact: float
    z_score: float


def simulate_delay_flips(n: int, p_justify: float, trials: int, seed: int) -> int:
    """Count sequences of ``n`` flips with no two consecutive heads."""
    hits = 0
    for chunk, lo in enumerate(range(0, trials, CHUNK * 16)):
        size = min(CHUNK * 16, trials - lo)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))
        heads = rng.random((size, n)) < p_justify
        double = (heads[:, 1:] & heads[:, :-1]).any(axis=1) if n > 1 else np.zeros(size, dtype=bool)
        hits += int((~double).sum())
    return hits


def verify_delay_probability(n: int, p_justify: float, trials: int, seed: int) -> DelayCheck:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    est = Estimate.from_counts(simulate_delay_flips(n, p_justify, trials, seed), trials, seed)
    exact = delay_probability(n, p_justify)
    diff = est.point - exact
    if est.std_error > 0:
        z = diff / est.std_error
    else:
        z = 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)
    return DelayCheck(est, exact, z)
