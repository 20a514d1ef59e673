"""Attester reward and penalty formulas, in exact Gwei, plus USD conversion."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Any, Mapping

GWEI_PER_ETH = 10**9


@dataclass(frozen=True)
class RewardParams:
    base_reward_factor: int = 64
    base_rewards_per_epoch: int = 4
    proposer_reward_quotient: int = 8
    inactivity_penalty_quotient: int = 2**24
    max_effective_balance: int = 32 * GWEI_PER_ETH
    total_validators: int = 4096
    usd_per_eth: float = 500.0
    # inactivity leak threshold, in epochs since finality
    min_epochs_to_inactivity_penalty: int = 4

    def __post_init__(self):
        for name in (
            "base_reward_factor",
            "base_rewards_per_epoch",
            "proposer_reward_quotient",
            "inactivity_penalty_quotient",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_effective_balance < 0:
            raise ValueError("max_effective_balance must be non-negative")
        if self.total_validators < 0:
            raise ValueError("total_validators must be non-negative")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RewardParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown reward parameters: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def render_gwei(amount: Fraction) -> int:
    """Round half up to whole Gwei."""
    return math.floor(Fraction(amount) + Fraction(1, 2))


def total_stake(params: RewardParams) -> int:
    return params.total_validators * params.max_effective_balance


def base_reward(params: RewardParams) -> Fraction:
    """Per-validator base reward, using the protocol's integer division."""
    if params.total_validators <= 0:
        raise ValueError("base reward undefined for zero validators")
    root = math.isqrt(total_stake(params))
    if root == 0:
        raise ValueError("base reward undefined for zero total stake")
    return Fraction(
        params.max_effective_balance * params.base_reward_factor
        // root
        // params.base_rewards_per_epoch
    )


def inclusion_reward(params: RewardParams, delay: int) -> Fraction:
    if delay < 1:
        raise ValueError("inclusion delay must be >= 1 slot")
    rho = base_reward(params)
    return (rho - rho / params.proposer_reward_quotient) / delay


def max_attestation_value(params: RewardParams) -> Fraction:
    """Source + target + head rewards plus the best-case inclusion reward."""
    return 3 * base_reward(params) + inclusion_reward(params, 1)


def inactivity_leak(params: RewardParams, epochs_since_finality: int) -> Fraction:
    if epochs_since_finality < 0:
        raise ValueError("epochs since finality cannot be negative")
    if epochs_since_finality <= params.min_epochs_to_inactivity_penalty:
        return Fraction(0)
    return Fraction(epochs_since_finality * params.max_effective_balance, params.inactivity_penalty_quotient)


def leak_coefficient(params: RewardParams) -> Fraction:
    return Fraction(params.max_effective_balance, params.inactivity_penalty_quotient)


def to_usd(amount: Fraction | int, params: RewardParams) -> float:
    return float(Fraction(amount) / GWEI_PER_ETH * Fraction(params.usd_per_eth))
