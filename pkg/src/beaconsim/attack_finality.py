"""Finality delay by withholding the epoch boundary block.

Covers the attestation-waste arithmetic, the simulated strategy, the
no-two-consecutive-justified-epochs probability and the attacker's cost.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    Actor,
    CommitteeSchedule,
    ScenarioError,
    attacker_count,
    epoch_start,
    supermajority_threshold,
)
from .finality import link_tallies
from .fork_choice import TieBreak
from .rewards import RewardParams, inactivity_leak, max_attestation_value
from .simulation import Simulator, Trace


@dataclass(frozen=True)
class WasteThreshold:
    withheld: int
    honest_incorrect_base: int
    honest_incorrect_with_own: int
    slots_needed: int


def waste_threshold(total: int, committee_size: int, stake: float) -> WasteThreshold:
    """How many honest votes must target the wrong EBB to block justification."""
    if not 0 < stake < 1:
        raise ValueError("stake must lie strictly between 0 and 1")
    if stake >= 1 / 3:
        warnings.warn(f"stake {stake} is at or above one third of the validator set", stacklevel=2)
    withheld = attacker_count(total, stake)
    base = (total - supermajority_threshold(total) + 1) - withheld
    with_own = base + 1
    return WasteThreshold(withheld, base, with_own, -(-with_own // committee_size))


def denial_probability(stake: float) -> float:
    """Chance the attacker proposes both the EBB slot and the one after it."""
    if not 0 <= stake <= 1:
        raise ValueError("stake must lie in [0, 1]")
    return stake**2


def delay_probability(n: int, p_justify: float) -> float:
    """P(no two consecutive heads in ``n`` flips with P(head) = ``p_justify``)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= p_justify <= 1:
        raise ValueError("p_justify must lie in [0, 1]")
    ends_tail, ends_head = 1 - p_justify, p_justify
    for _ in range(n - 1):
        ends_tail, ends_head = (ends_tail + ends_head) * (1 - p_justify), ends_tail * p_justify
    return ends_tail + ends_head


def delay_probability_enumerated(n: int, p_justify: float) -> float:
    """Reference value by summing over all 2**n flip sequences.

    Bit i of a sequence index is flip i (1 = head); a sequence has two
    consecutive heads iff ``x & (x >> 1)`` is non-zero.
    """
    seqs = np.arange(2**n, dtype=np.int64)
    ok = (seqs & (seqs >> 1)) == 0
    heads = np.zeros_like(seqs)
    for i in range(n):
        heads += (seqs >> i) & 1
    heads = heads[ok]
    return float(np.sum(p_justify**heads * (1 - p_justify) ** (n - heads)))


def delay_cost(n: int, params: RewardParams, stake: float, strict_leak: bool = False) -> Fraction:
    """Attacker cost of a length-``n`` finality delay, in Gwei.

    With ``strict_leak`` the leak term is charged to every withheld validator
    instead of once.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    withheld = attacker_count(params.total_validators, stake)
    nu = max_attestation_value(params)
    denials = math.ceil(n / 2)
    if n <= params.min_epochs_to_inactivity_penalty:
        return denials * withheld * nu
    leak = inactivity_leak(params, n)
    if strict_leak:
        leak *= withheld
    return denials * withheld * 2 * nu + leak


def _check_proposers(schedule: CommitteeSchedule, epoch: int) -> None:
    first = epoch_start(epoch, schedule.slots_per_epoch)
    if not (schedule.attacker_proposes(first) and schedule.attacker_proposes(first + 1)):
        raise ScenarioError(
            "attacker_proposes_ebb_and_next",
            f"epoch {epoch}: attacker must propose slots {first} and {first + 1}",
        )


def execute_finality_delay(
    schedules: Mapping[int, CommitteeSchedule],
    target_epochs: int | Iterable[int],
    epochs: Iterable[int] | None = None,
    tie_break: TieBreak = "min_id",
) -> Trace:
    """Simulate ``epochs`` (default: every scheduled epoch), attacking each of
    ``target_epochs`` and playing honestly elsewhere.

    In a targeted epoch the attacker keeps its EBB and the following block
    private until enough honest votes have named the borrowed EBB as target,
    releases them, and withholds its remaining attestations for the epoch.
    The private fork is extended while the attacker keeps proposing; if an
    honest proposer comes up before the waste threshold is reached the
    scenario is infeasible.
    """
    if isinstance(target_epochs, int):
        target_epochs = [target_epochs]
    targets = sorted(set(target_epochs))
    epochs = sorted(schedules) if epochs is None else list(epochs)
    for e in targets:
        if e < 1:
            raise ScenarioError("target_epoch", "epoch 0 starts at genesis and cannot be attacked")
        if e not in schedules:
            raise ScenarioError("target_epoch", f"no schedule for epoch {e}")
        _check_proposers(schedules[e], e)

    sim = Simulator(schedules, tie_break, config={"strategy": "finality_delay", "targets": targets})
    info: dict[int, dict] = {}
    for e in epochs:
        if e in targets:
            info[e] = _attack_epoch(sim, e)
        else:
            sim.run_honest(sim.epoch_slots(e))
    sim.trace.info["epochs"] = info
    return sim.trace


def _attack_epoch(sim: Simulator, epoch: int) -> dict:
    schedule = sim.schedules[epoch]
    total = schedule.total_validators
    honest_total = total - len(schedule.attacker_set)
    # the attacker's own EBB vote plus every honest correct vote must stay short
    needed = max(0, honest_total + 1 - (supermajority_threshold(total) - 1))

    slots = sim.epoch_slots(epoch)
    first = slots[0]
    tip = sim.head()
    own_vote = None
    wasted = 0
    released_at = None
    for slot in slots:
        committee = schedule.committee(slot)
        attackers = [v for v in committee if schedule.is_attacker(v)]
        honest = [v for v in committee if not schedule.is_attacker(v)]
        if released_at is None:
            if not schedule.attacker_proposes(slot):
                raise ScenarioError(
                    "waste_threshold",
                    f"epoch {epoch}: only {wasted} of {needed} wrong-target votes before honest slot {slot}",
                )
            tip = sim.propose(slot, tip, private=True, actor="attacker").id
            if own_vote is None:
                # one attestation naming its own (still private) block as EBB
                own_vote = sim.vote(slot, Actor.ATTACKER, head=tip)
                sim.attest(slot, attackers[0], own_vote, private=True, actor="attacker")
                sim.withhold(slot, attackers[1:])
            else:
                sim.withhold(slot, attackers)
            sim.honest_attest(slot, honest)
            wasted += len(honest)
            if wasted >= needed:
                sim.release_all(slot)
                released_at = slot
        else:
            sim.honest_propose(slot, actor="attacker" if schedule.attacker_proposes(slot) else "honest")
            sim.withhold(slot, attackers)
            sim.honest_attest(slot, honest)
        sim.end_slot(slot)

    tally = link_tallies(sim.state.view(Actor.PUBLIC)).get(epoch, {})
    source, ebb = own_vote[0], own_vote[1]
    borrowed = sim.state.blocks[ebb].parent
    return {
        "epoch": epoch,
        "ebb": ebb,
        "borrowed_ebb": borrowed,
        "released_at": released_at,
        "wasted": wasted,
        "needed": needed,
        "correct_link_votes": tally.get((source, ebb), 0),
        "borrowed_link_votes": tally.get((source, borrowed), 0),
        "first_slot": first,
    }
