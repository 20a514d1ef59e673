"""Slot-driven execution engine shared by the honest and adversarial strategies.

Each slot has a propose phase, an attest phase and an end-of-slot release
point. Honest validators act on the public view; the attacker sees everything.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any, Optional

from .core import (
    Actor,
    Attestation,
    Block,
    ChainState,
    CommitteeSchedule,
    View,
    check_slashable,
    epoch_of,
    epoch_start,
)
from .finality import FinalityState, update_finality
from .fork_choice import TieBreak, canonical_chain, epoch_boundary_block, ghost_head


def _block_json(b: Block) -> dict[str, Any]:
    return {"id": b.id, "slot": b.slot, "proposer": b.proposer, "parent": b.parent}


def _att_json(a: Attestation) -> dict[str, Any]:
    return {"validator": a.validator, "slot": a.slot, "source": a.source, "target": a.target, "head": a.head}


@dataclass
class Trace:
    """Result of a simulation run: final state, event log and release history."""

    state: ChainState
    schedules: dict[int, CommitteeSchedule]
    events: list[dict[str, Any]] = field(default_factory=list)
    # (slot, public block count, public attestation count) at each end of slot
    public_history: list[tuple[int, int, int]] = field(default_factory=list)
    tie_break: TieBreak = "min_id"
    config: dict[str, Any] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)

    def view(self, actor: Actor | str = Actor.PUBLIC) -> View:
        return self.state.view(actor)

    def head(self, actor: Actor | str = Actor.PUBLIC) -> int:
        return ghost_head(self.view(actor), tie_break=self.tie_break)

    def canonical(self, actor: Actor | str = Actor.PUBLIC) -> list[int]:
        return canonical_chain(self.view(actor), tie_break=self.tie_break)

    def finality(self, up_to_epoch: Optional[int] = None) -> FinalityState:
        if up_to_epoch is None:
            up_to_epoch = epoch_of(self.state.slot, self.state.slots_per_epoch)
        return update_finality(self.view(), up_to_epoch)

    def summary(self) -> dict[str, Any]:
        fin = self.finality()
        return {
            "head": self.head(),
            "canonical": self.canonical(),
            "justified": sorted(fin.justified),
            "finalized": sorted(fin.finalized),
            "finalized_blocks": sorted(fin.finalized_blocks),
            "slashable": [v.__dict__ for v in check_slashable(self.state)],
        }

    def to_dict(self) -> dict[str, Any]:
        return {"config": self.config, "info": self.info, "events": self.events, "final": self.summary()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def event_log(self) -> list[str]:
        lines = []
        for ev in self.events:
            if ev["action"] == "attest":
                continue
            detail = ""
            if "block" in ev:
                b = ev["block"]
                detail = f" block {b['id']} (slot {b['slot']}, parent {b['parent']})"
            elif "count" in ev:
                detail = f" {ev['count']} message(s)"
            lines.append(f"slot {ev['slot']:>4} {ev['phase']:<8} {ev['actor']:<8} {ev['action']}{detail}")
        return lines


class Simulator:
    def __init__(
        self,
        schedules: Mapping[int, CommitteeSchedule],
        tie_break: TieBreak = "min_id",
        config: Optional[dict[str, Any]] = None,
    ):
        if not schedules:
            raise ValueError("need at least one epoch schedule")
        first = next(iter(schedules.values()))
        self.slots_per_epoch = first.slots_per_epoch
        self.total_validators = first.total_validators
        for s in schedules.values():
            if (s.slots_per_epoch, s.total_validators) != (self.slots_per_epoch, self.total_validators):
                raise ValueError("all epoch schedules must share dimensions")
        self.schedules = dict(schedules)
        self.tie_break = tie_break
        self.state = ChainState(self.slots_per_epoch, self.total_validators)
        self.trace = Trace(self.state, self.schedules, tie_break=tie_break, config=dict(config or {}))
        self._sources: dict[tuple[Actor, int], int] = {}

    # -- helpers ---------------------------------------------------------

    def schedule(self, slot: int) -> Optional[CommitteeSchedule]:
        return self.schedules.get(epoch_of(slot, self.slots_per_epoch))

    def epoch_slots(self, epoch: int) -> range:
        start = epoch_start(epoch, self.slots_per_epoch)
        return range(start, start + self.slots_per_epoch)

    def head(self, actor: Actor = Actor.PUBLIC) -> int:
        return ghost_head(self.state.view(actor), tie_break=self.tie_break)

    def source(self, actor: Actor, epoch: int) -> int:
        """Latest justified checkpoint known at the start of ``epoch``."""
        key = (actor, epoch)
        if key not in self._sources:
            fin = update_finality(self.state.view(actor), epoch - 1)
            self._sources[key] = fin.latest_justified[1]
        return self._sources[key]

    def vote(self, slot: int, actor: Actor = Actor.PUBLIC, head: Optional[int] = None) -> tuple[int, int, int]:
        """(source, target, head) as computed from ``actor``'s view."""
        view = self.state.view(actor)
        if head is None:
            head = ghost_head(view, tie_break=self.tie_break)
        epoch = epoch_of(slot, self.slots_per_epoch)
        target = epoch_boundary_block(view, epoch, head, self.tie_break)
        return self.source(actor, epoch), target, head

    def _event(self, slot: int, phase: str, actor: str, action: str, **extra) -> None:
        self.trace.events.append({"slot": slot, "phase": phase, "actor": actor, "action": action, **extra})

    # -- primitive actions ----------------------------------------------

    def propose(self, slot: int, parent: int, *, private: bool = False, actor: str = "honest") -> Block:
        block = self.state.add_block(slot, self.schedule(slot).proposer(slot), parent, public=not private)
        self._event(slot, "propose", actor, "propose", block={**_block_json(block), "public": not private})
        return block

    def attest(
        self, slot: int, validator: int, vote: tuple[int, int, int], *, private: bool = False, actor: str = "honest"
    ) -> Attestation:
        source, target, head = vote
        att = Attestation(validator, slot, source, target, head)
        self.state.add_attestation(att, public=not private)
        self._event(slot, "attest", actor, "attest", attestation={**_att_json(att), "public": not private})
        return att

    def withhold(self, slot: int, validators: Iterable[int]) -> None:
        validators = list(validators)
        if validators:
            self._event(slot, "attest", "attacker", "withhold", validators=validators)

    def release_all(self, slot: int) -> int:
        count = 0
        for bid in self.state.private_blocks():
            count += self.state.release_block(bid)
        for idx in self.state.private_attestations():
            count += self.state.release_attestation(idx)
        self._event(slot, "release", "attacker", "release", count=count)
        return count

    def end_slot(self, slot: int) -> None:
        self.state.slot = slot
        self.trace.public_history.append(
            (slot, len(self.state.public_blocks), len(self.state.public_attestations))
        )

    # -- honest behaviour -------------------------------------------------

    def honest_propose(self, slot: int, actor: str = "honest") -> Optional[Block]:
        if slot == 0 or self.schedule(slot) is None:
            return None  # genesis occupies slot 0
        return self.propose(slot, self.head(), actor=actor)

    def honest_attest(self, slot: int, validators: Optional[Iterable[int]] = None, actor: str = "honest") -> None:
        sched = self.schedule(slot)
        if sched is None:
            return
        if validators is None:
            validators = sched.committee(slot)
        vote = self.vote(slot)
        for v in validators:
            self.attest(slot, v, vote, actor=actor)

    def honest_slot(self, slot: int) -> None:
        self.honest_propose(slot)
        self.honest_attest(slot)
        self.end_slot(slot)

    def run_honest(self, slots: Iterable[int]) -> None:
        for slot in slots:
            self.honest_slot(slot)


def simulate_honest(
    schedules: Mapping[int, CommitteeSchedule], epochs: Iterable[int], tie_break: TieBreak = "min_id"
) -> Trace:
    """Every validator follows the protocol over the given epochs."""
    sim = Simulator(schedules, tie_break, config={"strategy": "honest"})
    for e in epochs:
        sim.run_honest(sim.epoch_slots(e))
    return sim.trace
