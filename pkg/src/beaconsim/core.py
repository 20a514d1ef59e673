"""Domain types, committee scheduling and the public/attacker visibility model."""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Optional, Union

import numpy as np

GENESIS = 0
DEFAULT_SLOTS_PER_EPOCH = 32
DEFAULT_COMMITTEE_SIZE = 128

SeedLike = Union[int, Sequence[int]]


class ConfigError(ValueError):
    """Raised for inconsistent simulation dimensions or parameters."""


class ScenarioError(RuntimeError):
    """A scenario precondition does not hold for the given schedule."""

    def __init__(self, precondition: str, detail: str = ""):
        self.precondition = precondition
        self.detail = detail
        super().__init__(f"{precondition}: {detail}" if detail else precondition)


class Actor(str, enum.Enum):
    PUBLIC = "public"
    ATTACKER = "attacker"


def epoch_of(slot: int, slots_per_epoch: int = DEFAULT_SLOTS_PER_EPOCH) -> int:
    return slot // slots_per_epoch


def epoch_start(epoch: int, slots_per_epoch: int = DEFAULT_SLOTS_PER_EPOCH) -> int:
    return epoch * slots_per_epoch


def supermajority_threshold(total_validators: int) -> int:
    """Smallest vote count reaching two thirds of the validator set."""
    return -(-2 * total_validators // 3)


@dataclass(frozen=True)
class Block:
    id: int
    slot: int
    proposer: Optional[int]
    parent: Optional[int]


@dataclass(frozen=True)
class Attestation:
    validator: int
    slot: int
    source: int
    target: int
    head: int


@dataclass(frozen=True)
class CommitteeSchedule:
    """One epoch of committees; ``committees[i]`` serves the i-th slot of the epoch.

    The first validator of each committee is that slot's proposer.
    """

    committees: tuple[tuple[int, ...], ...]
    attacker_set: frozenset[int]

    def __post_init__(self):
        if not self.committees or not self.committees[0]:
            raise ConfigError("schedule needs at least one non-empty committee")
        size = len(self.committees[0])
        if any(len(c) != size for c in self.committees):
            raise ConfigError("committees must all have the same size")
        members = sorted(v for c in self.committees for v in c)
        if members != list(range(len(members))):
            raise ConfigError("every validator must sit on exactly one committee per epoch")
        if any(not 0 <= v < len(members) for v in self.attacker_set):
            raise ConfigError("attacker index out of range")

    @property
    def slots_per_epoch(self) -> int:
        return len(self.committees)

    @property
    def committee_size(self) -> int:
        return len(self.committees[0])

    @property
    def total_validators(self) -> int:
        return self.slots_per_epoch * self.committee_size

    def committee(self, slot: int) -> tuple[int, ...]:
        return self.committees[slot % self.slots_per_epoch]

    def proposer(self, slot: int) -> int:
        return self.committee(slot)[0]

    def is_attacker(self, validator: int) -> bool:
        return validator in self.attacker_set

    def attacker_proposes(self, slot: int) -> bool:
        return self.proposer(slot) in self.attacker_set

    def attacker_seats(self, slot: int) -> int:
        return sum(1 for v in self.committee(slot) if v in self.attacker_set)

    def honest_seats(self, slot: int) -> int:
        return self.committee_size - self.attacker_seats(slot)

    @classmethod
    def from_committees(
        cls, committees: Iterable[Iterable[int]], attacker_set: Iterable[int] = ()
    ) -> "CommitteeSchedule":
        return cls(tuple(tuple(c) for c in committees), frozenset(attacker_set))


def attacker_count(total_validators: int, stake_fraction: float) -> int:
    # floor, with a guard so e.g. 0.3 * 4096 = 1228.8 is not hurt by float error
    return int(math.floor(stake_fraction * total_validators + 1e-9))


def _rng(rng_seed: SeedLike) -> np.random.Generator:
    if isinstance(rng_seed, (int, np.integer)):
        seq = np.random.SeedSequence(int(rng_seed))
    else:
        head, *rest = (int(x) for x in rng_seed)
        seq = np.random.SeedSequence(head, spawn_key=tuple(rest))
    return np.random.Generator(np.random.PCG64(seq))


def committee_permutation(total_validators: int, rng_seed: SeedLike) -> np.ndarray:
    """Random seat order for one epoch; reshaped row-wise into committees."""
    return _rng(rng_seed).permutation(total_validators)


def build_schedule(
    total_validators: int = DEFAULT_SLOTS_PER_EPOCH * DEFAULT_COMMITTEE_SIZE,
    slots_per_epoch: int = DEFAULT_SLOTS_PER_EPOCH,
    committee_size: int = DEFAULT_COMMITTEE_SIZE,
    stake_fraction: float = 0.3,
    rng_seed: SeedLike = 0,
) -> CommitteeSchedule:
    """Uniformly random partition of validators into per-slot committees.

    Validators ``0 .. floor(stake_fraction * total) - 1`` form the attacker set.
    ``rng_seed`` may be an int or a sequence ``(master, i, ...)``; the latter is
    used for per-trial sub-seeding.
    """
    if slots_per_epoch < 1 or committee_size < 1:
        raise ConfigError("slots_per_epoch and committee_size must be >= 1")
    if total_validators != slots_per_epoch * committee_size:
        raise ConfigError(
            f"total_validators={total_validators} != "
            f"{slots_per_epoch} * {committee_size}"
        )
    if not 0.0 <= stake_fraction <= 1.0:
        raise ConfigError(f"stake_fraction {stake_fraction} outside [0, 1]")
    perm = committee_permutation(total_validators, rng_seed).reshape(
        slots_per_epoch, committee_size
    )
    k = attacker_count(total_validators, stake_fraction)
    return CommitteeSchedule(
        tuple(tuple(int(v) for v in row) for row in perm), frozenset(range(k))
    )


@dataclass(frozen=True)
class View:
    """Read-only snapshot of the messages one actor can see."""

    blocks: Mapping[int, Block]
    attestations: tuple[Attestation, ...]
    slots_per_epoch: int = DEFAULT_SLOTS_PER_EPOCH
    total_validators: int = DEFAULT_SLOTS_PER_EPOCH * DEFAULT_COMMITTEE_SIZE
    latest: Optional[Mapping[int, Attestation]] = None

    @cached_property
    def children(self) -> Mapping[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {bid: [] for bid in self.blocks}
        for b in self.blocks.values():
            if b.parent is not None and b.parent in kids:
                kids[b.parent].append(b.id)
        return {bid: tuple(sorted(c)) for bid, c in kids.items()}

    def ancestors(self, block_id: int) -> list[int]:
        """``block_id`` followed by its ancestors down to genesis."""
        out = []
        cur: Optional[int] = block_id
        while cur is not None:
            out.append(cur)
            cur = self.blocks[cur].parent
        return out

    def is_ancestor(self, ancestor: int, block_id: int) -> bool:
        return ancestor in self.ancestors(block_id)


@dataclass
class ChainState:
    """Block tree plus attestation pool with a release flag per message."""

    slots_per_epoch: int = DEFAULT_SLOTS_PER_EPOCH
    total_validators: int = DEFAULT_SLOTS_PER_EPOCH * DEFAULT_COMMITTEE_SIZE
    slot: int = 0
    blocks: dict[int, Block] = field(default_factory=dict)
    attestations: list[Attestation] = field(default_factory=list)
    public_blocks: set[int] = field(default_factory=set)
    public_attestations: set[int] = field(default_factory=set)
    _latest: dict[Actor, dict[int, Attestation]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.blocks:
            self.blocks[GENESIS] = Block(GENESIS, 0, None, None)
            self.public_blocks.add(GENESIS)
        self._latest = {Actor.PUBLIC: {}, Actor.ATTACKER: {}}

    def add_block(self, slot: int, proposer: Optional[int], parent: int, public: bool = True) -> Block:
        if parent not in self.blocks:
            raise KeyError(f"unknown parent block {parent}")
        if self.blocks[parent].slot >= slot:
            raise ValueError(f"parent slot {self.blocks[parent].slot} >= block slot {slot}")
        block = Block(len(self.blocks), slot, proposer, parent)
        self.blocks[block.id] = block
        if public:
            self.public_blocks.add(block.id)
        return block

    def add_attestation(self, att: Attestation, public: bool = True) -> int:
        idx = len(self.attestations)
        self.attestations.append(att)
        self._note_latest(Actor.ATTACKER, att)
        if public:
            self.public_attestations.add(idx)
            self._note_latest(Actor.PUBLIC, att)
        return idx

    def _note_latest(self, actor: Actor, att: Attestation) -> None:
        cur = self._latest[actor].get(att.validator)
        if cur is None or att.slot > cur.slot:
            self._latest[actor][att.validator] = att

    def release_block(self, block_id: int) -> bool:
        if block_id in self.public_blocks:
            return False
        self.public_blocks.add(block_id)
        return True

    def release_attestation(self, idx: int) -> bool:
        if idx in self.public_attestations:
            return False
        self.public_attestations.add(idx)
        self._note_latest(Actor.PUBLIC, self.attestations[idx])
        return True

    def private_blocks(self) -> list[int]:
        return sorted(set(self.blocks) - self.public_blocks)

    def private_attestations(self) -> list[int]:
        return sorted(set(range(len(self.attestations))) - self.public_attestations)

    def view(self, actor: Actor | str = Actor.PUBLIC) -> View:
        actor = Actor(actor)
        if actor is Actor.ATTACKER:
            blocks = dict(self.blocks)
            atts = tuple(self.attestations)
        else:
            blocks = {bid: self.blocks[bid] for bid in sorted(self.public_blocks)}
            atts = tuple(self.attestations[i] for i in sorted(self.public_attestations))
        return View(
            MappingProxyType(blocks),
            atts,
            self.slots_per_epoch,
            self.total_validators,
            MappingProxyType(dict(self._latest[actor])),
        )


def view(state: ChainState, actor: Actor | str) -> View:
    return state.view(actor)


@dataclass(frozen=True)
class Violation:
    kind: str  # "block" or "attestation"
    validator: int
    slot: int


def check_slashable(state: ChainState) -> list[Violation]:
    """Every (validator, slot) that signed two distinct blocks or attestations."""
    out = []
    seen_blocks: dict[tuple[int, int], Block] = {}
    for b in state.blocks.values():
        if b.proposer is None:
            continue
        key = (b.proposer, b.slot)
        if key in seen_blocks and seen_blocks[key] != b:
            out.append(Violation("block", b.proposer, b.slot))
        seen_blocks.setdefault(key, b)
    seen_atts: dict[tuple[int, int], Attestation] = {}
    for a in state.attestations:
        key = (a.validator, a.slot)
        if key in seen_atts and seen_atts[key] != a:
            out.append(Violation("attestation", a.validator, a.slot))
        seen_atts.setdefault(key, a)
    return out
