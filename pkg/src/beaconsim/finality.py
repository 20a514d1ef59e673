"""Casper FFG supermajority links, justification and finalization.

Only the "two consecutive justified epochs" finalization case is modelled.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .core import GENESIS, View, epoch_of, supermajority_threshold


@dataclass
class FinalityState:
    justified: set[int] = field(default_factory=lambda: {GENESIS})
    finalized: set[int] = field(default_factory=set)
    # finalized checkpoints plus all of their ancestors
    finalized_blocks: set[int] = field(default_factory=set)
    # epoch -> checkpoint block justified for that epoch; genesis is epoch 0
    checkpoints: dict[int, int] = field(default_factory=lambda: {0: GENESIS})
    tallies: dict[int, Counter] = field(default_factory=dict)

    @property
    def latest_justified(self) -> tuple[int, int]:
        """(epoch, block) of the most recent justified checkpoint."""
        epoch = max(self.checkpoints)
        return epoch, self.checkpoints[epoch]

    def is_epoch_justified(self, epoch: int) -> bool:
        return epoch in self.checkpoints


def link_tallies(view: View) -> dict[int, Counter]:
    """Per epoch: number of distinct validators voting each (source, target) pair."""
    voters: dict[int, dict[tuple[int, int], set[int]]] = {}
    for att in view.attestations:
        e = epoch_of(att.slot, view.slots_per_epoch)
        voters.setdefault(e, {}).setdefault((att.source, att.target), set()).add(att.validator)
    return {e: Counter({pair: len(vs) for pair, vs in pairs.items()}) for e, pairs in voters.items()}


def link_count(view: View, source: int, target: int, epoch: int) -> int:
    return link_tallies(view).get(epoch, Counter())[(source, target)]


def supermajority_link(view: View, source: int, target: int, epoch: int) -> bool:
    return link_count(view, source, target, epoch) >= supermajority_threshold(view.total_validators)


def update_finality(view: View, up_to_epoch: int) -> FinalityState:
    """Replay epochs ``1..up_to_epoch`` and return justified/finalized blocks.

    Attestations count only toward the epoch of their own slot.
    """
    state = FinalityState(tallies=link_tallies(view))
    threshold = supermajority_threshold(view.total_validators)
    for e in range(1, up_to_epoch + 1):
        links = [pair for pair, c in state.tallies.get(e, Counter()).items() if c >= threshold]
        while True:
            fresh = [t for s, t in links if s in state.justified and t not in state.justified]
            if not fresh:
                break
            state.justified.update(fresh)
        for source, target in sorted(links):
            if source in state.justified:
                state.checkpoints.setdefault(e, target)
        prev = state.checkpoints.get(e - 1)
        cur = state.checkpoints.get(e)
        if prev is not None and cur is not None and (prev, cur) in links:
            state.finalized.add(prev)
            state.finalized_blocks.update(view.ancestors(prev) if prev in view.blocks else [prev])
    return state
