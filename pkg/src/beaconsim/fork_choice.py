"""LMD-GHOST head selection and epoch boundary blocks over an actor's view."""

from __future__ import annotations

import warnings
from typing import Literal, Optional

from .core import GENESIS, Attestation, View, epoch_start

TieBreak = Literal["min_id", "max_id"]


def latest_messages(view: View) -> dict[int, Attestation]:
    """Highest-slot visible attestation per validator."""
    if view.latest is not None:
        return dict(view.latest)
    latest: dict[int, Attestation] = {}
    for att in view.attestations:
        cur = latest.get(att.validator)
        if cur is None or att.slot > cur.slot:
            latest[att.validator] = att
    return latest


def compute_weights(view: View) -> dict[int, int]:
    """Subtree sums of latest-message head votes, keyed by block id."""
    weights = dict.fromkeys(view.blocks, 0)
    unknown = 0
    for att in latest_messages(view).values():
        if att.head in weights:
            weights[att.head] += 1
        else:
            unknown += 1
    if unknown:
        warnings.warn(f"ignored {unknown} head vote(s) for blocks not in view", stacklevel=2)
    # parents always carry smaller ids than their children
    for bid in sorted(view.blocks, reverse=True):
        parent = view.blocks[bid].parent
        if parent is not None and parent in weights:
            weights[parent] += weights[bid]
    return weights


def _pick(children, weights, tie_break: TieBreak) -> int:
    if tie_break == "min_id":
        return max(children, key=lambda c: (weights[c], -c))
    if tie_break == "max_id":
        return max(children, key=lambda c: (weights[c], c))
    raise ValueError(f"unknown tie_break {tie_break!r}")


def ghost_head(
    view: View,
    start: int = GENESIS,
    tie_break: TieBreak = "min_id",
    weights: Optional[dict[int, int]] = None,
) -> int:
    """Walk from ``start`` taking the heaviest child at each fork until a leaf."""
    if start not in view.blocks:
        raise KeyError(f"start block {start} is not visible")
    if weights is None:
        weights = compute_weights(view)
    cur = start
    while view.children[cur]:
        cur = _pick(view.children[cur], weights, tie_break)
    return cur


def canonical_chain(view: View, head: Optional[int] = None, tie_break: TieBreak = "min_id") -> list[int]:
    """Block ids from genesis to ``head`` (the GHOST head if not given)."""
    if head is None:
        head = ghost_head(view, tie_break=tie_break)
    return view.ancestors(head)[::-1]


def epoch_boundary_block(
    view: View,
    epoch: int,
    head: Optional[int] = None,
    tie_break: TieBreak = "min_id",
) -> int:
    """EBB of ``epoch``: the canonical block at the epoch's first slot, else the
    highest canonical block from an earlier epoch."""
    first = epoch_start(epoch, view.slots_per_epoch)
    best = GENESIS
    for bid in canonical_chain(view, head, tie_break):
        slot = view.blocks[bid].slot
        if slot == first:
            return bid
        if slot < first:
            best = bid
    return best
