"""Brute-force reference implementations, independent of the package code paths."""

from __future__ import annotations

import random
from types import MappingProxyType

from beaconsim.core import Attestation, Block, View


def random_tree_view(rng: random.Random, max_blocks: int = 50, max_atts: int = 200, validators: int = 64) -> View:
    nblocks = rng.randint(1, max_blocks)
    blocks = {0: Block(0, 0, None, None)}
    for i in range(1, nblocks):
        parent = rng.randrange(i)
        blocks[i] = Block(i, blocks[parent].slot + rng.randint(1, 3), rng.randrange(validators), parent)
    natts = rng.randint(0, max_atts)
    seen = set()
    atts = []
    for _ in range(natts):
        v, s = rng.randrange(validators), rng.randrange(200)
        if (v, s) in seen:
            continue
        seen.add((v, s))
        atts.append(Attestation(v, s, 0, 0, rng.randrange(nblocks)))
    return View(MappingProxyType(blocks), tuple(atts), 32, validators)


def descendants(view: View, block_id: int) -> set[int]:
    out = set()
    for bid in view.blocks:
        cur = bid
        while cur is not None:
            if cur == block_id:
                out.add(bid)
                break
            cur = view.blocks[cur].parent
    return out


def brute_latest(view: View) -> dict[int, Attestation]:
    by_validator: dict[int, list[Attestation]] = {}
    for a in view.attestations:
        by_validator.setdefault(a.validator, []).append(a)
    return {v: max(atts, key=lambda a: a.slot) for v, atts in by_validator.items()}


def brute_weights(view: View) -> dict[int, int]:
    latest = brute_latest(view)
    return {
        bid: sum(1 for a in latest.values() if a.head in descendants(view, bid))
        for bid in view.blocks
    }


def all_paths(view: View, root: int = 0) -> list[list[int]]:
    kids = [b for b in view.blocks if view.blocks[b].parent == root]
    if not kids:
        return [[root]]
    return [[root, *p] for k in kids for p in all_paths(view, k)]


def brute_ghost(view: View) -> int:
    """Leaf of the unique root-to-leaf path that takes the heaviest
    (lowest id on ties) child at every fork."""
    w = brute_weights(view)
    winners = []
    for path in all_paths(view):
        ok = True
        for parent, child in zip(path, path[1:]):
            siblings = [b for b in view.blocks if view.blocks[b].parent == parent]
            best = max(w[s] for s in siblings)
            if w[child] != best or child != min(s for s in siblings if w[s] == best):
                ok = False
                break
        if ok:
            winners.append(path[-1])
    assert len(winners) == 1
    return winners[0]


def recount_window(committees, attackers, start, m, n) -> bool:
    """Urn condition restated on raw committee lists."""
    if any(committees[s][0] not in attackers for s in range(start, start + m)):
        return False
    red = sum(1 for s in range(start, start + m + n) for v in committees[s] if v in attackers)
    black = sum(1 for s in range(start + m, start + m + n) for v in committees[s] if v not in attackers)
    return red > black
