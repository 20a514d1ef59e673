"""Private-fork malicious reorgs: window feasibility, execution and cost."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import Actor, CommitteeSchedule, ConfigError, ScenarioError, check_slashable, epoch_start
from .fork_choice import TieBreak, compute_weights
from .rewards import RewardParams, base_reward
from .simulation import Simulator, Trace


@dataclass(frozen=True)
class ReorgWindow:
    """``m`` private attacker blocks starting at ``start_slot`` (offset within the
    epoch), followed by ``n`` honest slots whose blocks get orphaned."""

    start_slot: int
    m: int
    n: int

    def __post_init__(self):
        if self.start_slot < 0 or self.m < 1 or self.n < 1:
            raise ConfigError(f"invalid reorg window {self}")

    @property
    def end(self) -> int:
        return self.start_slot + self.m + self.n

    def fork_slots(self) -> range:
        return range(self.start_slot, self.start_slot + self.m)

    def post_fork_slots(self) -> range:
        return range(self.start_slot + self.m, self.end)


def _check_in_epoch(schedule: CommitteeSchedule, w: ReorgWindow) -> None:
    if w.end > schedule.slots_per_epoch:
        raise ConfigError(f"window {w} crosses the epoch boundary ({schedule.slots_per_epoch} slots)")


def window_counts(schedule: CommitteeSchedule, w: ReorgWindow) -> tuple[int, int]:
    """(attacker seats over all m+n slots, honest seats over the last n slots)."""
    _check_in_epoch(schedule, w)
    red = sum(schedule.attacker_seats(s) for s in range(w.start_slot, w.end))
    black = sum(schedule.honest_seats(s) for s in w.post_fork_slots())
    return red, black


def window_feasible(schedule: CommitteeSchedule, w: ReorgWindow) -> bool:
    _check_in_epoch(schedule, w)
    if not all(schedule.attacker_proposes(s) for s in w.fork_slots()):
        return False
    red, black = window_counts(schedule, w)
    return red > black


def epoch_reorg_feasible(schedule: CommitteeSchedule, n: int) -> Optional[ReorgWindow]:
    """First feasible window for a length-``n`` reorg, scanning start then m."""
    if n < 1:
        raise ValueError("reorg length must be >= 1")
    spe = schedule.slots_per_epoch
    for start in range(spe):
        for m in range(1, spe - start - n + 1):
            w = ReorgWindow(start, m, n)
            if not schedule.attacker_proposes(start + m - 1):
                break  # longer forks need this slot too
            if window_feasible(schedule, w):
                return w
    return None


def reorg_cost(schedule: CommitteeSchedule, w: ReorgWindow, params: RewardParams) -> Fraction:
    """Lost inclusion reward on the attacker's post-fork attestations."""
    k = sum(schedule.attacker_seats(s) for s in w.post_fork_slots())
    return k * base_reward(params) * 7 / 8


def execute_reorg(
    schedule: CommitteeSchedule,
    w: ReorgWindow,
    epoch: int = 1,
    tie_break: TieBreak = "min_id",
) -> Trace:
    """Run the private-fork strategy for one window in ``epoch``.

    Earlier slots of the epoch are played honestly; earlier epochs are empty.
    The attacker releases its fork and attestations at the end of the window.
    Attacker proposers inside the post-fork slots publish on the public chain,
    so every one of the ``n`` public blocks is orphaned.
    """
    if not window_feasible(schedule, w):
        raise ScenarioError("window_feasible", f"{w} is not feasible for this schedule")
    base = epoch_start(epoch, schedule.slots_per_epoch)
    if epoch == 0 and w.start_slot == 0:
        raise ScenarioError("genesis_slot", "the fork cannot start at the genesis slot")

    sim = Simulator({epoch: schedule}, tie_break, config={"strategy": "reorg", "epoch": epoch,
                                                          "window": w.__dict__})
    fork_start = base + w.start_slot
    sim.run_honest(range(base, fork_start))

    honest_before = set(sim.state.blocks)
    fork_parent = sim.head()
    tip = fork_parent
    for slot in range(fork_start, base + w.end):
        committee = schedule.committee(slot)
        attackers = [v for v in committee if schedule.is_attacker(v)]
        honest = [v for v in committee if not schedule.is_attacker(v)]
        if slot < fork_start + w.m:
            tip = sim.propose(slot, tip, private=True, actor="attacker").id
        else:
            sim.honest_propose(slot, actor="attacker" if schedule.attacker_proposes(slot) else "honest")
        sim.honest_attest(slot, honest)
        vote = sim.vote(slot, Actor.ATTACKER, head=tip)
        for v in attackers:
            sim.attest(slot, v, vote, private=True, actor="attacker")
        if slot < base + w.end - 1:
            sim.end_slot(slot)

    last = base + w.end - 1
    pre_release = sim.trace.canonical()
    sim.release_all(last)
    sim.end_slot(last)

    trace = sim.trace
    post_release = trace.canonical()
    orphaned = [b for b in pre_release if b not in post_release]
    public_view = trace.view()
    weights = compute_weights(public_view)
    fork_root = next(b for b in post_release if sim.state.blocks[b].parent == fork_parent)
    rival = [c for c in public_view.children[fork_parent] if c != fork_root]
    trace.info.update(
        fork_parent=fork_parent,
        fork_blocks=[b for b in post_release if b not in honest_before and b not in pre_release],
        orphaned=orphaned,
        attacker_branch_weight=weights[fork_root],
        honest_branch_weight=max((weights[c] for c in rival), default=0),
        pre_release_head=pre_release[-1],
        slashable=len(check_slashable(sim.state)),
    )
    return trace
