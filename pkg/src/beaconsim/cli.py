"""Command-line entry point: probability tables, scenario traces, reward constants."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from typing import Any, Optional, Sequence

from . import attack_finality as af
from . import attack_reorg as ar
from .core import CommitteeSchedule, ConfigError, ScenarioError, build_schedule
from .montecarlo import MCConfig, reorg_cost_estimate, reorg_estimate, run_reorg_trials
from .rewards import (
    RewardParams,
    base_reward,
    inclusion_reward,
    leak_coefficient,
    max_attestation_value,
    render_gwei,
    to_usd,
)
from .simulation import Trace, simulate_honest

DEFAULT_SEED = 20201118
CSV_HEADER = ["n", "probability", "std_error", "trials", "seed", "cost_gwei", "cost_usd"]
HOURLY, DAILY, YEARLY = 1 / 9.375, 1 / 225, 1 / 82125


@dataclass(frozen=True)
class RunConfig:
    stake_fraction: float = 0.3
    slots_per_epoch: int = 32
    committee_size: int = 128
    trials: int = 100_000
    seed: int = DEFAULT_SEED
    usd_per_eth: float = 500.0
    tie_break: str = "min_id"
    output_format: str = "csv"
    out: str = "-"
    strict_leak: bool = False
    workers: int = 1

    def __post_init__(self):
        if not 0 <= self.stake_fraction <= 1:
            raise ConfigError("--stake must lie in [0, 1]")
        if self.slots_per_epoch < 1 or self.committee_size < 1:
            raise ConfigError("--slots-per-epoch and --committee-size must be >= 1")
        if self.trials < 1:
            raise ConfigError("--trials must be >= 1")
        if self.usd_per_eth <= 0:
            raise ConfigError("--usd-per-eth must be positive")
        if self.tie_break not in ("min_id", "max_id"):
            raise ConfigError("--tie-break must be min_id or max_id")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("--format must be csv or json")
        if self.workers < 1:
            raise ConfigError("--workers must be >= 1")

    @property
    def total_validators(self) -> int:
        return self.slots_per_epoch * self.committee_size

    def mc(self) -> MCConfig:
        return MCConfig(self.stake_fraction, self.slots_per_epoch, self.committee_size, self.workers)

    def to_dict(self) -> dict[str, Any]:
        # worker count never changes results, so it is left out of outputs
        d = asdict(self)
        del d["workers"], d["out"]
        return d


def parse_range(text: str) -> list[int]:
    """``"3"``, ``"1-8"`` or ``"1,2,5"``."""
    try:
        if "-" in text:
            lo, hi = (int(x) for x in text.split("-", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"range {text!r} must be non-empty with values >= 1")
    return values


def _fmt_float(x: Optional[float], digits: int = 12) -> str:
    return "" if x is None else repr(round(x, digits))


def render_rows(rows: list[dict[str, Any]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: "" if r[k] is None else r[k] for k in CSV_HEADER})
    return buf.getvalue()


def reward_params(config: RunConfig, overrides: Optional[dict] = None) -> RewardParams:
    data = {"total_validators": config.total_validators, "usd_per_eth": config.usd_per_eth}
    data.update(overrides or {})
    return RewardParams.from_mapping(data)


def cmd_reorg_prob(config: RunConfig, ns: Sequence[int], params: Optional[RewardParams] = None) -> list[dict]:
    params = params or reward_params(config)
    stats = run_reorg_trials(config.mc(), ns, config.trials, config.seed)
    rows = []
    for n in sorted(set(ns)):
        est = reorg_estimate(stats, n)
        cost = reorg_cost_estimate(stats, n, params)
        rows.append({
            "n": n,
            "probability": _fmt_float(est.point),
            "std_error": _fmt_float(est.std_error),
            "trials": est.trials,
            "seed": est.seed,
            "cost_gwei": None if cost.mean_gwei is None else render_gwei(cost.mean_gwei),
            "cost_usd": None if cost.mean_gwei is None else _fmt_float(to_usd(cost.mean_gwei, params), 6),
        })
    return rows


def cmd_finality_prob(config: RunConfig, ns: Sequence[int], params: Optional[RewardParams] = None) -> list[dict]:
    params = params or reward_params(config)
    p_justify = 1 - af.denial_probability(config.stake_fraction)
    rows = []
    for n in sorted(set(ns)):
        cost = af.delay_cost(n, params, config.stake_fraction, strict_leak=config.strict_leak)
        rows.append({
            "n": n,
            "probability": _fmt_float(af.delay_probability(n, p_justify)),
            "std_error": _fmt_float(0.0),
            "trials": 0,
            "seed": config.seed,
            "cost_gwei": render_gwei(cost),
            "cost_usd": _fmt_float(to_usd(cost, params), 6),
        })
    return rows


def cmd_rewards(config: RunConfig, params: Optional[RewardParams] = None) -> list[dict]:
    params = params or reward_params(config)
    quantities = [
        ("base_reward", base_reward(params)),
        ("inclusion_reward_d1", inclusion_reward(params, 1)),
        ("max_attestation_value", max_attestation_value(params)),
        ("inactivity_leak_per_epoch", leak_coefficient(params)),
    ]
    return [
        {
            "quantity": name,
            "gwei_exact": f"{float(v):.6f}",
            "gwei": render_gwei(v),
            "usd": _fmt_float(to_usd(v, params), 9),
        }
        for name, v in quantities
    ]


def _schedule(config: RunConfig, seed) -> CommitteeSchedule:
    return build_schedule(config.total_validators, config.slots_per_epoch, config.committee_size,
                          config.stake_fraction, seed)


def toy_reorg_schedule() -> CommitteeSchedule:
    """Four 3-seat slots. Slot 1 proposer is the attacker, which holds 3 seats
    over slots 1-2 against 2 honest seats in slot 2."""
    committees = [(0, 1, 2), (9, 10, 3), (4, 5, 11), (6, 7, 8)]
    return CommitteeSchedule.from_committees(committees, {9, 10, 11})


def cmd_simulate(kind: str, config: RunConfig, *, n: int = 1, toy: bool = False, honest: bool = False,
                 target_epoch: int = 1, continuation: int = 2, max_draws: int = 1000) -> Trace:
    """Run one scenario and return its JSON-ready trace."""
    if kind == "reorg":
        if toy:
            schedule, window = toy_reorg_schedule(), ar.ReorgWindow(1, 1, 1)
        else:
            for draw in range(max_draws):
                schedule = _schedule(config, (config.seed, draw))
                window = ar.epoch_reorg_feasible(schedule, n)
                if window is not None:
                    break
            else:
                raise ScenarioError("window_feasible", f"no feasible length-{n} window in {max_draws} draws")
        if honest:
            trace = simulate_honest({1: schedule}, [1], config.tie_break)
        else:
            trace = ar.execute_reorg(schedule, window, epoch=1, tie_break=config.tie_break)
        trace.info["window"] = asdict(window)
    elif kind == "finality":
        epochs = list(range(0, target_epoch + continuation + 1))
        for draw in range(max_draws):
            schedules = {e: _schedule(config, (config.seed, draw, e)) for e in epochs}
            first = target_epoch * config.slots_per_epoch
            s = schedules[target_epoch]
            if s.attacker_proposes(first) and s.attacker_proposes(first + 1):
                break
        else:
            raise ScenarioError("attacker_proposes_ebb_and_next", f"not satisfied in {max_draws} draws")
        if honest:
            trace = simulate_honest(schedules, epochs, config.tie_break)
        else:
            trace = af.execute_finality_delay(schedules, target_epoch, epochs, config.tie_break)
        trace.info["draw"] = draw
    else:
        raise ValueError(f"unknown scenario kind {kind!r}")
    trace.config = {**config.to_dict(), "kind": kind, "honest": honest, "toy": toy, **trace.config}
    return trace


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stake", type=float, default=0.3)
    p.add_argument("--slots-per-epoch", type=int, default=32)
    p.add_argument("--committee-size", type=int, default=128)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--usd-per-eth", type=float, default=500.0)
    p.add_argument("--tie-break", choices=["min_id", "max_id"], default="min_id")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default="-")
    p.add_argument("--plot", default=None, help="write an SVG figure to this path")
    p.add_argument("--strict-leak", action="store_true", help="charge the leak per withheld validator")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", default=None, help="JSON file of reward parameter overrides")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beaconsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reorg-prob", help="reorg probability and cost by length")
    _common(p)
    p.add_argument("--n", type=parse_range, default=parse_range("1-8"))

    p = sub.add_parser("finality-prob", help="finality delay probability and cost by length")
    _common(p)
    p.add_argument("--n", type=parse_range, default=parse_range("1-10"))

    p = sub.add_parser("rewards", help="reward constants")
    _common(p)

    for kind in ("reorg", "finality"):
        p = sub.add_parser(f"simulate-{kind}", help=f"run the {kind} scenario and emit a JSON trace")
        _common(p)
        p.add_argument("--honest", action="store_true", help="run the honest baseline instead")
        p.add_argument("--max-draws", type=int, default=1000)
        p.add_argument("--log", default=None, help="write a human-readable event log here")
        if kind == "reorg":
            p.add_argument("--n", type=int, default=1)
            p.add_argument("--toy", action="store_true", help="3-seat figure-scale schedule")
        else:
            p.add_argument("--target-epoch", type=int, default=1)
            p.add_argument("--continuation", type=int, default=2)
    return parser


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(args.stake, args.slots_per_epoch, args.committee_size, args.trials, args.seed,
                           args.usd_per_eth, args.tie_break, args.format, args.out, args.strict_leak,
                           args.workers)
        overrides = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                overrides = json.load(fh)
        params = reward_params(config, overrides)
    except (ConfigError, ValueError, OSError) as exc:
        _error("config", str(exc))
        return 2

    try:
        if args.command == "reorg-prob":
            rows = cmd_reorg_prob(config, args.n, params)
            _write(config.out, render_rows(rows, config.output_format))
            if args.plot:
                from .plots import plot_reorg
                plot_reorg(rows, args.plot)
        elif args.command == "finality-prob":
            rows = cmd_finality_prob(config, args.n, params)
            _write(config.out, render_rows(rows, config.output_format))
            if args.plot:
                from .plots import plot_finality
                plot_finality(rows, args.plot, (HOURLY, DAILY, YEARLY))
        elif args.command == "rewards":
            rows = cmd_rewards(config, params)
            if config.output_format == "json":
                text = json.dumps(rows, indent=2) + "\n"
            else:
                buf = io.StringIO()
                w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
                text = buf.getvalue()
            _write(config.out, text)
        else:
            kind = args.command.split("-", 1)[1]
            extra = {"honest": args.honest, "max_draws": args.max_draws}
            if kind == "reorg":
                extra.update(n=args.n, toy=args.toy)
            else:
                extra.update(target_epoch=args.target_epoch, continuation=args.continuation)
            trace = cmd_simulate(kind, config, **extra)
            _write(config.out, trace.to_json(indent=1, sort_keys=True) + "\n")
            if args.log:
                _write(args.log, "\n".join(trace.event_log()) + "\n")
    except ScenarioError as exc:
        _error("scenario", str(exc), precondition=exc.precondition)
        return 1
    except ConfigError as exc:
        _error("config", str(exc))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
