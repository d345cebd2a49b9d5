"""Command line front end: bounds, generate, run, game, validate."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .adversary import BALANCED_GAME, GameParams, m2_game_optimize, m2_game_terms
from .core import (DomainError, Setting, bound_greedy, bound_lb_nonpre, bound_lb_pre,
                   bound_uniform_lambda, ratio_c, ratio_c1)
from .experiment import ConfigError, ExperimentConfig, ScheduleError, run_experiment
from .instances import (GENERATORS, generate, instance_from_dict, instance_to_dict,
                        schedule_from_dict)
from .schedulers import validate_schedule

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
TABLE_MACHINES = [1, 2, 3, 4, 5, 10, 100]
BOUND_COLUMNS = [
    ("greedy", bound_greedy),
    ("sbs", ratio_c),
    ("uniform_sbs", ratio_c1),
    ("lb_nonpreemptive", bound_lb_nonpre),
    ("lb_preemptive", bound_lb_pre),
    ("uniform_lambda", bound_uniform_lambda),
]


class UsageError(Exception):
    pass


def parse_machines(text: str) -> list[int]:
    """``"1,2,5-7"`` -> ``[1, 2, 5, 6, 7]``."""
    out: list[int] = []
    try:
        for part in filter(None, (p.strip() for p in text.split(","))):
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad machine list {text!r}") from None
    if any(m < 1 for m in out):
        raise argparse.ArgumentTypeError("machine counts must be at least 1")
    return out


def parse_param(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def bounds_table(machines: list[int]) -> list[dict[str, float]]:
    return [{"m": m, **{name: f(m) for name, f in BOUND_COLUMNS}} for m in machines]


def format_rows(rows: list[dict], fmt: str, digits: int | None = 4) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1)
    if not rows:
        return ""
    keys = list(rows[0])

    def cell(v):
        return f"{v:.{digits}f}" if isinstance(v, float) and digits is not None else str(v)

    if fmt == "csv":
        return "\n".join([",".join(keys)] + [",".join(cell(r[k]) for k in keys) for r in rows])
    table = [keys] + [[cell(r[k]) for k in keys] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(keys))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in table)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def cmd_bounds(args) -> int:
    _emit(format_rows(bounds_table(args.m or TABLE_MACHINES), args.format), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    params = dict(args.param or [])
    if args.n is not None:
        params["n"] = args.n
    if args.M is not None:
        params["M"] = args.M
    try:
        instance = generate(args.generator, args.m, seed=args.seed, **params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {args.generator}: {exc}") from None
    _emit(json.dumps(instance_to_dict(instance), indent=1), args.out)
    return EXIT_OK


def _run_config(args) -> dict:
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    else:
        if not args.scheduler:
            raise UsageError("run needs --config or --scheduler")
        data = {"scheduler": args.scheduler, "m": args.m or [2], "repetitions": args.count,
                "sources": []}
        if args.generator:
            data["sources"].append({"generator": args.generator, "seed": args.seed,
                                    "params": dict(args.param or [])})
    if args.setting:
        data["setting"] = args.setting
    if args.seed is not None:
        for source in data.get("sources", []):
            if "generator" in source:
                source["seed"] = args.seed
    return data


def cmd_run(args) -> int:
    config = ExperimentConfig.from_dict(_run_config(args))
    report = run_experiment(config, schedules_dir=args.schedules)
    outputs = dict(config.outputs)
    if args.out:
        outputs = {args.format: args.out}
    if not outputs:
        text = report.to_csv() if args.format == "csv" else json.dumps(report.to_dict(), indent=1)
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    for fmt, path in outputs.items():
        text = report.to_csv() if fmt == "csv" else json.dumps(report.to_dict(), indent=1) + "\n"
        Path(path).write_text(text)
    for entry in report.summary():
        print(f"{entry['scheduler']:>22} m={entry['m']:<4} max ratio {entry['max_ratio']:.6f}"
              f"  bound {entry['bound']:.6f}", file=sys.stderr)
    for error in report.errors:
        print(f"instance {error['instance_id']}: {error['error']}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_game(args) -> int:
    params = BALANCED_GAME
    if args.params:
        try:
            params = GameParams(*(float(x) for x in args.params.split(",")))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad game parameters {args.params!r}: {exc}") from None
    terms = m2_game_terms(params)
    result = {"params": dict(zip("bcde", params.astuple())), "terms": list(terms),
              "value": min(terms)}
    if args.optimize:
        best, value = m2_game_optimize(params, budget=args.budget)
        result["optimized"] = {"params": dict(zip("bcde", best.astuple())), "value": value}
    if args.format == "json":
        print(json.dumps(result, indent=1))
        return EXIT_OK
    print("params  " + "  ".join(f"{k}={v:.6f}" for k, v in result["params"].items()))
    for k, term in enumerate(terms, 1):
        print(f"term {k}  {term:.6f}")
    print(f"min     {result['value']:.6f}")
    if args.optimize:
        opt = result["optimized"]
        print("best    " + "  ".join(f"{k}={v:.6f}" for k, v in opt["params"].items()))
        print(f"value   {opt['value']:.6f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        data = json.loads(Path(args.instance).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read instance {args.instance}: {exc}") from None
    # files written by `run --schedules` bundle the instance with its schedule
    bundled = "instance" in data
    instance = instance_from_dict(data["instance"] if bundled else data)
    print(f"instance ok: m={instance.machines} n={instance.n}"
          f" adversary={instance.adversary or '-'}")
    if args.schedule:
        data = json.loads(Path(args.schedule).read_text())
    elif not bundled:
        return EXIT_OK
    setting = args.setting or data.get("setting", Setting.NON_PREEMPTIVE.value)
    schedule = schedule_from_dict(data.get("schedule", data))
    violations = validate_schedule(schedule, instance, setting)
    for v in violations:
        print(f"{v.kind}: job={v.job} machine={v.machine} {v.detail}")
    if violations:
        return EXIT_VIOLATION
    print(f"schedule ok ({setting}), makespan {schedule.makespan!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="testsched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    settings = [s.value for s in Setting]

    p = sub.add_parser("bounds", help="competitive ratios and lower bounds per machine count")
    p.add_argument("--m", type=parse_machines, help="machine counts, e.g. 1,2,3 or 2-6")
    p.add_argument("--format", choices=["table", "csv", "json"], default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("generate", help="write an instance file")
    p.add_argument("generator", choices=GENERATORS)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--M", type=float, help="upper bound for adversarial families")
    p.add_argument("--seed", type=int)
    p.add_argument("--param", type=parse_param, action="append", help="generator key=value")
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="run a scheduler over instances and check its bound")
    p.add_argument("--config")
    p.add_argument("--scheduler")
    p.add_argument("--setting", choices=settings)
    p.add_argument("--generator", choices=GENERATORS)
    p.add_argument("--m", type=parse_machines)
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int, default=1, help="random instances per machine count")
    p.add_argument("--param", type=parse_param, action="append")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.add_argument("--schedules", help="directory for per-instance schedule files")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("game", help="two-machine fully-online lower-bound game")
    p.add_argument("--params", help="b,c,d,e (default: the balanced optimum)")
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--budget", type=int, default=100_000)
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("validate", help="check an instance file and optionally a schedule")
    p.add_argument("instance")
    p.add_argument("--schedule")
    p.add_argument("--setting", choices=settings)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScheduleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
