"""Batch runs: schedule each instance, check it, compare against the optimum."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

from .adversary import make_reveal
from .core import (DomainError, Instance, Setting, bound_greedy, bound_uniform_lambda,
                   ratio_c, ratio_c1)
from .instances import (FAMILIES, RANDOM_GENERATORS, generate, instance_to_dict,
                        load_instance, schedule_to_dict)
from .oracle import (CapacityError, exact_layout, mcnaughton_layout, opt_offline,
                     lower_bound_test_preemptive)
from .schedulers import (RunTrace, Schedule, greedy, sbs, small_lambda_eligible,
                         two_phases, uniform_sbs, uniform_small_lambda, validate_schedule)

CSV_COLUMNS = ["instance_id", "m", "n", "scheduler", "setting", "alg", "opt", "ratio", "bound", "ok"]
BOUND_SLACK = 1e-9


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class ScheduleError(RuntimeError):
    """A scheduler emitted a schedule that breaks the rules of its setting."""


def _two_phases(instance, reveal, setting):
    solver = mcnaughton_layout if setting is Setting.PREEMPTIVE else exact_layout
    return two_phases(instance, reveal, solver)


@dataclass(frozen=True)
class SchedulerSpec:
    name: str
    run: Callable[[Instance, Any, Setting], tuple[Schedule, RunTrace]]
    bound: Callable[[int], float]
    settings: tuple[Setting, ...]
    eligible: Callable[[Instance], bool] = lambda instance: True


_NP = (Setting.NON_PREEMPTIVE,)
SCHEDULERS = {
    spec.name: spec for spec in (
        SchedulerSpec("greedy", lambda i, r, s: greedy(i, r), bound_greedy, _NP),
        SchedulerSpec("sbs", lambda i, r, s: sbs(i, r), ratio_c, _NP),
        SchedulerSpec("uniform_sbs", lambda i, r, s: uniform_sbs(i, r), ratio_c1, _NP,
                      lambda instance: instance.uniform),
        SchedulerSpec("two_phases", _two_phases, lambda m: 2.0,
                      (Setting.TEST_PREEMPTIVE, Setting.PREEMPTIVE)),
        SchedulerSpec("uniform_small_lambda", lambda i, r, s: uniform_small_lambda(i, r),
                      bound_uniform_lambda, _NP, small_lambda_eligible),
    )
}


@dataclass
class Row:
    instance_id: int
    m: int
    n: int
    scheduler: str
    setting: str
    alg: float
    opt: float
    ratio: float
    bound: float
    ok: bool


@dataclass
class Outcome:
    row: Row
    schedule: Schedule
    trace: RunTrace
    realized: Instance


def realize(instance: Instance, schedule: Schedule, reveal) -> Instance:
    """Fill in every deferred processing time: revealed ones, then the adversary's choice."""
    values = dict(schedule.revealed)
    for job in instance.jobs:
        if job.id not in values and job.processing is None:
            values[job.id] = reveal.complete(job.id)
    return instance.realized(values)


def scheduler_spec(name: str) -> SchedulerSpec:
    try:
        return SCHEDULERS[name]
    except KeyError:
        raise ConfigError(f"unknown scheduler {name!r}; choose from {', '.join(SCHEDULERS)}") from None


def run_instance(instance: Instance, scheduler: str, setting: Setting | str,
                 instance_id: int = 0) -> Outcome:
    spec = scheduler_spec(scheduler)
    setting = Setting(setting)
    if setting not in spec.settings:
        raise ConfigError(f"{scheduler} cannot run in the {setting.value} setting")
    if not spec.eligible(instance):
        raise DomainError(f"instance not eligible for {scheduler}")
    reveal = make_reveal(instance)
    schedule, trace = spec.run(instance, reveal, setting)
    violations = validate_schedule(schedule, instance, setting)
    if violations:
        raise ScheduleError(f"{scheduler} produced an invalid schedule: {violations}")
    realized = realize(instance, schedule, reveal)
    opt = opt_offline(realized, setting)
    if opt <= 0:
        raise DomainError("optimum is zero; ratio undefined")
    alg = schedule.makespan
    bound = spec.bound(instance.machines)
    ratio = alg / opt
    ok = ratio <= bound + BOUND_SLACK
    if setting is Setting.TEST_PREEMPTIVE:
        # opt is only an upper bound here, so also check against a lower bound
        ok = ok and alg <= bound * lower_bound_test_preemptive(realized) + BOUND_SLACK * max(1.0, alg)
    row = Row(instance_id, instance.machines, instance.n, scheduler, setting.value,
              alg, opt, ratio, bound, ok)
    return Outcome(row, schedule, trace, realized)


@dataclass
class ExperimentConfig:
    scheduler: str
    setting: Setting
    machines: list[int]
    sources: list[dict[str, Any]]
    repetitions: int = 1
    outputs: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        try:
            scheduler = data["scheduler"]
            setting = Setting(data.get("setting", Setting.NON_PREEMPTIVE.value))
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if setting not in scheduler_spec(scheduler).settings:
            raise ConfigError(f"{scheduler} cannot run in the {setting.value} setting")
        machines = data.get("m", [])
        if isinstance(machines, int):
            machines = [machines]
        if any(not isinstance(m, int) or m < 1 for m in machines):
            raise ConfigError(f"machine counts must be positive integers: {machines}")
        sources = data.get("sources", [])
        for source in sources:
            if "file" in source:
                continue
            name = source.get("generator")
            if name not in RANDOM_GENERATORS and name not in FAMILIES:
                raise ConfigError(f"unknown generator {name!r}")
            if name in RANDOM_GENERATORS and source.get("seed") is None:
                raise ConfigError(f"random generator {name!r} needs a seed")
        repetitions = int(data.get("repetitions", 1))
        if repetitions < 0:
            raise ConfigError("repetitions must be nonnegative")
        return cls(scheduler, setting, list(machines), list(sources), repetitions,
                   dict(data.get("output", {})))

    def instances(self):
        """Yield instances in a fixed order; seeds derive from (seed, m, repetition)."""
        for source in self.sources:
            if "file" in source:
                yield load_instance(source["file"])
                continue
            name = source["generator"]
            params = source.get("params", {})
            for m in self.machines:
                if name in FAMILIES:
                    yield generate(name, m, **params)
                    continue
                for rep in range(self.repetitions):
                    yield generate(name, m, seed=[int(source["seed"]), m, rep], **params)


@dataclass
class Report:
    rows: list[Row] = field(default_factory=list)
    errors: list[dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(row.ok for row in self.rows)

    def summary(self) -> list[dict[str, Any]]:
        worst: dict[tuple[str, int], Row] = {}
        for row in self.rows:
            key = (row.scheduler, row.m)
            if key not in worst or row.ratio > worst[key].ratio:
                worst[key] = row
        return [{"scheduler": s, "m": m, "max_ratio": r.ratio, "bound": r.bound,
                 "instance_id": r.instance_id} for (s, m), r in sorted(worst.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v
                             for v in asdict(row).values()])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {"rows": [asdict(row) for row in self.rows],
                "summary": self.summary(), "errors": self.errors, "ok": self.ok}


def run_experiment(config: ExperimentConfig, schedules_dir: str | Path | None = None) -> Report:
    report = Report()
    for instance_id, instance in enumerate(config.instances()):
        try:
            outcome = run_instance(instance, config.scheduler, config.setting, instance_id)
        except (CapacityError, DomainError) as exc:
            report.errors.append({"instance_id": instance_id, "m": instance.machines,
                                  "n": instance.n, "error": str(exc)})
            continue
        report.rows.append(outcome.row)
        if schedules_dir is not None:
            out = Path(schedules_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{instance_id:05d}.json").write_text(json.dumps({
                "instance": instance_to_dict(outcome.realized),
                "setting": config.setting.value,
                "schedule": schedule_to_dict(outcome.schedule),
            }, indent=1) + "\n")
    return report

