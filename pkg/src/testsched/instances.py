"""Instance and schedule JSON files, plus instance generators."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .adversary import FAMILIES
from .core import DomainError, Instance, Job, Mode
from .schedulers import Run, Schedule, Segment


def instance_to_dict(instance: Instance) -> dict[str, Any]:
    return {
        "m": instance.machines,
        "jobs": [{"t": job.test_time, "u": job.upper_bound, "p": job.processing}
                 for job in instance.jobs],
        "adversary": instance.adversary,
    }


def instance_from_dict(data: dict[str, Any]) -> Instance:
    try:
        jobs = tuple(Job(k, float(row["t"]), float(row["u"]),
                         None if row.get("p") is None else float(row["p"]))
                     for k, row in enumerate(data["jobs"]))
        return Instance(int(data["m"]), jobs, data.get("adversary"))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed instance: {exc!r}") from exc


def save_instance(instance: Instance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n")


def load_instance(path: str | Path) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def schedule_to_dict(schedule: Schedule) -> dict[str, Any]:
    return {
        "machines": [[{"job": run.job, "mode": run.mode.value,
                       "segments": [list(seg) for seg in run.segments]}
                      for run in runs] for runs in schedule.machines],
        "revealed": {str(j): p for j, p in sorted(schedule.revealed.items())},
        "makespan": schedule.makespan,
    }


def schedule_from_dict(data: dict[str, Any]) -> Schedule:
    machines = [[Run(int(r["job"]), Mode(r["mode"]),
                     [Segment(float(s), float(e), str(k)) for s, e, k in r["segments"]])
                 for r in runs] for runs in data["machines"]]
    revealed = {int(j): float(p) for j, p in data.get("revealed", {}).items()}
    return Schedule(machines, revealed)


def _processing(rng: np.random.Generator, u: float) -> float:
    # extremes are where the test decision hurts most
    pick = rng.integers(3)
    if pick == 0:
        return 0.0
    if pick == 1:
        return u
    return float(rng.uniform(0.0, u))


def random_uniform(rng: np.random.Generator, m: int, n: int = 10,
                   t_max: float = 1.0, u_max: float = 4.0) -> Instance:
    triples = []
    for _ in range(n):
        t = float(rng.uniform(0.0, t_max))
        u = float(rng.uniform(0.0, u_max))
        triples.append((t, u, _processing(rng, u)))
    return Instance.from_triples(m, triples)


def random_pareto(rng: np.random.Generator, m: int, n: int = 10,
                  t_max: float = 1.0, shape: float = 1.5) -> Instance:
    """Heavy-tailed ratios ``u/t``, including trivial jobs with ratio below 1."""
    triples = []
    for _ in range(n):
        t = float(rng.uniform(0.0, t_max))
        u = t * (0.25 + float(rng.pareto(shape)))
        triples.append((t, u, _processing(rng, u)))
    return Instance.from_triples(m, triples)


def uniform_tests(rng: np.random.Generator, m: int, n: int = 10, u_max: float = 4.0,
                  max_uncertain: int | None = None) -> Instance:
    """Unit test times; ``max_uncertain`` caps the number of jobs with ``u > 1``."""
    if max_uncertain is None:
        us = [float(rng.uniform(0.0, u_max)) for _ in range(n)]
    else:
        k = int(rng.integers(0, min(n, max_uncertain) + 1))
        us = [float(rng.uniform(1.0, u_max)) if i < k else float(rng.uniform(0.0, 1.0))
              for i in range(n)]
        us = [1.0 + 1e-3 if i < k and u <= 1.0 else u for i, u in enumerate(us)]
        rng.shuffle(us)
    return Instance.from_triples(m, [(1.0, u, _processing(rng, u)) for u in us])


RANDOM_GENERATORS: dict[str, Callable[..., Instance]] = {
    "random_uniform": random_uniform,
    "random_pareto": random_pareto,
    "uniform_tests": uniform_tests,
}
GENERATORS = sorted([*RANDOM_GENERATORS, *FAMILIES])


def generate(name: str, m: int, seed: int | Sequence[int] | None = None, **params) -> Instance:
    """Build one instance from a named random generator or lower-bound family."""
    if name in RANDOM_GENERATORS:
        if seed is None:
            raise DomainError(f"generator {name!r} needs a seed")
        rng = np.random.default_rng(seed)
        return RANDOM_GENERATORS[name](rng, m, **params)
    if name in FAMILIES:
        return FAMILIES[name](m, **params)
    raise DomainError(f"unknown generator {name!r}; choose from {', '.join(GENERATORS)}")
