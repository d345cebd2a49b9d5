"""Offline makespan solvers used as ground truth and as the OFF subroutine."""

from __future__ import annotations

import os
from typing import Callable, Sequence

from .core import (DomainError, Instance, Setting, lower_bound_L, lower_bound_max,
                   lower_bound_mm1)

DEFAULT_CAP = 24
EPS = 1e-12

# (job index, start, end) pieces per machine, in phase-local time
Layout = list[list[tuple[int, float, float]]]
OfflineSolver = Callable[[Sequence[float], int], Layout]


class CapacityError(RuntimeError):
    """Too many jobs for the exact solver."""


def oracle_cap() -> int:
    return int(os.environ.get("TESTSCHED_ORACLE_CAP", DEFAULT_CAP))


def _check(lengths: Sequence[float], m: int) -> None:
    if m < 1:
        raise DomainError(f"machine count must be at least 1, got {m}")
    for x in lengths:
        if not x >= 0:
            raise DomainError(f"lengths must be nonnegative, got {x}")


def pigeonhole_bound(lengths: Sequence[float], m: int) -> float:
    """Among the ``k*m + 1`` largest jobs some machine gets ``k + 1``; best over ``k``."""
    ordered = sorted(lengths, reverse=True)
    best = 0.0
    for k in range(1, (len(ordered) - 1) // m + 1):
        best = max(best, sum(ordered[k * m - k:k * m + 1]))
    return best


def opt_lower_bound(lengths: Sequence[float], m: int) -> float:
    return max(lower_bound_L(lengths, m), lower_bound_max(lengths),
               lower_bound_mm1(lengths, m), pigeonhole_bound(lengths, m))


def lpt(lengths: Sequence[float], m: int) -> tuple[list[int], float]:
    """Longest-processing-time-first list scheduling.

    Ties in length go to the lower index, ties in load to the lower machine.
    """
    _check(lengths, m)
    order = sorted(range(len(lengths)), key=lambda j: (-lengths[j], j))
    loads = [0.0] * m
    assignment = [0] * len(lengths)
    for j in order:
        i = min(range(m), key=loads.__getitem__)
        assignment[j] = i
        loads[i] += lengths[j]
    return assignment, max(loads, default=0.0)


def opt_assignment(lengths: Sequence[float], m: int,
                   cap: int | None = None) -> tuple[list[int], float]:
    """Exact minimum-makespan assignment by depth-first branch and bound.

    The job cap applies only when search is needed: an LPT schedule that meets
    the lower bound is returned as optimal for any number of jobs.
    """
    _check(lengths, m)
    cap = oracle_cap() if cap is None else cap
    n = len(lengths)
    if n == 0:
        return [], 0.0

    best_assignment, best = lpt(lengths, m)
    bound = opt_lower_bound(lengths, m)
    slack = EPS * max(1.0, bound)
    if best <= bound + slack or n <= m:
        return best_assignment, best
    if n > cap:
        raise CapacityError(f"{n} jobs exceed the exact solver cap of {cap}")

    order = sorted(range(n), key=lambda j: (-lengths[j], j))
    sizes = [lengths[j] for j in order]
    loads = [0.0] * m
    current = [0] * n
    found: list[int] | None = None

    def dfs(k: int, top: float) -> bool:
        nonlocal best, found
        if k == n:
            best, found = top, current.copy()
            return best <= bound + slack
        x = sizes[k]
        seen = set()
        for i in range(m):
            load = loads[i]
            if load in seen:
                continue
            seen.add(load)
            new = load + x
            if new >= best - slack:
                continue
            loads[i] = new
            current[k] = i
            done = dfs(k + 1, max(top, new))
            loads[i] = load
            if done:
                return True
        return False

    dfs(0, 0.0)
    if found is not None:
        for k, j in enumerate(order):
            best_assignment[j] = found[k]
    return best_assignment, best


def opt_exact(lengths: Sequence[float], m: int, cap: int | None = None) -> float:
    return opt_assignment(lengths, m, cap)[1]


def mcnaughton(lengths: Sequence[float], m: int) -> float:
    """Preemptive optimum."""
    _check(lengths, m)
    return max(lower_bound_max(lengths), lower_bound_L(lengths, m))


def mcnaughton_layout(lengths: Sequence[float], m: int) -> Layout:
    """Wrap-around rule: fill machines in turn up to the preemptive optimum."""
    horizon = mcnaughton(lengths, m)
    layout: Layout = [[] for _ in range(m)]
    machine, clock = 0, 0.0
    for j, x in enumerate(lengths):
        remaining = x
        while remaining > EPS:
            if horizon - clock <= EPS:
                machine, clock = machine + 1, 0.0
            piece = min(remaining, horizon - clock)
            if machine == m - 1 or remaining - piece <= EPS:
                piece = remaining
            layout[machine].append((j, clock, clock + piece))
            clock += piece
            remaining -= piece
    return layout


def assignment_layout(lengths: Sequence[float], assignment: Sequence[int], m: int) -> Layout:
    """Stack jobs back to back per machine, in index order."""
    layout: Layout = [[] for _ in range(m)]
    clocks = [0.0] * m
    for j, x in enumerate(lengths):
        i = assignment[j]
        layout[i].append((j, clocks[i], clocks[i] + x))
        clocks[i] += x
    return layout


def exact_layout(lengths: Sequence[float], m: int) -> Layout:
    assignment, _ = opt_assignment(lengths, m)
    return assignment_layout(lengths, assignment, m)


def opt_offline(instance: Instance, setting: Setting | str) -> float:
    """Optimal makespan for an instance whose processing times are all known.

    For the test-preemptive setting this is the non-preemptive optimum of the
    offline running times, which is an upper bound on the true optimum; see
    ``lower_bound_test_preemptive`` for the matching lower bound.
    """
    if any(job.deferred for job in instance.jobs):
        raise DomainError("optimum needs concrete processing times")
    rhos = instance.rhos()
    if Setting(setting) is Setting.PREEMPTIVE:
        return mcnaughton(rhos, instance.machines)
    return opt_exact(rhos, instance.machines)


def lower_bound_test_preemptive(instance: Instance) -> float:
    """Lower bound on the test-preemptive optimum.

    Any test-preemptive schedule keeps every job in one block of length at
    least ``tau`` (its test, or its whole untested run) and in one block of
    length at least ``p`` (its execution, or its untested run of ``u >= p``).
    Dropping everything else leaves non-preemptive schedules of those lengths.
    """
    if any(job.deferred for job in instance.jobs):
        raise DomainError("bound needs concrete processing times")
    m = instance.machines
    return max(mcnaughton(instance.rhos(), m),
               opt_exact([job.tau for job in instance.jobs], m),
               opt_exact([job.processing for job in instance.jobs], m))
