"""Job model, running times, and the closed-form thresholds and bounds.

A job ``j`` has a test time ``t``, an upper bound ``u`` and a hidden processing
time ``p`` with ``0 <= p <= u``.  Running it untested costs ``u``; testing it
costs ``t`` and then ``p`` more.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

PHI = (1.0 + math.sqrt(5.0)) / 2.0
SQRT5 = math.sqrt(5.0)


class DomainError(ValueError):
    """Input outside the domain of a formula or algorithm."""


class ProtocolError(RuntimeError):
    """Misuse of the processing-time reveal protocol."""


class Mode(str, enum.Enum):
    TESTED = "tested"
    UNTESTED = "untested"


class Setting(str, enum.Enum):
    NON_PREEMPTIVE = "non-preemptive"
    TEST_PREEMPTIVE = "test-preemptive"
    PREEMPTIVE = "preemptive"


@dataclass(frozen=True)
class Job:
    """One job; ``processing is None`` means the adversary picks it at reveal time."""

    id: int
    test_time: float
    upper_bound: float
    processing: float | None = None

    def __post_init__(self):
        if not (self.test_time >= 0 and self.upper_bound >= 0):
            raise DomainError(f"job {self.id}: negative test time or upper bound")
        if self.processing is not None and not (0 <= self.processing <= self.upper_bound):
            raise DomainError(
                f"job {self.id}: processing {self.processing} outside [0, {self.upper_bound}]"
            )

    @property
    def deferred(self) -> bool:
        return self.processing is None

    @property
    def tau(self) -> float:
        return tau(self.test_time, self.upper_bound)

    @property
    def ratio(self) -> float:
        return ratio_r(self.test_time, self.upper_bound)

    def rho(self, p: float | None = None) -> float:
        p = self.processing if p is None else p
        if p is None:
            raise DomainError(f"job {self.id}: processing time is deferred")
        return rho(self.test_time, p, self.upper_bound)


@dataclass(frozen=True)
class Instance:
    machines: int
    jobs: tuple[Job, ...] = field(default_factory=tuple)
    adversary: str | None = None

    def __post_init__(self):
        if not (isinstance(self.machines, int) and self.machines >= 1):
            raise DomainError(f"machine count must be a positive integer, got {self.machines!r}")
        object.__setattr__(self, "jobs", tuple(self.jobs))
        for k, job in enumerate(self.jobs):
            if job.id != k:
                raise DomainError(f"job ids must be contiguous from 0; position {k} has id {job.id}")
        if self.adversary is None and any(job.deferred for job in self.jobs):
            raise DomainError("deferred processing times require an adversary")

    @classmethod
    def from_triples(cls, machines: int, triples: Iterable[Sequence[float | None]],
                     adversary: str | None = None) -> Instance:
        """Build from ``(t, u, p)`` triples; ``p`` may be omitted or ``None`` when adaptive."""
        jobs = []
        for k, row in enumerate(triples):
            t, u, *rest = row
            p = rest[0] if rest else None
            jobs.append(Job(k, float(t), float(u), None if p is None else float(p)))
        return cls(machines, tuple(jobs), adversary)

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def adaptive(self) -> bool:
        return self.adversary is not None

    @property
    def uniform(self) -> bool:
        return all(job.test_time == 1 for job in self.jobs)

    def realized(self, processing: dict[int, float]) -> Instance:
        """Fixed copy with deferred processing times filled in from ``processing``."""
        jobs = []
        for job in self.jobs:
            p = processing.get(job.id, job.processing)
            if p is None:
                raise DomainError(f"job {job.id}: no realized processing time")
            jobs.append(replace(job, processing=float(p)))
        return Instance(self.machines, tuple(jobs), None)

    def rhos(self) -> list[float]:
        return [job.rho() for job in self.jobs]


class RunningTimes(NamedTuple):
    rho: float
    tau: float
    alg_time: float


def _check_nonneg(**values: float) -> None:
    for name, v in values.items():
        if not v >= 0:
            raise DomainError(f"{name} must be nonnegative, got {v}")


def rho(t: float, p: float, u: float) -> float:
    """Running time of the job for an omniscient scheduler."""
    _check_nonneg(t=t, p=p, u=u)
    if p > u:
        raise DomainError(f"processing {p} exceeds upper bound {u}")
    return min(t + p, u)


def tau(t: float, u: float) -> float:
    """Running time lower bound that needs no knowledge of ``p``."""
    _check_nonneg(t=t, u=u)
    return min(t, u)


def alg_time(job: Job, mode: Mode, revealed_p: float | None = None) -> float:
    if mode is Mode.UNTESTED:
        return job.upper_bound
    p = job.processing if revealed_p is None else revealed_p
    if p is None:
        raise ProtocolError(f"job {job.id} tested but its processing time was never revealed")
    if not 0 <= p <= job.upper_bound:
        raise DomainError(f"job {job.id}: revealed processing {p} outside [0, {job.upper_bound}]")
    return job.test_time + p


def running_times(job: Job, mode: Mode, revealed_p: float | None = None) -> RunningTimes:
    p = job.processing if revealed_p is None else revealed_p
    return RunningTimes(rho(job.test_time, p, job.upper_bound), job.tau,
                        alg_time(job, mode, p))


def ratio_r(t: float, u: float) -> float:
    """``u / t``, with a free test (``t == 0``) mapped to infinity."""
    _check_nonneg(t=t, u=u)
    if t == 0:
        return math.inf
    return u / t


def passes_threshold(t: float, u: float, alpha: float) -> bool:
    """``ratio_r(t, u) >= alpha`` evaluated as ``u >= alpha * t``.

    The product form keeps exact boundary cases exact, e.g. ``t = m`` with
    ``u = PHI * m``.
    """
    return u >= alpha * t


def prop1_decide(alpha: float, t: float, u: float) -> Mode:
    if not alpha >= 1:
        raise DomainError(f"threshold must be at least 1, got {alpha}")
    _check_nonneg(t=t, u=u)
    return Mode.TESTED if passes_threshold(t, u, alpha) else Mode.UNTESTED


def _check_m(m: float) -> None:
    if not m >= 1:
        raise DomainError(f"machine count must be at least 1, got {m}")


def _sbs_numerator(m: float) -> float:
    disc = (38 + 6 * SQRT5) * m * m - 4 * (11 + SQRT5) * m + 12
    return (3 + SQRT5) * m - 2 + math.sqrt(disc)


def threshold_T(m: float) -> float:
    """Ratio threshold above which SBS tests a job."""
    _check_m(m)
    return _sbs_numerator(m) / (6 * m - 2)


def threshold_T1(m: float) -> float:
    """Upper-bound threshold for Uniform-SBS (unit test times)."""
    _check_m(m)
    return (2 * m - 1 + math.sqrt(16 * m * m - 14 * m + 3)) / (3 * m - 1)


def _list_factor(m: float) -> float:
    return 1.5 - 1 / (2 * m)


def ratio_c(m: float) -> float:
    return threshold_T(m) * _list_factor(m)


def ratio_c1(m: float) -> float:
    return threshold_T1(m) * _list_factor(m)


def bound_greedy(m: float) -> float:
    _check_m(m)
    return PHI * (2 - 1 / m)


def bound_lb_nonpre(m: float) -> float:
    _check_m(m)
    return max(PHI, 2 - 1 / m)


def bound_lb_pre(m: float) -> float:
    _check_m(m)
    return max(PHI, 2 - 2 / m + 1 / m**2)


def bound_uniform_lambda(m: float) -> float:
    _check_m(m)
    return PHI * (4 / 3 - 1 / (3 * m))


def sbs_balance_sides(m: float, T: float | None = None) -> tuple[float, float]:
    """The two competing ratio estimates that ``threshold_T`` equalizes."""
    T = threshold_T(m) if T is None else T
    return PHI + (1 + 1 / T) * (1 - 1 / m), T * _list_factor(m)


def uniform_balance_sides(m: float, T1: float | None = None) -> tuple[float, float]:
    T1 = threshold_T1(m) if T1 is None else T1
    return (1 + 1 / T1) * (2 - 1 / m), T1 * _list_factor(m)


def lower_bound_L(rhos: Iterable[float], m: int) -> float:
    """Average load."""
    _check_m(m)
    return sum(rhos) / m


def lower_bound_max(rhos: Iterable[float]) -> float:
    return max(rhos, default=0.0)


def lower_bound_mm1(rhos: Iterable[float], m: int) -> float:
    """Sum of the m-th and (m+1)-th largest values; missing ranks count as 0."""
    _check_m(m)
    ordered = sorted(rhos, reverse=True)
    ordered += [0.0] * (m + 1 - len(ordered))
    return ordered[m - 1] + ordered[m]
