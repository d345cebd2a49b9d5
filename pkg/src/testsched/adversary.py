"""Adaptive adversaries, lower-bound instance families, and the two-machine game."""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import PHI, DomainError, Instance, Job, ProtocolError
from .schedulers import FixedReveal

DEFAULT_M = 1e6
TIME_SLACK = 1e-9


class AdversaryError(RuntimeError):
    """An adversary reached a state its construction rules out."""


@dataclass
class AdversaryState:
    big_job: int | None = None
    placed: dict[int, int] = field(default_factory=dict)
    log: list[tuple[int, float]] = field(default_factory=list)

    @property
    def big_job_assigned(self) -> bool:
        return self.big_job is not None


class Adversary:
    """Base reveal oracle: fixed values pass through, deferred ones are chosen."""

    name = ""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.state = AdversaryState()
        self._revealed: set[int] = set()

    def choose(self, job: Job, machine: int, placed: int, time: float) -> float:
        raise NotImplementedError

    def __call__(self, job: int, machine: int, placed: int, time: float) -> float:
        if job in self._revealed:
            raise ProtocolError(f"adversary asked twice for job {job}")
        self._revealed.add(job)
        spec = self.instance.jobs[job]
        p = spec.processing if spec.processing is not None else self.choose(spec, machine, placed, time)
        self.state.placed[machine] = self.state.placed.get(machine, 0) + 1
        self.state.log.append((job, p))
        return p

    def complete(self, job: int) -> float:
        """Processing time of a job the scheduler never tested."""
        p = self.instance.jobs[job].processing
        return 0.0 if p is None else p


class Thm1Adversary(Adversary):
    """Makes the first job landing on a machine with ``m - 1`` earlier jobs the big one."""

    name = "thm1"

    def choose(self, job, machine, placed, time):
        m = self.instance.machines
        if placed >= m - 1 and not self.state.big_job_assigned:
            self.state.big_job = job.id
            return float(m - 1)
        return 0.0


class PreemptiveAdversary(Adversary):
    """Makes the first test finishing at or after ``m - 1 + 1/m`` the big job."""

    name = "preemptive_lb"

    def choose(self, job, machine, placed, time):
        m = self.instance.machines
        threshold = m - 1 + 1 / m
        if time >= threshold - TIME_SLACK and not self.state.big_job_assigned:
            self.state.big_job = job.id
            return float(m - 1)
        if len(self._revealed) == self.instance.n and not self.state.big_job_assigned:
            raise AdversaryError(
                f"every test finished before {threshold}, impossible with average load {threshold}"
            )
        return 0.0


class FullyOnlineAdversary(Adversary):
    """Sets the final job to its upper bound whenever it is tested."""

    name = "fully_online_lb2"

    def choose(self, job, machine, placed, time):
        return job.upper_bound


ADVERSARIES: dict[str, type[Adversary]] = {
    cls.name: cls for cls in (Thm1Adversary, PreemptiveAdversary, FullyOnlineAdversary)
}


def make_reveal(instance: Instance):
    if instance.adversary is None:
        return FixedReveal(instance)
    try:
        return ADVERSARIES[instance.adversary](instance)
    except KeyError:
        raise DomainError(f"unknown adversary {instance.adversary!r}") from None


def _check_m(m: int, least: int = 1) -> None:
    if not (isinstance(m, int) and m >= least):
        raise DomainError(f"family needs an integer m >= {least}, got {m!r}")


def thm1_family(m: int, M: float = DEFAULT_M) -> Instance:
    """``m(m-1) + 1`` jobs with unit tests and huge upper bounds."""
    _check_m(m)
    return Instance.from_triples(m, [(1.0, M, None)] * (m * (m - 1) + 1), adversary="thm1")


def preemptive_adversary(m: int, M: float = DEFAULT_M) -> Instance:
    _check_m(m)
    return Instance.from_triples(m, [(1.0, M, None)] * (m * (m - 1) + 1),
                                 adversary="preemptive_lb")


def greedy_tightness_family(m: int) -> Instance:
    """Small golden-ratio jobs followed by one big job; Greedy meets its bound exactly."""
    _check_m(m)
    small = [(1.0, PHI, PHI)] * (m * (m - 1))
    return Instance.from_triples(m, small + [(float(m), PHI * m, PHI * m)])


def fully_online_lb2_family(m: int) -> Instance:
    _check_m(m, least=2)
    return Instance.from_triples(m, [(1.0, 1.0, 1.0)] * m + [(2.0, 3.0, None)],
                                 adversary="fully_online_lb2")


FAMILIES = {
    "thm1": thm1_family,
    "preemptive_lb": preemptive_adversary,
    "greedy_tight": greedy_tightness_family,
    "fully_online_lb2": fully_online_lb2_family,
}


@dataclass(frozen=True)
class GameParams:
    """Test time and upper bound of the second (b, c) and third (d, e) job."""

    b: float
    c: float
    d: float
    e: float

    def __post_init__(self):
        if not (0 <= self.b <= self.c and 0 <= self.d <= self.e):
            raise DomainError(f"need 0 <= b <= c and 0 <= d <= e, got {self}")

    def astuple(self) -> tuple[float, float, float, float]:
        return self.b, self.c, self.d, self.e


BALANCED_GAME = GameParams(1.0, PHI, PHI**2, 3.8675)


def m2_game_terms(params: GameParams) -> tuple[float, ...]:
    """Ratios forced on each branch of the algorithm's decisions, two machines.

    The first two concern stacking jobs 1 and 2 (job 2 tested / untested);
    the other four follow a flat first round, for each test decision on jobs
    2 and 3.
    """
    b, c, d, e = params.astuple()
    return (
        (PHI + b + c) / max(1, c),
        (PHI + c) / max(1, b),
        (min(PHI, b + c) + d + e) / max(1 + c, e),
        (min(PHI, b + c) + e) / max(1 + c, d),
        (min(PHI, c) + d + e) / max(1 + b, e),
        (min(PHI, c) + e) / max(1 + b, d),
    )


def m2_game_value(params: GameParams) -> float:
    return min(m2_game_terms(params))


def _feasible(x: list[float]) -> bool:
    b, c, d, e = x
    return 0 <= b <= c and 0 <= d <= e


def m2_game_optimize(start: GameParams, budget: int = 100_000, step: float = 0.1,
                     shrink: float = 0.5, min_step: float = 1e-6) -> tuple[GameParams, float]:
    """Compass search maximizing the game value; ``budget`` counts evaluations."""
    if budget < 1:
        raise DomainError("budget must be at least 1")
    x = list(start.astuple())
    best = m2_game_value(start)
    evals = 1
    while step >= min_step and evals < budget:
        improved = False
        for i in range(4):
            for sign in (1.0, -1.0):
                if evals >= budget:
                    break
                y = x.copy()
                y[i] += sign * step
                if not _feasible(y):
                    continue
                value = m2_game_value(GameParams(*y))
                evals += 1
                if value > best:
                    x, best, improved = y, value, True
                    break
        if not improved:
            step *= shrink
    return GameParams(*x), best
