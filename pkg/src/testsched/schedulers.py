"""Online scheduling algorithms run against a processing-time reveal protocol.

Every scheduler sees ``t`` and ``u`` for all jobs up front.  A job's ``p`` is
obtained from the reveal oracle at the moment the scheduler commits to testing
it, with ``(job, machine, jobs already on that machine, test completion time)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Protocol, Sequence

from .core import (PHI, DomainError, Instance, Job, Mode, ProtocolError, Setting,
                   passes_threshold, threshold_T, threshold_T1)
from .oracle import Layout, OfflineSolver, exact_layout, lpt

TEST = "test"
EXEC = "exec"
TOL = 1e-9


class RevealOracle(Protocol):
    def __call__(self, job: int, machine: int, placed: int, time: float) -> float: ...


class Segment(NamedTuple):
    start: float
    end: float
    kind: str


@dataclass
class Run:
    job: int
    mode: Mode
    segments: list[Segment]

    @property
    def end(self) -> float:
        return max((s.end for s in self.segments), default=0.0)


@dataclass
class Schedule:
    machines: list[list[Run]]
    revealed: dict[int, float] = field(default_factory=dict)

    @property
    def makespan(self) -> float:
        return max((run.end for runs in self.machines for run in runs), default=0.0)

    def modes(self) -> dict[int, Mode]:
        return {run.job: run.mode for runs in self.machines for run in runs}

    def loads(self) -> list[float]:
        return [max((run.end for run in runs), default=0.0) for runs in self.machines]


class SBSPartition(NamedTuple):
    s1: tuple[int, ...]
    b: tuple[int, ...]
    s2: tuple[int, ...]


@dataclass
class Decision:
    job: int
    mode: Mode
    machine: int
    position: int
    phase: str
    start: float = 0.0
    min_load: float = 0.0
    reveal_index: int | None = None


@dataclass
class RunTrace:
    decisions: dict[int, Decision] = field(default_factory=dict)
    reveals: list[tuple[int, float]] = field(default_factory=list)
    last_job: int | None = None
    min_load_before_last: float | None = None
    sets: SBSPartition | None = None
    phase_boundary: float | None = None

    def placement_order(self) -> list[Decision]:
        return sorted(self.decisions.values(), key=lambda d: d.position)


class FixedReveal:
    """Reveals the processing times stored in a fixed instance."""

    def __init__(self, instance: Instance):
        self.instance = instance

    def __call__(self, job: int, machine: int, placed: int, time: float) -> float:
        p = self.instance.jobs[job].processing
        if p is None:
            raise ProtocolError(f"job {job} has a deferred processing time and no adversary")
        return p

    def complete(self, job: int) -> float:
        return self(job, 0, 0, 0.0)


def default_reveal(instance: Instance):
    from .adversary import make_reveal

    return make_reveal(instance)


class _Revealer:
    """Enforces reveal-once and range checks around a raw oracle."""

    def __init__(self, instance: Instance, oracle):
        self.instance = instance
        self.oracle = oracle if oracle is not None else default_reveal(instance)
        self.revealed: dict[int, float] = {}
        self.log: list[tuple[int, float]] = []

    def __call__(self, job: int, machine: int, placed: int, time: float) -> float:
        if job in self.revealed:
            raise ProtocolError(f"job {job} revealed twice")
        p = float(self.oracle(job, machine, placed, time))
        u = self.instance.jobs[job].upper_bound
        if not 0 <= p <= u:
            raise ProtocolError(f"oracle revealed p={p} for job {job}, outside [0, {u}]")
        self.revealed[job] = p
        self.log.append((job, p))
        return p


class _ListBuilder:
    """Non-preemptive schedule built by appending whole jobs to machines."""

    def __init__(self, instance: Instance, reveal):
        self.instance = instance
        self.m = instance.machines
        self.loads = [0.0] * self.m
        self.machines: list[list[Run]] = [[] for _ in range(self.m)]
        self.reveal = _Revealer(instance, reveal)
        self.trace = RunTrace()

    def least_loaded(self) -> int:
        return min(range(self.m), key=self.loads.__getitem__)

    def place(self, job: Job, machine: int, mode: Mode, phase: str) -> None:
        start = self.loads[machine]
        decision = Decision(job.id, mode, machine, len(self.trace.decisions), phase,
                            start=start, min_load=min(self.loads))
        if mode is Mode.TESTED:
            mid = start + job.test_time
            decision.reveal_index = len(self.reveal.log)
            p = self.reveal(job.id, machine, len(self.machines[machine]), mid)
            segments = [Segment(start, mid, TEST), Segment(mid, mid + p, EXEC)]
        else:
            segments = [Segment(start, start + job.upper_bound, EXEC)]
        self.machines[machine].append(Run(job.id, mode, segments))
        self.loads[machine] = segments[-1].end
        self.trace.decisions[job.id] = decision

    def finish(self) -> tuple[Schedule, RunTrace]:
        schedule = Schedule(self.machines, dict(self.reveal.revealed))
        trace = self.trace
        trace.reveals = list(self.reveal.log)
        if trace.decisions:
            ends = {run.job: run.end for runs in self.machines for run in runs}
            last = max(trace.decisions.values(), key=lambda d: (ends[d.job], d.position))
            trace.last_job = last.job
            trace.min_load_before_last = last.min_load
        return schedule, trace


def list_schedule(instance: Instance, plan: Sequence[tuple[int, int, Mode]],
                  reveal: RevealOracle | None = None) -> tuple[Schedule, RunTrace]:
    """Place jobs whole, in plan order, as ``(job, machine, mode)`` triples."""
    builder = _ListBuilder(instance, reveal)
    for j, machine, mode in plan:
        builder.place(instance.jobs[j], machine, Mode(mode), "plan")
    return builder.finish()


def greedy(instance: Instance, reveal: RevealOracle | None = None) -> tuple[Schedule, RunTrace]:
    """List scheduling in input order; test iff ``u/t >= PHI``."""
    builder = _ListBuilder(instance, reveal)
    for job in instance.jobs:
        mode = Mode.TESTED if passes_threshold(job.test_time, job.upper_bound, PHI) else Mode.UNTESTED
        builder.place(job, builder.least_loaded(), mode, "greedy")
    return builder.finish()


def sbs_partition(jobs: Sequence[Job], m: int) -> SBSPartition:
    T = threshold_T(m)
    b = {job.id for job in jobs if passes_threshold(job.test_time, job.upper_bound, T)}
    small = [job for job in jobs if job.id not in b]
    small.sort(key=lambda job: (-job.tau, job.id))
    k = min(m, len(small))
    s1 = sorted(job.id for job in small[:k])
    s2 = sorted(job.id for job in small[k:])
    return SBSPartition(tuple(s1), tuple(sorted(b)), tuple(s2))


def sbs(instance: Instance, reveal: RevealOracle | None = None) -> tuple[Schedule, RunTrace]:
    builder = _ListBuilder(instance, reveal)
    parts = sbs_partition(instance.jobs, instance.machines)
    if len(parts.s1) > instance.machines:
        raise AssertionError("S1 larger than the machine count")
    jobs = instance.jobs
    for machine, j in enumerate(parts.s1):
        job = jobs[j]
        mode = Mode.TESTED if passes_threshold(job.test_time, job.upper_bound, PHI) else Mode.UNTESTED
        builder.place(job, machine, mode, "s1")
    for j in parts.b:
        builder.place(jobs[j], builder.least_loaded(), Mode.TESTED, "b")
    for j in parts.s2:
        builder.place(jobs[j], builder.least_loaded(), Mode.UNTESTED, "s2")
    builder.trace.sets = parts
    return builder.finish()


def _require_uniform(instance: Instance) -> None:
    if not instance.uniform:
        raise DomainError("algorithm requires unit test times for every job")


def uniform_sbs(instance: Instance, reveal: RevealOracle | None = None) -> tuple[Schedule, RunTrace]:
    """Sort by non-increasing ``u``; list-schedule; test iff ``u >= T1(m)``."""
    _require_uniform(instance)
    T1 = threshold_T1(instance.machines)
    builder = _ListBuilder(instance, reveal)
    for job in sorted(instance.jobs, key=lambda job: (-job.upper_bound, job.id)):
        mode = Mode.TESTED if job.upper_bound >= T1 else Mode.UNTESTED
        builder.place(job, builder.least_loaded(), mode, "uniform")
    return builder.finish()


def uncertain_jobs(instance: Instance) -> list[Job]:
    return [job for job in instance.jobs if job.upper_bound > 1]


def small_lambda_eligible(instance: Instance) -> bool:
    return instance.uniform and len(uncertain_jobs(instance)) <= instance.machines


def uniform_small_lambda(instance: Instance, reveal: RevealOracle | None = None,
                         lpt_solver: Callable = lpt) -> tuple[Schedule, RunTrace]:
    """Uncertain jobs alone on their own machines, then copy LPT for the rest.

    Works only with at most ``m`` uncertain jobs (``u > 1``).  Their running
    times are then all at least 1 and everyone else's at most 1, so the
    uncertain jobs are exactly the first ones LPT would place.
    """
    _require_uniform(instance)
    m = instance.machines
    unc = uncertain_jobs(instance)
    if len(unc) > m:
        raise DomainError(f"{len(unc)} uncertain jobs on {m} machines: lambda > 1")
    builder = _ListBuilder(instance, reveal)
    for machine, job in enumerate(unc):
        mode = Mode.TESTED if job.upper_bound >= PHI else Mode.UNTESTED
        builder.place(job, machine, mode, "pinned")

    k = len(unc)
    unc_ids = {job.id for job in unc}
    order = [job.id for job in unc] + [job.id for job in instance.jobs if job.id not in unc_ids]
    pinned_loads = {job.id: builder.loads[machine] for machine, job in enumerate(unc)}
    lengths = [pinned_loads[j] if j in unc_ids else instance.jobs[j].upper_bound for j in order]
    assignment, lpt_makespan = lpt_solver(lengths, m)

    lpt_order = sorted(range(len(lengths)), key=lambda x: (-lengths[x], x))
    if sorted(lpt_order[:k]) != list(range(k)):
        raise AssertionError("uncertain jobs are not the largest in LPT order")
    # LPT machine -> our machine; uncertain job at position i sits on our machine i
    relabel = list(range(m))
    for i in range(k):
        relabel[assignment[i]] = i
    for x in lpt_order[k:]:
        job = instance.jobs[order[x]]
        builder.place(job, relabel[assignment[x]], Mode.UNTESTED, "lpt")
    schedule, trace = builder.finish()
    if abs(schedule.makespan - lpt_makespan) > TOL * max(1.0, lpt_makespan):
        raise AssertionError("copied assignment does not reproduce the LPT makespan")
    return schedule, trace


def _layout_runs(layout: Layout, offset: float, kinds: dict[int, str],
                 modes: dict[int, Mode], machines: list[list[Run]]) -> None:
    for i, pieces in enumerate(layout):
        by_job: dict[int, Run] = {}
        for j, start, end in sorted(pieces, key=lambda piece: piece[1]):
            if end - start <= 0:
                continue
            run = by_job.get(j)
            if run is None:
                run = by_job[j] = Run(j, modes[j], [])
                machines[i].append(run)
            run.segments.append(Segment(offset + start, offset + end, kinds[j]))


def two_phases(instance: Instance, reveal: RevealOracle | None = None,
               off_solver: OfflineSolver = exact_layout) -> tuple[Schedule, RunTrace]:
    """Test everything non-trivial in one offline-optimal block, execute in a second.

    Pass ``mcnaughton_layout`` as ``off_solver`` for the fully preemptive
    setting; the default exact solver yields a test-preemptive schedule.
    """
    m = instance.machines
    jobs = instance.jobs
    revealer = _Revealer(instance, reveal)
    modes = {job.id: Mode.TESTED if job.test_time <= job.upper_bound else Mode.UNTESTED
             for job in jobs}
    first = off_solver([job.tau for job in jobs], m)
    boundary = max((end for pieces in first for _, _, end in pieces), default=0.0)

    # where and when each test completes
    finish: dict[int, tuple[float, int, float]] = {}
    for i, pieces in enumerate(first):
        for j, start, end in pieces:
            if j not in finish or end >= finish[j][0]:
                finish[j] = (end, i, start)
    trace = RunTrace(phase_boundary=boundary)
    tested = [job.id for job in jobs if modes[job.id] is Mode.TESTED]
    tested.sort(key=lambda j: (finish.get(j, (0.0,))[0], j))
    for position, j in enumerate(tested):
        end, machine, start = finish.get(j, (0.0, 0, 0.0))
        placed = len({k for k, s, _ in first[machine] if s < start and k != j}) if j in finish else 0
        revealer(j, machine, placed, end)
        trace.decisions[j] = Decision(j, Mode.TESTED, machine, position, "test",
                                      start=start, reveal_index=position)
    for job in jobs:
        if modes[job.id] is Mode.UNTESTED:
            end, machine, start = finish.get(job.id, (0.0, 0, 0.0))
            trace.decisions[job.id] = Decision(job.id, Mode.UNTESTED, machine,
                                               len(trace.decisions), "trivial", start=start)

    second = off_solver([revealer.revealed.get(job.id, 0.0) for job in jobs], m)
    machines: list[list[Run]] = [[] for _ in range(m)]
    _layout_runs(first, 0.0, {j: TEST if modes[j] is Mode.TESTED else EXEC for j in modes},
                 modes, machines)
    _layout_runs(second, boundary, {j: EXEC for j in modes}, modes, machines)
    # jobs with no positive-length piece still need a run to be scheduled at all
    present = {run.job for runs in machines for run in runs}
    for job in jobs:
        if job.id not in present:
            machine = finish.get(job.id, (0.0, 0, 0.0))[1]
            machines[machine].append(Run(job.id, modes[job.id], [Segment(0.0, 0.0, EXEC)]))
    trace.reveals = list(revealer.log)
    return Schedule(machines, dict(revealer.revealed)), trace


class Violation(NamedTuple):
    kind: str
    job: int | None
    machine: int | None
    detail: str


def _contiguous(segments: list[tuple[int, Segment]]) -> bool:
    """All pieces on one machine and back to back in time."""
    if len({i for i, _ in segments}) > 1:
        return False
    ordered = sorted((s for _, s in segments), key=lambda s: s.start)
    return all(abs(b.start - a.end) <= TOL for a, b in zip(ordered, ordered[1:]))


def validate_schedule(schedule: Schedule, instance: Instance,
                      setting: Setting | str) -> list[Violation]:
    """Check a schedule against the rules of ``setting``; an empty list means valid."""
    setting = Setting(setting)
    out: list[Violation] = []
    if len(schedule.machines) != instance.machines:
        out.append(Violation("machine-count", None, None,
                             f"{len(schedule.machines)} machines, expected {instance.machines}"))

    pieces: dict[int, list[tuple[int, Segment]]] = {}
    modes: dict[int, set[Mode]] = {}
    for i, runs in enumerate(schedule.machines):
        timeline = []
        for run in runs:
            if not 0 <= run.job < instance.n:
                out.append(Violation("unknown-job", run.job, i, "job id not in instance"))
                continue
            modes.setdefault(run.job, set()).add(Mode(run.mode))
            for seg in run.segments:
                if seg.end < seg.start - TOL or seg.start < -TOL:
                    out.append(Violation("negative-segment", run.job, i, f"{seg}"))
                pieces.setdefault(run.job, []).append((i, seg))
                if seg.end - seg.start > TOL:
                    timeline.append((seg.start, seg.end, run.job))
        timeline.sort()
        for (s0, e0, j0), (s1, e1, j1) in zip(timeline, timeline[1:]):
            if s1 < e0 - TOL:
                out.append(Violation("overlap", j1, i,
                                     f"job {j1} starts at {s1} before job {j0} ends at {e0}"))

    for job in instance.jobs:
        j = job.id
        if j not in modes:
            out.append(Violation("missing-job", j, None, "job never scheduled"))
            continue
        if len(modes[j]) > 1:
            out.append(Violation("mode-mismatch", j, None, "runs disagree on tested/untested"))
            continue
        mode = next(iter(modes[j]))
        segs = pieces.get(j, [])
        tests = [(i, s) for i, s in segs if s.kind == TEST]
        execs = [(i, s) for i, s in segs if s.kind == EXEC]
        test_total = sum(s.end - s.start for _, s in tests)
        exec_total = sum(s.end - s.start for _, s in execs)
        if mode is Mode.TESTED:
            p = schedule.revealed.get(j, job.processing)
            if job.processing is not None and j in schedule.revealed \
                    and abs(schedule.revealed[j] - job.processing) > TOL:
                out.append(Violation("reveal-mismatch", j, None,
                                     f"revealed {schedule.revealed[j]} but instance has {job.processing}"))
            if abs(test_total - job.test_time) > TOL:
                out.append(Violation("test-duration", j, None,
                                     f"test runs {test_total}, expected {job.test_time}"))
            if p is None:
                out.append(Violation("unrevealed", j, None, "tested job without a processing time"))
            elif abs(exec_total - p) > TOL:
                out.append(Violation("exec-duration", j, None, f"execution runs {exec_total}, expected {p}"))
            if tests and execs:
                test_end = max(s.end for _, s in tests)
                exec_start = min(s.start for _, s in execs)
                if exec_start < test_end - TOL:
                    out.append(Violation("exec-before-test", j, None,
                                         f"execution starts at {exec_start}, test ends at {test_end}"))
        else:
            if tests:
                out.append(Violation("test-in-untested", j, None, "untested job has test segments"))
            if abs(exec_total - job.upper_bound) > TOL:
                out.append(Violation("exec-duration", j, None,
                                     f"untested job runs {exec_total}, expected {job.upper_bound}"))

        positive = sorted(((i, s) for i, s in segs if s.end - s.start > TOL), key=lambda x: x[1].start)
        for (i0, a), (i1, b) in zip(positive, positive[1:]):
            if i0 != i1 and b.start < a.end - TOL:
                out.append(Violation("parallel-self", j, i1,
                                     f"job runs on machines {i0} and {i1} at once"))

        if setting is Setting.NON_PREEMPTIVE:
            if positive and not _contiguous(positive):
                out.append(Violation("split-job", j, None,
                                     "job is not one uninterrupted block on one machine"))
        elif setting is Setting.TEST_PREEMPTIVE:
            for kind, group in ((TEST, tests), (EXEC, execs)):
                group = [(i, s) for i, s in group if s.end - s.start > TOL]
                if group and not _contiguous(group):
                    out.append(Violation(f"split-{kind}", j, None,
                                         f"{kind} is not one uninterrupted block on one machine"))
    return out
