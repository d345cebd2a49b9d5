"""End-to-end acceptance checks, one test per criterion.

Each test reports a PASS/FAIL line to the terminal.  Run directly with
``python tests/test_acceptance.py`` or as part of the normal pytest run.
"""

import csv
import io
import sys
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from testsched import Setting
from testsched.adversary import (BALANCED_GAME, GameParams, greedy_tightness_family,
                                 m2_game_optimize, m2_game_value, preemptive_adversary,
                                 thm1_family)
from testsched.cli import main
from testsched.core import (PHI, Job, Mode, alg_time, prop1_decide, ratio_c, ratio_c1, rho,
                            sbs_balance_sides, threshold_T, uniform_balance_sides)
from testsched.experiment import SCHEDULERS, run_instance
from testsched.instances import generate
from testsched.oracle import lpt, opt_exact
from testsched.schedulers import (greedy, sbs, small_lambda_eligible, two_phases, uniform_sbs,
                                  uniform_small_lambda, validate_schedule)

from conftest import brute_force_makespan

REFERENCE = {
    "greedy": ["1.6180", "2.4271", "2.6967", "2.8316", "2.9125", "3.0743", "3.2199"],
    "sbs": ["1.6180", "2.3806", "2.6235", "2.7439", "2.8158", "2.9591", "3.0874"],
    "uniform_sbs": ["1.6180", "2.3112", "2.5412", "2.6560", "2.7248", "2.8625", "2.9862"],
    "lb_nonpreemptive": ["1.6180", "1.6180", "1.6667", "1.75", "1.8", "1.9", "1.99"],
}


@pytest.fixture
def report(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    number = int(request.node.name.split("_")[1])

    def emit(ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)
        assert ok, line
    return emit


def test_01_bounds_table(report):
    start = time.perf_counter()
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(["bounds", "--format", "csv"])
    elapsed = time.perf_counter() - start
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    mismatches = [(key, row["m"], row[key], want)
                  for key, values in REFERENCE.items()
                  for row, want in zip(rows, values) if float(row[key]) != float(want)]
    report(code == 0 and not mismatches and len(rows) == 7 and elapsed < 1,
           f"28 table entries, {len(mismatches)} mismatched, {elapsed:.3f}s")


def test_02_asymptotics(report):
    m = 10**6
    values = (ratio_c(m), ratio_c1(m), threshold_T(m))
    targets = (3.1016, 3.0, 2.0678)
    ok = all(abs(v - t) <= 1e-3 for v, t in zip(values, targets))
    report(ok, "c, c1, T at 1e6 machines = " + ", ".join(f"{v:.5f}" for v in values))


def test_03_greedy_tightness(report):
    gaps = []
    for m in range(2, 7):
        inst = greedy_tightness_family(m)
        schedule, _ = greedy(inst)
        ratio = schedule.makespan / opt_exact([rho_of(j) for j in inst.jobs], m)
        gaps.append(abs(ratio - PHI * (2 - 1 / m)))
    report(max(gaps) <= 1e-9, f"max |ratio - phi(2-1/m)| = {max(gaps):.2e} over m=2..6")


def rho_of(job):
    return rho(job.test_time, job.processing, job.upper_bound)


def test_04_adversary_floors(report):
    worst = np.inf
    for m in range(2, 7):
        for name in ("greedy", "sbs", "uniform_sbs"):
            row = run_instance(thm1_family(m, 1e6), name, Setting.NON_PREEMPTIVE).row
            worst = min(worst, row.ratio - (2 - 1 / m))
        for setting in (Setting.TEST_PREEMPTIVE, Setting.PREEMPTIVE):
            row = run_instance(preemptive_adversary(m, 1e6), "two_phases", setting).row
            worst = min(worst, row.ratio - (2 - 2 / m + 1 / m**2))
    report(worst >= -1e-5, f"smallest margin over the floor = {worst:.2e}")


def _random_instance(rng, k):
    m = int(rng.integers(1, 5))
    n = int(rng.integers(1, 13))
    seed = [int(x) for x in rng.integers(0, 2**32, 2)]
    kind = k % 4
    if kind == 0:
        return generate("random_uniform", m, seed=seed, n=n)
    if kind == 1:
        return generate("random_pareto", m, seed=seed, n=n)
    if kind == 2:
        return generate("uniform_tests", m, seed=seed, n=n)
    return generate("uniform_tests", m, seed=seed, n=n, max_uncertain=m)


def test_05_bound_suite(report):
    rng = np.random.default_rng(20240605)
    start = time.perf_counter()
    checked = violations = 0
    runs = dict.fromkeys(SCHEDULERS, 0)
    for k in range(10_000):
        inst = _random_instance(rng, k)
        for name, spec in SCHEDULERS.items():
            if not spec.eligible(inst):
                continue
            for setting in spec.settings:
                row = run_instance(inst, name, setting, k).row
                runs[name] += 1
                violations += not row.ok
        checked += 1
    elapsed = time.perf_counter() - start
    detail = ", ".join(f"{name} {count}" for name, count in runs.items())
    report(checked >= 10_000 and violations == 0 and all(runs.values()) and elapsed < 300,
           f"{checked} instances, {violations} violations ({detail}), {elapsed:.1f}s")


def test_06_oracle_equivalence(report):
    rng = np.random.default_rng(6)
    mismatches = lpt_failures = 0
    for _ in range(1000):
        m = int(rng.integers(1, 4))
        lengths = [float(x) for x in rng.uniform(0, 10, int(rng.integers(0, 9)))]
        opt = opt_exact(lengths, m)
        mismatches += abs(opt - brute_force_makespan(lengths, m)) > 1e-9
        lpt_failures += lpt(lengths, m)[1] > (4 / 3 - 1 / (3 * m)) * opt + 1e-9
    report(mismatches == 0 and lpt_failures == 0,
           f"1000 instances, {mismatches} oracle mismatches, {lpt_failures} LPT bound failures")


def test_07_threshold_rule(report):
    rng = np.random.default_rng(7)
    failures = 0
    for _ in range(100_000):
        alpha = float(rng.uniform(1, 5))
        t = float(rng.uniform(0, 3))
        u = float(rng.uniform(0, 10))
        p = float(rng.choice([0.0, u, rng.uniform(0, u)]))
        mode = prop1_decide(alpha, t, u)
        length = alg_time(Job(0, t, u, p), mode, p)
        r = rho(t, p, u)
        limit = (1 + 1 / alpha) * r if mode is Mode.TESTED else alpha * r
        failures += length > limit * (1 + 1e-12)
    report(failures == 0, f"100000 random jobs, {failures} failures")


def test_08_threshold_balance(report):
    worst = 0.0
    for m in np.random.default_rng(8).uniform(1, 1e4, 1000):
        for sides in (sbs_balance_sides, uniform_balance_sides):
            left, right = sides(float(m))
            worst = max(worst, abs(left - right))
    report(worst <= 1e-9, f"max imbalance over 1000 machine counts = {worst:.2e}")


def test_09_game(report):
    start = time.perf_counter()
    value = m2_game_value(BALANCED_GAME)
    _, best = m2_game_optimize(GameParams(1.0, PHI, PHI**2, 3.8), budget=100_000)
    elapsed = time.perf_counter() - start
    report(2.0943 <= value <= 2.0963 and best >= 2.095 and elapsed < 10,
           f"value {value:.6f}, optimized {best:.6f}, {elapsed:.2f}s")


def test_10_validator(report):
    from test_schedulers import (test_validator_exec_before_test, test_validator_overlap,
                                 test_validator_split_nonpreemptive)

    rng = np.random.default_rng(10)
    bad = 0
    for k in range(500):
        inst = _random_instance(rng, k)
        runs = [(greedy(inst)[0], Setting.NON_PREEMPTIVE), (sbs(inst)[0], Setting.NON_PREEMPTIVE),
                (two_phases(inst)[0], Setting.TEST_PREEMPTIVE)]
        for setting in (Setting.TEST_PREEMPTIVE, Setting.PREEMPTIVE):
            runs.append((run_instance(inst, "two_phases", setting).schedule, setting))
        if inst.uniform:
            runs.append((uniform_sbs(inst)[0], Setting.NON_PREEMPTIVE))
            if small_lambda_eligible(inst):
                runs.append((uniform_small_lambda(inst)[0], Setting.NON_PREEMPTIVE))
        bad += sum(bool(validate_schedule(s, inst, setting)) for s, setting in runs)
    crafted = 0
    for check in (test_validator_overlap, test_validator_exec_before_test,
                  test_validator_split_nonpreemptive):
        try:
            check()
            crafted += 1
        except AssertionError:
            pass
    report(bad == 0 and crafted == 3,
           f"{bad} invalid emitted schedules, {crafted}/3 crafted violations named")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
