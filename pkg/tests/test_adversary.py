import pytest
from hypothesis import given, settings, strategies as st

from testsched import Instance, Mode, Setting
from testsched.adversary import (DEFAULT_M, BALANCED_GAME, AdversaryError, GameParams,
                                 PreemptiveAdversary, Thm1Adversary, fully_online_lb2_family,
                                 greedy_tightness_family, m2_game_optimize, m2_game_terms,
                                 m2_game_value, make_reveal, preemptive_adversary,
                                 thm1_family)
from testsched.core import PHI, DomainError, ProtocolError
from testsched.experiment import realize, run_instance
from testsched.oracle import mcnaughton_layout, opt_offline
from testsched.schedulers import greedy, list_schedule, sbs, two_phases, uniform_sbs


def ratio(instance, scheduler, setting=Setting.NON_PREEMPTIVE, **kw):
    reveal = make_reveal(instance)
    schedule, trace = scheduler(instance, reveal, **kw)
    realized = realize(instance, schedule, reveal)
    return schedule.makespan / opt_offline(realized, setting), reveal, schedule


# --- families --------------------------------------------------------------

def test_thm1_family_shape():
    inst = thm1_family(2)
    assert inst.n == 3
    assert all((j.test_time, j.upper_bound, j.processing) == (1, 1e6, None) for j in inst.jobs)
    assert inst.adversary == "thm1"
    assert thm1_family(1).n == 1


def test_greedy_tight_shape():
    inst = greedy_tightness_family(3)
    assert inst.n == 7
    assert [(j.test_time, j.upper_bound, j.processing) for j in inst.jobs[:6]] == [(1, PHI, PHI)] * 6
    f = inst.jobs[6]
    assert (f.test_time, f.upper_bound, f.processing) == (3, 3 * PHI, 3 * PHI)


def test_family_domain():
    with pytest.raises(DomainError):
        thm1_family(0)
    with pytest.raises(DomainError):
        fully_online_lb2_family(1)


@pytest.mark.parametrize("m", range(2, 7))
@pytest.mark.parametrize("scheduler", [greedy, sbs, uniform_sbs], ids=lambda f: f.__name__)
def test_thm1_floor(m, scheduler):
    value, reveal, _ = ratio(thm1_family(m), scheduler)
    assert value >= 2 - 1 / m - 1 / DEFAULT_M
    assert value == pytest.approx(2 - 1 / m, abs=1e-12)
    big = [j for j, p in reveal.state.log if p > 0]
    assert big == [reveal.state.big_job]


def test_thm1_single_machine():
    value, _, _ = ratio(thm1_family(1), greedy)
    assert value >= 1


def test_thm1_punishes_untested():
    m = 3
    inst = thm1_family(m)
    plan = [(j, j % m, Mode.TESTED) for j in range(inst.n - 1)] + [(inst.n - 1, 0, Mode.UNTESTED)]
    reveal = make_reveal(inst)
    schedule, _ = list_schedule(inst, plan, reveal)
    realized = realize(inst, schedule, reveal)
    assert schedule.makespan / opt_offline(realized, Setting.NON_PREEMPTIVE) >= DEFAULT_M / m


def test_adversary_rejects_second_reveal():
    reveal = Thm1Adversary(thm1_family(2))
    reveal(0, 0, 0, 1.0)
    with pytest.raises(ProtocolError):
        reveal(0, 0, 0, 1.0)


@pytest.mark.parametrize("m", range(2, 7))
def test_preemptive_floor(m):
    floor = 2 - 2 / m + 1 / m**2
    inst = preemptive_adversary(m)
    value, reveal, _ = ratio(inst, two_phases, Setting.PREEMPTIVE, off_solver=mcnaughton_layout)
    assert value >= floor - 1 / DEFAULT_M
    value, _, _ = ratio(inst, two_phases, Setting.TEST_PREEMPTIVE)
    assert value >= floor - 1 / DEFAULT_M


def test_preemptive_m5_value():
    value, _, _ = ratio(preemptive_adversary(5), two_phases, Setting.PREEMPTIVE,
                        off_solver=mcnaughton_layout)
    assert value == pytest.approx(1.64, abs=1e-9)


def test_preemptive_asserts_load_bound():
    inst = preemptive_adversary(3)
    reveal = PreemptiveAdversary(inst)
    # a fake scheduler claiming every test finished at time 1
    with pytest.raises(AdversaryError):
        for j in range(inst.n):
            reveal(j, j % 3, 0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.permutations(list(range(7))))
def test_reveals_in_range_and_single_big(m, order):
    inst = thm1_family(m)
    jobs = [j for j in order if j < inst.n] + list(range(7, inst.n))
    plan = [(j, k % m, Mode.TESTED) for k, j in enumerate(jobs)]
    reveal = make_reveal(inst)
    schedule, trace = list_schedule(inst, plan, reveal)
    assert all(0 <= p <= inst.jobs[j].upper_bound for j, p in trace.reveals)
    assert sum(p > 0 for _, p in trace.reveals) <= 1
    again, trace2 = list_schedule(inst, plan, make_reveal(inst))
    assert trace2.reveals == trace.reveals and again == schedule


def test_fully_online_tested_final():
    m = 3
    inst = fully_online_lb2_family(m)
    plan = [(j, j, Mode.UNTESTED) for j in range(m)] + [(m, 0, Mode.TESTED)]
    reveal = make_reveal(inst)
    schedule, _ = list_schedule(inst, plan, reveal)
    opt = opt_offline(realize(inst, schedule, reveal), Setting.NON_PREEMPTIVE)
    assert schedule.makespan == 6 and opt == 3


def test_fully_online_untested_final():
    m = 3
    inst = fully_online_lb2_family(m)
    plan = [(j, j, Mode.UNTESTED) for j in range(m)] + [(m, 1, Mode.UNTESTED)]
    reveal = make_reveal(inst)
    schedule, _ = list_schedule(inst, plan, reveal)
    opt = opt_offline(realize(inst, schedule, reveal), Setting.NON_PREEMPTIVE)
    assert schedule.makespan / opt == 2


def test_fully_online_stacked_prefix():
    prefix = Instance.from_triples(3, [(1.0, 1.0, 1.0)] * 3)
    schedule, _ = list_schedule(prefix, [(0, 0, Mode.UNTESTED), (1, 0, Mode.UNTESTED),
                                         (2, 1, Mode.UNTESTED)])
    assert schedule.makespan / opt_offline(prefix, Setting.NON_PREEMPTIVE) >= 2


def test_fully_online_vs_greedy():
    for m in range(2, 6):
        row = run_instance(fully_online_lb2_family(m), "greedy", Setting.NON_PREEMPTIVE).row
        assert row.ratio == 2


# --- two-machine game ------------------------------------------------------

def test_game_balanced_value():
    assert 2.0943 <= m2_game_value(BALANCED_GAME) <= 2.0963
    assert m2_game_value(BALANCED_GAME) == pytest.approx(2.0953, abs=1e-3)


def test_game_balance_at_optimum():
    terms = m2_game_terms(BALANCED_GAME)[2:]
    assert max(terms) - min(terms) <= 2e-3


def test_game_regression_points():
    # frozen from direct evaluation of the six branch ratios
    assert m2_game_value(GameParams(0, 0, 0, 0)) == 0.0
    assert m2_game_terms(GameParams(0, 0, 0, 0))[:2] == (PHI, PHI)
    assert m2_game_value(GameParams(1, 1, 1, 1)) == 1.0


def test_game_params_domain():
    with pytest.raises(DomainError):
        GameParams(2, 1, 0, 0)
    with pytest.raises(DomainError):
        GameParams(0, 0, -1, 0)


def test_game_optimize():
    start = GameParams(1.0, PHI, PHI**2, 3.8)
    params, value = m2_game_optimize(start, budget=100_000)
    assert 2.095 <= value <= 2.096
    assert value == pytest.approx(m2_game_value(params), abs=0)
    _, from_opt = m2_game_optimize(BALANCED_GAME, budget=10_000)
    assert from_opt >= 2.0953 - 1e-4


def test_game_budget_one():
    start = GameParams(1.0, PHI, PHI**2, 3.8)
    assert m2_game_optimize(start, budget=1) == (start, m2_game_value(start))
    with pytest.raises(DomainError):
        m2_game_optimize(start, budget=0)
