import itertools

import pytest
from hypothesis import strategies as st

from testsched import Instance


def brute_force_makespan(lengths, m):
    """Minimum makespan by trying all m**n assignments."""
    if not lengths:
        return 0.0
    best = float("inf")
    for assignment in itertools.product(range(m), repeat=len(lengths)):
        loads = [0.0] * m
        for x, i in zip(lengths, assignment):
            loads[i] += x
        best = min(best, max(loads))
    return best


sizes = st.one_of(st.just(0.0), st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False))


@st.composite
def job_triples(draw, uniform=False):
    t = 1.0 if uniform else draw(sizes)
    u = draw(sizes)
    p = draw(st.one_of(st.just(0.0), st.just(u), st.floats(0.0, u)))
    return t, u, min(p, u)


@st.composite
def instances(draw, max_n=8, max_m=4, uniform=False):
    m = draw(st.integers(1, max_m))
    triples = draw(st.lists(job_triples(uniform=uniform), min_size=0, max_size=max_n))
    return Instance.from_triples(m, triples)


@pytest.fixture
def brute():
    return brute_force_makespan
