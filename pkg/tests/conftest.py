"""Shared test fixtures: random program generation and the property suites.

The six property suites are session-scoped fixtures so that the per-module
tests and the acceptance tests share one run.  Each suite raises on the
first violated law, naming the failing case seed.
"""

import random
from typing import Dict, List, Sequence

import pytest

from chcverify.chc_ast import FALSE, Atom, Clause, Program
from chcverify.linalg import EQ, LE, LT, ConstraintSet, LinearConstraint, rat

CLAUSE_VARS = ("X", "Y", "Z")
PRED_NAMES = ("p", "q", "r")


def random_constraint(rng: random.Random, pool: Sequence[str],
                      max_coeff: int = 3, max_bound: int = 4) -> LinearConstraint:
    coeffs = {}
    for v in pool:
        if rng.random() < 0.7:
            c = rng.randint(-max_coeff, max_coeff)
            if c:
                coeffs[v] = rat(c)
    rel = rng.choice((LE, LE, LT, EQ))
    return LinearConstraint.make(coeffs, rel, rat(rng.randint(-max_bound, max_bound)))


def random_constraint_set(rng: random.Random, pool: Sequence[str],
                          n: int = None) -> ConstraintSet:
    n = rng.randint(1, 4) if n is None else n
    return ConstraintSet.make([random_constraint(rng, pool) for _ in range(n)])


def random_program(rng: random.Random, max_clauses: int = 6,
                   ensure_false: bool = True) -> Program:
    """A small random program: <= 3 predicates of arity <= 2, <= 3 variables
    per clause, body length <= 2, ids c1..cN."""
    arity: Dict[str, int] = {
        PRED_NAMES[i]: rng.randint(1, 2) for i in range(rng.randint(1, 3))}
    preds = sorted(arity)
    pool = list(CLAUSE_VARS)
    clauses: List[Clause] = []
    n = rng.randint(2, max_clauses)
    for i in range(n):
        if rng.random() < 0.3:
            head = FALSE
        else:
            p = rng.choice(preds)
            head = Atom(p, tuple(pool[:arity[p]]))
        body = []
        for _ in range(rng.choices((0, 1, 2), weights=(5, 4, 2))[0]):
            bp = rng.choice(preds)
            body.append(Atom(bp, tuple(rng.sample(pool, arity[bp]))))
        rows = [random_constraint(rng, pool)
                for _ in range(rng.randint(0, 3))]
        if rng.random() < 0.5:
            a, b = rng.sample(pool, 2)
            rows.append(LinearConstraint.make(
                {a: rat(1), b: rat(-1)}, EQ, rat(rng.randint(-2, 2))))
        clauses.append(Clause(f"c{i + 1}", head,
                              ConstraintSet.make(rows), tuple(body)))
    if ensure_false and not any(cl.is_false_head() for cl in clauses):
        p = rng.choice(preds)
        atom = Atom(p, tuple(pool[:arity[p]]))
        clauses.append(Clause(f"c{n + 1}", FALSE,
                              ConstraintSet.make(
                                  [random_constraint(rng, atom.args)]),
                              (atom,)))
    return Program(tuple(clauses))


@pytest.fixture(scope="session")
def suite_a_report():
    import suites
    return suites.run_suite_a()


@pytest.fixture(scope="session")
def suite_b_report():
    import suites
    return suites.run_suite_b()


@pytest.fixture(scope="session")
def suite_c_report():
    import suites
    return suites.run_suite_c()


@pytest.fixture(scope="session")
def suite_d_report():
    import suites
    return suites.run_suite_d()


@pytest.fixture(scope="session")
def suite_e_report():
    import suites
    return suites.run_suite_e()


@pytest.fixture(scope="session")
def suite_f_report():
    import suites
    return suites.run_suite_f()
