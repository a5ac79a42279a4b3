"""Bounded ground-truth derivations by exhaustive tree enumeration.

The verifier's answers can be checked against this module on small inputs:
`bounded_derive` enumerates every AND-tree of bounded height whose
instantiated constraints are satisfiable, independently of the abstract
analysis.  It is deliberately naive; the fan-out cap turns pathological
inputs into a loud failure instead of an endless enumeration.
"""

from __future__ import annotations

import itertools
from typing import Dict, List, Set, Tuple

from .cex import TraceTerm
from .chc_ast import Atom, Program
from .linalg import ConstraintSet, is_satisfiable, project, simplify
from .polyhedra import canonical_args

FAN_OUT_LIMIT = 10_000


def bounded_derive(program: Program, goal: Atom, depth: int
                   ) -> Set[Tuple[TraceTerm, ConstraintSet]]:
    """All derivations of `goal` of height at most `depth`.

    Returns pairs of the derivation's trace and its answer constraint,
    projected onto the goal predicate's arguments and renamed to the
    canonical argument tuple.  Only satisfiable derivations are kept, so
    `goal` is derivable within `depth` steps exactly when the result is
    non-empty.  Raises RuntimeError rather than silently truncating when
    more than FAN_OUT_LIMIT trees would be produced.
    """
    memo: Dict[Tuple[str, int], Tuple[Tuple[TraceTerm, ConstraintSet], ...]] = {}
    produced = 0

    def derive(pred: str, d: int) -> Tuple[Tuple[TraceTerm, ConstraintSet], ...]:
        nonlocal produced
        if d <= 0:
            return ()
        key = (pred, d)
        if key in memo:
            return memo[key]
        out: List[Tuple[TraceTerm, ConstraintSet]] = []
        for cl in program.clauses_for(pred):
            options = [derive(b.pred, d - 1) for b in cl.body]
            for combo in itertools.product(*options):
                rows = list(cl.constraint)
                for b, (_, answer) in zip(cl.body, combo):
                    onto = dict(zip(canonical_args(len(b.args)), b.args))
                    rows.extend(answer.rename(onto))
                full = ConstraintSet.make(rows)
                if not is_satisfiable(full):
                    continue
                head_args = cl.head_atom.args
                answer = simplify(project(full, head_args)).rename(
                    dict(zip(head_args, canonical_args(len(head_args)))))
                produced += 1
                if produced > FAN_OUT_LIMIT:
                    raise RuntimeError(
                        f"more than {FAN_OUT_LIMIT} derivations of height "
                        f"<= {depth}; narrow the query")
                out.append((TraceTerm(cl.id, tuple(t for t, _ in combo)),
                            answer))
        memo[key] = tuple(out)
        return memo[key]

    return set(derive(goal.pred, depth))
