"""Counterexample traces, their AND-trees, and tree interpolation.

A trace is a term over clause identifiers describing which clause was used
at each node of a candidate derivation of `false`.  Expanding a trace into
an AND-tree instantiates each clause with fresh variables, identifying the
head arguments of a child clause with the corresponding body atom arguments
of its parent.  The conjunction of the instantiated constraints is then
satisfiable exactly when the trace corresponds to a real derivation.

For infeasible traces, `tree_interpolants` labels every non-root node with
a constraint over that node's interface variables that overapproximates the
subtree below it while remaining inconsistent with the rest of the tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .chc_ast import Atom, Clause, FreshNames, Program, Var
from .analysis import WitnessTable
from .linalg import (
    FALSE_CONSTRAINT,
    ConstraintSet,
    LinearConstraint,
    entails,
    farkas_refutation,
    is_satisfiable,
)
from .polyhedra import canonical_args


@dataclass(frozen=True)
class TraceTerm:
    """A clause identifier applied to the traces of its body atoms."""

    clause_id: str
    children: Tuple["TraceTerm", ...] = ()

    def __str__(self) -> str:
        if not self.children:
            return self.clause_id
        return f"{self.clause_id}({','.join(str(c) for c in self.children)})"

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def extract_trace(witness: WitnessTable, pred: str = "false") -> TraceTerm:
    """The earliest recorded derivation of `pred` as a trace term.

    Follows each event's children to that predicate's first growth event,
    which happened strictly earlier, so the recursion terminates.
    """
    first = witness.first(pred)
    if first is None:
        raise ValueError(f"no derivation of {pred} was recorded")

    def expand(ev) -> TraceTerm:
        return TraceTerm(
            ev.clause_id,
            tuple(expand(witness.at_step(p, s)) for p, s in ev.children),
        )

    return expand(first)


@dataclass(frozen=True)
class AndNode:
    """One node of an instantiated derivation tree.

    `atom` is the instance being derived (the parent's body atom, or the
    renamed clause head at the root) and `clause` is the defining clause
    with all variables renamed apart, its head identified with `atom`.
    """

    atom: Atom
    clause: Clause
    children: Tuple["AndNode", ...]


def build_and_tree(program: Program, trace: TraceTerm) -> AndNode:
    """Instantiate `trace` over `program` with pairwise fresh variables."""
    fresh = FreshNames(prefix="T")

    def build(term: TraceTerm, target: Optional[Atom]) -> AndNode:
        cl = program.clause(term.clause_id)
        if len(term.children) != len(cl.body):
            raise ValueError(
                f"trace gives {len(term.children)} subtrees for clause "
                f"{cl.id} with {len(cl.body)} body atoms")
        mapping = {v: fresh.fresh() for v in sorted(cl.variables())}
        if target is not None:
            if cl.is_false_head() or cl.head_atom.pred != target.pred:
                raise ValueError(
                    f"clause {cl.id} does not define {target.pred}")
            for formal, actual in zip(cl.head_atom.args, target.args):
                mapping[formal] = actual
        renamed = cl.rename(mapping)
        atom = target if target is not None else renamed.head_atom
        children = tuple(
            build(sub, renamed.body[i])
            for i, sub in enumerate(term.children))
        return AndNode(atom, renamed, children)

    return build(trace, None)


def tr(node: AndNode) -> TraceTerm:
    """The trace term an AND-tree was built from."""
    return TraceTerm(node.clause.id, tuple(tr(c) for c in node.children))


def tree_constraints(node: AndNode) -> ConstraintSet:
    """Conjunction of every instantiated clause constraint in the tree."""
    rows: List[LinearConstraint] = []

    def walk(n: AndNode) -> None:
        rows.extend(n.clause.constraint)
        for c in n.children:
            walk(c)

    walk(node)
    return ConstraintSet.make(rows)


def feasible(node: AndNode) -> bool:
    return is_satisfiable(tree_constraints(node))


def interpolate(c1: ConstraintSet, c2: ConstraintSet,
                shared: Iterable[Var]) -> LinearConstraint:
    """A constraint I with c1 entailing I, I inconsistent with c2, and
    vars(I) contained in `shared`.  Requires c1 & c2 unsatisfiable.

    When c1 is already unsatisfiable on its own the contradiction 0 <= -1
    is the interpolant.  Otherwise the Farkas combination of the c1 rows in
    a refutation of c1 & c2 only mentions variables common to both sides:
    a variable local to c1 must cancel within the c1 rows because it cannot
    be cancelled by any c2 row.
    """
    if not is_satisfiable(c1):
        itp = FALSE_CONSTRAINT
    else:
        itp = farkas_refutation(c1, c2).first_part()
    allowed = frozenset(shared)
    if not itp.variables() <= allowed:
        raise RuntimeError(
            f"interpolant {itp} mentions non-shared variables "
            f"{sorted(itp.variables() - allowed)}")
    if not entails(c1, itp):
        raise RuntimeError(f"interpolant {itp} is not implied by the first part")
    if is_satisfiable(c2.add(itp)):
        raise RuntimeError(f"interpolant {itp} does not refute the second part")
    return itp


@dataclass(frozen=True)
class TreeInterpolant:
    """Interpolants for the non-root nodes of an infeasible AND-tree.

    `facts` pairs each node's atom with its interpolant, in the order the
    nodes were solved (children before parents).
    """

    facts: Tuple[Tuple[Atom, ConstraintSet], ...]

    def by_predicate(self) -> Dict[str, ConstraintSet]:
        """Per-predicate conjunction of all facts, over canonical arguments."""
        pooled: Dict[str, List[LinearConstraint]] = {}
        for atom, cs in self.facts:
            onto = dict(zip(atom.args, canonical_args(len(atom.args))))
            pooled.setdefault(atom.pred, []).extend(cs.rename(onto))
        return {p: ConstraintSet.make(rows) for p, rows in pooled.items()}


def tree_interpolants(tree: AndNode) -> TreeInterpolant:
    """Label every non-root node of an infeasible tree with an interpolant.

    Works over a frontier of constraint sets that always conjoins to an
    unsatisfiable formula: initially the instantiated clause constraints of
    all nodes, then, as each node is solved bottom-up, the node's clause
    and its children's interpolants are replaced by the node's interpolant.
    Each interpolant therefore (a) follows from the subtree below the node
    and (b) contradicts everything outside it, and its variables are the
    node's atom arguments, the only variables the two sides share.
    """
    order: List[AndNode] = []
    kids: List[Tuple[int, ...]] = []

    def walk(n: AndNode) -> int:
        child_idx = tuple(walk(c) for c in n.children)
        order.append(n)
        kids.append(child_idx)
        return len(order) - 1

    root = walk(tree)
    frontier: Dict[int, ConstraintSet] = {
        i: order[i].clause.constraint for i in range(len(order))}
    facts: List[Tuple[Atom, ConstraintSet]] = []
    for i in range(len(order)):
        if i == root:
            continue
        first = ConstraintSet.make(
            [c for j in (i,) + kids[i] for c in frontier[j]])
        rest = ConstraintSet.make(
            [c for j, cs in frontier.items()
             if j != i and j not in kids[i] for c in cs])
        itp = interpolate(first, rest, order[i].atom.args)
        for j in kids[i]:
            del frontier[j]
        frontier[i] = ConstraintSet.make([itp])
        facts.append((order[i].atom, frontier[i]))
    leftover = ConstraintSet.make([c for cs in frontier.values() for c in cs])
    if is_satisfiable(leftover):
        raise RuntimeError("tree interpolation lost the refutation")
    return TreeInterpolant(tuple(facts))
