"""Convex polyhedra over named rational variables.

A `Polyhedron` is a satisfiable constraint set over a fixed variable tuple
(its space), or bottom. Polyhedra support the not-necessarily-closed
operations needed by the analysis: meet, inclusion, convex hull and widening.

The hull of two polyhedra is computed with the standard mixing encoding
(lambda-scaled copies of each operand, summed and projected). The encoding
itself works on topological closures; a post-pass re-strengthens a resulting
inequality to strict whenever both operands entail the strict form, which is
sound because a convex combination of two points satisfying a strict
inequality satisfies it too. The result therefore contains the union and is
exact on closed operands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from .linalg import (EQ, LE, ConstraintSet, FALSE_SET, LinearConstraint,
                     Rat, entails, entails_all, is_satisfiable, project, rat,
                     simplify)

__all__ = [
    "Polyhedron",
    "ThresholdSet",
    "canonical_args",
]

_LETTERS = tuple(chr(ord("A") + i) for i in range(26))


def _split_equalities(cs: ConstraintSet) -> Tuple[LinearConstraint, ...]:
    rows = []
    for c in cs:
        if c.rel == EQ:
            rows.extend(c.split_equality())
        else:
            rows.append(c)
    return tuple(rows)


def canonical_args(n: int) -> Tuple[str, ...]:
    """Canonical argument names for an n-ary predicate: A..Z, then V27, V28, ..."""
    return tuple(_LETTERS[i] if i < 26 else f"V{i + 1}" for i in range(n))


@dataclass(frozen=True)
class Polyhedron:
    """A polyhedron over `space`; `constraints is None` encodes bottom."""

    space: Tuple[str, ...]
    constraints: Optional[ConstraintSet]

    def __post_init__(self) -> None:
        if self.constraints is not None:
            extra = self.constraints.variables() - set(self.space)
            if extra:
                raise ValueError(f"constraints mention {sorted(extra)} outside space")

    @classmethod
    def bottom(cls, space: Sequence[str]) -> "Polyhedron":
        return cls(tuple(space), None)

    @classmethod
    def top(cls, space: Sequence[str]) -> "Polyhedron":
        return cls(tuple(space), ConstraintSet.make(()))

    @classmethod
    def of(cls, space: Sequence[str], cs: ConstraintSet) -> "Polyhedron":
        cs = simplify(cs)
        if cs is FALSE_SET or cs.has_trivially_false() or not is_satisfiable(cs):
            return cls.bottom(space)
        return cls(tuple(space), cs)

    @property
    def is_bottom(self) -> bool:
        return self.constraints is None

    @property
    def is_top(self) -> bool:
        return self.constraints is not None and not self.constraints.constraints

    def meet(self, other: "Polyhedron") -> "Polyhedron":
        if self.space != other.space:
            raise ValueError("meet of polyhedra over different spaces")
        if self.is_bottom or other.is_bottom:
            return Polyhedron.bottom(self.space)
        return Polyhedron.of(self.space, self.constraints & other.constraints)

    def leq(self, other: "Polyhedron") -> bool:
        """Inclusion: every point of self lies in other."""
        if self.is_bottom:
            return True
        if other.is_bottom:
            return False
        return entails_all(self.constraints, other.constraints)

    def rename_space(self, new_space: Sequence[str]) -> "Polyhedron":
        new_space = tuple(new_space)
        if len(new_space) != len(self.space):
            raise ValueError("space arity mismatch")
        if self.is_bottom:
            return Polyhedron.bottom(new_space)
        mapping = dict(zip(self.space, new_space))
        return Polyhedron(new_space, self.constraints.rename(mapping))

    def hull(self, other: "Polyhedron") -> "Polyhedron":
        if self.space != other.space:
            raise ValueError("hull of polyhedra over different spaces")
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        if self.leq(other):
            return other
        if other.leq(self):
            return self
        space = self.space
        rows = []
        lams = ("$lam1", "$lam2")
        copies = ({v: f"$h1{v}" for v in space}, {v: f"$h2{v}" for v in space})
        for cs, lam, copy in ((self.constraints, lams[0], copies[0]),
                              (other.constraints, lams[1], copies[1])):
            for c in cs.closure():
                coeffs: Dict[str, Rat] = {copy[v]: k for v, k in c.coeffs}
                coeffs[lam] = coeffs.get(lam, rat(0)) - c.bound
                rows.append(LinearConstraint.make(coeffs, c.rel, 0))
        rows.append(LinearConstraint.make({lams[0]: rat(1), lams[1]: rat(1)}, EQ, 1))
        rows.append(LinearConstraint.make({lams[0]: rat(-1)}, LE, 0))
        rows.append(LinearConstraint.make({lams[1]: rat(-1)}, LE, 0))
        for v in space:
            rows.append(LinearConstraint.make(
                {v: rat(1), copies[0][v]: rat(-1), copies[1][v]: rat(-1)}, EQ, 0))
        projected = project(ConstraintSet.make(rows), space)
        out = []
        for c in projected:
            if c.rel == LE:
                s = c.strict()
                if entails(self.constraints, s) and entails(other.constraints, s):
                    c = s
            out.append(c)
        return Polyhedron.of(space, ConstraintSet.make(out))

    def widen(self, other: "Polyhedron") -> "Polyhedron":
        """Halbwachs widening: drop the bounds of self that other has outgrown.

        Keeps (a) every constraint of self that other still entails and
        (b) every constraint of other that is mutually redundant with self,
        i.e. can replace one of self's constraints without changing self.
        Part (b) makes the result independent of which of several equivalent
        representations self happens to carry (a point written as I=0, A=0,
        B=0 keeps an implied relation like A+B=3I if other entails it), which
        plain constraint filtering loses. Equalities are split into their
        inequality halves first so one-sided bounds survive.
        """
        if self.space != other.space:
            raise ValueError("widen of polyhedra over different spaces")
        if self.is_bottom:
            return other
        if other.is_bottom:
            return self
        p_rows = _split_equalities(self.constraints)
        q_rows = _split_equalities(other.constraints)
        kept = [c for c in p_rows if entails(other.constraints, c)]
        p_set = ConstraintSet.make(p_rows)
        for c in q_rows:
            if c in kept or not entails(self.constraints, c):
                continue
            for drop in p_rows:
                swapped = ConstraintSet.make(
                    [r for r in p_rows if r is not drop] + [c])
                if entails_all(swapped, p_set) and entails_all(p_set, swapped):
                    kept.append(c)
                    break
        return Polyhedron.of(self.space, ConstraintSet.make(kept))

    def widen_upto(self, other: "Polyhedron",
                   thresholds: Iterable[LinearConstraint]) -> "Polyhedron":
        """Widening bounded by the thresholds both operands satisfy."""
        base = self.widen(other)
        if self.is_bottom or other.is_bottom:
            return base
        extra = [t for t in thresholds
                 if entails(self.constraints, t) and entails(other.constraints, t)]
        if not extra:
            return base
        return base.meet(Polyhedron.of(self.space, ConstraintSet.make(extra)))

    def __str__(self) -> str:
        if self.is_bottom:
            return "false"
        return str(self.constraints)


@dataclass(frozen=True)
class ThresholdSet:
    """Per-predicate candidate bounds (over canonical argument names)."""

    by_pred: Mapping[str, Tuple[LinearConstraint, ...]]

    @classmethod
    def empty(cls) -> "ThresholdSet":
        return cls({})

    def for_pred(self, pred: str) -> Tuple[LinearConstraint, ...]:
        return self.by_pred.get(pred, ())

    def __len__(self) -> int:
        return sum(len(v) for v in self.by_pred.values())
