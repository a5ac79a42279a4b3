"""Exact linear rational arithmetic: constraints, satisfiability, projection,
entailment, simplification and Farkas certificates.

Everything in this module is exact. Coefficients and bounds are rationals
(gmpy2.mpq when available, fractions.Fraction otherwise), satisfiability is
decided by a two-phase simplex with Bland's rule, and strict inequalities are
handled by maximising a shared slack: a mixed system is strictly satisfiable
iff the optimum of the slack is positive (or unbounded).

Projection is Fourier-Motzkin elimination. Equalities are first used for
Gaussian substitution, which keeps the combinatorial part small; the number of
intermediate constraints is capped (see `fm_limit`) and exceeding the cap
raises ResourceLimitError so callers can degrade to an "unknown" verdict
instead of diverging.
"""

from __future__ import annotations

import itertools
from contextvars import ContextVar
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

try:  # pragma: no cover - exercised implicitly by whichever backend is present
    from gmpy2 import mpq as Rat
except ImportError:  # pragma: no cover
    from fractions import Fraction as Rat

__all__ = [
    "Rat",
    "rat",
    "LinearConstraint",
    "ConstraintSet",
    "FarkasCertificate",
    "ResourceLimitError",
    "TRUE",
    "FALSE_CONSTRAINT",
    "FALSE_SET",
    "is_satisfiable",
    "entails",
    "entails_all",
    "project",
    "simplify",
    "farkas_refutation",
    "fm_limit",
]

# Relation symbols kept after normalisation. ">=" and ">" are flipped into
# these at construction time.
LE = "<="
LT = "<"
EQ = "="

_ZERO = Rat(0)
_ONE = Rat(1)


def rat(num, den=1) -> Rat:
    """Build a rational from ints, strings ("3", "1/2", "0.25") or rationals."""
    if den != 1:
        return Rat(num) / Rat(den)
    if isinstance(num, str) and "." in num:
        whole, frac = num.split(".", 1)
        sign = -1 if whole.strip().startswith("-") else 1
        whole = whole.strip().lstrip("+-") or "0"
        scale = 10 ** len(frac)
        return Rat(sign * (int(whole) * scale + int(frac or "0")), scale)
    return Rat(num)


class ResourceLimitError(Exception):
    """A configured resource cap was exceeded (projection blow-up etc.)."""


# Cap on the number of constraints a single projection may build up.
# Held in a ContextVar so a driver can tighten it without threading a
# parameter through every geometric operation.
fm_limit: ContextVar[int] = ContextVar("fm_limit", default=10_000)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


@dataclass(frozen=True)
class LinearConstraint:
    """A normalised linear constraint  sum(c_i * v_i)  rel  bound.

    Invariants: coefficients are non-zero and sorted by variable name, the
    relation is one of <=, <, =, and the whole constraint is scaled so that
    coefficients and bound are coprime integers. Equalities are additionally
    sign-normalised (first coefficient positive). Inequalities keep their
    sign since scaling by a negative factor would flip them.
    """

    coeffs: Tuple[Tuple[str, Rat], ...]
    rel: str
    bound: Rat

    @staticmethod
    def make(coeffs: Mapping[str, Rat], rel: str, bound) -> "LinearConstraint":
        bound = Rat(bound)
        items = {v: Rat(c) for v, c in coeffs.items() if c != 0}
        if rel in (">=", ">"):
            items = {v: -c for v, c in items.items()}
            bound = -bound
            rel = LE if rel == ">=" else LT
        if rel not in (LE, LT, EQ):
            raise ValueError(f"unknown relation {rel!r}")
        ordered = tuple(sorted(items.items()))
        return LinearConstraint(ordered, rel, bound)._canonical()

    def _canonical(self) -> "LinearConstraint":
        if not self.coeffs:
            return self
        nums = [self.bound] + [c for _, c in self.coeffs]
        den_lcm = 1
        for q in nums:
            d = int(q.denominator)
            den_lcm = den_lcm * d // _gcd(den_lcm, d)
        scaled = [int(q * den_lcm) for q in nums]
        g = 0
        for s in scaled:
            g = _gcd(g, abs(s))
        g = g or 1
        scale = Rat(den_lcm, g)
        if self.rel == EQ and self.coeffs[0][1] * scale < 0:
            scale = -scale
        if scale == 1:
            return self
        coeffs = tuple((v, c * scale) for v, c in self.coeffs)
        return LinearConstraint(coeffs, self.rel, self.bound * scale)

    # -- simple queries ----------------------------------------------------

    def variables(self) -> frozenset:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, var: str) -> Rat:
        for v, c in self.coeffs:
            if v == var:
                return c
        return _ZERO

    def is_constant(self) -> bool:
        return not self.coeffs

    def is_trivially_true(self) -> bool:
        if self.coeffs:
            return False
        if self.rel == LE:
            return _ZERO <= self.bound
        if self.rel == LT:
            return _ZERO < self.bound
        return self.bound == 0

    def is_trivially_false(self) -> bool:
        return self.is_constant() and not self.is_trivially_true()

    def evaluate(self, point: Mapping[str, Rat]) -> bool:
        lhs = sum((c * point.get(v, _ZERO) for v, c in self.coeffs), _ZERO)
        if self.rel == LE:
            return lhs <= self.bound
        if self.rel == LT:
            return lhs < self.bound
        return lhs == self.bound

    # -- transformations ---------------------------------------------------

    def rename(self, mapping: Mapping[str, str]) -> "LinearConstraint":
        return LinearConstraint.make(
            {mapping.get(v, v): c for v, c in self.coeffs}, self.rel, self.bound
        )

    def substitute(self, var: str, expr_coeffs: Mapping[str, Rat], expr_const: Rat
                   ) -> "LinearConstraint":
        """Replace `var` by the affine expression  expr_coeffs . vars + expr_const."""
        c_v = self.coeff(var)
        if c_v == 0:
            return self
        out: Dict[str, Rat] = {v: c for v, c in self.coeffs if v != var}
        for v, c in expr_coeffs.items():
            out[v] = out.get(v, _ZERO) + c_v * c
        return LinearConstraint.make(out, self.rel, self.bound - c_v * expr_const)

    def negations(self) -> Tuple["LinearConstraint", ...]:
        """Constraints whose disjunction is the negation of this one."""
        neg = {v: -c for v, c in self.coeffs}
        if self.rel == LE:  # not (t <= b)  ==  -t < -b
            return (LinearConstraint.make(neg, LT, -self.bound),)
        if self.rel == LT:  # not (t < b)   ==  -t <= -b
            return (LinearConstraint.make(neg, LE, -self.bound),)
        return (  # not (t = b)  ==  t < b  or  t > b
            LinearConstraint.make(dict(self.coeffs), LT, self.bound),
            LinearConstraint.make(neg, LT, -self.bound),
        )

    def closure(self) -> "LinearConstraint":
        if self.rel == LT:
            return LinearConstraint(self.coeffs, LE, self.bound)
        return self

    def strict(self) -> "LinearConstraint":
        if self.rel == LE:
            return LinearConstraint(self.coeffs, LT, self.bound)
        return self

    def split_equality(self) -> Tuple["LinearConstraint", ...]:
        """An equality as its two inequality halves; inequalities unchanged."""
        if self.rel != EQ:
            return (self,)
        neg = {v: -c for v, c in self.coeffs}
        return (
            LinearConstraint.make(dict(self.coeffs), LE, self.bound),
            LinearConstraint.make(neg, LE, -self.bound),
        )

    def scaled(self, factor: Rat) -> "LinearConstraint":
        """Scale by a positive rational (used when recombining certificates)."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return LinearConstraint.make(
            {v: c * factor for v, c in self.coeffs}, self.rel, self.bound * factor
        )

    def __str__(self) -> str:
        lhs = "+ ".join(f"{c}*{v}" for v, c in self.coeffs) if self.coeffs else "0"
        rel = {LE: "=<", LT: "<", EQ: "="}[self.rel]
        return f"{lhs} {rel} {self.bound}"


FALSE_CONSTRAINT = LinearConstraint.make({}, LE, -1)


@dataclass(frozen=True)
class ConstraintSet:
    """An immutable conjunction of linear constraints.

    Constraints are deduplicated and kept in a fixed sorted order so that
    equal sets compare and hash equal; the empty set is `true`.
    """

    constraints: Tuple[LinearConstraint, ...]

    @staticmethod
    def make(constraints: Iterable[LinearConstraint]) -> "ConstraintSet":
        kept = [c for c in constraints if not c.is_trivially_true()]
        uniq = sorted(set(kept), key=_constraint_key)
        return ConstraintSet(tuple(uniq))

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def __and__(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet.make(self.constraints + other.constraints)

    def add(self, *constraints: LinearConstraint) -> "ConstraintSet":
        return ConstraintSet.make(self.constraints + constraints)

    def variables(self) -> frozenset:
        out = frozenset()
        for c in self.constraints:
            out |= c.variables()
        return out

    def rename(self, mapping: Mapping[str, str]) -> "ConstraintSet":
        return ConstraintSet.make(c.rename(mapping) for c in self.constraints)

    def evaluate(self, point: Mapping[str, Rat]) -> bool:
        return all(c.evaluate(point) for c in self.constraints)

    def closure(self) -> "ConstraintSet":
        return ConstraintSet.make(c.closure() for c in self.constraints)

    def has_trivially_false(self) -> bool:
        return any(c.is_trivially_false() for c in self.constraints)

    def __str__(self) -> str:
        if not self.constraints:
            return "true"
        return ", ".join(str(c) for c in self.constraints)


def _constraint_key(c: LinearConstraint):
    return (c.coeffs, c.rel, c.bound)


TRUE = ConstraintSet(())
FALSE_SET = ConstraintSet((FALSE_CONSTRAINT,))


# ---------------------------------------------------------------------------
# Simplex. Dense two-phase tableau over exact rationals, Bland's rule for
# termination. Small systems only; this is the single hot spot of the whole
# verifier so the inner loops stay primitive.
# ---------------------------------------------------------------------------

_OPTIMAL = "optimal"
_UNBOUNDED = "unbounded"
_INFEASIBLE = "infeasible"


def solve_lp(rows: Sequence[Tuple[Mapping[str, Rat], str, Rat]],
             objective: Mapping[str, Rat],
             nonneg: frozenset,
             want_point: bool = False):
    """Maximise `objective` subject to `rows`.

    Each row is (coeffs, rel, bound) with rel in {"<=", "="}. Variables in
    `nonneg` are constrained to be >= 0, all others are free. Returns
    (status, value, point) where status is one of "optimal", "unbounded",
    "infeasible"; point is None unless requested and status is "optimal".
    """
    variables = sorted({v for coeffs, _, _ in rows for v in coeffs} | set(objective))
    # Column layout: for a free variable two columns (v+ and v-), for a
    # non-negative variable one. Then one slack per inequality row, then one
    # artificial per row. RHS is carried separately.
    cols: List[Tuple[str, int]] = []  # (var, sign)
    for v in variables:
        cols.append((v, +1))
        if v not in nonneg:
            cols.append((v, -1))
    nstruct = len(cols)
    nslack = sum(1 for _, rel, _ in rows if rel == LE)
    m = len(rows)
    ncols = nstruct + nslack + m  # + artificials
    tableau: List[List[Rat]] = []
    rhs: List[Rat] = []
    slack_i = 0
    for ri, (coeffs, rel, bound) in enumerate(rows):
        row = [_ZERO] * ncols
        for ci, (v, sign) in enumerate(cols):
            c = coeffs.get(v)
            if c:
                row[ci] = c if sign > 0 else -c
        if rel == LE:
            row[nstruct + slack_i] = _ONE
            slack_i += 1
        elif rel != EQ:
            raise ValueError(f"unknown LP relation {rel!r}")
        b = Rat(bound)
        if b < 0:
            row = [-x for x in row]
            b = -b
        row[nstruct + nslack + ri] = _ONE
        tableau.append(row)
        rhs.append(b)
    basis = [nstruct + nslack + i for i in range(m)]
    art_first = nstruct + nslack

    def pivot(prow: int, pcol: int, zrow: List[Rat], zval: List[Rat]) -> None:
        piv = tableau[prow][pcol]
        inv = _ONE / piv
        tableau[prow] = [x * inv for x in tableau[prow]]
        rhs[prow] *= inv
        prow_vec = tableau[prow]
        for i in range(m):
            if i == prow:
                continue
            f = tableau[i][pcol]
            if f:
                ti = tableau[i]
                tableau[i] = [a - f * b for a, b in zip(ti, prow_vec)]
                rhs[i] -= f * rhs[prow]
        f = zrow[pcol]
        if f:
            for j in range(ncols):
                zrow[j] -= f * prow_vec[j]
            zval[0] -= f * rhs[prow]
        basis[prow] = pcol

    def optimise(zrow: List[Rat], zval: List[Rat], allowed: int) -> str:
        # Maximise; Bland's rule (lowest eligible column, lowest basic var).
        while True:
            pcol = -1
            for j in range(allowed):
                if zrow[j] > 0:
                    pcol = j
                    break
            if pcol < 0:
                return _OPTIMAL
            prow, best = -1, None
            for i in range(m):
                a = tableau[i][pcol]
                if a > 0:
                    ratio = rhs[i] / a
                    if best is None or ratio < best or (
                            ratio == best and basis[i] < basis[prow]):
                        prow, best = i, ratio
            if prow < 0:
                return _UNBOUNDED
            pivot(prow, pcol, zrow, zval)

    # Phase 1: maximise -(sum of artificials).
    zrow = [_ZERO] * ncols
    zval = [_ZERO]
    for i in range(m):
        for j in range(ncols):
            zrow[j] += tableau[i][j]
        zval[0] += rhs[i]
    for j in range(art_first, ncols):
        zrow[j] = _ZERO
    status = optimise(zrow, zval, art_first)
    assert status == _OPTIMAL, "phase 1 objective is bounded"
    if zval[0] != 0:
        return _INFEASIBLE, None, None
    # Drive leftover artificials out of the basis.
    for i in range(m):
        if basis[i] >= art_first:
            for j in range(art_first):
                if tableau[i][j] != 0:
                    pivot(i, j, zrow, zval)
                    break
    # Phase 2.
    zrow = [_ZERO] * ncols
    zval = [_ZERO]
    for ci, (v, sign) in enumerate(cols):
        c = objective.get(v)
        if c:
            zrow[ci] = c if sign > 0 else -c
    for i in range(m):
        b = basis[i]
        f = zrow[b]
        if f:
            ti = tableau[i]
            for j in range(ncols):
                zrow[j] -= f * ti[j]
            zval[0] -= f * rhs[i]
            zrow[b] = _ZERO
    status = optimise(zrow, zval, art_first)
    if status == _UNBOUNDED:
        return _UNBOUNDED, None, None
    value = -zval[0]
    point = None
    if want_point:
        raw = {}
        for i in range(m):
            if basis[i] < nstruct:
                v, sign = cols[basis[i]]
                raw[(v, sign)] = rhs[i]
        point = {}
        for v in variables:
            point[v] = raw.get((v, 1), _ZERO) - raw.get((v, -1), _ZERO)
    return _OPTIMAL, value, point


_EPS = "$eps"


def _lp_rows(constraints: Iterable[LinearConstraint]):
    """Encode constraints as LP rows, strict ones padded with the shared slack."""
    rows = []
    strict = False
    for c in constraints:
        coeffs = dict(c.coeffs)
        if c.rel == LT:
            coeffs[_EPS] = _ONE
            strict = True
            rows.append((coeffs, LE, c.bound))
        elif c.rel == LE:
            rows.append((coeffs, LE, c.bound))
        else:
            rows.append((coeffs, EQ, c.bound))
    return rows, strict


@lru_cache(maxsize=65536)
def is_satisfiable(cs: ConstraintSet) -> bool:
    """Exact satisfiability over the rationals (equivalently the reals)."""
    if not cs.constraints:
        return True
    only_single = True
    for c in cs.constraints:
        if c.is_trivially_false():
            return False
        if len(c.coeffs) > 1:
            only_single = False
    if only_single:
        return _interval_satisfiable(cs.constraints)
    rows, strict = _lp_rows(cs.constraints)
    status, value, _ = solve_lp(rows, {_EPS: _ONE}, frozenset({_EPS}))
    if status == _INFEASIBLE:
        return False
    if status == _UNBOUNDED:
        return True
    return bool(strict) is False or value > 0


def _interval_satisfiable(constraints: Sequence[LinearConstraint]) -> bool:
    # Every constraint mentions exactly one variable: intersect intervals.
    lo: Dict[str, Tuple[Rat, bool]] = {}  # var -> (bound, strict)
    hi: Dict[str, Tuple[Rat, bool]] = {}
    for c in constraints:
        (v, k) = c.coeffs[0]
        b = c.bound / k
        if c.rel == EQ:
            _tighten(lo, v, b, False)
            _tighten_hi(hi, v, b, False)
            continue
        strict = c.rel == LT
        if k > 0:
            _tighten_hi(hi, v, b, strict)
        else:
            _tighten(lo, v, b, strict)
    for v in set(lo) & set(hi):
        l, ls = lo[v]
        h, hs = hi[v]
        if l > h or (l == h and (ls or hs)):
            return False
    return True


def _tighten(lo, v, b, strict):
    cur = lo.get(v)
    if cur is None or b > cur[0] or (b == cur[0] and strict):
        lo[v] = (b, strict)


def _tighten_hi(hi, v, b, strict):
    cur = hi.get(v)
    if cur is None or b < cur[0] or (b == cur[0] and strict):
        hi[v] = (b, strict)


@lru_cache(maxsize=65536)
def _entails_cached(cs: ConstraintSet, c: LinearConstraint) -> bool:
    if c.is_trivially_true():
        return True
    # Syntactic fast path: a constraint in the set with the same linear part
    # and an equal or tighter bound already implies c.
    for d in cs.constraints:
        if d.coeffs == c.coeffs:
            if c.rel == EQ:
                if d.rel == EQ and d.bound == c.bound:
                    return True
            elif d.rel == EQ:
                if d.bound < c.bound or (d.bound == c.bound and c.rel == LE):
                    return True
            elif d.bound < c.bound or (
                    d.bound == c.bound and (d.rel == c.rel or c.rel == LE)):
                return True
    for neg in c.negations():
        if is_satisfiable(cs.add(neg)):
            return False
    return True


def entails(cs: ConstraintSet, c: LinearConstraint) -> bool:
    """Does the conjunction `cs` imply the single constraint `c`?"""
    return _entails_cached(cs, c)


def entails_all(cs: ConstraintSet, other: ConstraintSet) -> bool:
    return all(_entails_cached(cs, c) for c in other.constraints)


# ---------------------------------------------------------------------------
# Projection: Gaussian substitution for equalities, then Fourier-Motzkin.
# ---------------------------------------------------------------------------


def project(cs: ConstraintSet, keep: Iterable[str]) -> ConstraintSet:
    """Project onto `keep`: an equivalent constraint set over keep only.

    Exact for linear rational arithmetic. Returns FALSE_SET when `cs` is
    unsatisfiable. Raises ResourceLimitError when the intermediate constraint
    count exceeds the `fm_limit` cap.
    """
    keep = set(keep)
    drop = sorted(cs.variables() - keep)
    if not drop:
        if cs.has_trivially_false():
            return FALSE_SET
        return cs
    limit = fm_limit.get()
    work: List[LinearConstraint] = list(cs.constraints)

    # Gaussian pass: use equalities to substitute eliminable variables away.
    changed = True
    while changed:
        changed = False
        for idx, c in enumerate(work):
            if c.rel != EQ:
                continue
            var = next((v for v, _ in c.coeffs if v not in keep), None)
            if var is None:
                continue
            c_v = c.coeff(var)
            expr = {v: -k / c_v for v, k in c.coeffs if v != var}
            const = c.bound / c_v
            work = [
                d.substitute(var, expr, const)
                for j, d in enumerate(work)
                if j != idx
            ]
            changed = True
            break

    rows = [c for c in work if not c.is_trivially_true()]
    if any(c.is_trivially_false() for c in rows):
        return FALSE_SET

    remaining = sorted({v for c in rows for v in c.variables() if v not in keep})
    while remaining:
        # Cheapest variable first: fewest lower*upper combinations.
        def cost(v: str) -> Tuple[int, str]:
            pos = sum(1 for c in rows if c.coeff(v) > 0)
            neg = sum(1 for c in rows if c.coeff(v) < 0)
            return (pos * neg, v)

        var = min(remaining, key=cost)
        remaining.remove(var)
        uppers, lowers, rest = [], [], []
        for c in rows:
            k = c.coeff(var)
            if k > 0:
                uppers.append(c)
            elif k < 0:
                lowers.append(c)
            else:
                rest.append(c)
        new: List[LinearConstraint] = []
        for up, lo in itertools.product(uppers, lowers):
            ku, kl = up.coeff(var), -lo.coeff(var)
            combo: Dict[str, Rat] = {}
            for v, c in up.coeffs:
                combo[v] = combo.get(v, _ZERO) + c * kl
            for v, c in lo.coeffs:
                combo[v] = combo.get(v, _ZERO) + c * ku
            rel = LT if LT in (up.rel, lo.rel) else LE
            cand = LinearConstraint.make(combo, rel, up.bound * kl + lo.bound * ku)
            if cand.is_trivially_false():
                return FALSE_SET
            if not cand.is_trivially_true():
                new.append(cand)
        rows = _dominance_prune(rest + new)
        if len(rows) > limit:
            raise ResourceLimitError(
                f"projection exceeded {limit} constraints while eliminating {var}")
        if len(rows) > 12:
            rows = _semantic_prune(rows)

    out = ConstraintSet.make(rows)
    if out.has_trivially_false() or not is_satisfiable(out):
        return FALSE_SET
    return out


def _dominance_prune(rows: List[LinearConstraint]) -> List[LinearConstraint]:
    """Drop duplicates and constraints dominated by a parallel twin."""
    best: Dict[Tuple, LinearConstraint] = {}
    equalities: List[LinearConstraint] = []
    for c in rows:
        if c.rel == EQ:
            equalities.append(c)
            continue
        key = c.coeffs
        cur = best.get(key)
        if cur is None or c.bound < cur.bound or (
                c.bound == cur.bound and c.rel == LT):
            best[key] = c
    return equalities + list(best.values())


def _semantic_prune(rows: List[LinearConstraint]) -> List[LinearConstraint]:
    kept = list(rows)
    i = 0
    while i < len(kept):
        others = ConstraintSet.make(kept[:i] + kept[i + 1:])
        if entails(others, kept[i]):
            kept.pop(i)
        else:
            i += 1
    return kept


# ---------------------------------------------------------------------------
# Simplification.
# ---------------------------------------------------------------------------


def simplify(cs: ConstraintSet) -> ConstraintSet:
    """A logically equivalent, canonical, redundancy-free constraint set.

    Detects implied equalities (an inequality whose reverse is entailed),
    removes constraints entailed by the rest, and leaves every survivor in
    the canonical coprime-integer scaling.
    """
    if not is_satisfiable(cs):
        return FALSE_SET
    work = list(cs.constraints)
    # Upgrade inequalities to equalities when the reverse direction holds.
    upgraded: List[LinearConstraint] = []
    full = ConstraintSet.make(work)
    for c in work:
        if c.rel == LE:
            reverse = LinearConstraint.make(
                {v: -k for v, k in c.coeffs}, LE, -c.bound)
            if entails(full, reverse):
                upgraded.append(LinearConstraint.make(dict(c.coeffs), EQ, c.bound))
                continue
        upgraded.append(c)
    # Drop anything the remaining constraints already imply. Deterministic
    # order: strict before non-strict before equalities, then constraint key,
    # so the surviving basis is stable across runs.
    order = {EQ: 0, LT: 1, LE: 2}
    upgraded = sorted(set(upgraded), key=lambda c: (order[c.rel], _constraint_key(c)))
    i = len(upgraded) - 1
    while i >= 0:
        rest = ConstraintSet.make(upgraded[:i] + upgraded[i + 1:])
        if entails(rest, upgraded[i]):
            upgraded.pop(i)
        i -= 1
    return ConstraintSet.make(upgraded)


# ---------------------------------------------------------------------------
# Farkas certificates.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FarkasCertificate:
    """A non-negative combination of constraints deriving a contradiction.

    `constraints` are inequality rows (equalities of the input appear as
    their two halves), `from_first[i]` records whether row i came from the
    first of the two input sets, `multipliers[i]` is the weight of row i.
    `derived` is the weighted sum: a constant constraint that is false.
    """

    constraints: Tuple[LinearConstraint, ...]
    from_first: Tuple[bool, ...]
    multipliers: Tuple[Rat, ...]
    derived: LinearConstraint

    def combination(self, select=None) -> Tuple[Dict[str, Rat], Rat, bool]:
        """Weighted sum of (a subset of) the rows: coeffs, bound, any-strict."""
        coeffs: Dict[str, Rat] = {}
        bound = _ZERO
        strict = False
        for row, flag, lam in zip(self.constraints, self.from_first, self.multipliers):
            if lam == 0 or (select is not None and flag != select):
                continue
            for v, c in row.coeffs:
                coeffs[v] = coeffs.get(v, _ZERO) + lam * c
            bound += lam * row.bound
            strict = strict or row.rel == LT
        return coeffs, bound, strict

    def validate(self) -> bool:
        if any(lam < 0 for lam in self.multipliers):
            return False
        coeffs, bound, strict = self.combination()
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        rel = LT if strict else LE
        if LinearConstraint.make(coeffs, rel, bound) != self.derived:
            return False
        return self.derived.is_trivially_false()

    def first_part(self) -> LinearConstraint:
        """The first-set half of the combination, as a single constraint."""
        coeffs, bound, strict = self.combination(select=True)
        return LinearConstraint.make(coeffs, LT if strict else LE, bound)


def farkas_refutation(first: ConstraintSet, second: ConstraintSet
                      ) -> FarkasCertificate:
    """Certificate of unsatisfiability for `first & second`.

    Precondition: the union is unsatisfiable (ValueError otherwise). The
    returned multipliers are non-negative; rows coming from equalities are
    the two inequality halves so negative equality weights never arise.
    """
    union = first & second
    if is_satisfiable(union):
        raise ValueError("farkas_refutation: constraint union is satisfiable")
    rows: List[LinearConstraint] = []
    origin: List[bool] = []
    for source, flag in ((first, True), (second, False)):
        for c in source.constraints:
            for half in c.split_equality():
                rows.append(half)
                origin.append(flag)
    lam = [f"$l{i}" for i in range(len(rows))]
    lp_rows = []
    for v in sorted({v for r in rows for v in r.variables()}):
        lp_rows.append(
            ({lam[i]: rows[i].coeff(v) for i in range(len(rows))
              if rows[i].coeff(v) != 0}, EQ, _ZERO))
    bound_row = {lam[i]: rows[i].bound for i in range(len(rows)) if rows[i].bound != 0}
    nn = frozenset(lam)
    # Case A: sum of bounds strictly negative.
    status, _, point = solve_lp(
        lp_rows + [(bound_row, LE, Rat(-1))], {}, nn, want_point=True)
    if status != _OPTIMAL:
        # Case B: bounds sum to <= 0 with positive weight on a strict row.
        strict_row = {lam[i]: _ONE for i in range(len(rows)) if rows[i].rel == LT}
        assert strict_row, "unsatisfiable closed system must admit case A"
        status, _, point = solve_lp(
            lp_rows + [(bound_row, LE, _ZERO),
                       ({k: -v for k, v in strict_row.items()}, LE, Rat(-1))],
            {}, nn, want_point=True)
        assert status == _OPTIMAL, "Motzkin transposition guarantees a witness"
    multipliers = tuple(point.get(l, _ZERO) for l in lam)
    coeffs: Dict[str, Rat] = {}
    bound = _ZERO
    strict = False
    for r, m in zip(rows, multipliers):
        if m == 0:
            continue
        for v, c in r.coeffs:
            coeffs[v] = coeffs.get(v, _ZERO) + m * c
        bound += m * r.bound
        strict = strict or r.rel == LT
    derived = LinearConstraint.make(coeffs, LT if strict else LE, bound)
    cert = FarkasCertificate(tuple(rows), tuple(origin), multipliers, derived)
    assert cert.validate(), "certificate must re-multiply to its contradiction"
    return cert
