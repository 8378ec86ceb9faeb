"""Quantum cohomology of P^r and its Gromov-Witten numbers.

The potential is

    Phi = (1/6) (sum_a x^a D_a)^3
          + sum_d sum_n N(d; n_2..n_r) prod_a (x^a)^{n_a} / n_a! * exp(d x^1)

with the Poincare pairing g_ab = [a + b == r].  ``solve_gw`` determines the
numbers degree by degree from the WDVV equations.  The solver keeps the
exponential exact by grading by q = exp(x^1): a degree-d term is q^d times a
polynomial in x^2..x^r, and d/dx^1 acts on it as multiplication by d.
"""

from __future__ import annotations

import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from fforge import linalg
from fforge.potentials import EulerData, FlatMetric, VectorFieldJet, WdvvPotential
from fforge.series import TruncatedSeries, VariableSpec

MAX_R = 4
MAX_DEGREE = 6


class GwError(RuntimeError):
    pass


def default_order(dim: int) -> int:
    """Default jet order: 12 for dim <= 3, 8 above; FFORGE_MAX_ORDER caps it."""
    order = 12 if dim <= 3 else 8
    env = os.environ.get("FFORGE_MAX_ORDER")
    if env:
        order = int(env)
    return order


@dataclass(frozen=True)
class QcohSetup:
    r: int
    max_degree: int = 3
    order: int | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be a positive integer")
        if self.max_degree < 1:
            raise ValueError("max_degree must be at least 1")

    @property
    def dim(self) -> int:
        return self.r + 1

    @property
    def metric(self) -> FlatMetric:
        return FlatMetric.antidiagonal(self.dim)

    @property
    def vars(self) -> VariableSpec:
        return VariableSpec.even(self.dim)

    def dimension_constraint(self, d: int) -> int:
        """Required value of sum_a (a-1) n_a for degree d."""
        return (self.r + 1) * d + self.r - 3

    def admissible(self, d: int) -> list[tuple[int, ...]]:
        """All (n_2..n_r) obeying the dimension constraint."""
        target = self.dimension_constraint(d)
        if self.r == 1:
            return [()] if target == 0 else []
        out = []

        def rec(a, remaining, acc):
            if a > self.r:
                if remaining == 0:
                    out.append(tuple(acc))
                return
            w = a - 1
            for k in range(remaining // w + 1):
                rec(a + 1, remaining - k * w, acc + [k])

        if target >= 0:
            rec(2, target, [])
        return out

    def seed(self) -> tuple[int, ...]:
        return tuple([0] * (self.r - 2) + [2]) if self.r >= 2 else ()

    def min_total_degree(self, d: int) -> int | None:
        """Lowest total degree of a monomial in the degree-d quantum term."""
        ns = self.admissible(d)
        if not ns:
            return None
        return min(sum(n) for n in ns)


@dataclass
class GwTable:
    r: int
    max_degree: int
    entries: dict[tuple[int, tuple[int, ...]], int] = field(default_factory=dict)

    def get(self, d: int, n: tuple[int, ...]) -> int:
        return self.entries.get((d, tuple(n)), 0)

    def sorted_items(self):
        return sorted(self.entries.items(), key=lambda kv: (kv[0][0], kv[0][1]))

    def tsv_lines(self) -> list[str]:
        return [" ".join(str(x) for x in (d, *n, v)) for (d, n), v in self.sorted_items()]

    def to_doc(self) -> dict:
        return {
            "r": self.r,
            "max_degree": self.max_degree,
            "entries": [{"d": d, "n": list(n), "N": v} for (d, n), v in self.sorted_items()],
        }

    @classmethod
    def from_doc(cls, doc) -> "GwTable":
        t = cls(int(doc["r"]), int(doc["max_degree"]))
        for e in doc["entries"]:
            t.entries[(int(e["d"]), tuple(int(x) for x in e["n"]))] = int(e["N"])
        return t


def classical_potential(setup: QcohSetup, order: int | None = None) -> TruncatedSeries:
    """(1/6) sum_{a+b+c=r} x^a x^b x^c: the cup-product cubic."""
    k = setup.dim
    if order is None:
        order = max(3, default_order(k))
    terms: dict = defaultdict(Fraction)
    for a, b, c in product(range(k), repeat=3):
        if a + b + c == setup.r:
            exp = [0] * k
            for i in (a, b, c):
                exp[i] += 1
            terms[tuple(exp)] += Fraction(1, 6)
    return TruncatedSeries(setup.vars, order, terms)


# -- polynomial helpers for the q-graded solver ------------------------------

Poly = dict  # exponent tuple over x^2..x^r -> Fraction


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: dict = defaultdict(Fraction)
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            out[tuple(a + b for a, b in zip(e1, e2))] += c1 * c2
    return {e: c for e, c in out.items() if c}


def _poly_add(p: Poly, q: Poly, scale=1) -> Poly:
    out = dict(p)
    for e, c in q.items():
        v = out.get(e, 0) + scale * c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _poly_diff(p: Poly, i: int) -> Poly:
    out = {}
    for e, c in p.items():
        if e[i]:
            ne = list(e)
            ne[i] -= 1
            out[tuple(ne)] = c * e[i]
    return out


def _monomial(n: tuple[int, ...]) -> Poly:
    denom = 1
    for k in n:
        denom *= math.factorial(k)
    return {tuple(n): Fraction(1, denom)}


class _Graded:
    """Third derivatives of the q^d-component of Phi."""

    def __init__(self, setup: QcohSetup):
        self.setup = setup
        self.nvar = max(setup.r - 1, 0)
        self.const = tuple([0] * self.nvar)

    def classical(self, a, b, c) -> Poly:
        return {self.const: Fraction(1)} if a + b + c == self.setup.r else {}

    def quantum(self, d: int, f: Poly, a, b, c) -> Poly:
        if 0 in (a, b, c):
            return {}
        out = f
        factor = 1
        for i in (a, b, c):
            if i == 1:
                factor *= d
            else:
                out = _poly_diff(out, i - 2)
        return {e: v * factor for e, v in out.items()} if factor != 1 else out


def _wdvv_degree(graded: _Graded, r: int, comps: dict[int, Poly], D: int,
                 linear_f: Poly | None) -> dict:
    """q^D coefficient of WDVV(a,b,c,dd) for every tuple.

    With ``linear_f`` given, only the terms linear in the degree-D part are
    produced, with the degree-D part replaced by ``linear_f``; otherwise only
    the products of lower positive degrees.
    """
    k = r + 1
    cache: dict = {}

    def third(deg, a, b, c):
        key = (deg,) + tuple(sorted((a, b, c)))
        if key not in cache:
            if deg == 0:
                cache[key] = graded.classical(a, b, c)
            else:
                f = linear_f if deg == D and linear_f is not None else comps.get(deg, {})
                cache[key] = graded.quantum(deg, f, *key[1:])
        return cache[key]

    if linear_f is not None:
        pairs = [(0, D), (D, 0)]
    else:
        pairs = [(d1, D - d1) for d1 in range(1, D)]

    def half(a, b, c, dd):
        out: Poly = {}
        for d1, d2 in pairs:
            for e in range(k):
                f = r - e
                x = third(d1, a, b, e)
                if not x:
                    continue
                y = third(d2, f, c, dd)
                if not y:
                    continue
                out = _poly_add(out, _poly_mul(x, y))
        return out

    res = {}
    halves: dict = {}
    for a, b, c, dd in product(range(k), repeat=4):
        for key in ((a, b, c, dd), (b, c, a, dd)):
            if key not in halves:
                halves[key] = half(*key)
        diff = _poly_add(halves[(a, b, c, dd)], halves[(b, c, a, dd)], scale=-1)
        if diff:
            res[(a, b, c, dd)] = diff
    return res


def solve_gw(setup: QcohSetup) -> GwTable:
    """Gromov-Witten numbers of P^r through ``setup.max_degree``.

    For each degree D the unknowns N(D; n) enter the q^D coefficient of WDVV
    linearly (through the classical cubic); the products of lower degrees
    are known.  Every monomial coefficient of every equation is used, the
    overdetermined system must be consistent with a unique solution, and
    the solution must be a non-negative integer vector.
    """
    r = setup.r
    graded = _Graded(setup)
    table = GwTable(r, setup.max_degree)
    comps: dict[int, Poly] = {}
    for D in range(1, setup.max_degree + 1):
        unknowns = setup.admissible(D)
        if not unknowns:
            comps[D] = {}
            continue
        fixed: dict[tuple, Fraction] = {}
        if D == 1:
            fixed[setup.seed()] = Fraction(1)
        free = [n for n in unknowns if n not in fixed]
        known = _wdvv_degree(graded, r, comps, D, None) if D > 1 else {}
        for n, v in fixed.items():
            contrib = _wdvv_degree(graded, r, comps, D, _monomial(n))
            for key, poly in contrib.items():
                known[key] = _poly_add(known.get(key, {}), poly, scale=v)
        columns = [_wdvv_degree(graded, r, comps, D, _monomial(n)) for n in free]
        rows: dict[tuple, list[Fraction]] = {}
        keys = set(known)
        for col in columns:
            keys |= set(col)
        for key in keys:
            monos = set(known.get(key, {}))
            for col in columns:
                monos |= set(col.get(key, {}))
            for m in monos:
                row = [col.get(key, {}).get(m, Fraction(0)) for col in columns]
                rhs = -known.get(key, {}).get(m, Fraction(0))
                rows[tuple(row) + (rhs,)] = None
        values = dict(fixed)
        if free:
            mat = [list(r_[:-1]) for r_ in rows]
            rhs = [r_[-1] for r_ in rows]
            if not linalg.is_consistent(mat, rhs):
                raise GwError(f"inconsistent WDVV system at degree {D}")
            sol = linalg.solve(mat, rhs)
            if sol is None:
                raise GwError(f"WDVV does not determine the degree-{D} numbers")
            values.update(zip(free, sol))
        else:
            for row in rows:
                if row[-1] != 0:
                    raise GwError(f"inconsistent WDVV system at degree {D}")
        poly: Poly = {}
        for n, v in values.items():
            if v.denominator != 1 or v < 0:
                raise GwError(f"N({D}; {n}) = {v} is not a non-negative integer")
            table.entries[(D, tuple(n))] = int(v)
            poly = _poly_add(poly, _monomial(n), scale=v)
        comps[D] = poly
    return table


def kontsevich_p2(max_degree: int) -> list[int]:
    """N_d for P^2 through ``max_degree`` by Kontsevich's recursion.

    This is the WDVV equation (a,b,c,d) = (1,1,2,2) read off on the single
    monomial family (x^2)^{3d-4} q^d:

        N_d = sum_{d1+d2=d} N_{d1} N_{d2} d1^2 d2
              * (d2 * C(3d-4, 3d1-2) - d1 * C(3d-4, 3d1-1))
    """
    n = [0, 1]
    for d in range(2, max_degree + 1):
        total = 0
        for d1 in range(1, d):
            d2 = d - d1
            total += n[d1] * n[d2] * d1 * d1 * d2 * (
                d2 * math.comb(3 * d - 4, 3 * d1 - 2) - d1 * math.comb(3 * d - 4, 3 * d1 - 1)
            )
        n.append(total)
    return n[1:max_degree + 1]


def certified_potential_order(setup: QcohSetup, table: GwTable) -> int | None:
    """Largest total degree through which the truncated potential is exact,
    given the table through ``table.max_degree`` (None if unbounded)."""
    degrees = [setup.min_total_degree(d) for d in range(table.max_degree + 1, table.max_degree + 40)]
    degrees = [x for x in degrees if x is not None]
    return min(degrees) - 1 if degrees else None


def quantum_potential(setup: QcohSetup, table: GwTable, order: int | None = None) -> WdvvPotential:
    """Classical cubic plus the quantum corrections, truncated at total degree
    ``order`` (capped at the order certified by the table)."""
    k = setup.dim
    if order is None:
        order = setup.order if setup.order is not None else default_order(k)
    cert = certified_potential_order(setup, table)
    if cert is not None:
        order = min(order, cert)
    order = max(order, 3)
    vars = setup.vars
    terms: dict = defaultdict(Fraction)
    for exp, c in classical_potential(setup, order).terms.items():
        terms[exp] += c
    for (d, n), value in table.entries.items():
        if not value:
            continue
        base = sum(n)
        denom = 1
        for x in n:
            denom *= math.factorial(x)
        for j in range(order - base + 1):
            exp = [0] * k
            exp[1] = j
            for i, x in enumerate(n):
                exp[i + 2] = x
            terms[tuple(exp)] += Fraction(value * d**j, denom * math.factorial(j))
    return WdvvPotential(TruncatedSeries(vars, order, terms), setup.metric)


def euler_field_p_r(setup: QcohSetup, order: int | None = None) -> EulerData:
    """E = sum_a (1-a) x^a d_a + (r+1) d_1, weight one, D = 2 - r."""
    k = setup.dim
    if order is None:
        order = setup.order if setup.order is not None else default_order(k)
    vars = setup.vars
    comps = []
    for a in range(k):
        s = TruncatedSeries.variable(vars, order, a, 1 - a)
        if a == 1:
            s = s + (setup.r + 1)
        comps.append(s)
    return EulerData(VectorFieldJet(tuple(comps), 0), Fraction(1), Fraction(2 - setup.r))
