"""Truncated multivariate power series over exact rationals.

Variables may be even or odd.  Odd variables anticommute with each other
and square to zero; monomials are stored in the canonical order
x_0^{e_0} x_1^{e_1} ... so every sign is produced while multiplying or
differentiating.  Truncation is by total degree.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

EVEN, ODD = 0, 1

MultiIndex = tuple[int, ...]


class SeriesError(ValueError):
    pass


@dataclass(frozen=True)
class VariableSpec:
    count: int
    parities: tuple[int, ...]

    def __post_init__(self):
        if self.count < 1:
            raise SeriesError("need at least one variable")
        if len(self.parities) != self.count:
            raise SeriesError("parities length must equal count")
        if any(p not in (EVEN, ODD) for p in self.parities):
            raise SeriesError("parity must be 0 (even) or 1 (odd)")

    @classmethod
    def even(cls, count: int) -> "VariableSpec":
        return cls(count, (EVEN,) * count)

    @property
    def all_even(self) -> bool:
        return not any(self.parities)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        raise SeriesError("float coefficients are not allowed in exact series")
    return Fraction(c)


def _koszul_sign(left: MultiIndex, right: MultiIndex, parities: Sequence[int]) -> int:
    """Sign from moving the odd variables of ``right`` past the odd
    variables of ``left`` with a larger index."""
    swaps = 0
    odd_left_above = 0
    # walk indices from the top down, counting odd left factors already passed
    for i in range(len(parities) - 1, -1, -1):
        if parities[i]:
            if right[i]:
                swaps += odd_left_above
            if left[i]:
                odd_left_above += 1
    return -1 if swaps & 1 else 1


@dataclass(frozen=True)
class TruncatedSeries:
    """A power series known exactly through total degree ``order``."""

    vars: VariableSpec
    order: int
    terms: Mapping[MultiIndex, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 0:
            raise SeriesError("order must be non-negative")
        clean = {}
        k = self.vars.count
        for exp, c in self.terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != k or any(e < 0 for e in exp):
                raise SeriesError(f"bad multi-index {exp}")
            if sum(exp) > self.order:
                continue
            if any(e > 1 for e, p in zip(exp, self.vars.parities) if p):
                continue
            c = _as_fraction(c)
            if c:
                clean[exp] = c
        object.__setattr__(self, "terms", clean)

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls, vars: VariableSpec, order: int) -> "TruncatedSeries":
        return cls(vars, order, {})

    @classmethod
    def constant(cls, vars: VariableSpec, order: int, c) -> "TruncatedSeries":
        return cls(vars, order, {(0,) * vars.count: c})

    @classmethod
    def variable(cls, vars: VariableSpec, order: int, i: int, coeff=1) -> "TruncatedSeries":
        exp = [0] * vars.count
        exp[i] = 1
        return cls(vars, order, {tuple(exp): coeff})

    @classmethod
    def monomial(cls, vars: VariableSpec, order: int, exp: Iterable[int], coeff=1) -> "TruncatedSeries":
        return cls(vars, order, {tuple(exp): coeff})

    # -- basic queries ----------------------------------------------------

    @property
    def nvars(self) -> int:
        return self.vars.count

    def coeff(self, exp: Iterable[int]) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> Fraction:
        return self.coeff((0,) * self.nvars)

    def min_degree(self) -> int | None:
        """Lowest total degree carrying a nonzero coefficient."""
        if not self.terms:
            return None
        return min(sum(e) for e in self.terms)

    def sorted_terms(self) -> list[tuple[MultiIndex, Fraction]]:
        """Terms in graded lexicographic order (degree, then exponents)."""
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), tuple(-e for e in t[0])))

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise SeriesError("cannot raise the order of a truncated series")
        return TruncatedSeries(self.vars, order, self.terms)

    def drop_degrees_upto(self, degree: int) -> "TruncatedSeries":
        """Discard every term of total degree <= ``degree``."""
        return TruncatedSeries(
            self.vars, self.order, {e: c for e, c in self.terms.items() if sum(e) > degree}
        )

    def audit(self) -> None:
        """Raise if any structural invariant is broken."""
        for exp, c in self.terms.items():
            assert c != 0, "stored zero coefficient"
            assert sum(exp) <= self.order, "term above truncation order"
            assert len(exp) == self.nvars
            for e, p in zip(exp, self.vars.parities):
                assert e >= 0 and (not p or e <= 1)

    # -- arithmetic -------------------------------------------------------

    def _check(self, other: "TruncatedSeries") -> None:
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"expected TruncatedSeries, got {type(other).__name__}")
        if other.vars != self.vars:
            raise SeriesError("variable-spec mismatch")

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return other
        return TruncatedSeries.constant(self.vars, self.order, _as_fraction(other))

    def __add__(self, other) -> "TruncatedSeries":
        other = self._coerce(other)
        order = min(self.order, other.order)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return TruncatedSeries(self.vars, order, out)

    __radd__ = __add__

    def __neg__(self) -> "TruncatedSeries":
        return TruncatedSeries(self.vars, self.order, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "TruncatedSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "TruncatedSeries":
        return self._coerce(other) - self

    def scale(self, c) -> "TruncatedSeries":
        c = _as_fraction(c)
        return TruncatedSeries(self.vars, self.order, {e: c * v for e, v in self.terms.items()})

    def _by_degree(self) -> dict[int, list[tuple[MultiIndex, Fraction]]]:
        buckets: dict[int, list] = defaultdict(list)
        for e, c in self.terms.items():
            buckets[sum(e)].append((e, c))
        return buckets

    def __mul__(self, other) -> "TruncatedSeries":
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        self._check(other)
        order = min(self.order, other.order)
        par = self.vars.parities
        odd = any(par)
        out: dict[MultiIndex, Fraction] = defaultdict(Fraction)
        left, right = self._by_degree(), other._by_degree()
        for dl, lterms in left.items():
            for dr, rterms in right.items():
                if dl + dr > order:
                    continue
                for el, cl in lterms:
                    for er, cr in rterms:
                        exp = tuple(a + b for a, b in zip(el, er))
                        if odd:
                            if any(e > 1 for e, p in zip(exp, par) if p):
                                continue
                            out[exp] += _koszul_sign(el, er, par) * cl * cr
                        else:
                            out[exp] += cl * cr
        return TruncatedSeries(self.vars, order, out)

    def __rmul__(self, other) -> "TruncatedSeries":
        return self.scale(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.vars == other.vars and self.order == other.order and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, self.order, frozenset(self.terms.items())))

    def equal_through(self, other: "TruncatedSeries", order: int | None = None) -> bool:
        """Coefficientwise equality through ``order`` (default: common order)."""
        self._check(other)
        if order is None:
            order = min(self.order, other.order)
        keys = set(self.terms) | set(other.terms)
        return all(self.coeff(e) == other.coeff(e) for e in keys if sum(e) <= order)

    def __repr__(self) -> str:
        return f"TruncatedSeries({self.to_string()}, order={self.order})"

    def to_string(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = [f"x{i}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for exp, c in self.sorted_terms():
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(exp) if e
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    # -- calculus ---------------------------------------------------------

    def partial(self, var: int) -> "TruncatedSeries":
        """Left partial derivative; the result is known through order - 1."""
        if not 0 <= var < self.nvars:
            raise SeriesError(f"variable index {var} out of range")
        if self.order == 0:
            raise SeriesError("cannot differentiate an order-0 series")
        par = self.vars.parities
        out = {}
        for exp, c in self.terms.items():
            e = exp[var]
            if not e:
                continue
            sign = 1
            if par[var]:
                # move the odd variable to the front past preceding odd factors
                passed = sum(exp[j] for j in range(var) if par[j])
                sign = -1 if passed & 1 else 1
            new = list(exp)
            new[var] -= 1
            out[tuple(new)] = sign * e * c
        return TruncatedSeries(self.vars, self.order - 1, out)

    def antiderivative(self, var: int, max_order: int | None = None) -> "TruncatedSeries":
        """Antiderivative in an even variable with zero integration constant."""
        if not 0 <= var < self.nvars:
            raise SeriesError(f"variable index {var} out of range")
        if self.vars.parities[var]:
            raise SeriesError("antiderivative in an odd variable is not defined")
        order = self.order + 1
        if max_order is not None:
            order = min(order, max_order)
        out = {}
        for exp, c in self.terms.items():
            new = list(exp)
            new[var] += 1
            out[tuple(new)] = c / new[var]
        return TruncatedSeries(self.vars, order, out)

    def restrict_zero(self, variables: Iterable[int]) -> "TruncatedSeries":
        """Set the listed variables to zero."""
        vs = list(variables)
        return TruncatedSeries(
            self.vars, self.order, {e: c for e, c in self.terms.items() if not any(e[v] for v in vs)}
        )

    def eval_complex(self, point: Sequence[complex]) -> complex:
        if not self.vars.all_even:
            raise SeriesError("cannot evaluate a series with odd variables")
        if len(point) != self.nvars:
            raise SeriesError("point has the wrong length")
        pt = [complex(z) for z in point]
        total = 0j
        for exp, c in self.terms.items():
            m = complex(c)
            for z, e in zip(pt, exp):
                if e:
                    m *= z**e
            total += m
        if not (math.isfinite(total.real) and math.isfinite(total.imag)):
            raise SeriesError("non-finite evaluation result")
        return total

    # -- serialization ----------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "vars": self.nvars,
            "parities": list(self.vars.parities),
            "order": self.order,
            "terms": [
                {"exp": list(e), "num": str(c.numerator), "den": str(c.denominator)}
                for e, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "TruncatedSeries":
        try:
            k = int(doc["vars"])
            parities = tuple(int(p) for p in doc.get("parities", [EVEN] * k))
            order = int(doc["order"])
            terms = {}
            for t in doc["terms"]:
                exp = tuple(int(e) for e in t["exp"])
                if exp in terms:
                    raise SeriesError(f"duplicate term {exp}")
                terms[exp] = Fraction(int(t["num"]), int(t.get("den", "1")))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise SeriesError(f"malformed series document: {exc}") from exc
        for exp in terms:
            if len(exp) != k:
                raise SeriesError(f"multi-index {exp} has the wrong length")
            if sum(exp) > order:
                raise SeriesError(f"term {exp} exceeds the declared order")
        return cls(VariableSpec(k, parities), order, terms)

    def dumps(self) -> str:
        return json.dumps(self.to_doc())

    @classmethod
    def loads(cls, text: str) -> "TruncatedSeries":
        return cls.from_doc(json.loads(text))


def add(s: TruncatedSeries, t: TruncatedSeries) -> TruncatedSeries:
    s._check(t)
    return s + t


def mul(s: TruncatedSeries, t: TruncatedSeries) -> TruncatedSeries:
    s._check(t)
    return s * t


def partial(s: TruncatedSeries, var: int) -> TruncatedSeries:
    return s.partial(var)


def antiderivative(s: TruncatedSeries, var: int) -> TruncatedSeries:
    return s.antiderivative(var)


def eval_complex(s: TruncatedSeries, point: Sequence[complex]) -> complex:
    return s.eval_complex(point)


def exp_series(vars: VariableSpec, order: int, var: int, scale=1) -> TruncatedSeries:
    """exp(scale * x_var) expanded through ``order``."""
    scale = _as_fraction(scale)
    terms = {}
    for k in range(order + 1):
        exp = [0] * vars.count
        exp[var] = k
        terms[tuple(exp)] = scale**k / math.factorial(k)
    return TruncatedSeries(vars, order, terms)
