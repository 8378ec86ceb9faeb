"""Ordered set partitions, the permutohedral fan, the concatenation algebra
of partition cycles and matrix-valued correlator series."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import linalg
from .potentials import ResidualReport, collect_residuals
from .series import TruncatedSeries, VariableSpec

MAX_ENUMERATE = 7
MAX_FAN = 6
MAX_VERIFY = 4


class FanError(ValueError):
    pass


# -- ordered partitions --------------------------------------------------------


@dataclass(frozen=True, order=True)
class OrderedPartition:
    """Parts are stored as sorted tuples of elements of {1..n}."""

    parts: tuple[tuple[int, ...], ...]
    n: int = field(compare=False, default=0)

    def __post_init__(self):
        parts = tuple(tuple(sorted(p)) for p in self.parts)
        n = self.n or sum(len(p) for p in parts)
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "n", n)
        seen = [x for p in parts for x in p]
        if any(len(p) == 0 for p in parts):
            raise FanError("empty part")
        if sorted(seen) != list(range(1, n + 1)):
            raise FanError(f"parts {parts} do not partition 1..{n}")

    @classmethod
    def of(cls, *parts: Iterable[int]) -> "OrderedPartition":
        return cls(tuple(tuple(p) for p in parts))

    def __len__(self) -> int:
        return len(self.parts)

    def concat(self, other: "OrderedPartition") -> "OrderedPartition":
        """Append other's parts shifted by n."""
        moved = tuple(tuple(x + self.n for x in p) for p in other.parts)
        return OrderedPartition(self.parts + moved, self.n + other.n)

    def to_doc(self) -> list[list[int]]:
        return [list(p) for p in self.parts]

    @classmethod
    def from_doc(cls, doc) -> "OrderedPartition":
        return cls(tuple(tuple(int(x) for x in p) for p in doc))

    def __str__(self) -> str:
        return "(" + ",".join("{" + ",".join(map(str, p)) + "}" for p in self.parts) + ")"


def _set_partitions(elems: tuple[int, ...]):
    if not elems:
        yield []
        return
    first, rest = elems[0], elems[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [(first,) + part[i]] + part[i + 1:]
        yield [(first,)] + part


def enumerate_partitions(n: int) -> list[OrderedPartition]:
    """All ordered set partitions of {1..n}, by part count then lexicographic."""
    if not 1 <= n <= MAX_ENUMERATE:
        raise FanError(f"n must be in 1..{MAX_ENUMERATE}")
    out = set()
    for unordered in _set_partitions(tuple(range(1, n + 1))):
        for perm in itertools.permutations(unordered):
            out.add(OrderedPartition(tuple(perm), n))
    return sorted(out, key=lambda t: (len(t), t.parts))


def fubini(n: int) -> int:
    """Ordered set partition count via the standard recurrence."""
    a = [1]
    for m in range(1, n + 1):
        a.append(sum(math.comb(m, k) * a[m - k] for k in range(1, m + 1)))
    return a[n]


@dataclass(frozen=True)
class TwoPartitionFamily:
    sigmas: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    n: int

    def reconstruct(self) -> OrderedPartition:
        """Recover the source partition from successive differences."""
        if not self.sigmas:
            return OrderedPartition((tuple(range(1, self.n + 1)),), self.n)
        parts = []
        prev: set[int] = set()
        for first, _ in self.sigmas:
            parts.append(tuple(sorted(set(first) - prev)))
            prev = set(first)
        parts.append(tuple(sorted(set(range(1, self.n + 1)) - prev)))
        return OrderedPartition(tuple(parts), self.n)


def good_family(tau: OrderedPartition) -> TwoPartitionFamily:
    sig = []
    for a in range(1, len(tau)):
        first = tuple(sorted(x for p in tau.parts[:a] for x in p))
        second = tuple(sorted(x for p in tau.parts[a:] for x in p))
        sig.append((first, second))
    return TwoPartitionFamily(tuple(sig), tau.n)


# -- fan -----------------------------------------------------------------------


def indicator(subset: Iterable[int], n: int) -> tuple[int, ...]:
    """chi_S reduced modulo the diagonal so that coordinate n is 0."""
    s = set(subset)
    v = [1 if i in s else 0 for i in range(1, n + 1)]
    if v[-1]:
        v = [x - 1 for x in v]
    return tuple(v)


@dataclass(frozen=True)
class Cone:
    label: OrderedPartition
    generators: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.generators)

    def to_doc(self) -> dict:
        return {"label": self.label.to_doc(), "generators": [list(g) for g in self.generators]}

    @classmethod
    def from_doc(cls, doc) -> "Cone":
        return cls(OrderedPartition.from_doc(doc["label"]), tuple(tuple(int(x) for x in g) for g in doc["generators"]))


def cone_of(tau: OrderedPartition) -> Cone:
    gens = tuple(indicator(first, tau.n) for first, _ in good_family(tau).sigmas)
    return Cone(tau, gens)


@dataclass(frozen=True)
class Fan:
    n: int
    cones: tuple[Cone, ...]

    @property
    def maximal(self) -> list[Cone]:
        return [c for c in self.cones if c.dim == self.n - 1]

    def cone(self, tau: OrderedPartition) -> Cone:
        return self._index()[tau]

    def _index(self) -> dict:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {c.label: c for c in self.cones}
            object.__setattr__(self, "_idx", idx)
        return idx

    def to_doc(self) -> dict:
        return {"n": self.n, "cones": [c.to_doc() for c in self.cones]}

    @classmethod
    def from_doc(cls, doc) -> "Fan":
        return cls(int(doc["n"]), tuple(Cone.from_doc(c) for c in doc["cones"]))


def _reduced(gens: Sequence[Sequence[int]]) -> list[list[Fraction]]:
    # last coordinate is identically zero after normalization
    return [[Fraction(x) for x in g[:-1]] for g in gens]


def build_fan(n: int) -> Fan:
    if not 1 <= n <= MAX_FAN:
        raise FanError(f"fan construction is capped at n <= {MAX_FAN}")
    cones = []
    for tau in enumerate_partitions(n):
        c = cone_of(tau)
        if c.generators and linalg.rank(_reduced(c.generators)) != c.dim:
            raise FanError(f"rank defect in cone {tau}")
        cones.append(c)
    return Fan(n, tuple(cones))


def locate(v: Sequence[int], fan: Fan | None = None) -> OrderedPartition:
    """Level sets of v by decreasing value."""
    n = len(v)
    if fan is not None and fan.n != n:
        raise FanError("vector length does not match the fan")
    levels = sorted(set(v), reverse=True)
    return OrderedPartition(tuple(tuple(i + 1 for i in range(n) if v[i] == lv) for lv in levels), n)


@dataclass(frozen=True)
class Membership:
    """v - v_n (1,..,1) = sum coeffs[a] generators[a]."""

    cone: Cone
    coeffs: tuple[Fraction, ...] | None

    @property
    def contains(self) -> bool:
        return self.coeffs is not None and all(c >= 0 for c in self.coeffs)

    @property
    def interior(self) -> bool:
        return self.coeffs is not None and all(c > 0 for c in self.coeffs)


def _normalize(v: Sequence[int]) -> list[Fraction]:
    return [Fraction(x - v[-1]) for x in v]


def conic_membership(v: Sequence[int], cone: Cone) -> Membership:
    """Exact coefficients of v in the generator basis of the cone, verified
    by recombination. ``coeffs`` is None when v is outside the span."""
    w = _normalize(v)
    if not cone.generators:
        return Membership(cone, () if all(x == 0 for x in w) else None)
    cols = linalg.transpose(_reduced(cone.generators))
    sol = linalg.solve(cols, w[:-1])
    if sol is None:
        return Membership(cone, None)
    back = [sum((c * g[i] for c, g in zip(sol, cone.generators)), Fraction(0)) for i in range(len(w))]
    if back != w:
        return Membership(cone, None)
    return Membership(cone, tuple(sol))


class MaximalConeIndex:
    """Precomputed exact inverses of the maximal cones for fast certificates."""

    def __init__(self, fan: Fan):
        self.fan = fan
        self._inv = []
        for c in fan.maximal:
            m = linalg.transpose(_reduced(c.generators))
            self._inv.append((c, linalg.inverse(m)))

    def certificates(self, v: Sequence[int]) -> list[Membership]:
        w = _normalize(v)[:-1]
        out = []
        for cone, inv in self._inv:
            coeffs = tuple(linalg.matvec(inv, w))
            if all(c >= 0 for c in coeffs):
                out.append(Membership(cone, coeffs))
        return out


def verify_faces(fan: Fan) -> list[tuple[OrderedPartition, OrderedPartition]]:
    """Pairs of cones whose intersection is not the cone on their shared
    generators, found by exact linear programming. Empty means the fan
    axiom holds."""
    from sympy import Matrix
    from sympy.solvers.simplex import linprog

    if fan.n > MAX_VERIFY:
        raise FanError(f"face verification is capped at n <= {MAX_VERIFY}")
    bad = []
    cones = [c for c in fan.cones if c.generators]
    dim = fan.n - 1
    for c1, c2 in itertools.combinations(cones, 2):
        shared = set(c1.generators) & set(c2.generators)
        g1 = [g for g in c1.generators]
        g2 = [g for g in c2.generators]
        cols = [list(g[:dim]) for g in g1] + [[-x for x in g[:dim]] for g in g2]
        k = len(cols)
        aeq = Matrix(dim, k, lambda i, j: cols[j][i])
        weight = [0 if g in shared else -1 for g in g1] + [0 if g in shared else -1 for g in g2]
        if all(w == 0 for w in weight):
            continue
        best, _ = linprog(Matrix([weight]), Matrix([[1] * k]), Matrix([1]), aeq, Matrix([0] * dim))
        if best != 0:
            bad.append((c1.label, c2.label))
    return bad


# -- partition homology --------------------------------------------------------


@dataclass(frozen=True)
class HClass:
    """Finite rational combination of partition cycles mu(tau)."""

    terms: Mapping[OrderedPartition, Fraction]

    def __post_init__(self):
        clean = {k: Fraction(v) for k, v in dict(self.terms).items() if v != 0}
        object.__setattr__(self, "terms", clean)

    @classmethod
    def mu(cls, tau: OrderedPartition, coeff=1) -> "HClass":
        return cls({tau: Fraction(coeff)})

    @property
    def grades(self) -> set[int]:
        return {t.n for t in self.terms}

    def __add__(self, other: "HClass") -> "HClass":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + v
        return HClass(out)

    def scale(self, c) -> "HClass":
        return HClass({k: v * c for k, v in self.terms.items()})

    def __mul__(self, other: "HClass") -> "HClass":
        return h_product(self, other)

    def __eq__(self, other) -> bool:
        return isinstance(other, HClass) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def to_doc(self) -> list:
        return [{"partition": t.to_doc(), "coeff": str(c)} for t, c in sorted(self.terms.items())]

    @classmethod
    def from_doc(cls, doc) -> "HClass":
        return cls({OrderedPartition.from_doc(e["partition"]): Fraction(e["coeff"]) for e in doc})


def h_product(x: HClass, y: HClass) -> HClass:
    out: dict[OrderedPartition, Fraction] = {}
    for t1, c1 in x.terms.items():
        for t2, c2 in y.terms.items():
            t = t1.concat(t2)
            out[t] = out.get(t, Fraction(0)) + c1 * c2
    return HClass(out)


# -- correlators ---------------------------------------------------------------


def _matrix_parity(m: Sequence[Sequence[Fraction]], parities: Sequence[int]) -> int | None:
    """Parity of a homogeneous operator, None if mixed; 0 for the zero matrix."""
    found = set()
    for i, row in enumerate(m):
        for j, x in enumerate(row):
            if x != 0:
                found.add((parities[i] + parities[j]) % 2)
    if len(found) > 1:
        return None
    return found.pop() if found else 0


def _reorder_sign(labels: Sequence[int], parities: Sequence[int]) -> int:
    odd = [a for a in labels if parities[a]]
    inv = sum(1 for i in range(len(odd)) for j in range(i + 1, len(odd)) if odd[i] > odd[j])
    return -1 if inv & 1 else 1


@dataclass
class CorrelatorFamily:
    """Top correlators: label tuple -> operator matrix on T."""

    parities: tuple[int, ...]
    entries: dict[tuple[int, ...], list[list[Fraction]]]

    def __post_init__(self):
        self.parities = tuple(int(p) % 2 for p in self.parities)
        self.entries = {
            tuple(k): [[Fraction(x) for x in row] for row in m] for k, m in self.entries.items()
        }
        d = self.dim
        for k, m in self.entries.items():
            if len(m) != d or any(len(r) != d for r in m):
                raise FanError(f"correlator {k} is not {d}x{d}")
            if any(not 0 <= a < d for a in k):
                raise FanError(f"label out of range in {k}")
            want = sum(self.parities[a] for a in k) % 2
            got = _matrix_parity(m, self.parities)
            if got is not None and any(x != 0 for r in m for x in r) and got != want:
                raise FanError(f"parity violation in correlator {k}")
            if got is None:
                raise FanError(f"correlator {k} is not homogeneous")

    @property
    def dim(self) -> int:
        return len(self.parities)

    def get(self, labels: tuple[int, ...]) -> list[list[Fraction]]:
        """Entry for labels, falling back to any stored permutation
        (Koszul sign for odd labels)."""
        if labels in self.entries:
            return self.entries[labels]
        for perm in itertools.permutations(range(len(labels))):
            key = tuple(labels[i] for i in perm)
            if key in self.entries:
                s = _perm_sign(labels, perm, self.parities)
                return [[s * x for x in row] for row in self.entries[key]]
        raise FanError(f"missing correlator for labels {labels}")

    @classmethod
    def constant_algebra(cls, structure, order: int, parities: Sequence[int] | None = None) -> "CorrelatorFamily":
        """Correlators L_{a_1} ... L_{a_n} from constant structure constants
        S[a][b][c] (d_a o d_b = sum_c S[a][b][c] d_c)."""
        d = len(structure)
        par = tuple(parities or (0,) * d)
        mats = [[[Fraction(structure[a][b][c]) for b in range(d)] for c in range(d)] for a in range(d)]
        ent = {}
        for k in range(1, order + 1):
            for labels in itertools.product(range(d), repeat=k):
                m = linalg.identity(d)
                for a in labels:
                    m = linalg.matmul(m, mats[a])
                ent[labels] = m
        return cls(par, ent)

    def to_doc(self) -> dict:
        return {
            "parities": list(self.parities),
            "entries": [
                {"labels": list(k), "matrix": [[str(x) for x in r] for r in m]}
                for k, m in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_doc(cls, doc) -> "CorrelatorFamily":
        ent = {tuple(e["labels"]): [[Fraction(x) for x in r] for r in e["matrix"]] for e in doc["entries"]}
        return cls(tuple(doc["parities"]), ent)


def _perm_sign(labels, perm, parities) -> int:
    """Koszul sign of moving labels into the order given by perm."""
    s = 1
    seq = list(perm)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j] and parities[labels[seq[i]]] and parities[labels[seq[j]]]:
                s = -s
    return s


def correlator_series(fam: CorrelatorFamily, order: int) -> list[list[TruncatedSeries]]:
    """C = sum_n sum_{a_1..a_n} x^{a_n}...x^{a_1}/n! <D_{a_1}...D_{a_n}>."""
    d = fam.dim
    vars = VariableSpec(d, fam.parities)
    acc = [[dict() for _ in range(d)] for _ in range(d)]
    for k in range(1, order + 1):
        w = Fraction(1, math.factorial(k))
        for labels in itertools.product(range(d), repeat=k):
            exp = [0] * d
            for a in labels:
                exp[a] += 1
            if any(fam.parities[a] and exp[a] > 1 for a in range(d)):
                continue
            m = fam.get(labels)
            sign = _reorder_sign(tuple(reversed(labels)), fam.parities)
            key = tuple(exp)
            for i in range(d):
                for j in range(d):
                    if m[i][j]:
                        acc[i][j][key] = acc[i][j].get(key, Fraction(0)) + sign * w * m[i][j]
    return [[TruncatedSeries(vars, order, acc[i][j]) for j in range(d)] for i in range(d)]


def _mat_mul(x, y):
    d = len(x)
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            s = None
            for k in range(d):
                if x[i][k].is_zero() or y[k][j].is_zero():
                    continue
                t = x[i][k] * y[k][j]
                s = t if s is None else s + t
            row.append(s if s is not None else TruncatedSeries.zero(x[0][0].vars, x[0][0].order))
        out.append(row)
    return out


def flatness_check(c: Sequence[Sequence[TruncatedSeries]]) -> ResidualReport:
    """Graded commutators of the partials of an End-valued series."""
    if any(s.constant_term() != 0 for row in c for s in row):
        raise FanError("flatness check needs a series with zero constant term")
    vars = c[0][0].vars
    par = vars.parities
    parts = [[[s.partial(a) for s in row] for row in c] for a in range(vars.count)]

    def residuals():
        for a, b in itertools.combinations(range(vars.count), 2):
            ab = _mat_mul(parts[a], parts[b])
            ba = _mat_mul(parts[b], parts[a])
            sgn = -1 if par[a] and par[b] else 1
            for i, row in enumerate(ab):
                for j, s in enumerate(row):
                    yield (a, b, i, j), s - ba[i][j].scale(sgn)

    return collect_residuals("flatness", residuals())
