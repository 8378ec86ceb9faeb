"""Jet-level checks of associativity potentials and related structures.

Everything here works in flat coordinates x^0..x^{d-1}: a vector field is
the list of its coefficients on the coordinate fields, a multiplication
is a structure tensor ``C[a][b][c]`` with d_a o d_b = sum_c C[a][b][c] d_c,
and every identity is checked exactly on truncated series.  A residual
report records the total degree through which the result is certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

from fforge import linalg
from fforge.series import SeriesError, TruncatedSeries, VariableSpec


class PotentialError(ValueError):
    pass


def _sign(k: int) -> int:
    return -1 if k & 1 else 1


# -- reports -----------------------------------------------------------------


@dataclass
class ResidualReport:
    """Summary of a family of residual series.

    ``order`` is the total degree through which every residual is exact.
    A report is zero when no residual carries a nonzero coefficient through
    that order.
    """

    name: str
    order: int
    max_abs: Fraction = Fraction(0)
    first_defect_degree: int | None = None
    location: tuple | None = None
    checked: int = 0

    @property
    def zero(self) -> bool:
        return self.first_defect_degree is None

    def summary(self) -> str:
        if self.zero:
            return f"{self.name}: zero to order {self.order}"
        idx, mono, coeff = self.location
        return (
            f"{self.name}: nonzero, first defect at degree {self.first_defect_degree} "
            f"(index {idx}, monomial {mono}, coefficient {coeff}); max |coeff| {self.max_abs}"
        )

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "zero": self.zero,
            "order": self.order,
            "max_abs": str(self.max_abs),
            "first_defect_degree": self.first_defect_degree,
            "location": None
            if self.location is None
            else {"index": list(self.location[0]), "monomial": list(self.location[1]),
                  "coefficient": str(self.location[2])},
        }


def collect_residuals(name: str, residuals: Iterable[tuple[tuple, TruncatedSeries]],
                      ignore_upto: int = -1) -> ResidualReport:
    """Build a report from (index, series) pairs; terms of total degree
    <= ``ignore_upto`` are discarded."""
    report = None
    count = 0
    best = None
    max_abs = Fraction(0)
    order = None
    for idx, s in residuals:
        count += 1
        order = s.order if order is None else min(order, s.order)
        for exp, c in s.terms.items():
            deg = sum(exp)
            if deg <= ignore_upto:
                continue
            max_abs = max(max_abs, abs(c))
            key = (deg, idx, exp)
            if best is None or key < best[0]:
                best = (key, c)
    if order is None:
        order = 0
    report = ResidualReport(name, order, max_abs, checked=count)
    if best is not None:
        (deg, idx, exp), c = best
        report.first_defect_degree = deg
        report.location = (idx, exp, c)
    return report


# -- vector fields -----------------------------------------------------------


@dataclass(frozen=True)
class VectorFieldJet:
    components: tuple[TruncatedSeries, ...]
    parity: int = 0

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise PotentialError("a vector field needs at least one component")
        v = comps[0].vars
        if any(c.vars != v for c in comps):
            raise PotentialError("components must share their variables")
        if len(comps) != v.count:
            raise PotentialError("component count must equal the number of coordinates")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def vars(self) -> VariableSpec:
        return self.components[0].vars

    @property
    def order(self) -> int:
        return min(c.order for c in self.components)

    @classmethod
    def coordinate(cls, vars: VariableSpec, order: int, a: int) -> "VectorFieldJet":
        comps = [TruncatedSeries.constant(vars, order, int(i == a)) for i in range(vars.count)]
        return cls(tuple(comps), vars.parities[a])

    @classmethod
    def from_series(cls, comps: Sequence[TruncatedSeries], parity: int = 0) -> "VectorFieldJet":
        return cls(tuple(comps), parity)

    def __add__(self, other: "VectorFieldJet") -> "VectorFieldJet":
        return VectorFieldJet(tuple(x + y for x, y in zip(self.components, other.components)), self.parity)

    def __sub__(self, other: "VectorFieldJet") -> "VectorFieldJet":
        return VectorFieldJet(tuple(x - y for x, y in zip(self.components, other.components)), self.parity)

    def scale(self, c) -> "VectorFieldJet":
        return VectorFieldJet(tuple(x.scale(c) for x in self.components), self.parity)

    def apply(self, f: TruncatedSeries) -> TruncatedSeries:
        """X(f) = sum_a X^a d_a f."""
        out = None
        for a, xa in enumerate(self.components):
            if xa.is_zero():
                continue
            term = xa * f.partial(a)
            out = term if out is None else out + term
        if out is None:
            return TruncatedSeries.zero(f.vars, min(self.order, f.order - 1))
        return out

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)


def lie_bracket(x: VectorFieldJet, y: VectorFieldJet) -> VectorFieldJet:
    s = _sign(x.parity * y.parity)
    comps = tuple(x.apply(yc) - y.apply(xc).scale(s) for xc, yc in zip(x.components, y.components))
    return VectorFieldJet(comps, (x.parity + y.parity) % 2)


# -- structure tensors -------------------------------------------------------


@dataclass(frozen=True)
class StructureTensor:
    """entries[a][b][c] = C_ab^c."""

    entries: tuple
    identity_index: int | None = None

    def __post_init__(self):
        ent = tuple(tuple(tuple(row) for row in plane) for plane in self.entries)
        d = len(ent)
        if d == 0 or any(len(p) != d or any(len(r) != d for r in p) for p in ent):
            raise PotentialError("structure tensor must be d x d x d")
        v = ent[0][0][0].vars
        if v.count != d:
            raise PotentialError("tensor dimension must equal the number of coordinates")
        for p in ent:
            for r in p:
                for s in r:
                    if s.vars != v:
                        raise PotentialError("entries must share their variables")
        object.__setattr__(self, "entries", ent)

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def vars(self) -> VariableSpec:
        return self.entries[0][0][0].vars

    @property
    def order(self) -> int:
        return min(s.order for p in self.entries for r in p for s in r)

    def __getitem__(self, idx):
        a, b, c = idx
        return self.entries[a][b][c]

    @classmethod
    def constant(cls, structure, order: int = 4, parities: Sequence[int] | None = None,
                 identity_index: int | None = None) -> "StructureTensor":
        """Tensor with constant entries taken from a d x d x d array."""
        d = len(structure)
        vars = VariableSpec(d, tuple(parities) if parities else (0,) * d)
        ent = [[[TruncatedSeries.constant(vars, order, Fraction(structure[a][b][c]))
                 for c in range(d)] for b in range(d)] for a in range(d)]
        return cls(ent, identity_index)

    def matrix(self, a: int) -> list[list[TruncatedSeries]]:
        """Operator of multiplication by d_a: column b holds d_a o d_b."""
        d = self.dim
        return [[self.entries[a][b][c] for b in range(d)] for c in range(d)]

    def is_supersymmetric(self) -> bool:
        par = self.vars.parities
        d = self.dim
        return all(
            self.entries[a][b][c] == self.entries[b][a][c].scale(_sign(par[a] * par[b]))
            for a in range(d) for b in range(d) for c in range(d)
        )

    def product(self, x: VectorFieldJet, y: VectorFieldJet) -> VectorFieldJet:
        """X o Y with Koszul signs for odd coordinates."""
        d = self.dim
        par = self.vars.parities
        order = min(self.order, x.order, y.order)
        comps = [TruncatedSeries.zero(self.vars, order) for _ in range(d)]
        for a in range(d):
            xa = x.components[a]
            if xa.is_zero():
                continue
            for b in range(d):
                yb = y.components[b]
                if yb.is_zero():
                    continue
                sign = _sign(par[a] * ((y.parity + par[b]) % 2))
                coeff = (xa * yb).scale(sign)
                for c in range(d):
                    entry = self.entries[a][b][c]
                    if not entry.is_zero():
                        comps[c] = comps[c] + coeff * entry
        return VectorFieldJet(tuple(comps), (x.parity + y.parity) % 2)

    # -- documents --

    def to_doc(self) -> dict:
        d = self.dim
        return {
            "dim": d,
            "entries": [
                {"a": a, "b": b, "c": c, "series": self.entries[a][b][c].to_doc()}
                for a in range(d) for b in range(d) for c in range(d)
            ],
        }

    @classmethod
    def from_doc(cls, doc) -> "StructureTensor":
        try:
            d = int(doc["dim"])
            cells = {}
            for e in doc["entries"]:
                cells[(int(e["a"]), int(e["b"]), int(e["c"]))] = TruncatedSeries.from_doc(e["series"])
        except (KeyError, TypeError, ValueError, SeriesError) as exc:
            raise PotentialError(f"malformed tensor document: {exc}") from exc
        if not cells:
            raise PotentialError("tensor document has no entries")
        proto = next(iter(cells.values()))
        ent = [[[cells.get((a, b, c), TruncatedSeries.zero(proto.vars, proto.order))
                 for c in range(d)] for b in range(d)] for a in range(d)]
        return cls(ent)


def structure_identity_residual(mult: StructureTensor) -> ResidualReport:
    """P_{X o Y}(Z,U) - X o P_Y(Z,U) - (-1)^{XY} Y o P_X(Z,U) on coordinate fields."""
    d = mult.dim
    par = mult.vars.parities
    order = mult.order
    basis = [VectorFieldJet.coordinate(mult.vars, order, a) for a in range(d)]

    @lru_cache(maxsize=None)
    def prod(a, b):
        return mult.product(basis[a], basis[b])

    @lru_cache(maxsize=None)
    def p_basis(x, z, u):
        return poisson_tensor(basis[x], basis[z], basis[u], mult)

    def residuals():
        for x, y, z, u in product(range(d), repeat=4):
            lhs = poisson_tensor(prod(x, y), basis[z], basis[u], mult)
            r1 = mult.product(basis[x], p_basis(y, z, u))
            r2 = mult.product(basis[y], p_basis(x, z, u)).scale(_sign(par[x] * par[y]))
            res = lhs - r1 - r2
            for c, s in enumerate(res.components):
                yield (x, y, z, u, c), s

    return collect_residuals("structure_identity", residuals())


def poisson_tensor(x: VectorFieldJet, y: VectorFieldJet, z: VectorFieldJet,
                   mult: StructureTensor) -> VectorFieldJet:
    """P_X(Y,Z) = [X, Y o Z] - [X,Y] o Z - (-1)^{XY} Y o [X,Z]."""
    if not (x.dim == y.dim == z.dim == mult.dim):
        raise PotentialError("dimension mismatch")
    t1 = lie_bracket(x, mult.product(y, z))
    t2 = mult.product(lie_bracket(x, y), z)
    t3 = mult.product(y, lie_bracket(x, z)).scale(_sign(x.parity * y.parity))
    return t1 - t2 - t3


# -- potentials --------------------------------------------------------------


@dataclass(frozen=True)
class VectorPotential:
    components: tuple[TruncatedSeries, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        v = comps[0].vars
        if any(c.vars != v for c in comps) or len(comps) != v.count:
            raise PotentialError("vector potential needs one component per coordinate")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def vars(self) -> VariableSpec:
        return self.components[0].vars

    def as_field(self) -> VectorFieldJet:
        return VectorFieldJet(self.components, 0)


def structure_tensor_from_potential(pot: VectorPotential, identity_index: int | None = None) -> StructureTensor:
    d = pot.dim
    first = [[pot.components[c].partial(b) for c in range(d)] for b in range(d)]
    ent = [[[first[b][c].partial(a) for c in range(d)] for b in range(d)] for a in range(d)]
    return StructureTensor(ent, identity_index)


def double_bracket_product(pot: VectorPotential, a: int, b: int) -> VectorFieldJet:
    """[d_a, [d_b, C]] computed with Lie brackets."""
    v = pot.vars
    order = min(c.order for c in pot.components)
    da = VectorFieldJet.coordinate(v, order, a)
    db = VectorFieldJet.coordinate(v, order, b)
    return lie_bracket(da, lie_bracket(db, pot.as_field()))


def oriented_associativity_residual(pot: VectorPotential | StructureTensor) -> ResidualReport:
    """sum_e C_ab^e C_ec^f - (-1)^{a(b+c)} sum_e C_bc^e C_ea^f."""
    t = pot if isinstance(pot, StructureTensor) else structure_tensor_from_potential(pot)
    d = t.dim
    par = t.vars.parities

    @lru_cache(maxsize=None)
    def chain(a, b, c, f):
        out = None
        for e in range(d):
            x, y = t[a, b, e], t[e, c, f]
            if x.is_zero() or y.is_zero():
                continue
            term = x * y
            out = term if out is None else out + term
        if out is None:
            return TruncatedSeries.zero(t.vars, t.order)
        return out

    def residuals():
        for a, b, c, f in product(range(d), repeat=4):
            s = _sign(par[a] * (par[b] + par[c]))
            yield (a, b, c, f), chain(a, b, c, f) - chain(b, c, a, f).scale(s)

    return collect_residuals("oriented_associativity", residuals())


@dataclass(frozen=True)
class FlatMetric:
    g: tuple
    g_inv: tuple

    @classmethod
    def from_matrix(cls, g: Sequence[Sequence]) -> "FlatMetric":
        gm = linalg.to_fractions(g)
        n = len(gm)
        if any(len(r) != n for r in gm):
            raise PotentialError("metric must be square")
        if any(gm[i][j] != gm[j][i] for i in range(n) for j in range(n)):
            raise PotentialError("metric must be symmetric")
        try:
            inv = linalg.inverse(gm)
        except ZeroDivisionError as exc:
            raise PotentialError("metric is not invertible") from exc
        return cls(tuple(map(tuple, gm)), tuple(map(tuple, inv)))

    @classmethod
    def antidiagonal(cls, d: int) -> "FlatMetric":
        return cls.from_matrix([[int(a + b == d - 1) for b in range(d)] for a in range(d)])

    @property
    def dim(self) -> int:
        return len(self.g)

    def to_doc(self) -> dict:
        return {"dim": self.dim, "g": [[str(x) for x in row] for row in self.g]}

    @classmethod
    def from_doc(cls, doc) -> "FlatMetric":
        try:
            d = int(doc["dim"])
            g = [[Fraction(str(x)) for x in row] for row in doc["g"]]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise PotentialError(f"malformed metric document: {exc}") from exc
        if len(g) != d:
            raise PotentialError("metric size does not match dim")
        return cls.from_matrix(g)


@dataclass(frozen=True)
class WdvvPotential:
    phi: TruncatedSeries
    metric: FlatMetric

    def __post_init__(self):
        if self.phi.nvars != self.metric.dim:
            raise PotentialError("potential and metric dimensions differ")

    @property
    def dim(self) -> int:
        return self.metric.dim

    def third_derivatives(self):
        return _ThirdDerivatives(self.phi)

    def vector_potential(self) -> VectorPotential:
        """C^a = sum_b d_b Phi g^{ba}."""
        d = self.dim
        grads = [self.phi.partial(b) for b in range(d)]
        comps = []
        for a in range(d):
            s = TruncatedSeries.zero(self.phi.vars, self.phi.order - 1)
            for b in range(d):
                if self.metric.g_inv[b][a]:
                    s = s + grads[b].scale(self.metric.g_inv[b][a])
            comps.append(s)
        return VectorPotential(tuple(comps))


class _ThirdDerivatives:
    def __init__(self, phi: TruncatedSeries):
        self.phi = phi
        self.even = phi.vars.all_even
        self._cache: dict = {}

    def __call__(self, a, b, c) -> TruncatedSeries:
        key = tuple(sorted((a, b, c))) if self.even else (a, b, c)
        if key not in self._cache:
            self._cache[key] = self.phi.partial(key[2]).partial(key[1]).partial(key[0])
        return self._cache[key]


def wdvv_residual(pot: WdvvPotential) -> ResidualReport:
    d = pot.dim
    par = pot.phi.vars.parities
    phi3 = pot.third_derivatives()
    ginv = pot.metric.g_inv
    zero = TruncatedSeries.zero(pot.phi.vars, max(pot.phi.order - 3, 0))

    @lru_cache(maxsize=None)
    def raised(a, b, f):
        # sum_e Phi_{abe} g^{ef}
        out = zero
        for e in range(d):
            if ginv[e][f]:
                out = out + phi3(a, b, e).scale(ginv[e][f])
        return out

    @lru_cache(maxsize=None)
    def lhs(a, b, c, dd):
        out = zero
        for f in range(d):
            r = raised(a, b, f)
            if r.is_zero():
                continue
            q = phi3(f, c, dd)
            if not q.is_zero():
                out = out + r * q
        return out

    def residuals():
        for a, b, c, dd in product(range(d), repeat=4):
            s = _sign(par[a] * (par[b] + par[c]))
            yield (a, b, c, dd), lhs(a, b, c, dd) - lhs(b, c, a, dd).scale(s)

    return collect_residuals("wdvv", residuals())


def flat_identity_residual(pot: WdvvPotential, e_index: int = 0) -> ResidualReport:
    d = pot.dim
    phi3 = pot.third_derivatives()

    def residuals():
        for a, b in product(range(d), repeat=2):
            yield (e_index, a, b), phi3(e_index, a, b) - pot.metric.g[a][b]

    return collect_residuals("flat_identity", residuals())


@dataclass(frozen=True)
class EulerData:
    E: VectorFieldJet
    d0: Fraction = Fraction(1)
    D: Fraction = Fraction(0)

    def __post_init__(self):
        if self.E.parity:
            raise PotentialError("an Euler field must be even")
        object.__setattr__(self, "d0", Fraction(self.d0))
        object.__setattr__(self, "D", Fraction(self.D))

    def is_affine(self) -> bool:
        return all(not c.terms or max(sum(e) for e in c.terms) <= 1 for c in self.E.components)


def affine_field(vars: VariableSpec, order: int, linear: Sequence[Sequence], const: Sequence) -> VectorFieldJet:
    """Field with components sum_b linear[a][b] x^b + const[a]."""
    d = vars.count
    comps = []
    for a in range(d):
        s = TruncatedSeries.constant(vars, order, Fraction(const[a]))
        for b in range(d):
            if linear[a][b]:
                s = s + TruncatedSeries.variable(vars, order, b, Fraction(linear[a][b]))
        comps.append(s)
    return VectorFieldJet(tuple(comps), 0)


def euler_residual(pot: WdvvPotential, euler: EulerData) -> ResidualReport:
    """E Phi - (d0 + D) Phi with all terms of total degree <= 2 discarded."""
    if not euler.is_affine():
        raise PotentialError("Euler field must be affine")
    phi = pot.phi
    e_phi = euler.E.apply(phi)
    res = e_phi - phi.scale(euler.d0 + euler.D)
    return collect_residuals("euler", [((), res)], ignore_upto=2)


# -- pencils and Higgs potentials --------------------------------------------


@dataclass(frozen=True)
class HiggsPencil:
    A: StructureTensor
    B: tuple | None = None
    normalization: Fraction = Fraction(1)

    def A_matrix(self, a: int):
        return self.A.matrix(a)


@dataclass
class PencilReport:
    closedness: ResidualReport
    wedge_square: ResidualReport

    @property
    def flat(self) -> bool:
        return self.closedness.zero and self.wedge_square.zero


def _matmul_series(x, y, zero):
    n = len(x)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            s = zero
            for k in range(n):
                if x[i][k].is_zero() or y[k][j].is_zero():
                    continue
                s = s + x[i][k] * y[k][j]
            row.append(s)
        out.append(row)
    return out


def pencil_flatness_residual(pencil: HiggsPencil) -> PencilReport:
    t = pencil.A
    d = t.dim
    par = t.vars.parities
    mats = [t.matrix(a) for a in range(d)]
    zero = TruncatedSeries.zero(t.vars, t.order)

    def closed():
        for a in range(d):
            for b in range(a + 1, d):
                for i in range(d):
                    for j in range(d):
                        s = _sign(par[a] * par[b])
                        yield (a, b, i, j), mats[b][i][j].partial(a) - mats[a][i][j].partial(b).scale(s)

    def wedge():
        for a in range(d):
            for b in range(a + 1, d):
                ab = _matmul_series(mats[a], mats[b], zero)
                ba = _matmul_series(mats[b], mats[a], zero)
                s = _sign(par[a] * par[b])
                for i in range(d):
                    for j in range(d):
                        yield (a, b, i, j), ab[i][j] - ba[i][j].scale(s)

    return PencilReport(collect_residuals("closedness", closed()),
                        collect_residuals("wedge_square", wedge()))


def higgs_potential(pencil: HiggsPencil) -> tuple:
    """Matrix B with d_a B = A_a and B(0) = 0."""
    t = pencil.A
    d = t.dim
    if not t.vars.all_even:
        raise PotentialError("Higgs potential is only built for even coordinates")
    if not pencil_flatness_residual(pencil).closedness.zero:
        raise PotentialError("not integrable")
    mats = [t.matrix(a) for a in range(d)]
    order = t.order
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            b = TruncatedSeries.zero(t.vars, order + 1)
            for k in range(d):
                piece = mats[k][i][j].restrict_zero(range(k))
                b = b + piece.antiderivative(k)
            row.append(b)
        out.append(tuple(row))
    for a in range(d):
        for i in range(d):
            for j in range(d):
                if not out[i][j].partial(a).equal_through(mats[a][i][j]):
                    raise PotentialError("not integrable")
    return tuple(out)


def with_higgs_potential(pencil: HiggsPencil) -> HiggsPencil:
    return HiggsPencil(pencil.A, higgs_potential(pencil), pencil.normalization)


@dataclass
class PrimitiveSectionCandidate:
    u: tuple
    Bu_jacobian: list[list[Fraction]]
    primitive: bool
    identity_jacobian: bool


def primitive_section_check(pencil: HiggsPencil, u: Sequence) -> PrimitiveSectionCandidate:
    """Jacobian at the origin of x -> B(x) u; primitive iff invertible."""
    if pencil.B is None:
        raise PotentialError("Higgs potential B is absent")
    u = tuple(Fraction(x) for x in u)
    if not any(u):
        raise PotentialError("u must be nonzero")
    d = pencil.A.dim
    if len(u) != d:
        raise PotentialError("u has the wrong length")
    origin = (0,) * d
    jac = []
    for c in range(d):
        row = []
        for a in range(d):
            val = sum((pencil.B[c][b].partial(a).coeff(origin) * u[b] for b in range(d)), Fraction(0))
            row.append(val)
        jac.append(row)
    primitive = linalg.rank(jac) == d
    return PrimitiveSectionCandidate(u, jac, primitive, jac == linalg.identity(d))


# -- Euler fields ------------------------------------------------------------


@dataclass
class EulerFieldReport:
    weight: Fraction
    poisson: ResidualReport
    flat_preserving: bool
    affine: bool

    @property
    def ok(self) -> bool:
        return self.poisson.zero and self.flat_preserving


def euler_field_conditions(mult: StructureTensor, euler: EulerData) -> EulerFieldReport:
    """P_E(X,Y) = d0 X o Y on coordinate fields and [E, d_a] constant."""
    d = mult.dim
    order = mult.order
    basis = [VectorFieldJet.coordinate(mult.vars, order, a) for a in range(d)]

    def residuals():
        for a, b in product(range(d), repeat=2):
            p = poisson_tensor(euler.E, basis[a], basis[b], mult)
            r = p - mult.product(basis[a], basis[b]).scale(euler.d0)
            for c, s in enumerate(r.components):
                yield (a, b, c), s

    flat = True
    for a in range(d):
        br = lie_bracket(euler.E, basis[a])
        if any(sum(e) > 0 for comp in br.components for e in comp.terms):
            flat = False
    return EulerFieldReport(euler.d0, collect_residuals("euler_poisson", residuals()),
                            flat, euler.is_affine())


@dataclass
class EulerExtensionReport:
    weight_one: bool
    curvature_lambda_plus: ResidualReport
    curvature_lambda_zero: ResidualReport
    curvature_lambda_minus: ResidualReport
    conditions: EulerFieldReport

    @property
    def flat(self) -> bool:
        return all(r.zero for r in (self.curvature_lambda_plus, self.curvature_lambda_zero,
                                    self.curvature_lambda_minus))

    @property
    def consistent(self) -> bool:
        """Flatness of the extension matches the Euler-field conditions."""
        return self.flat == self.conditions.ok

    @property
    def ok(self) -> bool:
        return self.weight_one and self.flat and self.conditions.ok


def _covariant(x: VectorFieldJet, y: VectorFieldJet) -> VectorFieldJet:
    """Flat derivative of y along x, componentwise."""
    return VectorFieldJet(tuple(x.apply(c) for c in y.components), (x.parity + y.parity) % 2)


def euler_extension_check(mult: StructureTensor, euler: EulerData) -> EulerExtensionReport:
    """Curvature of the connection extended in the pencil direction by
    H(X) = X o E + (nabla_X E - X) / lambda, split by powers of lambda.

    For coordinate fields d_a, d_b with V = d_a o d_b the components are
      lambda^1 :  V o E - d_a o (d_b o E)
      lambda^0 :  nabla_V E - nabla_a (d_b o E) - d_a o nabla_b E + V
      lambda^-1: -nabla_a nabla_b E
    """
    d = mult.dim
    order = mult.order
    basis = [VectorFieldJet.coordinate(mult.vars, order, a) for a in range(d)]
    E = euler.E
    plus, zero, minus = [], [], []
    for a, b in product(range(d), repeat=2):
        v = mult.product(basis[a], basis[b])
        be = mult.product(basis[b], E)
        r1 = mult.product(v, E) - mult.product(basis[a], be)
        nb_e = _covariant(basis[b], E)
        r0 = _covariant(v, E) - _covariant(basis[a], be) - mult.product(basis[a], nb_e) + v
        rm = _covariant(basis[a], nb_e).scale(-1)
        for c in range(d):
            plus.append(((a, b, c), r1.components[c]))
            zero.append(((a, b, c), r0.components[c]))
            minus.append(((a, b, c), rm.components[c]))
    conditions = euler_field_conditions(mult, EulerData(E, Fraction(1), euler.D))
    return EulerExtensionReport(
        euler.d0 == 1,
        collect_residuals("curvature_lambda^1", plus),
        collect_residuals("curvature_lambda^0", zero),
        collect_residuals("curvature_lambda^-1", minus),
        conditions,
    )


# -- convenience -------------------------------------------------------------


def tensor_from_wdvv(pot: WdvvPotential) -> StructureTensor:
    """Multiplication tensor C_ab^c = sum_e Phi_{abe} g^{ec}."""
    return structure_tensor_from_potential(pot.vector_potential(), identity_index=0)


def matrix_potential(pot: VectorPotential) -> list[list[TruncatedSeries]]:
    """End-valued series C with (C)[c][b] = d_b C^c, constant term removed,
    so that d_a of it is the multiplication operator of d_a."""
    d = pot.dim
    out = []
    for c in range(d):
        row = []
        for b in range(d):
            s = pot.components[c].partial(b)
            row.append(s - s.constant_term())
        out.append(row)
    return out
