"""Finite-dimensional commutative algebras given by structure constants.

``structure[a, b, c]`` is the coefficient of basis vector c in the product
of basis vectors a and b.  Two modes are supported: ``"rational"`` with
Fraction entries (all checks exact) and ``"complex"`` with complex128
entries (checks up to a tolerance).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from fforge import linalg

RATIONAL, COMPLEX = "rational", "complex"

NUMERIC_TOL = 1e-10
MAX_RETRIES = 8
# eigenvalues of the generic element closer than this (relative) are one block
MERGE_TOL = 1e-5
# distinct blocks must be separated by more than this (relative)
GAP_TOL = 1e-8


class AlgebraError(ValueError):
    pass


def _frac_array(values) -> np.ndarray:
    arr = np.array(values, dtype=object)
    flat = arr.reshape(-1)
    for i, v in enumerate(flat):
        flat[i] = Fraction(v)
    return flat.reshape(arr.shape)


@dataclass(frozen=True, eq=False)
class PointAlgebra:
    structure: np.ndarray
    identity: tuple | None = None
    mode: str = RATIONAL

    def __post_init__(self):
        s = self.structure
        if self.mode == RATIONAL:
            s = _frac_array(s)
        elif self.mode == COMPLEX:
            s = np.asarray(s, dtype=complex)
            if not np.all(np.isfinite(s)):
                raise AlgebraError("non-finite structure constant")
        else:
            raise AlgebraError(f"unknown mode {self.mode!r}")
        if s.ndim != 3 or not (s.shape[0] == s.shape[1] == s.shape[2]) or s.shape[0] < 1:
            raise AlgebraError("structure must be a d x d x d array with d >= 1")
        object.__setattr__(self, "structure", s)
        if self.identity is not None:
            object.__setattr__(self, "identity", tuple(self.vector(self.identity)))

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    @property
    def exact(self) -> bool:
        return self.mode == RATIONAL

    def vector(self, v: Sequence) -> np.ndarray:
        if len(v) != self.dim:
            raise AlgebraError(f"expected a vector of length {self.dim}")
        if self.exact:
            return _frac_array(list(v))
        return np.asarray(v, dtype=complex)

    def basis(self, a: int) -> np.ndarray:
        v = [0] * self.dim
        v[a] = 1
        return self.vector(v)

    def mul(self, x: Sequence, y: Sequence) -> np.ndarray:
        x, y = self.vector(x), self.vector(y)
        return np.einsum("a,b,abc->c", x, y, self.structure, optimize=False)

    def mult_matrix(self, v: Sequence) -> np.ndarray:
        """Matrix of Y -> v o Y acting on column vectors."""
        v = self.vector(v)
        return np.einsum("a,abc->cb", v, self.structure, optimize=False)

    def close(self, x, y) -> bool:
        x, y = np.asarray(x), np.asarray(y)
        if self.exact:
            return bool(np.all(x == y))
        scale = max(1.0, float(np.max(np.abs(self.structure))))
        return bool(np.all(np.abs(x.astype(complex) - y.astype(complex)) <= NUMERIC_TOL * scale))

    def to_complex(self) -> "PointAlgebra":
        if not self.exact:
            return self
        s = np.vectorize(complex, otypes=[complex])(self.structure)
        ident = None if self.identity is None else [complex(c) for c in self.identity]
        return PointAlgebra(s, ident, COMPLEX)

    def with_identity(self) -> "PointAlgebra":
        if self.identity is not None:
            return self
        e = find_identity(self)
        if e is None:
            raise AlgebraError("algebra has no identity")
        return PointAlgebra(self.structure, tuple(e), self.mode)

    def change_basis(self, p: Sequence[Sequence]) -> "PointAlgebra":
        """Structure constants in the basis whose vectors are the columns of p."""
        if self.exact:
            pm = linalg.to_fractions(p)
            pinv = np.array(linalg.inverse(pm), dtype=object)
            pm = np.array(pm, dtype=object)
        else:
            pm = np.asarray(p, dtype=complex)
            pinv = np.linalg.inv(pm)
        s = np.einsum("ia,jb,ijk,ck->abc", pm, pm, self.structure, pinv, optimize=False)
        ident = None
        if self.identity is not None:
            ident = tuple(pinv.dot(np.array(self.identity, dtype=pinv.dtype)))
        return PointAlgebra(s, ident, self.mode)

    # -- serialization ----------------------------------------------------

    def to_doc(self) -> dict:
        def enc(x):
            if self.exact:
                return {"num": str(x.numerator), "den": str(x.denominator)}
            return [float(x.real), float(x.imag)]

        doc = {
            "dim": self.dim,
            "mode": self.mode,
            "structure": [[[enc(x) for x in row] for row in plane] for plane in self.structure],
        }
        if self.identity is not None:
            doc["identity"] = [enc(x) for x in self.identity]
        return doc

    @classmethod
    def from_doc(cls, doc) -> "PointAlgebra":
        try:
            mode = doc.get("mode", RATIONAL)
            d = int(doc["dim"])

            def dec(x):
                if mode == RATIONAL:
                    if isinstance(x, dict):
                        return Fraction(int(x["num"]), int(x.get("den", "1")))
                    return Fraction(str(x))
                return complex(x[0], x[1])

            s = [[[dec(x) for x in row] for row in plane] for plane in doc["structure"]]
            ident = doc.get("identity")
            if ident is not None:
                ident = [dec(x) for x in ident]
        except (KeyError, TypeError, ValueError, IndexError, ZeroDivisionError) as exc:
            raise AlgebraError(f"malformed algebra document: {exc}") from exc
        arr = np.array(s, dtype=object if mode == RATIONAL else complex)
        if arr.shape != (d, d, d):
            raise AlgebraError(f"structure has shape {arr.shape}, expected {(d, d, d)}")
        return cls(arr, ident, mode)


def diagonal_algebra(values_or_dim, mode: str = RATIONAL) -> PointAlgebra:
    """K^d with componentwise product."""
    d = int(values_or_dim)
    s = np.zeros((d, d, d), dtype=object if mode == RATIONAL else complex)
    if mode == RATIONAL:
        s[...] = Fraction(0)
    for i in range(d):
        s[i, i, i] = 1
    return PointAlgebra(s, tuple([1] * d), mode)


def truncated_polynomial_algebra(k: int) -> PointAlgebra:
    """K[t]/t^k in the basis 1, t, ..., t^{k-1}."""
    s = np.empty((k, k, k), dtype=object)
    s[...] = Fraction(0)
    for a in range(k):
        for b in range(k):
            if a + b < k:
                s[a, b, a + b] = Fraction(1)
    return PointAlgebra(s, tuple([1] + [0] * (k - 1)))


def direct_sum(*algs: PointAlgebra) -> PointAlgebra:
    d = sum(a.dim for a in algs)
    s = np.empty((d, d, d), dtype=object)
    s[...] = Fraction(0)
    off = 0
    ident = []
    for a in algs:
        k = a.dim
        s[off:off + k, off:off + k, off:off + k] = a.structure
        ident.extend(a.identity if a.identity is not None else find_identity(a))
        off += k
    return PointAlgebra(s, tuple(ident))


# -- verification ------------------------------------------------------------


@dataclass
class AlgebraReport:
    commutative: bool
    associative: bool
    unital: bool
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.commutative and self.associative and self.unital


def verify_algebra(alg: PointAlgebra) -> AlgebraReport:
    s = alg.structure
    d = alg.dim
    failures = []
    commutative = alg.close(s, np.transpose(s, (1, 0, 2)))
    if not commutative:
        failures.append("product is not commutative")
    # (a b) c versus a (b c), all basis triples at once
    left = np.einsum("abe,ecf->abcf", s, s, optimize=False)
    right = np.einsum("bce,aef->abcf", s, s, optimize=False)
    associative = alg.close(left, right)
    if not associative:
        diff = np.argwhere(left != right) if alg.exact else np.argwhere(~np.isclose(left, right))
        if len(diff):
            failures.append(f"associativity fails at basis triple {tuple(int(i) for i in diff[0][:3])}")
    e = alg.identity if alg.identity is not None else find_identity(alg)
    unital = False
    if e is not None:
        unital = all(alg.close(alg.mul(e, alg.basis(b)), alg.basis(b)) for b in range(d))
    if not unital:
        failures.append("no identity element")
    return AlgebraReport(commutative, associative, unital, failures)


def find_identity(alg: PointAlgebra):
    """Unique e with e o b = b for every basis vector b, or None."""
    d = alg.dim
    # unknowns e_a; equations sum_a e_a S[a,b,c] = delta_bc
    rows = [[alg.structure[a, b, c] for a in range(d)] for b in range(d) for c in range(d)]
    rhs = [1 if b == c else 0 for b in range(d) for c in range(d)]
    if alg.exact:
        sol = linalg.solve([list(r) for r in rows], [Fraction(x) for x in rhs])
        return None if sol is None else tuple(sol)
    a = np.array(rows, dtype=complex)
    b = np.array(rhs, dtype=complex)
    if np.linalg.matrix_rank(a) < d:
        return None
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.max(np.abs(a @ sol - b)) > 1e-8 * max(1.0, float(np.max(np.abs(a)))):
        return None
    return tuple(sol)


def invert(alg: PointAlgebra, v: Sequence) -> np.ndarray:
    """w with v o w = e."""
    alg = alg.with_identity()
    m = alg.mult_matrix(v)
    e = alg.vector(alg.identity)
    if alg.exact:
        sol = linalg.solve([list(r) for r in m], list(e))
        if sol is None:
            raise AlgebraError("not invertible")
        return alg.vector(sol)
    if np.linalg.cond(m) > 1e12:
        raise AlgebraError("not invertible")
    return np.linalg.solve(m, e)


def twist(alg: PointAlgebra, eps: Sequence) -> PointAlgebra:
    """The algebra with product X*Y = eps^{-1} o X o Y and identity eps."""
    alg = alg.with_identity()
    eps = alg.vector(eps)
    inv = invert(alg, eps)
    linv = alg.mult_matrix(inv)
    # new[a, b, :] = inv o (a o b)
    s = np.einsum("cd,abd->abc", linv, alg.structure, optimize=False)
    return PointAlgebra(s, tuple(eps), alg.mode)


# -- decomposition -----------------------------------------------------------


@dataclass
class IdempotentDecomposition:
    idempotents: list[np.ndarray]
    block_dims: list[int]
    mode: str
    generic_element: tuple = ()

    @property
    def semisimple(self) -> bool:
        return all(k == 1 for k in self.block_dims)


def _clusters(vals: np.ndarray, scale: float, tol: float = MERGE_TOL) -> list[list[int]]:
    order = sorted(range(len(vals)), key=lambda i: (vals[i].real, vals[i].imag))
    groups: list[list[int]] = []
    for i in order:
        for g in groups:
            if min(abs(vals[i] - vals[j]) for j in g) <= tol * scale:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def _separated(vals, groups, scale) -> bool:
    centers = [np.mean(vals[g]) for g in groups]
    for i in range(len(centers)):
        for j in range(i):
            if abs(centers[i] - centers[j]) <= max(GAP_TOL, 100 * MERGE_TOL) * scale:
                return False
    return True


def _generic(alg: PointAlgebra, rng: random.Random):
    coeffs = [Fraction(rng.randint(-40, 40), rng.randint(1, 7)) for _ in range(alg.dim)]
    return coeffs


def decompose(alg: PointAlgebra, seed: int = 0) -> IdempotentDecomposition:
    """Split into local blocks via the generalized eigenspaces of a generic
    multiplication operator."""
    alg = alg.with_identity()
    rng = random.Random(seed)
    for _ in range(MAX_RETRIES + 1):
        g = _generic(alg, rng)
        if alg.exact:
            dec = _exact_decomposition(alg, g, rng)
            if dec is not None:
                return dec
            num = alg.to_complex()
            lf = num.mult_matrix([complex(x) for x in g])
        else:
            num = alg
            lf = alg.mult_matrix(g)
        vals = np.linalg.eigvals(lf)
        scale = max(1.0, float(np.max(np.abs(vals))))
        groups = _clusters(vals, scale)
        if not _separated(vals, groups, scale):
            continue
        centers = [complex(np.mean(vals[gr])) for gr in groups]
        mults = [len(gr) for gr in groups]
        return _numeric_blocks(num, [complex(x) for x in g], centers, mults)
    raise AlgebraError("ill-conditioned decomposition")


def _rational_spectrum(lmat) -> list[tuple[Fraction, int]] | None:
    """Eigenvalues with multiplicity when the characteristic polynomial
    splits over Q, else None."""
    m = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in lmat])
    cp = m.charpoly()
    roots = sympy.roots(cp, filter="Q")
    if sum(roots.values()) != len(lmat):
        return None
    return [(Fraction(int(r.p), int(r.q)), k) for r, k in sorted(roots.items(), key=lambda t: t[0])]


def _exact_decomposition(alg, g, rng):
    d = alg.dim
    lmat = [list(r) for r in alg.mult_matrix(g)]
    spectrum = _rational_spectrum(lmat)
    if spectrum is None:
        return None
    spaces = []
    for q, m in spectrum:
        shifted = [[lmat[i][j] - (q if i == j else 0) for j in range(d)] for i in range(d)]
        power = linalg.identity(d)
        for _ in range(m):
            power = linalg.matmul(power, shifted)
        kernel = linalg.nullspace(power, d)
        if len(kernel) != m:
            return None
        spaces.append(kernel)
    cols = [v for sp in spaces for v in sp]
    coeffs = linalg.solve(linalg.transpose(cols), list(alg.identity))
    if coeffs is None:
        return None
    idems = []
    pos = 0
    for sp in spaces:
        v = [Fraction(0)] * d
        for vec in sp:
            c = coeffs[pos]
            pos += 1
            v = [x + c * y for x, y in zip(v, vec)]
        idems.append(alg.vector(v))
    # two blocks sharing an eigenvalue of g would show up as a non-local block
    probe = alg.vector(_generic(alg, rng))
    for pi, (_, m) in zip(idems, spectrum):
        if not _is_local_block(alg, pi, m, probe):
            return None
    return IdempotentDecomposition(idems, [m for _, m in spectrum], RATIONAL, tuple(g))


def _is_local_block(alg, pi, m, probe) -> bool:
    """pi o A is local iff pi o probe - lambda pi is nilpotent for generic probe."""
    y = alg.mul(pi, probe)
    lam = Fraction(np.trace(alg.mult_matrix(y))) / m
    z = y - lam * pi
    power = z
    for _ in range(m - 1):
        power = alg.mul(power, z)
    return all(x == 0 for x in power)


def _numeric_blocks(alg, g, centers, mults):
    d = alg.dim
    lmat = alg.mult_matrix(g)
    spaces = []
    for lam, m in zip(centers, mults):
        p = np.linalg.matrix_power(lmat - lam * np.eye(d), m)
        _, _, vh = np.linalg.svd(p)
        spaces.append(vh[-m:].conj().T)
    basis = np.hstack(spaces)
    coeffs = np.linalg.solve(basis, np.asarray(alg.identity, dtype=complex))
    idems = []
    pos = 0
    for sp, m in zip(spaces, mults):
        pi = sp @ coeffs[pos:pos + m]
        pos += m
        for _ in range(6):
            p2 = alg.mul(pi, pi)
            pi = 3 * p2 - 2 * alg.mul(p2, pi)
        idems.append(pi)
    return IdempotentDecomposition(idems, list(mults), COMPLEX, tuple(g))


def is_semisimple(alg: PointAlgebra, seed: int = 0) -> bool:
    return decompose(alg, seed).semisimple


@dataclass
class SpectralPoints:
    characters: list[np.ndarray]
    degenerate: bool


def spectral_points(alg: PointAlgebra, seed: int = 0) -> SpectralPoints:
    """Characters of the semisimple quotient, one per block."""
    alg = alg.with_identity()
    dec = decompose(alg, seed)
    num = alg if dec.mode == RATIONAL else alg.to_complex()
    chars = []
    for pi, m in zip(dec.idempotents, dec.block_dims):
        proj = num.mult_matrix(pi)
        chi = []
        for a in range(alg.dim):
            tr = np.trace(num.mult_matrix(num.basis(a)).dot(proj))
            chi.append(complex(tr) / m)
        chars.append(np.array(chi, dtype=complex))
    return SpectralPoints(chars, degenerate=not dec.semisimple)
