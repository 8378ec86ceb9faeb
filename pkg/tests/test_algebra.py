"""Point algebras: axioms, identity, decomposition, inversion and twisting."""

import random
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from fforge import linalg
from fforge.algebra import (
    AlgebraError,
    PointAlgebra,
    decompose,
    diagonal_algebra,
    direct_sum,
    find_identity,
    invert,
    is_semisimple,
    spectral_points,
    truncated_polynomial_algebra,
    twist,
    verify_algebra,
)

F = Fraction


def random_invertible(d, rng):
    while True:
        m = [[F(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(d)] for _ in range(d)]
        if linalg.rank(m) == d:
            return m


def random_semisimple(d, rng):
    return diagonal_algebra(d).change_basis(random_invertible(d, rng))


def random_algebra(rng):
    """Direct sum of local pieces K[t]/t^k, in a random basis."""
    pieces, total = [], 0
    while total < 4:
        k = rng.randint(1, 4 - total)
        pieces.append(truncated_polynomial_algebra(k))
        total += k
        if rng.random() < 0.4:
            break
    a = direct_sum(*pieces) if len(pieces) > 1 else pieces[0]
    return a.change_basis(random_invertible(a.dim, rng)), [p.dim for p in pieces]


def vec(x):
    return [F(v) for v in x]


# -- examples ------------------------------------------------------------------


def test_verify_examples():
    assert verify_algebra(diagonal_algebra(2)).ok
    assert verify_algebra(truncated_polynomial_algebra(2)).ok
    rng = np.random.default_rng(1)
    s = rng.integers(-3, 4, size=(3, 3, 3))
    s = s + s.transpose(1, 0, 2)
    rep = verify_algebra(PointAlgebra(s.tolist()))
    assert not rep.associative


def test_find_identity_examples():
    assert find_identity(diagonal_algebra(3)) == (1, 1, 1)
    zero = np.zeros((2, 2, 2), dtype=int)
    assert find_identity(PointAlgebra(zero.tolist())) is None
    assert find_identity(truncated_polynomial_algebra(3)) == (1, 0, 0)


def test_decompose_examples():
    d = decompose(diagonal_algebra(2))
    assert [list(p) for p in d.idempotents] == [[1, 0], [0, 1]] or \
        [list(p) for p in d.idempotents] == [[0, 1], [1, 0]]
    d = decompose(truncated_polynomial_algebra(2))
    assert d.block_dims == [2] and list(d.idempotents[0]) == [1, 0]
    mixed = direct_sum(diagonal_algebra(1), truncated_polynomial_algebra(2))
    d = decompose(mixed)
    assert sorted(d.block_dims) == [1, 2]
    blocks = dict(zip(d.block_dims, (list(p) for p in d.idempotents)))
    assert blocks == {1: [1, 0, 0], 2: [0, 1, 0]}


def test_semisimple_examples():
    assert is_semisimple(diagonal_algebra(4))
    assert not is_semisimple(truncated_polynomial_algebra(2))
    # characters with distinct values: Q[t]/((t-1)(t-2)(t+3)) in the monomial basis
    a = _quotient_algebra([6, -7, 0])
    assert is_semisimple(a)


def _quotient_algebra(coeffs):
    """Q[t]/(t^k + c_{k-1}t^{k-1} + ... + c_0) with coeffs = [c_0, ..., c_{k-1}]."""
    k = len(coeffs)
    s = np.empty((k, k, k), dtype=object)
    s[...] = F(0)
    for a in range(k):
        for b in range(k):
            poly = [F(0)] * (2 * k)
            poly[a + b] = F(1)
            for deg in range(2 * k - 1, k - 1, -1):
                c = poly[deg]
                if c:
                    poly[deg] = F(0)
                    for i, ci in enumerate(coeffs):
                        poly[deg - k + i] -= c * ci
            s[a, b, :] = poly[:k]
    return PointAlgebra(s, tuple([1] + [0] * (k - 1)))


def test_irrational_spectrum_falls_back_to_numeric():
    a = _quotient_algebra([-2, 0])  # t^2 = 2
    d = decompose(a)
    assert d.mode == "complex" and d.semisimple
    total = sum(d.idempotents)
    assert np.allclose(total, [1, 0], atol=1e-10)


def test_spectral_points_examples():
    sp = spectral_points(diagonal_algebra(2))
    chars = sorted(tuple(np.round(c.real, 12)) for c in sp.characters)
    assert chars == [(0.0, 1.0), (1.0, 0.0)] and not sp.degenerate
    sp = spectral_points(truncated_polynomial_algebra(2))
    assert len(sp.characters) == 1 and sp.degenerate


def test_spectral_points_multiplicative():
    rng = random.Random(5)
    a = random_semisimple(3, rng)
    sp = spectral_points(a)
    assert len(sp.characters) == 3
    num = a.to_complex()
    for chi in sp.characters:
        for i in range(3):
            for j in range(3):
                prod = num.mul(num.basis(i), num.basis(j))
                assert abs(chi @ prod - chi[i] * chi[j]) < 1e-10


def test_invert_examples():
    a = diagonal_algebra(2)
    assert list(invert(a, [1, 1])) == [1, 1]
    assert list(invert(a, [2, 3])) == [F(1, 2), F(1, 3)]
    with pytest.raises(AlgebraError, match="not invertible"):
        invert(truncated_polynomial_algebra(2), [0, 1])


def test_twist_examples():
    a = diagonal_algebra(2)
    assert np.array_equal(twist(a, [1, 1]).structure, a.structure)
    t = twist(a, [2, 3])
    assert t.identity == (2, 3)
    x, y = vec([5, 7]), vec([-1, 4])
    assert list(t.mul(x, y)) == [F(-5, 2), F(28, 3)]


def test_twist_not_invertible():
    with pytest.raises(AlgebraError):
        twist(diagonal_algebra(2), [0, 1])


def test_document_roundtrip():
    a = random_semisimple(3, random.Random(2))
    b = PointAlgebra.from_doc(a.to_doc())
    assert np.array_equal(a.structure, b.structure) and a.identity == b.identity
    c = a.to_complex()
    assert np.array_equal(PointAlgebra.from_doc(c.to_doc()).structure, c.structure)


def test_malformed_document():
    with pytest.raises(AlgebraError):
        PointAlgebra.from_doc({"dim": 2, "structure": [[1]]})


# -- properties ----------------------------------------------------------------


@given(st.integers(0, 10**6))
def test_decomposition_invariants(seed):
    rng = random.Random(seed)
    a, dims = random_algebra(rng)
    dec = decompose(a, seed=seed)
    assert sorted(dec.block_dims) == sorted(dims)
    assert dec.mode == "rational"
    e = a.with_identity().identity
    assert list(sum(dec.idempotents)) == list(e)
    for i, p in enumerate(dec.idempotents):
        for j, q in enumerate(dec.idempotents):
            want = p if i == j else np.zeros_like(p)
            assert list(a.mul(p, q)) == list(want)


@given(st.integers(0, 10**6))
def test_semisimplicity_basis_invariant(seed):
    rng = random.Random(seed)
    a, dims = random_algebra(rng)
    b = a.change_basis(random_invertible(a.dim, rng))
    assert is_semisimple(a) == is_semisimple(b) == all(k == 1 for k in dims)


@given(st.integers(0, 10**6))
def test_twist_properties(seed):
    rng = random.Random(seed)
    d = rng.randint(1, 4)
    a = random_semisimple(d, rng)
    e = a.with_identity().identity
    while True:
        eps = vec([F(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(d)])
        try:
            eps_inv = invert(a, eps)
            break
        except AlgebraError:
            continue
    t = twist(a, eps)
    assert verify_algebra(t).ok and t.identity == tuple(eps)
    # e^{*-1} = eps o eps
    assert list(invert(t, e)) == list(a.mul(eps, eps))
    back = twist(t, e)
    assert np.array_equal(back.structure, a.structure)
    assert list(invert(t, a.mul(eps, eps))) == list(e)
    x = vec([rng.randint(-3, 3) for _ in range(d)])
    y = vec([rng.randint(-3, 3) for _ in range(d)])
    assert list(t.mul(x, y)) == list(a.mul(eps_inv, a.mul(x, y)))


def test_numeric_mode_twist():
    a = diagonal_algebra(3, mode="complex")
    t = twist(a, [2, 1j, -1])
    assert verify_algebra(t).ok


def test_linalg_against_sympy():
    rng = random.Random(9)
    for _ in range(20):
        m = random_invertible(4, rng)
        inv = linalg.inverse(m)
        ref = sympy.Matrix(m).inv()
        assert all(sympy.Rational(inv[i][j].numerator, inv[i][j].denominator) == ref[i, j]
                   for i in range(4) for j in range(4))
        sing = [row[:] for row in m]
        sing[3] = [x + y for x, y in zip(sing[0], sing[1])]
        assert linalg.rank(sing) == sympy.Matrix(sing).rank() == 3
        assert len(linalg.nullspace(sing)) == 1
        assert linalg.solve(sing, [1, 0, 0, 5]) is None
