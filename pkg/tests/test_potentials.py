"""Vector potentials, structure tensors, WDVV, pencils and Euler fields."""

import itertools
import random
from fractions import Fraction

import pytest
import sympy

from fforge.potentials import (
    EulerData,
    FlatMetric,
    HiggsPencil,
    PotentialError,
    StructureTensor,
    VectorFieldJet,
    VectorPotential,
    WdvvPotential,
    affine_field,
    double_bracket_product,
    euler_extension_check,
    euler_field_conditions,
    euler_residual,
    flat_identity_residual,
    higgs_potential,
    lie_bracket,
    matrix_potential,
    oriented_associativity_residual,
    pencil_flatness_residual,
    poisson_tensor,
    primitive_section_check,
    structure_identity_residual,
    structure_tensor_from_potential,
    tensor_from_wdvv,
    wdvv_residual,
    with_higgs_potential,
)
from fforge.qcoh import QcohSetup, classical_potential, euler_field_p_r, quantum_potential, solve_gw
from fforge.series import TruncatedSeries, VariableSpec

F = Fraction


@pytest.fixture(scope="module")
def p2():
    setup = QcohSetup(2, 4)
    return setup, quantum_potential(setup, solve_gw(setup), 9)


def mono(vars, order, exp, c=1):
    return TruncatedSeries.monomial(vars, order, exp, c)


def cubic_vector_potential(structure, order=6):
    """C^c with d_a d_b C^c = S_ab^c for a constant symmetric S."""
    d = len(structure)
    v = VariableSpec.even(d)
    comps = []
    for c in range(d):
        out = TruncatedSeries.zero(v, order)
        for a in range(d):
            for b in range(a, d):
                exp = [0] * d
                exp[a] += 1
                exp[b] += 1
                coef = F(structure[a][b][c], 2) if a == b else F(structure[a][b][c])
                out = out + mono(v, order, exp, coef)
        comps.append(out)
    return VectorPotential(tuple(comps))


K_T2 = [[[1, 0], [0, 1]], [[0, 1], [0, 0]]]  # K[t]/t^2
DIAG2 = [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]


# -- sympy oracles -------------------------------------------------------------


def _sym(s, xs):
    return sum((sympy.Rational(c.numerator, c.denominator) * sympy.prod([x**e for x, e in zip(xs, exp)])
                for exp, c in s.terms.items()), sympy.Integer(0))


def _min_degree(expr, xs, upto):
    expr = sympy.expand(expr)
    if expr == 0:
        return None
    degs = [sum(m) for m, c in sympy.Poly(expr, *xs).terms() if c != 0 and sum(m) <= upto]
    return min(degs) if degs else None


def oracle_oriented_defect(pot):
    d = pot.dim
    xs = sympy.symbols(f"x0:{d}")
    cs = [_sym(c, xs) for c in pot.components]
    t = [[[sympy.diff(cs[c], xs[a], xs[b]) for c in range(d)] for b in range(d)] for a in range(d)]
    upto = min(c.order for c in pot.components) - 2
    best = None
    for a, b, c, f in itertools.product(range(d), repeat=4):
        r = sum(t[a][b][e] * t[e][c][f] - t[b][c][e] * t[e][a][f] for e in range(d))
        m = _min_degree(r, xs, upto)
        if m is not None and (best is None or m < best):
            best = m
    return best


def oracle_wdvv_defect(phi, g):
    d = len(g)
    xs = sympy.symbols(f"x0:{d}")
    ph = _sym(phi, xs)
    ginv = sympy.Matrix(g).inv()
    p3 = {k: sympy.diff(ph, *[xs[i] for i in k]) for k in itertools.product(range(d), repeat=3)}
    best = None
    for a, b, c, dd in itertools.product(range(d), repeat=4):
        r = sum(p3[(a, b, e)] * ginv[e, f] * p3[(f, c, dd)] - p3[(b, c, e)] * ginv[e, f] * p3[(f, a, dd)]
                for e in range(d) for f in range(d))
        m = _min_degree(r, xs, phi.order - 3)
        if m is not None and (best is None or m < best):
            best = m
    return best


# -- poisson tensor --------------------------------------------------------------


V1 = VariableSpec.even(1)


def field1(series):
    return VectorFieldJet((series,), 0)


def test_poisson_constant_fields_vanish():
    t = StructureTensor.constant(K_T2, 4)
    v = t.vars
    x = VectorFieldJet((TruncatedSeries.constant(v, 4, 2), TruncatedSeries.constant(v, 4, -1)), 0)
    for y, z in itertools.product(range(2), repeat=2):
        by = VectorFieldJet.coordinate(v, 4, y)
        bz = VectorFieldJet.coordinate(v, 4, z)
        assert poisson_tensor(x, by, bz, t).is_zero()


def test_poisson_zero_product():
    t = StructureTensor.constant([[[0]]], 4)
    xd = field1(TruncatedSeries.variable(V1, 4, 0))
    d = VectorFieldJet.coordinate(V1, 4, 0)
    assert poisson_tensor(xd, d, d, t).is_zero()


def test_poisson_hand_expansion():
    # [x d, d o d] - [x d, d] o d - d o [x d, d] = -d + d + d = d
    t = StructureTensor.constant([[[1]]], 4)
    xd = field1(TruncatedSeries.variable(V1, 4, 0))
    d = VectorFieldJet.coordinate(V1, 4, 0)
    out = poisson_tensor(xd, d, d, t)
    assert out.components[0] == TruncatedSeries.constant(V1, out.components[0].order, 1)


def test_lie_bracket_hand():
    xd = field1(TruncatedSeries.variable(V1, 4, 0))
    d = VectorFieldJet.coordinate(V1, 4, 0)
    assert lie_bracket(xd, d).components[0].terms == {(0,): -1}


# -- structure identity ----------------------------------------------------------


def test_structure_identity_constant_associative():
    assert structure_identity_residual(StructureTensor.constant(K_T2, 4)).zero


def test_structure_identity_p2(p2):
    _, pot = p2
    t = tensor_from_wdvv(pot)
    rep = structure_identity_residual(t)
    # one bracket costs one more order
    assert rep.zero and rep.order == t.order - 1


def random_symmetric_tensor(rng, d=2, order=5):
    v = VariableSpec.even(d)
    ent = [[[None] * d for _ in range(d)] for _ in range(d)]
    for a in range(d):
        for b in range(a, d):
            for c in range(d):
                terms = {}
                for _ in range(3):
                    exp = tuple(rng.randint(0, 2) for _ in range(d))
                    terms[exp] = F(rng.randint(-3, 3))
                s = TruncatedSeries(v, order, terms)
                ent[a][b][c] = ent[b][a][c] = s
    return StructureTensor(ent)


def test_structure_identity_detects_random_tensors():
    rng = random.Random(3)
    hits = 0
    for _ in range(5):
        rep = structure_identity_residual(random_symmetric_tensor(rng))
        hits += not rep.zero
    assert hits == 5


# -- potentials ------------------------------------------------------------------


def test_structure_tensor_from_potential_examples():
    c = VectorPotential((mono(V1, 5, (2,), F(1, 2)),))
    assert structure_tensor_from_potential(c)[0, 0, 0].terms == {(0,): 1}
    c = VectorPotential((mono(V1, 5, (3,), F(1, 6)),))
    assert structure_tensor_from_potential(c)[0, 0, 0].terms == {(1,): 1}
    c = VectorPotential((TruncatedSeries.constant(V1, 5, 4),))
    assert structure_tensor_from_potential(c)[0, 0, 0].is_zero()


def test_double_bracket_agrees(p2):
    _, pot = p2
    vp = pot.vector_potential()
    t = structure_tensor_from_potential(vp)
    d = vp.dim
    for a, b in itertools.product(range(d), repeat=2):
        db = double_bracket_product(vp, a, b)
        for c in range(d):
            assert db.components[c] == t[a, b, c]


def test_oriented_associativity_examples(p2):
    assert oriented_associativity_residual(cubic_vector_potential(K_T2)).zero
    _, pot = p2
    assert oriented_associativity_residual(pot.vector_potential()).zero


def test_oriented_associativity_planted_defect():
    vp = cubic_vector_potential(K_T2, order=7)
    v = vp.vars
    comps = list(vp.components)
    comps[0] = comps[0] + mono(v, 7, (1, 3), 2)
    bad = VectorPotential(tuple(comps))
    rep = oriented_associativity_residual(bad)
    assert not rep.zero
    assert rep.first_defect_degree == oracle_oriented_defect(bad)


def test_wdvv_examples(p2):
    v = VariableSpec.even(2)
    phi = mono(v, 6, (2, 1), F(1, 2))  # K[t]/t^2 with pairing g = antidiag
    assert wdvv_residual(WdvvPotential(phi, FlatMetric.antidiagonal(2))).zero
    _, pot = p2
    assert wdvv_residual(pot).zero


def test_wdvv_located_defect():
    v = VariableSpec.even(3)
    phi = mono(v, 8, (1, 1, 1)) + mono(v, 8, (0, 4, 0))
    g = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    rep = wdvv_residual(WdvvPotential(phi, FlatMetric.from_matrix(g)))
    assert not rep.zero
    assert rep.first_defect_degree == oracle_wdvv_defect(phi, g)
    idx, exp, coeff = rep.location
    assert coeff != 0 and sum(exp) == rep.first_defect_degree


def test_flat_identity_examples(p2):
    setup = QcohSetup(2)
    cl = WdvvPotential(classical_potential(setup, 6), setup.metric)
    assert flat_identity_residual(cl).zero
    _, pot = p2
    assert flat_identity_residual(pot).zero
    missing = WdvvPotential(TruncatedSeries.zero(setup.vars, 6), setup.metric)
    rep = flat_identity_residual(missing)
    assert rep.location[2] == -1 and rep.first_defect_degree == 0


def test_euler_residual_examples(p2):
    setup, pot = p2
    assert euler_residual(pot, euler_field_p_r(setup, pot.phi.order)).zero
    zero = WdvvPotential(TruncatedSeries.zero(setup.vars, 6), setup.metric)
    assert euler_residual(zero, euler_field_p_r(setup, 6)).zero
    s3 = QcohSetup(3, 2)
    p3 = quantum_potential(s3, solve_gw(s3), 7)
    e3 = euler_field_p_r(s3, 7)
    assert e3.D == -1 and euler_residual(p3, e3).zero


def test_euler_residual_rejects_nonaffine():
    v = VariableSpec.even(1)
    e = EulerData(field1(mono(v, 4, (2,))), 1, 0)
    with pytest.raises(PotentialError):
        euler_residual(WdvvPotential(mono(v, 4, (3,)), FlatMetric.from_matrix([[1]])), e)


# -- wdvv and oriented associativity agree ---------------------------------------


def test_wdvv_iff_oriented_associativity(p2):
    _, pot = p2
    v = pot.phi.vars
    cases = [pot]
    for exp in [(0, 1, 3), (0, 0, 5), (1, 2, 2)]:
        cases.append(WdvvPotential(pot.phi + mono(v, pot.phi.order, exp, 1), pot.metric))
    for p in cases:
        w = wdvv_residual(p)
        o = oriented_associativity_residual(p.vector_potential())
        assert w.zero == o.zero
        if not w.zero:
            assert w.first_defect_degree == o.first_defect_degree


# -- pencils ---------------------------------------------------------------------


def test_pencil_closedness_from_any_potential():
    rng = random.Random(1)
    v = VariableSpec.even(2)
    comps = tuple(TruncatedSeries(v, 6, {(rng.randint(0, 3), rng.randint(0, 3)): rng.randint(-3, 3)
                                         for _ in range(4)}) for _ in range(2))
    rep = pencil_flatness_residual(HiggsPencil(structure_tensor_from_potential(VectorPotential(comps))))
    assert rep.closedness.zero


def test_pencil_constant_commuting():
    rep = pencil_flatness_residual(HiggsPencil(StructureTensor.constant(DIAG2, 4)))
    assert rep.flat


def test_pencil_p2(p2):
    _, pot = p2
    assert pencil_flatness_residual(HiggsPencil(tensor_from_wdvv(pot))).flat


def test_pencil_detects_noncommuting():
    # constant matrices that do not commute
    s = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    rep = pencil_flatness_residual(HiggsPencil(StructureTensor.constant(s, 3)))
    assert rep.closedness.zero and not rep.wedge_square.zero


def test_higgs_potential_constant():
    pen = HiggsPencil(StructureTensor.constant(K_T2, 4))
    b = higgs_potential(pen)
    v = pen.A.vars
    m = [pen.A.matrix(a) for a in range(2)]
    for i, j in itertools.product(range(2), repeat=2):
        want = TruncatedSeries.zero(v, 5)
        for a in range(2):
            want = want + TruncatedSeries.variable(v, 5, a, m[a][i][j].constant_term())
        assert b[i][j] == want


def test_higgs_potential_zero():
    pen = HiggsPencil(StructureTensor.constant([[[0] * 2] * 2] * 2, 3))
    assert all(s.is_zero() for row in higgs_potential(pen) for s in row)


def test_higgs_potential_roundtrip_p2(p2):
    _, pot = p2
    pen = HiggsPencil(tensor_from_wdvv(pot))
    b = higgs_potential(pen)
    for a in range(pen.A.dim):
        mat = pen.A.matrix(a)
        for i, j in itertools.product(range(pen.A.dim), repeat=2):
            assert b[i][j].partial(a).equal_through(mat[i][j])


def test_higgs_potential_not_integrable():
    v = VariableSpec.even(2)
    z = TruncatedSeries.zero(v, 4)
    ent = [[[z, z], [z, z]], [[z, z], [z, z]]]
    ent[0][0][0] = TruncatedSeries.variable(v, 4, 1)  # d_1 of A_0 is not d_0 of A_1
    with pytest.raises(PotentialError, match="not integrable"):
        higgs_potential(HiggsPencil(StructureTensor(ent)))


def test_primitive_section_identity(p2):
    _, pot = p2
    pen = with_higgs_potential(HiggsPencil(tensor_from_wdvv(pot)))
    cand = primitive_section_check(pen, [1, 0, 0])
    assert cand.primitive and cand.identity_jacobian


def test_primitive_section_rejects_zero():
    pen = with_higgs_potential(HiggsPencil(StructureTensor.constant(K_T2, 3)))
    with pytest.raises(PotentialError):
        primitive_section_check(pen, [0, 0])


def test_primitive_section_degenerate():
    pen = with_higgs_potential(HiggsPencil(StructureTensor.constant(K_T2, 3)))
    cand = primitive_section_check(pen, [0, 1])
    assert not cand.primitive


# -- Euler fields ----------------------------------------------------------------


def test_identity_is_weight_zero(p2):
    setup, pot = p2
    t = tensor_from_wdvv(pot)
    e = VectorFieldJet.coordinate(setup.vars, t.order, 0)
    assert euler_field_conditions(t, EulerData(e, 0, 0)).ok


def test_p2_euler_field_conditions(p2):
    setup, pot = p2
    t = tensor_from_wdvv(pot)
    rep = euler_field_conditions(t, euler_field_p_r(setup, t.order))
    assert rep.ok and rep.affine


def test_commutator_of_euler_fields_has_weight_zero(p2):
    setup, pot = p2
    t = tensor_from_wdvv(pot)
    e1 = euler_field_p_r(setup, t.order).E
    e2 = e1 + VectorFieldJet.coordinate(setup.vars, t.order, 0)
    assert euler_field_conditions(t, EulerData(e2, 1, 0)).ok
    br = lie_bracket(e1, e2)
    assert euler_field_conditions(t, EulerData(br, 0, 0)).ok


def test_euler_extension_p2(p2):
    setup, pot = p2
    t = tensor_from_wdvv(pot)
    rep = euler_extension_check(t, euler_field_p_r(setup, t.order))
    assert rep.ok and rep.consistent


def test_euler_extension_identity_fails_weight(p2):
    setup, pot = p2
    t = tensor_from_wdvv(pot)
    e = VectorFieldJet.coordinate(setup.vars, t.order, 0)
    rep = euler_extension_check(t, EulerData(e, 0, 0))
    assert not rep.weight_one and not rep.ok


def test_scaled_euler_field(p2):
    setup, pot = p2
    t = tensor_from_wdvv(pot)
    e = euler_field_p_r(setup, t.order).E.scale(2)
    rep = euler_field_conditions(t, EulerData(e, 1, 0))
    assert not rep.poisson.zero
    # residual of weight one equals X o Y, so weight two passes
    assert euler_field_conditions(t, EulerData(e, 2, 0)).ok
    ext = euler_extension_check(t, EulerData(e, 1, 0))
    assert not ext.ok and ext.consistent


def test_affine_field_builder():
    v = VariableSpec.even(2)
    f = affine_field(v, 3, [[1, 0], [0, -1]], [0, 3])
    assert f.components[1].terms == {(0, 1): -1, (0, 0): 3}


# -- documents -------------------------------------------------------------------


def test_tensor_document_roundtrip(p2):
    _, pot = p2
    t = tensor_from_wdvv(pot)
    assert StructureTensor.from_doc(t.to_doc()).entries == t.entries


def test_metric_document_roundtrip():
    m = FlatMetric.from_matrix([[0, F(1, 2)], [F(1, 2), 3]])
    assert FlatMetric.from_doc(m.to_doc()) == m


def test_metric_rejects_singular():
    with pytest.raises(PotentialError):
        FlatMetric.from_matrix([[1, 1], [1, 1]])


def test_matrix_potential_partials_are_multiplication(p2):
    _, pot = p2
    vp = pot.vector_potential()
    c = matrix_potential(vp)
    t = structure_tensor_from_potential(vp)
    for a in range(vp.dim):
        m = t.matrix(a)
        for i, j in itertools.product(range(vp.dim), repeat=2):
            assert c[i][j].partial(a) == m[i][j]
