import numpy as np
import pytest
import sympy as sp

from almostcx import connections as C
from almostcx import structures as S
from almostcx.errors import ContractError
from almostcx.geometry import AlmostComplexStructure, VectorField, standard_matrix

from oracles import X as SX, Y as SY, fd_nijenhuis, fd_partials, lambdify_tensor, sym_ck_example, \
    sym_nijenhuis, sym_torus_model

from helpers import DOM, builtins, coord, poly_field, random_connection
RNG_POINTS = np.random.default_rng(11).uniform(-0.4, 0.4, size=(12, 4))


def poly_beta(p):
    return 0.5 + 0.2 * p[0] * p[1], 0.1 * p[0] - 0.3 * p[1] * p[1]


# --- Nijenhuis tensor --------------------------------------------------------------


def test_standard_is_integrable():
    J = AlmostComplexStructure.standard(DOM)
    for p in RNG_POINTS[:3]:
        assert np.max(np.abs(C.nijenhuis_tensor(J, p))) == 0.0


def test_example_dx_ds_vanishes_at_origin():
    J = S.ck_example()
    assert np.max(np.abs(C.nijenhuis(J, coord(0), coord(2), np.zeros(4)))) < 1e-15


def test_lambda_from_model():
    # 1/2 J N(d_w, d_z) = Lambda d_wbar with Lambda = -2i conj(beta) = -i for beta = 1/2
    J = S.torus_model((0.5, 0.0))
    dz = 0.5 * np.array([1, -1j, 0, 0])
    dw = 0.5 * np.array([0, 0, 1, -1j])
    dwb = 0.5 * np.array([0, 0, 1, 1j])
    for p in (np.zeros(4), RNG_POINTS[0]):
        v = 0.5 * J.at(p) @ np.einsum("kij,i,j->k", C.nijenhuis_tensor(J, p), dw, dz)
        assert np.allclose(v, -1j * dwb, atol=1e-14)


@pytest.mark.parametrize("which", ["ck", "torus"])
def test_against_symbolic_oracle(which):
    if which == "ck":
        J, Jm = S.ck_example(), sym_ck_example()
    else:
        J = S.torus_model(poly_beta)
        Jm = sym_torus_model(0.5 + 0.2 * SX * SY, 0.1 * SX - 0.3 * SY ** 2)
    ref = lambdify_tensor(sp.Array(sym_nijenhuis(Jm)))
    for p in RNG_POINTS:
        assert np.allclose(C.nijenhuis_tensor(J, p), ref(p), atol=1e-12)


def test_against_finite_differences():
    J = S.perturb_standard(0.3, 5, DOM)
    for p in RNG_POINTS[:5]:
        assert np.allclose(C.nijenhuis_tensor(J, p), fd_nijenhuis(J.at, p), atol=1e-7)


def test_literal_brackets_match_tensor():
    J = S.perturb_standard(0.3, 5, DOM)
    U, V = poly_field(1), poly_field(2)
    for p in RNG_POINTS[:4]:
        lit = C.nijenhuis(J, U, V, p)
        ten = C.bilinear(C.nijenhuis_tensor(J, p), U.at(p), V.at(p))
        assert np.allclose(lit, ten, atol=1e-12)


@pytest.mark.parametrize("J", builtins(), ids=lambda J: J.name)
def test_antisymmetric_and_antilinear(J):
    for p in np.random.default_rng(0).uniform(-0.4, 0.4, size=(40, 4)):
        N = C.nijenhuis_tensor(J, p)
        assert np.max(np.abs(N + N.transpose(0, 2, 1))) < 1e-7
        assert C.linearity_residual(N, J.at(p), -1, -1) < 1e-7


# --- (anti)linear parts -------------------------------------------------------------


def test_single_entry_plus_plus_part():
    T = np.zeros((4, 4, 4))
    T[0, 0, 0] = 1.0
    parts = C.pm_parts(T, standard_matrix(4))
    assert parts.pp[0, 0, 0] == pytest.approx(0.25)


def test_nijenhuis_is_minus_minus():
    J = S.perturb_standard(0.3, 5, DOM)
    p = RNG_POINTS[1]
    parts = C.pm_decompose(C.nijenhuis_tensor(J, p), J, p)
    assert np.allclose(parts.mm, C.nijenhuis_tensor(J, p), atol=1e-14)
    for key in ((1, 1), (1, -1), (-1, 1)):
        assert np.max(np.abs(parts[key])) < 1e-14


def test_parts_sum_project_and_have_declared_linearity():
    rng = np.random.default_rng(4)
    J = S.perturb_standard(0.3, 5, DOM)
    Jp = J.at(RNG_POINTS[2])
    T = rng.normal(size=(4, 4, 4))
    parts = C.pm_parts(T, Jp)
    assert np.max(np.abs(parts.total() - T)) < 1e-12
    for (e1, e2), P in parts.parts.items():
        assert C.linearity_residual(P, Jp, e1, e2) < 1e-12
        again = C.pm_parts(P, Jp)
        assert np.max(np.abs(again[(e1, e2)] - P)) < 1e-12


# --- connections ------------------------------------------------------------------


def test_complexify_standard_flat_unchanged():
    J = AlmostComplexStructure.standard(DOM)
    cf = C.complexify_connection(C.ConnectionField.flat(DOM), J)
    assert np.max(np.abs(cf.at(RNG_POINTS[0]))) == 0.0


def test_complexify_parallel_and_idempotent():
    J = S.ck_example()
    c1 = C.complexify_connection(C.ConnectionField.flat(DOM), J)
    c2 = C.complexify_connection(c1, J)
    for p in np.random.default_rng(1).uniform(-0.4, 0.4, size=(100, 4)):
        _, nab = C.minimality_residual(c1, J, p)
        assert nab < 1e-7
    for p in RNG_POINTS[:5]:
        assert np.max(np.abs(c1.at(p) - c2.at(p))) < 1e-12


def test_torsion_examples():
    assert np.max(np.abs(C.torsion(C.ConnectionField.flat(DOM), RNG_POINTS[0]))) == 0.0
    conn = random_connection(2)
    sym = C.ConnectionField(lambda p: conn.fn(p) + conn.fn(p).transpose(0, 2, 1), DOM)
    assert np.max(np.abs(C.torsion(sym, RNG_POINTS[0]))) < 1e-15
    G = conn.at(RNG_POINTS[0])
    T = C.torsion(conn, RNG_POINTS[0])
    for k, i, j in np.ndindex(4, 4, 4):
        assert T[k, i, j] == G[k, i, j] - G[k, j, i]


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_totally_antilinear_torsion_is_quarter_n(seed):
    for J in builtins()[1:]:
        conn = C.complexify_connection(random_connection(seed), J)
        for p in RNG_POINTS[:3]:
            T = C.torsion(conn, p)
            mm = C.pm_parts(T, J.at(p)).mm
            assert np.max(np.abs(mm - 0.25 * C.nijenhuis_tensor(J, p))) < 1e-7


def test_minimal_connection_properties():
    J = S.ck_example()
    m = C.minimal_connection(C.ConnectionField.flat(DOM), J)
    for p in np.random.default_rng(8).uniform(-0.4, 0.4, size=(100, 4)):
        t, c = C.minimality_residual(m, J, p)
        assert t < 1e-7 and c < 1e-7
    flat_std = C.minimal_connection(C.ConnectionField.flat(DOM), AlmostComplexStructure.standard(DOM))
    assert np.max(np.abs(flat_std.at(RNG_POINTS[0]))) == 0.0


def test_minimal_family_is_affine_over_symmetric_tensors():
    J = S.perturb_standard(0.3, 5, DOM)
    m1 = C.minimal_connection(random_connection(1), J)
    m2 = C.minimal_connection(random_connection(2), J)
    rng = np.random.default_rng(5)
    B = rng.normal(size=(4, 4, 4))
    A = lambda p: C.symmetric_complex_tensor(B * (1 + p[0]), J.fn(p))
    shifted = m1.shifted(A)
    for p in RNG_POINTS[:4]:
        t, c = C.minimality_residual(shifted, J, p)
        assert t < 1e-9 and c < 1e-9
        D = m2.at(p) - m1.at(p)
        assert np.max(np.abs(D - D.transpose(0, 2, 1))) < 1e-9
        assert C.linearity_residual(D, J.at(p), 1, 1) < 1e-9


# --- curvature ----------------------------------------------------------------------


def test_curvature_flat_and_antisymmetric():
    flat = C.ConnectionField.flat(DOM)
    U, V, W = poly_field(1), poly_field(2), poly_field(3)
    p = RNG_POINTS[0]
    assert np.max(np.abs(C.curvature(flat, U, V, W, p))) < 1e-14
    conn = random_connection(4)
    assert np.allclose(C.curvature(conn, U, V, W, p), -C.curvature(conn, V, U, W, p), atol=1e-12)


def test_curvature_literal_vs_coordinate_formula():
    conn = random_connection(6)
    U, V, W = poly_field(1), poly_field(2), poly_field(3)
    for p in RNG_POINTS[:3]:
        G = conn.at(p)
        dG = fd_partials(conn.at, p)
        R = np.einsum("kjli->klij", dG) - np.einsum("kilj->klij", dG)
        R += np.einsum("kim,mjl->klij", G, G) - np.einsum("kjm,mil->klij", G, G)
        ref = np.einsum("klij,l,i,j->k", R, W.at(p), U.at(p), V.at(p))
        assert np.allclose(C.curvature(conn, U, V, W, p), ref, atol=1e-4)


def test_curvature_mm_antilinear_and_matches_average():
    J = S.perturb_standard(0.3, 5, DOM)
    conn = C.minimal_connection(random_connection(3), J)
    p = RNG_POINTS[1]
    Jp = J.at(p)
    Rmm = C.mm_part_of_curvature(C.curvature_tensor(conn, p), Jp)
    R1 = np.einsum("klaj,ai->klij", Rmm, Jp)  # R(J d_i, d_j)
    assert np.max(np.abs(R1 + np.einsum("km,mlij->klij", Jp, Rmm))) < 1e-9
    U, V, W = poly_field(1), poly_field(2), poly_field(3)
    lit = C.curvature_mm(conn, J, U, V, W, p)
    ten = np.einsum("klij,l,i,j->k", Rmm, W.at(p), U.at(p), V.at(p))
    assert np.allclose(lit, ten, atol=1e-9)


def test_box_independent_of_minimal_connection():
    J = S.perturb_standard(0.3, 5, DOM)
    m1 = C.minimal_connection(random_connection(1), J)
    B = np.random.default_rng(9).normal(size=(4, 4, 4))
    m2 = m1.shifted(lambda p: C.symmetric_complex_tensor(B * (1 + p[1] * p[2]), J.fn(p)))
    U, V, W = poly_field(1), poly_field(2), poly_field(3)
    for p in RNG_POINTS[:3]:
        assert np.allclose(C.box_operator(m1, J, U, V, W, p), C.box_operator(m2, J, U, V, W, p), atol=1e-6)


def test_box_twisted_derivation_law():
    J = S.perturb_standard(0.3, 5, DOM)
    m = C.minimal_connection(random_connection(1), J)
    U, V, W = poly_field(1), poly_field(2), poly_field(3)
    f = lambda p: p[2] + p[3]
    fW = VectorField(lambda p: f(p) * W.fn(p), DOM)
    for p in RNG_POINTS[:3]:
        Nuv = C.bilinear(C.nijenhuis_tensor(J, p), U.at(p), V.at(p))
        Nf = Nuv[2] + Nuv[3]  # derivative of s + t along N(U, V)
        lhs = C.box_operator(m, J, U, V, fW, p)
        rhs = Nf * W.at(p) + f(p) * C.box_operator(m, J, U, V, W, p)
        assert np.max(np.abs(lhs - rhs)) < 1e-6


def test_box_requires_minimal():
    J = S.perturb_standard(0.3, 5, DOM)
    with pytest.raises(ContractError):
        C.box_operator(random_connection(1), J, coord(0), coord(1), coord(2), RNG_POINTS[0])


def test_graded_commutation_asserted():
    J = S.perturb_standard(0.3, 5, DOM)
    Jp = J.at(RNG_POINTS[0])
    T = np.random.default_rng(1).normal(size=(4, 4, 4))  # not a torsion: not antisymmetric
    with pytest.raises(ContractError):
        C.minimal_gauge(T, Jp)


def test_bianchi_identity():
    U, V, W = poly_field(1), poly_field(2), poly_field(3)
    flat_std = C.ConnectionField.flat(DOM)
    Jstd = AlmostComplexStructure.standard(DOM)
    assert np.max(np.abs(C.bianchi_residual(flat_std, Jstd, U, V, W, RNG_POINTS[0]))) == 0.0
    J = S.ck_example()
    m = C.minimal_connection(C.ConnectionField.flat(DOM), J)
    for p in np.random.default_rng(2).uniform(-0.4, 0.4, size=(20, 4)):
        assert np.max(np.abs(C.bianchi_residual(m, J, U, V, W, p))) < 1e-4
    Jp = S.perturb_standard(0.3, 5, DOM)
    mp = C.minimal_connection(random_connection(2), Jp)
    for p in RNG_POINTS[:3]:
        r1 = C.bianchi_residual(mp, Jp, U, V, W, p)
        U2 = VectorField(lambda q: 2 * U.fn(q), DOM)
        r2 = C.bianchi_residual(mp, Jp, U2, V, W, p)
        assert np.max(np.abs(r1)) < 1e-4
        assert np.allclose(r2, 2 * r1, atol=1e-9)
