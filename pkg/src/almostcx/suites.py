"""Named verification suites.

Each check computes one residual against a tolerance. ``mutate=True``
corrupts exactly the identity that check is about (a wrong coefficient, a
dropped term), so a mutated run must flip that check alone.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import bundles as B
from . import connections as C
from . import dual
from . import generator as GEN
from . import jets as JT
from . import structures as S
from . import torus as T
from .geometry import AlmostComplexStructure, VectorField, standard_matrix

SUITES = ("nijenhuis", "connections", "tangent-bundles", "normal-bundles", "nif", "jets", "torus", "ck-example")


@dataclass
class Context:
    seed: int = 0
    mutate: bool = False
    samples: int = 40

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


@dataclass(frozen=True)
class Check:
    id: str
    suite: str
    anchor: str
    tolerance: float
    run: Callable[[Context], tuple[float, int]]


REGISTRY: list[Check] = []


def check(suite: str, id: str, anchor: str, tolerance: float):
    def deco(fn):
        REGISTRY.append(Check(f"{suite}.{id}", suite, anchor, tolerance, fn))
        return fn

    return deco


def checks_for(suite: str) -> list[Check]:
    if suite == "all":
        return sorted(REGISTRY, key=lambda c: (SUITES.index(c.suite), c.id))
    if suite not in SUITES:
        raise KeyError(suite)
    return sorted((c for c in REGISTRY if c.suite == suite), key=lambda c: c.id)


# --- shared fixtures -----------------------------------------------------------


@lru_cache(maxsize=None)
def builtin_structures() -> tuple:
    dom = S.default_chart()
    return (
        AlmostComplexStructure.standard(dom),
        S.ck_example(),
        S.torus_model(S.wavy_beta, name="torus_model(wavy)"),
        S.perturb_standard(0.3, 5, dom),
        S.tangent_image_structure(),
    )


@lru_cache(maxsize=None)
def split_chart():
    return B.SplitChart(S.default_chart(), 2)


def _points(J, rng, n, margin=0.05):
    return J.domain.sample(rng, n, margin, accept=lambda q: J.guard_ok(q, 0.05))


def _random_connection(dim, rng, scale=0.5):
    c0 = rng.normal(size=(dim,) * 3) * scale
    c1 = rng.normal(size=(dim,) * 4) * scale
    dom = S.default_chart()
    return C.ConnectionField(lambda p: c0 + np.einsum("kijm,m->kij", c1, p), dom, name="random")


def _flat_minimal(J):
    return C.minimal_connection(C.complexify_connection(C.ConnectionField.flat(J.domain), J), J)


# --- nijenhuis -----------------------------------------------------------------


def _mutated_nijenhuis(J, p):
    # drops one of the mixed terms
    Jp = J.at(p)
    dJ = dual.value(dual.partials(J.fn, p))
    t1 = np.einsum("hi,kjh->kij", Jp, dJ)
    t3 = np.einsum("kh,hij->kij", Jp, dJ)
    return t1 - t1.transpose(0, 2, 1) + t3


def _nij(ctx, J, p):
    return _mutated_nijenhuis(J, p) if ctx.mutate else C.nijenhuis_tensor(J, p)


@check("nijenhuis", "antisymmetry", "Nijenhuis tensor: N(X,Y) = -N(Y,X)", 1e-7)
def _nij_antisym(ctx):
    worst, n = 0.0, 0
    for k, J in enumerate(builtin_structures()):
        for p in _points(J, ctx.rng(k), ctx.samples):
            N = _nij(ctx, J, p)
            worst = max(worst, float(np.max(np.abs(N + N.transpose(0, 2, 1)))))
            n += 1
    return worst, n


@check("nijenhuis", "antilinearity", "Nijenhuis tensor: N(JX,Y) = N(X,JY) = -J N(X,Y)", 1e-7)
def _nij_antilin(ctx):
    worst, n = 0.0, 0
    for k, J in enumerate(builtin_structures()):
        for p in _points(J, ctx.rng(10 + k), ctx.samples):
            N = C.nijenhuis_tensor(J, p)
            Jp = J.at(p)
            if ctx.mutate:
                N = N + 0.1 * np.einsum("km,mij->kij", Jp, N) + 0.05
            worst = max(worst, C.linearity_residual(N, Jp, -1, -1))
            n += 1
    return worst, n


@check("nijenhuis", "literal-brackets", "Nijenhuis tensor from brackets of vector fields", 1e-9)
def _nij_literal(ctx):
    worst, n = 0.0, 0
    rng = ctx.rng(20)
    for J in builtin_structures()[1:4]:
        dom = J.domain
        a, b = rng.normal(size=(2, dom.dim)), rng.normal(size=(2, dom.dim, dom.dim))
        X = VectorField(lambda p, a=a[0], m=b[0]: a + m @ p, dom)
        Y = VectorField(lambda p, a=a[1], m=b[1]: a + dual.sin(p[0]) * (m @ p), dom)
        for p in _points(J, rng, max(3, ctx.samples // 8)):
            lit = C.nijenhuis(J, X, Y, p)
            N = _nij(ctx, J, p)
            pred = C.bilinear(N, dual.value(X.fn(p)), dual.value(Y.fn(p)))
            worst = max(worst, float(np.max(np.abs(lit - pred))))
            n += 1
    return worst, n


# --- connections ---------------------------------------------------------------


@check("connections", "torsion-mm", "complexified connection: T^{--} = N/4", 1e-7)
def _conn_torsion_mm(ctx):
    worst, n = 0.0, 0
    coef = 0.5 if ctx.mutate else 0.25
    for k, J in enumerate(builtin_structures()[1:4]):
        rng = ctx.rng(30 + k)
        conn = C.complexify_connection(_random_connection(4, rng), J)
        for p in _points(J, rng, max(3, ctx.samples // 4)):
            Tm = C.pm_decompose(C.torsion(conn, p), J, p).mm
            worst = max(worst, float(np.max(np.abs(Tm - coef * C.nijenhuis_tensor(J, p)))))
            n += 1
    return worst, n


@check("connections", "minimal", "minimal connection: T = N/4 and nabla J = 0", 1e-7)
def _conn_minimal(ctx):
    worst, n = 0.0, 0
    for k, J in enumerate(builtin_structures()[1:4]):
        rng = ctx.rng(40 + k)
        conn = C.minimal_connection(C.complexify_connection(_random_connection(4, rng), J), J)
        for p in _points(J, rng, max(3, ctx.samples // 4)):
            t, c = C.minimality_residual(conn, J, p)
            if ctx.mutate:
                G = conn.at(p)
                t = float(np.max(np.abs(C.torsion_from_gamma(G) - 0.5 * C.nijenhuis_tensor(J, p))))
            worst = max(worst, t, c)
            n += 1
    return worst, n


@check("connections", "affine-difference", "minimal connections differ by symmetric complex-bilinear tensors", 1e-9)
def _conn_difference(ctx):
    worst, n = 0.0, 0
    for k, J in enumerate(builtin_structures()[1:4]):
        rng = ctx.rng(50 + k)
        c1 = C.minimal_connection(C.complexify_connection(_random_connection(4, rng), J), J)
        c2 = C.minimal_connection(C.complexify_connection(_random_connection(4, rng), J), J)
        for p in _points(J, rng, max(3, ctx.samples // 4)):
            A = c1.at(p) - c2.at(p)
            if ctx.mutate:
                A = A + 1e-3 * C.nijenhuis_tensor(J, p) + 1e-3 * standard_matrix(4)[:, :, None]
            sym = float(np.max(np.abs(A - A.transpose(0, 2, 1))))
            worst = max(worst, sym, C.linearity_residual(A, J.at(p), 1, 1))
            n += 1
    return worst, n


def _fields(rng, dom):
    out = []
    for _ in range(3):
        a, m = rng.normal(size=dom.dim), rng.normal(size=(dom.dim, dom.dim)) * 0.5
        out.append(VectorField(lambda p, a=a, m=m: a + m @ p, dom))
    return out


@check("connections", "box-independence", "box operator does not depend on the minimal connection", 1e-6)
def _conn_box(ctx):
    J = builtin_structures()[3]
    rng = ctx.rng(60)
    base = _flat_minimal(J)
    X, Y, Z = _fields(rng, J.domain)
    worst, n = 0.0, 0
    for p in _points(J, rng, 2):
        ref = C.box_operator(base, J, X, Y, Z, p)
        for s in range(3):
            raw = rng.normal(size=(4, 4, 4)) * 0.3
            A = lambda q, raw=raw: C.symmetric_complex_tensor(raw, J.fn(q))
            conn = base.shifted(A)
            val = C.box_operator(conn, J, X, Y, Z, p)
            if ctx.mutate:
                # nabla_{N(X,Y)} Z alone is gauge dependent
                w = C.bilinear(C.nijenhuis_tensor(J, p), X.at(p), Y.at(p))
                val = val + np.einsum("kij,i,j->k", conn.at(p) - base.at(p), w, Z.at(p))
            worst = max(worst, float(np.max(np.abs(val - ref))))
            n += 1
    return worst, n


@check("connections", "bianchi", "Bianchi identity for minimal connections (ck example and a perturbed structure)", 1e-4)
def _conn_bianchi(ctx):
    coef = 1.0 if ctx.mutate else 0.25
    worst, n = 0.0, 0
    rng = ctx.rng(70)
    for J in (builtin_structures()[1], builtin_structures()[3]):
        conn = _flat_minimal(J)
        X, Y, Z = _fields(rng, J.domain)
        for p in _points(J, rng, 2):
            r = C.bianchi_residual(conn, J, X, Y, Z, p, nn_coeff=coef)
            worst = max(worst, float(np.max(np.abs(r))))
            n += 1
    return worst, n


# --- tangent bundles -------------------------------------------------------------

_TB_POINT = np.array([0.1, -0.05, 0.2, 0.1, 0.3, -0.2, 0.5, 0.1])
_SCALINGS = (1j, 0.6 + 0.8j, 0.5 - 0.5j)


def _tb_inputs():
    dom = S.default_chart()
    return (S.ck_example(), S.perturb_standard(0.2, 2, dom))


@check("tangent-bundles", "tb1-scaling", "horizontal-lift structure commutes with complex fiber scalings", 1e-9)
def _tb1_scaling(ctx):
    worst, n = 0.0, 0
    for J in _tb_inputs():
        T1 = B.tb1_structure(J, _flat_minimal(J))
        for z in _SCALINGS:
            c = B.fiber_scaling_commutator(T1, J, z, _TB_POINT)
            if ctx.mutate:
                c = c + B.fiber_scaling_commutator(B.tb2_structure(J), J, z, _TB_POINT)
            worst = max(worst, float(np.max(np.abs(c))))
            n += 1
    return worst, n


@check("tangent-bundles", "tb2-commutator", "complete lift: scaling commutator is the Nijenhuis block b N(y, .)", 1e-6)
def _tb2_block(ctx):
    worst, n = 0.0, 0
    for J in _tb_inputs():
        T2 = B.tb2_structure(J)
        for z in _SCALINGS:
            c = B.fiber_scaling_commutator(T2, J, z, _TB_POINT)
            exp = B.expected_tb2_commutator_block(J, z, _TB_POINT)
            if ctx.mutate:
                exp = 0.5 * exp + 1e-3
            worst = max(worst, float(np.max(np.abs(c[4:, :4] - exp))), float(np.max(np.abs(c[:4]))),
                        float(np.max(np.abs(c[4:, 4:]))))
            n += 1
    return worst, n


@check("tangent-bundles", "integrable-agree", "both tangent lifts agree for integrable structures", 1e-9)
def _tb_integrable(ctx):
    dom = S.default_chart()
    Jstd = AlmostComplexStructure.standard(dom)
    pairs = [(Jstd, C.ConnectionField.flat(dom))]
    Jpb = S.integrable_pullback(dom)
    pairs.append((Jpb, _flat_minimal(Jpb)))
    worst, n = 0.0, 0
    rng = ctx.rng(80)
    for J, conn in pairs:
        T1 = B.tb1_structure(J, conn)
        T2 = B.tb2_structure(J)
        for _ in range(5):
            p = rng.uniform(-0.3, 0.3, 8)
            d = T1.at(p) - T2.at(p)
            if ctx.mutate:
                d = d + 1e-3 * np.eye(8)
            worst = max(worst, float(np.max(np.abs(d))))
            n += 1
    return worst, n


@check("tangent-bundles", "tb1-gauge", "horizontal-lift structure is independent of the minimal connection", 1e-9)
def _tb1_gauge(ctx):
    worst, n = 0.0, 0
    for k, J in enumerate(_tb_inputs()):
        conn = _flat_minimal(J)
        T1 = B.tb1_structure(J, conn)
        A = B.symmetric_gauge(J, seed=ctx.seed + 4 + k)
        if ctx.mutate:
            raw = ctx.rng(90 + k).normal(size=(4, 4, 4)) * 0.3
            A = lambda p, raw=raw: raw
        T1g = B.tb1_structure(J, conn.shifted(A), check=not ctx.mutate)
        worst = max(worst, float(np.max(np.abs(T1.at(_TB_POINT) - T1g.at(_TB_POINT)))))
        n += 1
    return worst, n


# --- normal bundles ---------------------------------------------------------------

_XS = (np.array([0.1, -0.2]), np.array([-0.3, 0.25]))
_Y = np.array([0.2, 0.15])


def _shear(x):
    Js = standard_matrix(2)
    return (0.3 * dual.sin(x[0]) + 0.2 * x[1]) * np.eye(2) + (0.1 + 0.2 * x[0] * x[1]) * Js


@check("normal-bundles", "nb2-shear", "fiber-dilation structure is invariant under y-dependent shears of the splitting", 1e-6)
def _nb2_shear(ctx):
    ch = split_chart()
    worst, n = 0.0, 0
    for J in (builtin_structures()[2], builtin_structures()[1]):
        Jt = B.shear_pullback(J, ch, _shear)
        nb, nbt = B.nb2_structure(J, ch), B.nb2_structure(Jt, ch)
        if ctx.mutate:
            nbt = B.nb1_structure(Jt, ch)
        worst = max(worst, nb.max_difference(nbt, _XS))
        n += len(_XS)
    return worst, n


@check("normal-bundles", "nb2-nijenhuis", "Nijenhuis tensor of the fiber-dilation structure versus the ambient one on L", 1e-6)
def _nb2_nij(ctx):
    J = builtin_structures()[2]
    ch = split_chart()
    nb2 = B.nb2_structure(J, ch)
    worst, n = 0.0, 0
    for x in _XS:
        for y in (_Y, -0.5 * _Y):
            r = B.nb2_nijenhuis(J, ch, x, y * (3.0 if ctx.mutate else 1.0), nb2)
            if ctx.mutate:
                r = B.nb2_nijenhuis(J, ch, x, y, B.nb2_structure(builtin_structures()[3], ch, check=False))
            worst = max(worst, r["yy"], r["xy"], r["xx"])
            n += 1
    return worst, n


@check("normal-bundles", "nb1-gauge", "connection-quotient structure does not depend on the minimal connection", 1e-6)
def _nb1_gauge(ctx):
    ch = split_chart()
    worst, n = 0.0, 0
    for k, J in enumerate((builtin_structures()[2], builtin_structures()[1])):
        nb1 = B.nb1_structure(J, ch)
        g = B.symmetric_gauge(J, seed=ctx.seed + 3 + k, chart=ch)
        if ctx.mutate:
            raw = ctx.rng(95 + k).normal(size=(4, 4, 4)) * 0.3
            g = lambda p, raw=raw: raw
        nbg = B.nb1_structure(J, ch, gauge=g, check=False)
        worst = max(worst, nb1.max_difference(nbg, _XS))
        n += len(_XS)
    return worst, n


# --- normally integrable form --------------------------------------------------------


@check("nif", "reassembly", "bundle structure = normally integrable form + (1/2) J0 N(r, .)", 1e-9)
def _nif_reassembly(ctx):
    ch = split_chart()
    worst, n = 0.0, 0
    for J in (builtin_structures()[2], builtin_structures()[3]):
        nb2 = B.nb2_structure(J, ch)
        nif = B.nif_transform(nb2)
        if ctx.mutate:
            nif = B.nb2_structure(J, ch)
        for x in _XS:
            worst = max(worst, B.reassembly_residual(nb2, nif, ch.point(x, _Y)))
            n += 1
    return worst, n


@check("nif", "nprime-vanishes", "the normally integrable form has N' = 0", 1e-8)
def _nif_nprime(ctx):
    ch = split_chart()
    worst, n = 0.0, 0
    for J in (builtin_structures()[2], builtin_structures()[3]):
        nb2 = B.nb2_structure(J, ch)
        nif = nb2 if ctx.mutate else B.nif_transform(nb2)
        for x in _XS:
            worst = max(worst, float(np.max(np.abs(B.nprime_direct(nif, x, _Y)))))
            n += 1
    return worst, n


@check("nif", "nprime-formula", "N' from the canonical connection matches the direct Nijenhuis component", 1e-9)
def _nif_formula(ctx):
    ch = split_chart()
    worst, n = 0.0, 0
    for J in (builtin_structures()[2], builtin_structures()[1]):
        nb2 = B.nb2_structure(J, ch)
        coef = 2.0 if ctx.mutate else 1.0
        for x in _XS:
            d = coef * B.nprime_formula(nb2, x) - B.nprime_direct(nb2, x, _Y)
            worst = max(worst, float(np.max(np.abs(d))))
            n += 1
    return worst, n


@check("nif", "t14-model", "connection-quotient structure = normally integrable form of the fiber-dilation structure (line bundle model)", 1e-6)
def _nif_t14_model(ctx):
    J = builtin_structures()[2]
    if ctx.mutate:
        ch = split_chart()
        nb1, nb2 = B.nb1_structure(J, ch), B.nb2_structure(J, ch)
        return nb1.max_difference(nb2, _XS), len(_XS)
    return B.t14_check(J, split_chart(), samples=5, seed=ctx.seed), 5


@check("nif", "t14-ck", "connection-quotient structure = normally integrable form of the fiber-dilation structure (ck example)", 1e-5)
def _nif_t14_ck(ctx):
    J = builtin_structures()[1] if not ctx.mutate else builtin_structures()[3]
    if ctx.mutate:
        ch = split_chart()
        return B.nb1_structure(J, ch).max_difference(B.nb2_structure(J, ch), _XS), len(_XS)
    return B.t14_check(J, split_chart(), samples=5, seed=ctx.seed), 5


@check("nif", "addition", "fibered addition is pseudoholomorphic for fiber-linear structures", 1e-9)
def _nif_addition(ctx):
    nb2 = B.nb2_structure(builtin_structures()[2], split_chart())
    if ctx.mutate:
        nb2 = B.quadratic_corruption(nb2)
    return B.addition_ph_check(nb2, samples=5, seed=ctx.seed), 5


# --- jets -----------------------------------------------------------------------


@lru_cache(maxsize=None)
def _normal_forms():
    ch = split_chart()
    return tuple(JT.normal_form_1jet(J, ch) for J in (builtin_structures()[2], builtin_structures()[3]))


@check("jets", "prime-vertical", "corrected structure: Nijenhuis tensor vanishes with a vertical argument along L", 1e-7)
def _jets_vertical(ctx):
    worst, n = 0.0, 0
    for nf in _normal_forms():
        for x in _XS:
            if ctx.mutate:
                r = JT.prime_nijenhuis_residuals(JT.NormalForm1Jet(nf.chart, nf.J, nf.J, nf.J0, nf.correction,
                                                                   nf.weight), x)
            else:
                r = JT.prime_nijenhuis_residuals(nf, x)
            worst = max(worst, r["vertical"], r["tangent"])
            n += 1
    return worst, n


@check("jets", "square-order", "corrected structure squares to -1 up to second order in the distance to L", 0.1)
def _jets_order(ctx):
    worst, n = 0.0, 0
    rng = ctx.rng(100)
    for nf in _normal_forms():
        fn = nf.prime.fn
        if ctx.mutate:
            fn = lambda p, f=nf.prime.fn: f(p) * (1 + p[2] + p[3])
        for x in _XS:
            k = JT.vanishing_order(fn, nf.chart, x, rng.normal(size=2))
            # identically zero defect: vanishes to every order
            worst = max(worst, abs(k - 2.0) if math.isfinite(k) else 0.0)
            n += 1
    return worst, n


@check("jets", "phi2-solve", "second-order symbol solves P = Phi(X,JY) - J Phi(X,Y)", 1e-10)
def _jets_phi2(ctx):
    worst, n = 0.0, 0
    rng = ctx.rng(110)
    for J in builtin_structures()[1:4]:
        for p in _points(J, rng, 3):
            Jp = J.at(p)
            P = JT.constructive_p(Jp, rng)
            Phi = JT.phi2_solve(P, Jp)
            if ctx.mutate:
                Phi = JT.phi2_from_b(-JT.b_from_p(P, Jp), Jp)
            worst = max(worst, JT.phi2_residual(P, Phi, Jp))
            n += 1
    return worst, n


@check("jets", "p-tensor", "P tensor: antilinear, symmetric relation, normal part vanishes on TL", 1e-9)
def _jets_p(ctx):
    worst, n = 0.0, 0
    ch = split_chart()
    for nf in _normal_forms():
        Jt = nf.tilde()
        for x in _XS:
            P = JT.p_tensor(nf.J, Jt, ch, x)
            Jp = nf.J.at(ch.point(x))
            if ctx.mutate:
                P = P + 0.1 * np.einsum("km,mij->kij", Jp, P) + 1e-3
            worst = max(worst, JT.antilinearity_residual(P, Jp), JT.symmetry_relation_residual(P, Jp),
                        JT.tangent_argument_residuals(P, ch)["normal"])
            n += 1
    return worst, n


@check("jets", "point-normal-form", "at a point the structure is standard up to -(1/4) J N in the linear term", 1e-9)
def _jets_point(ctx):
    worst, n = 0.0, 0
    rng = ctx.rng(120)
    for J in builtin_structures()[2:4]:
        for p in _points(J, rng, 2, margin=0.2):
            pn = JT.point_normal_form(J, p)
            r = pn.residual() if not ctx.mutate else float(np.max(np.abs(pn.linear + pn.predicted)))
            worst = max(worst, r)
            n += 1
    return worst, n


# --- torus ----------------------------------------------------------------------

_W = 2j * math.pi


def _torus_cases():
    return {
        "trivial": T.EllipticBundleSpec(_W, 1.0),
        "moser": T.EllipticBundleSpec(_W, 1.0, beta_re=0.5),
        "twisted": T.EllipticBundleSpec(_W, cmath.exp(1j * math.pi / 3)),
    }


@check("torus", "kernel-trivial-bundle", "kernel of the linearized operator for the trivial bundle is the constants", 0.5)
def _torus_k0(ctx):
    rep = T.kernel_analysis(_torus_cases()["trivial"], 16, refine=False)
    if ctx.mutate:
        rep = T.spectrum(T.assemble_cr_operator(_torus_cases()["trivial"], 16), rel=1e-30)
    return abs(rep.kernel_dim - 2), 1


@check("torus", "kernel-moser", "constant coupling beta = 1/2: trivial kernel, stable smallest singular value", 0.1)
def _torus_moser(ctx):
    spec = _torus_cases()["moser"]
    sig = []
    worst = 0.0
    for n in (8, 16, 24):
        rep = T.kernel_analysis(spec, n, refine=False)
        worst = max(worst, float(rep.kernel_dim))
        sig.append(rep.sigma_min)
    if ctx.mutate:
        sig[-1] *= 1.5
    drift = max(abs(s - sig[1]) / sig[1] for s in sig)
    return max(worst, drift), 3


@check("torus", "kernel-twisted", "nontrivial multiplier with beta = 0: trivial kernel", 0.5)
def _torus_twisted(ctx):
    spec = _torus_cases()["twisted"]
    if ctx.mutate:
        spec = T.EllipticBundleSpec(_W, 1.0)
    return float(T.kernel_analysis(spec, 16, refine=False).kernel_dim), 1


@check("torus", "rrt-classification", "non-deformation criterion: fail / hold / hold (degenerate branch)", 0.5)
def _torus_rrt(ctx):
    cases = _torus_cases()
    got = [T.rrt_criterion(cases[k], 0.5, grid=16).holds for k in ("trivial", "moser", "twisted")]
    want = [False, True, True]
    if ctx.mutate:
        want = [True, True, True]
    return float(sum(g != w for g, w in zip(got, want))), 3


@check("torus", "alpha", "constant alpha = (i/2) ln(lambda) / Im(omega) and tau", 1e-12)
def _torus_alpha(ctx):
    cases = [((_W, 1.0), 0.0, 0.0), ((_W, 1j), -0.125, 0.0), ((_W, math.exp(-math.pi)), -0.25j, -0.5)]
    worst = 0.0
    for (w, lam), a, tau in cases:
        got_a, got_t = T.alpha_constant(w, lam)
        if ctx.mutate:
            got_a = got_a.conjugate() if got_a.imag else -got_a + 0.1
        worst = max(worst, abs(got_a - a), abs(got_t - tau))
    return worst, len(cases)


@check("torus", "gromov-identity", "linearized operator with the N/4 term equals the Cauchy-Riemann operator of the fiber-dilation structure", 1e-6)
def _torus_gromov(ctx):
    J = S.torus_model((0.5, 0.0))
    ch = split_chart()
    rng = ctx.rng(130)
    worst, n = 0.0, 0
    for k in range(20):
        c = rng.normal(size=(2, 3))
        sec = lambda x, c=c: (c[0, 0] + c[0, 1] * x[0] + c[0, 2] * dual.sin(x[1]),
                              c[1, 0] + c[1, 1] * x[1] * x[0] + c[1, 2] * dual.cos(x[0]))
        xs = ch.sample_base(rng, 2, 0.1)
        if ctx.mutate:
            r = _mutated_gromov(J, ch, sec, xs)
        else:
            r = T.gromov_identity_check(J, ch, sec, xs)
        worst = max(worst, r["mis_vs_true"], r["normal_vs_nb2"])
        n += 1
    return worst, n


def _mutated_gromov(J, ch, sec, xs):
    # drop the N/4 term: compare the plain d-bar part with the true linearization
    nb2 = B.nb2_structure(J, ch)
    worst = 0.0
    for x in xs:
        r = T.gromov_identity_check(J, ch, sec, [x])
        sig = np.asarray(dual.value(np.asarray(sec(x), dtype=object)), dtype=float)
        N = C.nijenhuis_tensor(J, ch.point(x))
        v = np.zeros(4)
        v[ch.ys] = sig
        worst = max(worst, r["mis_vs_true"] + 0.25 * float(np.max(np.abs(np.einsum("kij,i->kj", N, v)))))
    return {"mis_vs_true": worst, "normal_vs_nb2": 0.0}


@check("torus", "graph-frame", "graph of a section: J e1 - e2 encodes f_zbar + beta conj(f)", 1e-8)
def _torus_graph(ctx):
    spec = T.EllipticBundleSpec(_W, 1.0, beta_re="0.5 + 0.2*sin(2*pi*s2)", beta_im="0.1*cos(2*pi*s1)")
    f = lambda q: (0.3 * dual.sin(2 * math.pi * q[0]) + 0.1 * q[1] * q[1], dual.cos(q[0] + 2 * q[1]))
    pts = ctx.rng(140).random((6, 2))
    r = T.graph_ph_residual(spec, f, pts)
    gap = r["agreement"]
    if ctx.mutate:
        gap = float(np.max(np.abs(r["frame"][:, 2] - 2 * r["equation"].imag)))
    return gap, len(pts)


# --- ck example --------------------------------------------------------------------


def _ck_data(**kw):
    return GEN.CKInitialData(a1="-s", b1="s", **kw)


@check("ck-example", "closed-form", "marched solution reproduces a1 = -b1 = -s/(1+t), a2 = -b2 = -t/(1+t)", 1e-4)
def _ck_closed(ctx):
    data = _ck_data(step=1e-2 if ctx.mutate else 1e-3)
    g = GEN.ck_march(data)
    exact = GEN.closed_form_fields
    if ctx.mutate:
        exact = lambda S_, T_: tuple(v * (1 + 1e-3) for v in GEN.closed_form_fields(S_, T_))
    return g.max_error(exact), g.fields["a1"].size


@check("ck-example", "rk4-order", "step halving reduces the marching error about 16 times", 0.2)
def _ck_order(ctx):
    e1, e2, ratio = GEN.richardson_ratio(_ck_data(step=0.1), GEN.closed_form_fields)
    if ctx.mutate:
        ratio = e1 / (2 * e2)
    return abs(ratio - 16.0) / 16.0, 2


@check("ck-example", "fiber-constancy", "forced solutions: image of N along the fibers and N(d_x, .) constant on them", 1e-4)
def _ck_fiber(ctx):
    data = GEN.CKInitialData(a1="0.1*sin(s)", a2="0.05*s*s", b1="0.2*cos(s)", b2="0.1*s", c1=0.3, c2=-0.2, t_max=0.5)
    J = GEN.ck_march(data).structure()
    r = GEN.fiber_constancy(J, [0, 0, 0.1, 0.2], [0, 0, -0.4, 0.35])
    block = r["block"]
    expected = np.array([[-0.3, 0.2], [0.2, 0.3]])
    if ctx.mutate:
        expected = -expected
    return max(r["difference"], r["image_off_fiber"], float(np.max(np.abs(block[2:] - expected)))), 2
