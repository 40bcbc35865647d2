"""Acceptance criteria 1-11 at their stated tolerances.

Each test prints one ``PASS``/``FAIL`` line (visible even without ``-s``) and
then asserts the same verdict.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from almostcx import bundles as B
from almostcx import cli
from almostcx import connections as C
from almostcx import dual
from almostcx import generator as G
from almostcx import jets as JT
from almostcx import structures as S
from almostcx import suites
from almostcx import torus as T
from almostcx.geometry import AlmostComplexStructure, VectorField
from almostcx.reports import verify

from helpers import CHART, DOM, builtins, random_connection


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}")
        assert ok, detail

    return emit


def points(J, rng, n, margin=0.05):
    return J.domain.sample(rng, n, margin, accept=lambda q: J.guard_ok(q, 0.05))


def fields(rng, dom=DOM):
    out = []
    for _ in range(3):
        a, m = rng.normal(size=dom.dim), rng.normal(size=(dom.dim, dom.dim)) * 0.5
        out.append(VectorField(lambda p, a=a, m=m: a + m @ p, dom))
    return out


NONTRIVIAL = lambda: builtins()[1:]


def test_criterion_01_nijenhuis_algebra(verdict):
    rng = np.random.default_rng(1)
    worst, n = 0.0, 0
    for J in builtins():
        for p in points(J, rng, 200):
            N, M = C.nijenhuis_tensor(J, p), J.at(p)
            worst = max(worst,
                        float(np.max(np.abs(N + JT.swap(N)))),
                        float(np.max(np.abs(JT.in_first(N, M) + JT.after(M, N)))),
                        float(np.max(np.abs(JT.in_second(N, M) + JT.after(M, N)))))
            n += 1
    verdict(1, n == 1000 and worst < 1e-7, f"N antisymmetric and antilinear, {n} points, worst {worst:.2e} < 1e-7")


def test_criterion_02_connections(verdict):
    rng = np.random.default_rng(2)
    t_mm = t_min = t_diff = 0.0
    for k, J in enumerate(NONTRIVIAL()):
        raw = C.complexify_connection(random_connection(10 + k), J)
        m1 = C.minimal_connection(raw, J)
        m2 = C.minimal_connection(C.complexify_connection(random_connection(20 + k), J), J)
        for p in points(J, rng, 10):
            Tm = C.pm_decompose(C.torsion(raw, p), J, p).mm
            t_mm = max(t_mm, float(np.max(np.abs(Tm - 0.25 * C.nijenhuis_tensor(J, p)))))
            t_min = max(t_min, *C.minimality_residual(m1, J, p))
            A = m1.at(p) - m2.at(p)
            t_diff = max(t_diff, float(np.max(np.abs(A - JT.swap(A)))), C.linearity_residual(A, J.at(p), 1, 1))
    ok = t_mm < 1e-7 and t_min < 1e-7 and t_diff < 1e-9
    verdict(2, ok, f"T^--=N/4 {t_mm:.2e}, minimal {t_min:.2e} (< 1e-7); difference {t_diff:.2e} (< 1e-9)")


def test_criterion_03_box_and_bianchi(verdict):
    rng = np.random.default_rng(3)
    box = 0.0
    for J in (S.perturb_standard(0.3, 5, DOM), S.torus_model(S.wavy_beta)):
        base = C.minimal_connection(C.ConnectionField.flat(DOM), J)
        X, Y, Z = fields(rng)
        for p in points(J, rng, 3):
            ref = C.box_operator(base, J, X, Y, Z, p)
            for _ in range(3):
                raw = rng.normal(size=(4, 4, 4)) * 0.3
                conn = base.shifted(lambda q, raw=raw: C.symmetric_complex_tensor(raw, J.fn(q)))
                box = max(box, float(np.max(np.abs(C.box_operator(conn, J, X, Y, Z, p) - ref))))
    bianchi = 0.0
    J = S.ck_example()
    conn = C.minimal_connection(C.ConnectionField.flat(DOM), J)
    X, Y, Z = fields(rng)
    for p in points(J, rng, 10):
        bianchi = max(bianchi, float(np.max(np.abs(C.bianchi_residual(conn, J, X, Y, Z, p)))))
    verdict(3, box < 1e-6 and bianchi < 1e-4, f"box gauge independence {box:.2e} (< 1e-6), Bianchi {bianchi:.2e} (< 1e-4)")


def test_criterion_04_tangent_bundles(verdict):
    rng = np.random.default_rng(4)
    scal = block = agree = 0.0
    for J in (S.ck_example(), S.torus_model(S.wavy_beta), S.perturb_standard(0.3, 5, DOM)):
        T1 = B.tb1_structure(J, C.minimal_connection(C.ConnectionField.flat(DOM), J))
        T2 = B.tb2_structure(J)
        for p in rng.uniform(-0.25, 0.25, size=(4, 8)):
            for z in (1j, 0.6 + 0.8j, 0.5 - 0.5j):
                scal = max(scal, float(np.max(np.abs(B.fiber_scaling_commutator(T1, J, z, p)))))
                K = B.fiber_scaling_commutator(T2, J, z, p)
                block = max(block, float(np.max(np.abs(K[4:, :4] - B.expected_tb2_commutator_block(J, z, p)))),
                            float(np.max(np.abs(K[:4]))), float(np.max(np.abs(K[4:, 4:]))))
    for J in (AlmostComplexStructure.standard(DOM), S.integrable_pullback()):
        T1 = B.tb1_structure(J, C.minimal_connection(C.ConnectionField.flat(DOM), J))
        T2 = B.tb2_structure(J)
        for p in rng.uniform(-0.3, 0.3, size=(5, 8)):
            agree = max(agree, float(np.max(np.abs(T1.at(p) - T2.at(p)))))
    ok = scal < 1e-9 and block < 1e-6 and agree < 1e-9
    verdict(4, ok, f"TB-I scaling {scal:.2e} (< 1e-9), TB-II block {block:.2e} (< 1e-6), integrable agree {agree:.2e} (< 1e-9)")


def _shear_for(J):
    """Shear ``alpha(x): F -> TL`` made complex-linear for the blocks of ``J`` along ``L``."""

    def alpha(x):
        A = np.array([[0.3 * dual.sin(x[0]) + 0.2 * x[1], 0.1], [-0.25 * x[0] * x[1], 0.4]], dtype=object)
        M = J.fn(CHART.point(x))
        a, D = M[CHART.xs, CHART.xs], M[CHART.ys, CHART.ys]
        return 0.5 * (A - a @ A @ D)

    return alpha


def test_criterion_05_normal_bundles(verdict):
    rng = np.random.default_rng(5)
    xs = CHART.sample_base(rng, 6)
    shear = gauge = 0.0
    for J in (S.torus_model(S.wavy_beta), S.perturb_standard(0.3, 5, DOM), S.ck_example()):
        sheared = B.shear_pullback(J, CHART, _shear_for(J))
        shear = max(shear, B.nb2_structure(J, CHART).max_difference(B.nb2_structure(sheared, CHART), xs))
        other = B.nb1_structure(J, CHART, gauge=B.symmetric_gauge(J, seed=9, chart=CHART))
        gauge = max(gauge, B.nb1_structure(J, CHART).max_difference(other, xs))
    model = S.torus_model(S.wavy_beta)
    eq = 0.0
    for x in xs:
        for y in rng.uniform(-0.3, 0.3, size=(2, 2)):
            r = B.nb2_nijenhuis(model, CHART, x, y)
            eq = max(eq, r["yy"], r["xy"], r["xx"])
    ok = shear < 1e-6 and eq < 1e-6 and gauge < 1e-6
    verdict(5, ok, f"NB-II shear {shear:.2e}, NB-II Nijenhuis equations {eq:.2e}, NB-I gauge {gauge:.2e} (all < 1e-6)")


def test_criterion_06_nif_chain(verdict):
    rng = np.random.default_rng(6)
    reas = npr = 0.0
    for J in (S.torus_model(S.wavy_beta), S.perturb_standard(0.3, 5, DOM)):
        nb2 = B.nb2_structure(J, CHART)
        nif = B.nif_transform(nb2)
        tens = B.nprime_tensor(nif)
        for p in CHART.sample_total(rng, 5, scale=0.6):
            reas = max(reas, B.reassembly_residual(nb2, nif, p))
            npr = max(npr, float(np.max(np.abs(tens.direct(p[:2], p[2:])))))
    t_model = B.t14_check(S.torus_model(S.wavy_beta), CHART)
    t_ck = B.t14_check(S.ck_example(), CHART)
    ok = reas < 1e-9 and npr < 1e-8 and t_model < 1e-6 and t_ck < 1e-5
    verdict(6, ok, f"reassembly {reas:.2e} (< 1e-9), N' {npr:.2e} (< 1e-8), "
                   f"t14 model {t_model:.2e} (< 1e-6), ck {t_ck:.2e} (< 1e-5)")


def test_criterion_07_jets(verdict):
    rng = np.random.default_rng(7)
    xs = CHART.sample_base(rng, 5)
    vert, order = 0.0, []
    for J in (S.torus_model(S.wavy_beta), S.perturb_standard(0.3, 5, DOM)):
        nf = JT.normal_form_1jet(J, CHART)
        for x in xs:
            r = JT.prime_nijenhuis_residuals(nf, x)
            vert = max(vert, r["vertical"], r["tangent"])
    nf = JT.normal_form_1jet(S.perturb_standard(0.3, 5, DOM), CHART)
    for x in xs:
        order.append(JT.vanishing_order(nf.prime.fn, CHART, x, rng.normal(size=2)))
    phi2 = 0.0
    for J in NONTRIVIAL():
        for p in points(J, rng, 4):
            M = J.at(p)
            P = JT.constructive_p(M, rng)
            phi2 = max(phi2, JT.phi2_residual(P, JT.phi2_solve(P, M), M))
    k_err = max(abs(k - 2.0) for k in order)
    ok = vert < 1e-7 and k_err < 0.1 and phi2 < 1e-10
    verdict(7, ok, f"vertical N_J' {vert:.2e} (< 1e-7), square exponents {min(order):.3f}..{max(order):.3f} "
                   f"(2 +/- 0.1), phi2 {phi2:.2e} (< 1e-10)")


def test_criterion_08_gromov_identity(verdict):
    rng = np.random.default_rng(8)
    worst = 0.0
    for J in (S.torus_model((0.5, 0.0)), S.torus_model(S.wavy_beta)):
        for _ in range(20):
            c = rng.normal(size=(2, 3))
            sec = lambda x, c=c: (c[0, 0] + c[0, 1] * x[0] + c[0, 2] * dual.sin(x[1]),
                                  c[1, 0] + c[1, 1] * x[1] * x[0] + c[1, 2] * dual.cos(x[0]))
            r = T.gromov_identity_check(J, CHART, sec, CHART.sample_base(rng, 2))
            worst = max(worst, r["mis_vs_true"], r["normal_vs_nb2"])
    verdict(8, worst < 1e-6, f"linearized operator vs NB-II Cauchy-Riemann, 2 x 20 sections, worst {worst:.2e} (< 1e-6)")


def _spec(lam, beta):
    return T.EllipticBundleSpec(2j * math.pi, lam, beta_re=beta)


def test_criterion_09_torus_kernel(verdict):
    trivial, moser, twisted = _spec(1.0, 0.0), _spec(1.0, 0.5), _spec(complex(math.cos(math.pi / 3), math.sin(math.pi / 3)), 0.0)
    k_triv = T.kernel_analysis(trivial, 16, rel=1e-8, refine=False).kernel_dim
    sig = {}
    k_moser = []
    for n in (8, 16, 24):
        rep = T.kernel_analysis(moser, n, rel=1e-8, refine=False)
        k_moser.append(rep.kernel_dim)
        sig[n] = rep.sigma_min
    spread = max(sig.values()) / min(sig.values()) - 1.0
    k_tw = T.kernel_analysis(twisted, 16, rel=1e-8, refine=False).kernel_dim
    r = [T.rrt_criterion(s) for s in (trivial, moser, twisted)]
    rrt_ok = (not r[0].holds) and r[1].holds and r[2].holds and r[2].branch == "vanishing"
    ok = k_triv == 2 and k_moser == [0, 0, 0] and spread < 0.1 and k_tw == 0 and rrt_ok
    verdict(9, ok, f"kernels {k_triv}/{k_moser}/{k_tw}, sigma_min spread {spread:.2%} (< 10%), "
                   f"criterion fail/hold/hold: {[x.holds for x in r]} ({r[2].branch} branch)")


def test_criterion_10_ck_example(verdict):
    data = G.CKInitialData(a1="-s", b1="s", t_max=1.0, step=1e-3)
    g = G.ck_march(data)
    err = g.max_error(G.closed_form_fields)
    e1, e2, ratio = G.richardson_ratio(replace(data, step=0.1), G.closed_form_fields)
    ok = (not g.aborted) and g.last_t == pytest.approx(1.0) and err < 1e-4 and 12.8 <= ratio <= 19.2
    verdict(10, ok, f"closed-form sup error {err:.2e} (< 1e-4), step-halving ratio {ratio:.2f} (16 +/- 20%)")


def test_criterion_11_cli_mutations(verdict):
    t0 = time.perf_counter()
    clean = cli.main(["verify", "all"])
    flipped, wrong = 0, []
    for suite in suites.SUITES:
        for c in suites.checks_for(suite):
            rep = verify(suite, mutate=c.id)
            failed = [r.check_id for r in rep.records if not r.passed]
            if failed == [c.id]:
                flipped += 1
            else:
                wrong.append((c.id, failed))
    total = len(suites.checks_for("all"))
    ok = clean == cli.EXIT_OK and flipped == total and not wrong
    verdict(11, ok, f"verify all exit {clean}; {flipped}/{total} mutations flip exactly their own check "
                    f"({time.perf_counter() - t0:.0f}s){'' if not wrong else f'; wrong: {wrong}'}")
