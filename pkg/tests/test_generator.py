from dataclasses import replace

import numpy as np
import pytest

from almostcx import dual
from almostcx import generator as G
from almostcx import structures as S
from almostcx.errors import ContractError, InvalidSpecError
from almostcx.geometry import AlmostComplexStructure, standard_matrix

from helpers import CHART, DOM

CLOSED = G.CKInitialData(a1="-s", b1="s", t_max=1.0, step=1e-3)


def _fiber_dependent_base():
    """``diag(a(s), J0)`` with ``a`` a non-holomorphic family of 2d structures: Im N lies in the base."""

    def fn(p):
        e = 0.4 * p[2] + 0.2 * p[3] * p[0]
        r = (1 + e) / (1 - e)
        M = np.zeros((4, 4), dtype=object)
        M[0, 1], M[1, 0] = -r, 1 / r
        M[2, 3], M[3, 2] = -1.0, 1.0
        if not any(isinstance(v, dual.Dual) for v in M.flat):
            M = M.astype(float)
        return M

    return AlmostComplexStructure(fn, DOM, name="fiber_dependent_base")


# --- marching --------------------------------------------------------------------------


def test_zero_data_stays_zero():
    g = G.ck_march(G.CKInitialData(t_max=0.2, step=0.01))
    assert not g.aborted
    assert all(np.max(np.abs(v)) == 0.0 for v in g.fields.values())


def test_closed_form_reproduced():
    g = G.ck_march(CLOSED)
    assert not g.aborted and g.last_t == pytest.approx(1.0)
    assert g.max_error(G.closed_form_fields) < 1e-4
    assert g.residual < 1e-6


def test_closed_form_fields_match_example():
    J = S.ck_example()
    gen = G.ck_march(replace(CLOSED, step=1e-2)).structure()
    for p in np.random.default_rng(0).uniform([-0.4, -0.4, -0.4, 0.05], [0.4, 0.4, 0.4, 0.45], size=(5, 4)):
        assert np.max(np.abs(gen.at(p) - J.at(p))) < 1e-6


def test_richardson_order():
    e1, e2, ratio = G.richardson_ratio(replace(CLOSED, step=0.1), G.closed_form_fields)
    assert e2 < e1
    assert 2 ** 3.5 < ratio < 2 ** 4.5


def test_forced_march_completes():
    g = G.ck_march(G.CKInitialData(a1="-s", b1="s", c1=0.3, c2=-0.2, t_max=0.5, step=0.01))
    assert not g.aborted and g.residual < 1e-4
    J = g.structure()
    assert J.max_square_residual < 1e-12


def test_blow_up_aborts():
    g = G.ck_march(G.CKInitialData(a1="-s", b1="s", c1=5.0, bound=1.2, t_max=1.0, step=0.01))
    assert g.aborted and 0 < g.last_t < 1.0
    assert max(np.max(np.abs(v)) for v in g.fields.values()) <= 1.2


def test_initial_data_errors():
    with pytest.raises(InvalidSpecError):
        G.CKInitialData(n_s=3)
    with pytest.raises(InvalidSpecError):
        G.CKInitialData(step=0.0)
    with pytest.raises(InvalidSpecError):
        G.CKInitialData(s_range=(1.0, -1.0))
    with pytest.raises(ContractError):
        G.CKInitialData(a2="-1 + 0.0001*s").initial()


def test_fd4_exact_on_quartics():
    s = np.linspace(-1, 1, 11)
    D = G.fd4_matrix(s)
    for k in range(5):
        assert np.allclose(D @ s ** k, k * s ** max(k - 1, 0) * (k > 0), atol=1e-10)


# --- characteristic distribution ------------------------------------------------------


def test_rank_zero_cases():
    J0 = AlmostComplexStructure.standard(DOM)
    assert G.characteristic_distribution(J0, np.zeros(4)).rank == 0
    # the closed-form example is integrable
    assert G.characteristic_distribution(S.ck_example(), np.array([0.1, 0.2, 0.3, 0.2])).rank == 0


@pytest.mark.parametrize("make", [lambda: S.torus_model(S.wavy_beta), lambda: S.perturb_standard(0.3, 5, DOM),
                                  _fiber_dependent_base])
def test_rank_two_and_invariant(make):
    J = make()
    for p in np.random.default_rng(1).uniform(-0.3, 0.3, size=(3, 4)):
        d = G.characteristic_distribution(J, p)
        assert d.rank == 2
        assert d.invariance_residual < 1e-8


def test_nb2_vanishing_classification():
    xs = np.random.default_rng(2).uniform(-0.3, 0.3, size=(3, 2))
    for r in G.nb2_vanishing_check(S.torus_model(S.wavy_beta), CHART, xs):
        assert r["kind"] == "transversal" and r["consistent"] and r["nb2_normal_size"] > 0.1
    for r in G.nb2_vanishing_check(_fiber_dependent_base(), CHART, xs):
        assert r["kind"] == "tangent" and r["rank"] == 2 and r["consistent"] and r["nb2_size"] < 1e-6
    for r in G.nb2_vanishing_check(AlmostComplexStructure.standard(DOM), CHART, xs):
        assert r["kind"] == "zero" and r["nb2_size"] == 0.0


# --- perturbations and fiber constancy --------------------------------------------------


def test_perturb_standard():
    J0 = S.perturb_standard(0.0, 1, DOM)
    assert np.array_equal(J0.at(np.full(4, 0.2)), standard_matrix(4))
    J = S.perturb_standard(0.1, 3, DOM)
    assert J.max_square_residual < 1e-12
    p = np.array([0.1, -0.2, 0.3, 0.05])
    assert np.array_equal(J.at(p), S.perturb_standard(0.1, 3, DOM).at(p))
    assert not np.array_equal(J.at(p), S.perturb_standard(0.1, 4, DOM).at(p))


def test_fiber_constancy():
    p1, p2 = [0.1, 0.2, 0.1, -0.2], [0.1, 0.2, -0.3, 0.3]
    r = G.fiber_constancy(S.torus_model(S.wavy_beta), p1, p2)
    assert r["difference"] < 1e-12 and np.max(np.abs(r["block"])) > 0.1 and r["image_off_fiber"] < 1e-12
    assert G.fiber_constancy(S.perturb_standard(0.3, 5, DOM), p1, p2)["difference"] > 0.01
    gen = G.ck_march(replace(CLOSED, step=1e-2)).structure()
    assert G.fiber_constancy(gen, [0.0, 0.0, 0.1, 0.2], [0.0, 0.0, -0.2, 0.4])["difference"] < 1e-5
    with pytest.raises(InvalidSpecError):
        G.fiber_constancy(gen, [0.0, 0.0, 0.1, 0.2], [0.1, 0.0, 0.1, 0.2])
