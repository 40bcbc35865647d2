"""Jet-level normal forms of almost complex structures along a submanifold.

Tensors are stored as ``T[k, i, j] = T(d_i, d_j)^k``. Everything here works
with values and first derivatives along ``L = {y = 0}``; the diffeomorphism
realising a normal form is only constructed to second order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual
from .bundles import PHBundleChart, SplitChart, nb2_structure, radius_vector
from .connections import ConnectionField, covariant_J, nijenhuis_fn
from .errors import PreconditionError
from .geometry import DEFAULT_TOL, AlmostComplexStructure, generic_inverse, standard_matrix


# --- small tensor helpers ---------------------------------------------------


def in_first(T, M):
    """``T(M X, Y)``."""
    return np.einsum("kmj,mi->kij", T, M)


def in_second(T, M):
    """``T(X, M Y)``."""
    return np.einsum("kim,mj->kij", T, M)


def after(M, T):
    """``M T(X, Y)``."""
    return np.einsum("km,mij->kij", M, T)


def swap(T):
    return T.transpose(0, 2, 1)


# --- weight operator and 1-jets ---------------------------------------------


@dataclass(frozen=True)
class WeightOperator:
    """``1/2`` on ``span d_x`` and ``1/4`` on ``span d_y``."""

    chart: SplitChart
    base_weight: float = 0.5
    fiber_weight: float = 0.25

    def matrix(self) -> np.ndarray:
        w = np.zeros(self.chart.domain.dim)
        w[self.chart.xs] = self.base_weight
        w[self.chart.ys] = self.fiber_weight
        return np.diag(w)

    def commutator(self, J: AlmostComplexStructure, x) -> float:
        A = self.matrix()
        M = J.at(self.chart.point(x))
        return float(np.max(np.abs(A @ M - M @ A)))


@dataclass
class OneJetAlongL:
    """Values and first fiber derivatives of a matrix field along ``L``.

    ``value(x)`` is the matrix on ``L``; ``dy(x)[k, i, j] = d_{y^j} M^k_i``.
    """

    chart: SplitChart
    value: callable
    dy: callable

    def evaluate(self, x, y):
        return self.value(x) + np.einsum("kij,j->ki", self.dy(x), y)

    def invariant_residuals(self, x) -> tuple[float, float]:
        """``|J^2 + 1|`` and ``|J dJ + dJ J|`` on ``L`` (relevant when the jet is a structure)."""
        M = dual.value(self.value(x))
        dM = dual.value(self.dy(x))
        sq = np.max(np.abs(M @ M + np.eye(len(M))))
        lin = np.max(np.abs(np.einsum("km,mij->kij", M, dM) + np.einsum("kmj,mi->kij", dM, M)))
        return float(sq), float(lin)


def jet_of(fn, chart: SplitChart) -> OneJetAlongL:
    """1-jet of a matrix function along ``L``."""
    m = chart.fiber_dim
    value = lambda x: fn(chart.point(x))
    dy = lambda x: dual.partials(lambda y: fn(chart.point(x, y)), np.zeros(m))
    return OneJetAlongL(chart, value, dy)


# --- the 1-jet normal form ----------------------------------------------------


def _nijenhuis_on_L(J, chart):
    nf = nijenhuis_fn(J)
    return lambda x: nf(chart.point(x))


def correction_fn(J: AlmostComplexStructure, chart: SplitChart, weight: WeightOperator | None = None):
    """``p -> J(x,0) N_J(x,0)(r, A .)`` as a matrix function."""
    A = (weight or WeightOperator(chart)).matrix()
    NL = _nijenhuis_on_L(J, chart)
    jf = J.fn

    def fn(p):
        x = p[chart.xs]
        N = NL(x)
        r = radius_vector(chart, p)
        return jf(chart.point(x)) @ np.einsum("kab,a,bi->ki", N, r, A)

    return fn


def prime_structure(J: AlmostComplexStructure, chart: SplitChart, weight=None) -> AlmostComplexStructure:
    """``J' = J - J N_J(r, A .)`` (an almost complex structure modulo ``|y|^2``)."""
    corr = correction_fn(J, chart, weight)
    jf = J.fn
    return AlmostComplexStructure(lambda p: jf(p) - corr(p), chart.domain, guard=J.guard, name=f"{J.name}'",
                                  validate=False)


def tilde_structure(J0: PHBundleChart, J: AlmostComplexStructure, chart: SplitChart, weight=None):
    """``J0 + J0 N_J(r, A .)`` built from a normally integrable ``J0`` and the ambient ``N_J``."""
    A = (weight or WeightOperator(chart)).matrix()
    NL = _nijenhuis_on_L(J, chart)

    def fn(p):
        M0 = J0.matrix(p)
        N = NL(p[chart.xs])
        r = radius_vector(chart, p)
        return M0 + M0 @ np.einsum("kab,a,bi->ki", N, r, A)

    return AlmostComplexStructure(fn, chart.domain, guard=J.guard, name=f"tilde({J.name})", validate=False)


@dataclass
class NormalForm1Jet:
    chart: SplitChart
    J: AlmostComplexStructure
    prime: AlmostComplexStructure
    J0: PHBundleChart
    correction: OneJetAlongL
    weight: WeightOperator

    def tilde(self) -> AlmostComplexStructure:
        return tilde_structure(self.J0, self.J, self.chart, self.weight)


def normal_form_1jet(J: AlmostComplexStructure, chart: SplitChart, weight=None, check=True) -> NormalForm1Jet:
    """``J0`` = NB-II of ``J' = J - J N_J(r, A .)`` together with the correction jet."""
    if check:
        chart.require_ph(J)
    weight = weight or WeightOperator(chart)
    Jp = prime_structure(J, chart, weight)
    J0 = nb2_structure(Jp, chart, check=check)
    J0.name = f"J0({J.name})"
    corr = correction_fn(J, chart, weight)
    return NormalForm1Jet(chart, J, Jp, J0, jet_of(lambda p: -corr(p), chart), weight)


def prime_nijenhuis_residuals(nf: NormalForm1Jet, x) -> dict:
    """Along ``L``: ``N_{J'} = N_J`` on ``TL x TL`` and ``N_{J'} = 0`` with a vertical argument."""
    c = nf.chart
    p = c.point(x)
    Np = dual.value(nijenhuis_fn(nf.prime)(p))
    N = dual.value(nijenhuis_fn(nf.J)(p))
    xs, ys = c.xs, c.ys
    return {
        "tangent": float(np.max(np.abs(Np[:, xs, xs] - N[:, xs, xs]))),
        "vertical": float(max(np.max(np.abs(Np[:, :, ys])), np.max(np.abs(Np[:, ys, :])))),
    }


def square_defect(Jfn, chart: SplitChart, x, direction, delta) -> float:
    """``|J(x, delta v)^2 + 1|``."""
    v = np.asarray(direction, dtype=float)
    M = dual.value(Jfn(chart.point(x, delta * v / np.linalg.norm(v))))
    return float(np.max(np.abs(M @ M + np.eye(len(M)))))


def vanishing_order(Jfn, chart: SplitChart, x, direction, deltas=(1e-2, 1e-3)) -> float:
    """Two-scale fit of the exponent ``k`` in ``|J^2 + 1| ~ C delta^k``."""
    r1 = square_defect(Jfn, chart, x, direction, deltas[0])
    r2 = square_defect(Jfn, chart, x, direction, deltas[1])
    if max(r1, r2) < 1e-13:
        return float("inf")  # vanishes identically up to rounding
    return float(np.log(r1 / r2) / np.log(deltas[0] / deltas[1]))


# --- the P tensor and the second-order symbol --------------------------------


def p_tensor(J1: AlmostComplexStructure, J2: AlmostComplexStructure, chart: SplitChart, x,
             conn: ConnectionField | None = None, check=True, tol=1e-8) -> np.ndarray:
    """``P(X, Y) = (nabla_X J2)(Y) - (nabla_X J1)(Y)`` at ``(x, 0)`` (``phi = Id``)."""
    p = chart.point(x)
    conn = conn or ConnectionField.flat(chart.domain)
    M1, M2 = J1.at(p), J2.at(p)
    if check:
        if np.max(np.abs(M1 - M2)) > tol:
            raise PreconditionError("J1 and J2 differ on L")
        N1 = dual.value(nijenhuis_fn(J1)(p))
        N2 = dual.value(nijenhuis_fn(J2)(p))
        if np.max(np.abs(N1 - N2)) > 1e3 * tol:
            raise PreconditionError("J1 and J2 have different Nijenhuis tensors on L")
    G = dual.value(conn.fn(p))
    d1 = dual.value(dual.partials(J1.fn, p))
    d2 = dual.value(dual.partials(J2.fn, p))
    nab1 = covariant_J(G, M1, d1)  # [k, j, i] = (nabla_i J)^k_j
    nab2 = covariant_J(G, M2, d2)
    return (nab2 - nab1).transpose(0, 2, 1)


def antilinearity_residual(P, J) -> float:
    """``|P(X, J Y) + J P(X, Y)|``."""
    return float(np.max(np.abs(in_second(P, J) + after(J, P))))


def symmetry_relation_residual(P, J) -> float:
    """``|P(X,Y) - P(Y,X) - P(JX,JY) + P(JY,JX)|``."""
    PJJ = in_first(in_second(P, J), J)
    return float(np.max(np.abs(P - swap(P) - PJJ + swap(PJJ))))


def tangent_argument_residuals(P, chart: SplitChart) -> dict:
    """Sizes of ``P`` with a ``TL`` argument: full value and its normal component."""
    xs, ys = chart.xs, chart.ys
    full = max(np.max(np.abs(P[:, xs, :])), np.max(np.abs(P[:, :, xs])))
    normal = max(np.max(np.abs(P[ys][:, xs, :])), np.max(np.abs(P[ys][:, :, xs])))
    return {"full": float(full), "normal": float(normal)}


def b_from_p(P, J) -> np.ndarray:
    """Particular solution ``B = -1/2 J P`` of ``P(X,Y) = J B(X,Y) - B(X, J Y)``.

    It is antilinear in ``Y`` (its linear part is zero), the normalization used here.
    """
    return -0.5 * after(J, P)


def phi2_from_b(B, J) -> np.ndarray:
    """``Phi = -1/2 [B(X,Y) + B(Y,X)] + J/4 [B(JX,Y) + B(JY,X) - B(X,JY) - B(Y,JX)]``."""
    Bt = swap(B)
    inner = in_first(B, J) + in_second(Bt, J) - in_second(B, J) - in_first(Bt, J)
    return -0.5 * (B + Bt) + 0.25 * after(J, inner)


def phi2_solve(P, J, tol=DEFAULT_TOL.alg) -> np.ndarray:
    """Symmetric ``Phi`` with ``P(X, Y) = Phi(X, J Y) - J Phi(X, Y)``.

    Both compatibility relations are validated first; a violation raises
    ``PreconditionError`` naming the relation.
    """
    P = np.asarray(P, dtype=float)
    J = np.asarray(J, dtype=float)
    scale = max(1.0, float(np.max(np.abs(P))))
    if antilinearity_residual(P, J) > tol * scale:
        raise PreconditionError("P violates antilinearity P(X,JY) = -J P(X,Y)")
    if symmetry_relation_residual(P, J) > tol * scale:
        raise PreconditionError("P violates the symmetry relation P(X,Y)-P(Y,X) = P(JX,JY)-P(JY,JX)")
    return phi2_from_b(b_from_p(P, J), J)


def phi2_residual(P, Phi, J) -> float:
    return float(np.max(np.abs(P - (in_second(Phi, J) - after(J, Phi)))))


def constructive_p(J, rng: np.random.Generator, scale=1.0) -> np.ndarray:
    """Compatible ``P = J B - B(., J .)`` from a random symmetric ``B``."""
    n = len(J)
    B = rng.normal(size=(n, n, n)) * scale
    B = 0.5 * (B + swap(B))
    return after(J, B) - in_second(B, J)


# --- normal form at a point -------------------------------------------------


def standardizing_basis(J0) -> np.ndarray:
    """Columns ``(v1, J v1, v2, J v2, ...)`` so that ``P^-1 J0 P`` is standard."""
    n = len(J0)
    cols = []
    for e in np.eye(n):
        trial = cols + [e, J0 @ e]
        if np.linalg.matrix_rank(np.array(trial).T, tol=1e-10) == len(trial):
            cols = trial
        if len(cols) == n:
            break
    return np.array(cols).T


@dataclass
class PointNormalForm:
    x0: np.ndarray
    basis: np.ndarray
    nijenhuis: np.ndarray          # N at x0 in standardized coordinates
    phi2: np.ndarray
    linear: np.ndarray             # linear[k, i, j] = d_j (phi^* J)^k_i at 0
    predicted: np.ndarray          # -(-1)^k 1/4 N^{#k}_ij
    pulled_back: callable = field(repr=False)

    def residual(self) -> float:
        return float(np.max(np.abs(self.linear - self.predicted)))


def predicted_linear_term(N) -> np.ndarray:
    """``L[k, i, j] = -(-1)^k 1/4 N^{#k}_ij`` (1-based ``k``), i.e. ``-1/4 (J_std N)``."""
    n = N.shape[0]
    out = np.empty_like(N)
    for k in range(n):
        sign = -1.0 if k % 2 == 0 else 1.0   # (-1)^k for the 1-based index k+1
        out[k] = -sign * 0.25 * N[k ^ 1]
    return out


def point_normal_form(J: AlmostComplexStructure, x0) -> PointNormalForm:
    """Linear coefficients of ``J`` after the normalizing second-order change at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    Jstd = standard_matrix(n)
    P0 = standardizing_basis(J.at(x0))
    P0inv = np.linalg.inv(P0)
    jf = J.fn

    def Jt(u):
        return P0inv @ jf(x0 + P0 @ u) @ P0

    zero = np.zeros(n)
    N0 = dual.value(nijenhuis_fn(Jt)(zero))
    lin_model = predicted_linear_term(N0)

    def Jm(u):
        return Jstd + np.einsum("kij,j->ki", lin_model, u)

    # phi maps the model to the standardized J to second order, so phi^* Jt = model + O(|u|^2)
    P = dual.value(dual.partials(Jt, zero)).transpose(0, 2, 1) - dual.value(dual.partials(Jm, zero)).transpose(0, 2, 1)
    Phi = phi2_solve(P, Jstd, tol=1e-8)

    def phi(u):
        return u + 0.5 * np.einsum("kij,i,j->k", Phi, u, u)

    def pulled(u):
        d = dual.partials(phi, u)
        return generic_inverse(d) @ Jt(phi(u)) @ d

    linear = dual.value(dual.partials(pulled, zero))
    return PointNormalForm(x0, P0, N0, Phi, linear, lin_model, pulled)
