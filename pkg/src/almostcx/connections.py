"""Nijenhuis tensor, (anti)linear splitting of (2,1)-tensors, and connections.

Index conventions (all arrays are plain numpy, possibly of dual numbers):

* ``J[k, i] = J^k_i``: column ``i`` holds ``J d_i``.
* ``dJ[k, i, h] = d_h J^k_i``: derivative index last.
* ``T[k, i, j]``: ``T(d_i, d_j)^k`` for every (2,1)-tensor.
* ``G[k, i, j] = Gamma^k_ij`` with ``nabla_{d_i} d_j = Gamma^k_ij d_k``.
* Torsion ``T(X, Y) = nabla_X Y - nabla_Y X - [X, Y]``, i.e. ``G - G^T``.
* Curvature ``R[k, l, i, j] = (R(d_i, d_j) d_l)^k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dual
from .errors import ContractError
from .geometry import (
    DEFAULT_TOL,
    AlmostComplexStructure,
    ChartDomain,
    Field,
    Tensor21Field,
    VectorField,
    apply_matrix,
    bracket_fn,
)

SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


def _fn(F):
    return F.fn if isinstance(F, Field) else F


# --- Nijenhuis tensor --------------------------------------------------------


def nijenhuis_from_jet(J, dJ):
    """``N^k_ij`` from the values and first partials of ``J``."""
    t1 = np.einsum("hi,kjh->kij", J, dJ)
    t3 = np.einsum("kh,hij->kij", J, dJ)
    return t1 - t1.transpose(0, 2, 1) + t3 - t3.transpose(0, 2, 1)


def nijenhuis_fn(J):
    """Pointwise ``p -> N[k, i, j]`` (generic, so it can itself be differentiated)."""
    jf = _fn(J)

    def fn(p):
        return nijenhuis_from_jet(jf(p), dual.partials(jf, p))

    return fn


def nijenhuis_field(J: AlmostComplexStructure) -> Tensor21Field:
    return Tensor21Field(nijenhuis_fn(J), J.domain, "antisymmetric", name=f"N[{J.name}]")


def nijenhuis_tensor(J, p) -> np.ndarray:
    return dual.value(nijenhuis_fn(J)(J.domain.locate(p) if isinstance(J, Field) else p))


def nijenhuis(J: AlmostComplexStructure, X: VectorField, Y: VectorField, p) -> np.ndarray:
    """``N_J(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]`` by literal brackets."""
    p = J.domain.locate(p)
    JX, JY = apply_matrix(J, X), apply_matrix(J, Y)
    Jp = J.fn(p)
    out = (bracket_fn(JX, JY)(p) - Jp @ bracket_fn(JX, Y)(p)
           - Jp @ bracket_fn(X, JY)(p) - bracket_fn(X, Y)(p))
    return dual.value(out)


def bilinear(T, X, Y):
    return np.einsum("kij,i,j->k", T, X, Y)


# --- (anti)linear decomposition ---------------------------------------------


@dataclass
class TorsionDecomposition:
    """The four parts ``T^{e1 e2}`` keyed by sign pairs, e.g. ``parts[(1, -1)]``."""

    parts: dict

    def __getitem__(self, key):
        return self.parts[key]

    @property
    def pp(self):
        return self.parts[(1, 1)]

    @property
    def pm(self):
        return self.parts[(1, -1)]

    @property
    def mp(self):
        return self.parts[(-1, 1)]

    @property
    def mm(self):
        return self.parts[(-1, -1)]

    def total(self):
        return sum(self.parts.values())


def pm_parts(T, J) -> TorsionDecomposition:
    """Split a (2,1)-tensor into its four J-(anti)linear parts at a point."""
    JT_1 = np.einsum("km,maj,ai->kij", J, T, J)  # J T(JX, Y)
    JT_2 = np.einsum("km,mib,bj->kij", J, T, J)  # J T(X, JY)
    T_12 = np.einsum("kab,ai,bj->kij", T, J, J)  # T(JX, JY)
    parts = {}
    for e1, e2 in SIGNS:
        parts[(e1, e2)] = 0.25 * (T - e1 * JT_1 - e2 * JT_2 - e1 * e2 * T_12)
    return TorsionDecomposition(parts)


def pm_decompose(T, J, p) -> TorsionDecomposition:
    """Decomposition of a Tensor21Field (or raw array) at ``p``."""
    Jp = J.at(p) if isinstance(J, Field) else np.asarray(J)
    Tp = T.at(p) if isinstance(T, Field) else np.asarray(T)
    return pm_parts(Tp, Jp)


def linearity_residual(T, J, e1: int, e2: int) -> float:
    """Max violation of ``T(JX,Y) = e1 J T`` and ``T(X,JY) = e2 J T``."""
    T, J = dual.value(T), dual.value(J)
    JT = np.einsum("km,mij->kij", J, T)
    r1 = np.einsum("kaj,ai->kij", T, J) - e1 * JT
    r2 = np.einsum("kib,bj->kij", T, J) - e2 * JT
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


# --- connections ------------------------------------------------------------


class ConnectionField(Field):
    """Christoffel symbols ``G[k, i, j]`` as a pointwise function."""

    def __init__(self, fn, domain: ChartDomain, exact=True, name=""):
        super().__init__(fn, domain, (domain.dim,) * 3, exact, None, name)

    @classmethod
    def flat(cls, domain: ChartDomain):
        d = domain.dim
        return cls(lambda p: np.zeros((d, d, d)), domain, name="flat")

    def shifted(self, A, name="") -> "ConnectionField":
        """``nabla + A`` for a (2,1)-tensor field/function ``A``."""
        gf, af = self.fn, _fn(A)
        return ConnectionField(lambda p: gf(p) + af(p), self.domain, name=name or f"{self.name}+A")


def complexified_gamma(G, J, dJ):
    """Christoffel symbols of ``(nabla_X - J nabla_X J) / 2``."""
    return 0.5 * (G - np.einsum("km,mji->kij", J, dJ) - np.einsum("km,mil,lj->kij", J, G, J))


def complexify_connection(conn: ConnectionField, J: AlmostComplexStructure) -> ConnectionField:
    gf, jf = conn.fn, J.fn

    def fn(p):
        return complexified_gamma(gf(p), jf(p), dual.partials(jf, p))

    return ConnectionField(fn, conn.domain, name=f"c({conn.name})")


def torsion_from_gamma(G):
    return G - G.transpose(0, 2, 1)


def torsion(conn: ConnectionField, p) -> np.ndarray:
    return torsion_from_gamma(conn.at(p))


def covariant_J(G, J, dJ):
    """``(nabla_i J)^k_j`` stored as ``[k, j, i]`` (derivative index last)."""
    return (dJ + np.einsum("kil,lj->kji", G, J) - np.einsum("kl,lij->kji", J, G))


def minimal_gauge(T, J, check_graded: bool = True, tol: float = 1e-8):
    """Gauge ``A = -T^{++}/2 - T^{-+}`` turning an almost complex connection minimal."""
    parts = pm_parts(T, J)
    if check_graded:
        for e1, e2 in SIGNS:
            lhs = parts[(e1, e2)].transpose(0, 2, 1)
            resid = np.max(np.abs(dual.value(lhs + parts[(e2, e1)])))
            if resid > tol:
                raise ContractError(
                    f"graded commutation T^({e1},{e2}) o tau = -T^({e2},{e1}) violated by {resid:.2e}"
                )
    return -0.5 * parts[(1, 1)] - parts[(-1, 1)]


def minimal_connection(conn: ConnectionField, J: AlmostComplexStructure, check_graded: bool = True) -> ConnectionField:
    """Complexify, then apply the minimal gauge: torsion becomes ``N_J / 4``."""
    gf, jf = conn.fn, J.fn

    def fn(p):
        Jp = jf(p)
        Gc = complexified_gamma(gf(p), Jp, dual.partials(jf, p))
        return Gc + minimal_gauge(torsion_from_gamma(Gc), Jp, check_graded)

    return ConnectionField(fn, conn.domain, name=f"min({conn.name})")


def minimality_residual(conn: ConnectionField, J: AlmostComplexStructure, p) -> tuple[float, float]:
    """``(|T - N/4|, |nabla J|)`` at ``p``."""
    p = J.domain.locate(p)
    G = conn.at(p)
    Jp = J.at(p)
    dJ = dual.value(dual.partials(J.fn, p))
    N = nijenhuis_from_jet(Jp, dJ)
    t = float(np.max(np.abs(torsion_from_gamma(G) - 0.25 * N)))
    c = float(np.max(np.abs(covariant_J(G, Jp, dJ))))
    return t, c


def require_minimal(conn, J, p, tol):
    t, c = minimality_residual(conn, J, p)
    if t > tol or c > tol:
        raise ContractError(f"connection is not minimal at {np.round(dual.value(p), 4)} "
                            f"(|T - N/4| = {t:.2e}, |nabla J| = {c:.2e})")


def symmetric_complex_tensor(B, J):
    """Project a symmetric tensor onto ``S^2 T* (x)_C T``: ``(B + B^T)/2`` then the ``++`` part."""
    Bs = 0.5 * (B + B.transpose(0, 2, 1))
    return pm_parts(Bs, J)[(1, 1)]


# --- covariant derivative and curvature -------------------------------------


def nabla_fn(conn, X, Y):
    """Pointwise ``(nabla_X Y)^k = X^i (d_i Y^k + G^k_ij Y^j)``."""
    gf, xf, yf = _fn(conn), _fn(X), _fn(Y)

    def fn(p):
        x, y = xf(p), yf(p)
        return dual.partials(yf, p) @ x + np.einsum("kij,i,j->k", gf(p), x, y)

    return fn


def curvature(conn: ConnectionField, X, Y, Z, p) -> np.ndarray:
    """``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``, literally."""
    p = conn.domain.locate(p)
    a = nabla_fn(conn, X, nabla_fn(conn, Y, Z))(p)
    b = nabla_fn(conn, Y, nabla_fn(conn, X, Z))(p)
    c = nabla_fn(conn, bracket_fn(X, Y), Z)(p)
    return dual.value(a - b - c)


def curvature_from_gamma(G, dG):
    """Coordinate formula; ``dG[k, i, j, h] = d_h G^k_ij``."""
    t1 = np.einsum("kjli->klij", dG)
    t3 = np.einsum("kim,mjl->klij", G, G)
    return t1 - t1.transpose(0, 1, 3, 2) + t3 - t3.transpose(0, 1, 3, 2)


def curvature_tensor_fn(conn):
    gf = _fn(conn)

    def fn(p):
        return curvature_from_gamma(gf(p), dual.partials(gf, p))

    return fn


def curvature_tensor(conn: ConnectionField, p) -> np.ndarray:
    return dual.value(curvature_tensor_fn(conn)(conn.domain.locate(p)))


def mm_part_of_curvature(R, J):
    """Part of ``R[k, l, i, j]`` antilinear in both ``i`` and ``j`` slots."""
    RJ1 = np.einsum("km,mlaj,ai->klij", J, R, J)
    RJ2 = np.einsum("km,mlib,bj->klij", J, R, J)
    RJJ = np.einsum("klab,ai,bj->klij", R, J, J)
    return 0.25 * (R + RJ1 + RJ2 - RJJ)


def curvature_mm(conn: ConnectionField, J: AlmostComplexStructure, X, Y, Z, p) -> np.ndarray:
    """``R^{--}(X,Y)Z`` via the four-term average over the (X, Y) slots."""
    JX, JY = apply_matrix(J, X), apply_matrix(J, Y)
    Jp = J.at(p)
    return 0.25 * (curvature(conn, X, Y, Z, p) + Jp @ curvature(conn, JX, Y, Z, p)
                   + Jp @ curvature(conn, X, JY, Z, p) - curvature(conn, JX, JY, Z, p))


def box_operator(conn: ConnectionField, J: AlmostComplexStructure, X, Y, Z, p,
                 tol: float = 1e-7) -> np.ndarray:
    """``box_{X^Y} Z = nabla_{N(X,Y)} Z - 4 R^{--}(X,Y) Z`` for a minimal connection."""
    p = J.domain.locate(p)
    require_minimal(conn, J, p, tol)
    Jp = J.at(p)
    N = nijenhuis_tensor(J, p)
    R = curvature_tensor(conn, p)
    x, y = _fn(X)(p), _fn(Y)(p)
    w = bilinear(N, dual.value(x), dual.value(y))
    G = conn.at(p)
    zf = _fn(Z)
    z = dual.value(zf(p))
    nabla_w = dual.value(dual.derivative(zf, p, w)) + np.einsum("kij,i,j->k", G, w, z)
    Rmm = mm_part_of_curvature(R, Jp)
    return nabla_w - 4 * np.einsum("klij,l,i,j->k", Rmm, z, dual.value(x), dual.value(y))


def covariant_nijenhuis(G, N, dN):
    """``(nabla_h N)^k_ab`` stored as ``[k, a, b, h]``."""
    return (dN + np.einsum("khm,mab->kabh", G, N)
            - np.einsum("mha,kmb->kabh", G, N) - np.einsum("mhb,kam->kabh", G, N))


def bianchi_terms(conn: ConnectionField, J: AlmostComplexStructure, X, Y, Z, p):
    """Cyclic sums ``(S R(X,Y)Z, S N(N(X,Y),Z), S (nabla_X N)(Y,Z))`` at ``p``."""
    p = J.domain.locate(p)
    nf = nijenhuis_fn(J)
    N = dual.value(nf(p))
    dN = dual.value(dual.partials(nf, p))
    G = conn.at(p)
    R = curvature_tensor(conn, p)
    dNcov = covariant_nijenhuis(G, N, dN)
    x, y, z = (dual.value(_fn(V)(p)) for V in (X, Y, Z))
    sR = np.zeros(len(x))
    sNN = np.zeros(len(x))
    sDN = np.zeros(len(x))
    for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
        sR += np.einsum("klij,l,i,j->k", R, c, a, b)
        sNN += bilinear(N, bilinear(N, a, b), c)
        sDN += np.einsum("kabh,a,b,h->k", dNcov, b, c, a)
    return sR, sNN, sDN


def bianchi_residual(conn: ConnectionField, J: AlmostComplexStructure, X, Y, Z, p,
                     nn_coeff: float = 0.25, tol: float = 1e-7) -> np.ndarray:
    """``4 S R - nn_coeff * S N(N(X,Y),Z) - S (nabla_X N)(Y,Z)`` for minimal ``conn``."""
    require_minimal(conn, J, p, tol)
    sR, sNN, sDN = bianchi_terms(conn, J, X, Y, Z, p)
    return 4 * sR - nn_coeff * sNN - sDN
