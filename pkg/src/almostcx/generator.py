"""Generators of test structures and the characteristic-distribution analyzer.

``ck_march`` integrates the first-order system in ``t`` whose solutions give
4-dimensional structures ``J d_x = a1 d_x + (1+a2) d_y + b1 d_s + b2 d_t``,
``J d_s = d_t`` with image of ``N_J`` tangent to the fibers ``{z = const}``
and ``N_J`` constant along them. The principal part has eigenvalues ``+-i``,
so the problem is only well posed for analytic data; marching on a coarse
``s``-grid keeps roundoff amplification under control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual
from .bundles import SplitChart, nb2_nijenhuis
from .connections import nijenhuis_tensor
from .errors import ContractError, InvalidSpecError
from .geometry import AlmostComplexStructure, ChartDomain, ScalarField
from .structures import (COORDS, ck_example, closed_form_coeffs, coupled_structure_fn, default_chart,
                         perturb_standard, tangent_image_structure, torus_model, wavy_beta)

__all__ = [
    "CKInitialData", "GeneratedStructure", "ck_march", "fd4_matrix", "closed_form_fields", "richardson_ratio",
    "characteristic_distribution", "CharacteristicDistribution", "nb2_vanishing_check", "fiber_constancy",
    "perturb_standard", "ck_example", "torus_model", "tangent_image_structure", "wavy_beta",
]

FIELDS = ("a1", "a2", "b1", "b2")


def _scalar(backing, names) -> ScalarField:
    names = tuple(names) + ("_pad",) * (len(names) % 2)
    dom = ChartDomain.box(names, -1e6, 1e6)
    return backing if isinstance(backing, ScalarField) else ScalarField(backing, dom)


@dataclass
class CKInitialData:
    """Initial values at ``t = 0`` (functions of ``s``) and forcing ``c1, c2`` (functions of ``x, y``).

    The system carries no ``x, y`` derivatives, so it is marched at a single
    base point; the generated coefficients are then used for all ``(x, y)``.
    """

    a1: object = 0.0
    a2: object = 0.0
    b1: object = 0.0
    b2: object = 0.0
    c1: object = 0.0
    c2: object = 0.0
    base_point: tuple = (0.0, 0.0)
    s_range: tuple = (-1.0, 1.0)
    n_s: int = 21
    t_max: float = 1.0
    step: float = 1e-3
    bound: float = 1e6
    min_denominator: float = 1e-3

    def __post_init__(self):
        if self.n_s < 5:
            raise InvalidSpecError("need at least 5 grid points in s")
        if not self.s_range[0] < self.s_range[1]:
            raise InvalidSpecError("empty s-range")
        if self.step <= 0 or self.t_max <= 0:
            raise InvalidSpecError("step and t_max must be positive")
        self._init = [_scalar(getattr(self, k), ("s",)) for k in FIELDS]
        self._forcing = [_scalar(self.c1, ("x", "y")), _scalar(self.c2, ("x", "y"))]

    @property
    def s(self) -> np.ndarray:
        return np.linspace(self.s_range[0], self.s_range[1], self.n_s)

    def initial(self) -> np.ndarray:
        """Array ``(4, n_s)`` of ``(a1, a2, b1, b2)`` at ``t = 0``."""
        u = np.array([[float(dual.real_part(f.fn(np.array([s, 0.0])))) for s in self.s] for f in self._init])
        if np.min(np.abs(1 + u[1])) < self.min_denominator:
            raise ContractError("1 + a2 must stay away from 0 on the s-range")
        return u

    def forcing(self) -> tuple[float, float]:
        q = np.asarray(self.base_point, dtype=float)
        return tuple(float(dual.real_part(f.fn(q))) for f in self._forcing)


def fd4_matrix(s: np.ndarray) -> np.ndarray:
    """Fourth-order first-derivative matrix on a uniform grid (one-sided near the ends)."""
    n = len(s)
    h = s[1] - s[0]
    D = np.zeros((n, n))
    for i in range(2, n - 2):
        D[i, i - 2:i + 3] = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    D[0, :5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    D[1, :5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    D[n - 1, n - 5:] = -D[0, :5][::-1]
    D[n - 2, n - 5:] = -D[1, :5][::-1]
    return D / h


def ck_rhs(u: np.ndarray, D: np.ndarray, c=(0.0, 0.0)) -> np.ndarray:
    a1, a2, b1, b2 = u
    da1, da2, db1, db2 = D @ a1, D @ a2, D @ b1, D @ b2
    q = 1 + a2
    return np.array([
        a1 * da1 - (1 + a1 * a1) / q * da2,
        q * da1 - a1 * da2,
        -db2 + b1 * da1 + (b2 - b1 * a1) / q * da2 + c[0],
        db1 + b2 * da1 - (b1 + b2 * a1) / q * da2 + c[1],
    ])


def _lagrange_weights(nodes, x):
    w = []
    for j, xj in enumerate(nodes):
        term = 1.0
        for m, xm in enumerate(nodes):
            if m != j:
                term = term * (x - xm) / (xj - xm)
        w.append(term)
    return w


def _interp2(grid_t, grid_s, values, t, s):
    """Local 4x4 Lagrange interpolation (dual-capable in ``t, s``)."""
    def window(grid, v):
        i = int(np.searchsorted(grid, float(dual.real_part(v))) - 2)
        return min(max(i, 0), len(grid) - 4)

    it, js = window(grid_t, t), window(grid_s, s)
    wt = _lagrange_weights(grid_t[it:it + 4], t)
    ws = _lagrange_weights(grid_s[js:js + 4], s)
    out = 0.0
    for a in range(4):
        for b in range(4):
            out = out + wt[a] * ws[b] * values[it + a, js + b]
    return out


@dataclass
class GeneratedStructure:
    s: np.ndarray
    t: np.ndarray
    fields: dict = field(repr=False)
    aborted: bool = False
    last_t: float = 0.0
    residual: float = float("nan")
    caveat: str = "elliptic system: stable only for analytic data on a coarse s-grid"

    def coeffs(self, p):
        """``(a1, a2, b1, b2)`` at a chart point ``(x, y, s, t)`` by interpolation."""
        s, t = p[2], p[3]
        return tuple(_interp2(self.t, self.s, self.fields[k], t, s) for k in FIELDS)

    def domain(self) -> ChartDomain:
        return ChartDomain(4, ((-1.0, 1.0), (-1.0, 1.0), (self.s[0], self.s[-1]), (self.t[0], self.t[-1])),
                           (False,) * 4, COORDS)

    def structure(self, **kw) -> AlmostComplexStructure:
        kw.setdefault("name", "ck_generated")
        kw.setdefault("samples", 40)
        return AlmostComplexStructure(coupled_structure_fn(self.coeffs), self.domain(), **kw)

    def max_error(self, exact) -> float:
        """Sup difference with ``exact(s, t) -> (a1, a2, b1, b2)`` over the grid."""
        S, T = np.meshgrid(self.s, self.t)
        ref = exact(S, T)
        return float(max(np.max(np.abs(self.fields[k] - r)) for k, r in zip(FIELDS, ref)))


def closed_form_fields(S, T):
    a1, a2, b1, b2 = closed_form_coeffs((0.0, 0.0, S, T))
    return a1, a2, b1, b2


def _pde_residual(u_hist: np.ndarray, D: np.ndarray, dt: float, c) -> float:
    """Grid residual with a 4th-order central time derivative on interior steps."""
    if len(u_hist) < 5:
        return float("nan")
    ut = (u_hist[:-4] - 8 * u_hist[1:-3] + 8 * u_hist[3:-1] - u_hist[4:]) / (12 * dt)
    rhs = np.array([ck_rhs(u, D, c) for u in u_hist[2:-2]])
    return float(np.max(np.abs(ut - rhs)))


def ck_march(data: CKInitialData) -> GeneratedStructure:
    """Classical RK4 in ``t`` with 4th-order finite differences in ``s``.

    Marching stops at the last valid time when a value exceeds ``data.bound``,
    becomes non-finite, or ``1 + a2`` approaches zero.
    """
    s = data.s
    D = fd4_matrix(s)
    c = data.forcing()
    u = data.initial()
    n_steps = int(round(data.t_max / data.step))
    dt = data.t_max / n_steps
    hist = [u]
    aborted = False
    f = lambda v: ck_rhs(v, D, c)
    for _ in range(n_steps):
        k1 = f(u)
        k2 = f(u + 0.5 * dt * k1)
        k3 = f(u + 0.5 * dt * k2)
        k4 = f(u + dt * k3)
        new = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (not np.all(np.isfinite(new)) or np.max(np.abs(new)) > data.bound
                or np.min(np.abs(1 + new[1])) < data.min_denominator):
            aborted = True
            break
        u = new
        hist.append(u)
    H = np.array(hist)
    t = dt * np.arange(len(H))
    fields = {k: H[:, i, :] for i, k in enumerate(FIELDS)}
    return GeneratedStructure(s, t, fields, aborted, float(t[-1]), _pde_residual(H, D, dt, c))


def richardson_ratio(data: CKInitialData, exact) -> tuple[float, float, float]:
    """Errors at ``step`` and ``step/2`` against ``exact`` and their ratio."""
    from dataclasses import replace

    e1 = ck_march(data).max_error(exact)
    e2 = ck_march(replace(data, step=data.step / 2)).max_error(exact)
    return e1, e2, e1 / e2 if e2 > 0 else float("inf")


# --- characteristic distribution ---------------------------------------------


@dataclass
class CharacteristicDistribution:
    rank: int
    basis: np.ndarray           # columns span Im N_J
    singular_values: np.ndarray
    invariance_residual: float  # |(1 - P) J basis|


def characteristic_distribution(J: AlmostComplexStructure, p, tol=1e-8) -> CharacteristicDistribution:
    """Image of ``(X, Y) -> N_J(X, Y)`` from the values on a basis of 2-vectors."""
    N = nijenhuis_tensor(J, p)
    d = N.shape[0]
    cols = [N[:, i, j] for i in range(d) for j in range(i + 1, d)]
    M = np.stack(cols, axis=1)
    U, sv, _ = np.linalg.svd(M)
    scale = max(1.0, float(sv[0]) if sv.size else 0.0)
    rank = int(np.sum(sv > tol * scale))
    basis = U[:, :rank]
    Jp = dual.value(J.fn(np.asarray(p, dtype=float))).astype(float)
    if rank:
        img = Jp @ basis
        inv = float(np.max(np.abs(img - basis @ (basis.T @ img))))
    else:
        inv = 0.0
    return CharacteristicDistribution(rank, basis, sv, inv)


def _classify(dist: CharacteristicDistribution, chart: SplitChart, tol) -> str:
    if dist.rank == 0:
        return "zero"
    normal = dist.basis[chart.ys]
    if np.max(np.abs(normal)) < tol:
        return "tangent"
    if np.linalg.matrix_rank(normal, tol) == dist.rank:
        return "transversal"
    return "mixed"


def nb2_vanishing_check(J: AlmostComplexStructure, chart: SplitChart, xs, y=None, tol=1e-6) -> list[dict]:
    """Classify points of ``L`` by the position of ``Im N_J`` and check the NB-II consequence.

    * ``tangent`` or ``zero``: the NB-II Nijenhuis tensor vanishes over ``x``;
    * ``transversal``: its image is transversal to the base and it is nonzero.
    """
    m = chart.fiber_dim
    y = np.full(m, 0.1) if y is None else np.asarray(y, dtype=float)
    out = []
    for x in xs:
        x = np.asarray(x, dtype=float)
        dist = characteristic_distribution(J, chart.point(x), tol)
        kind = _classify(dist, chart, tol)
        res = nb2_nijenhuis(J, chart, x, y)
        blocks = res["blocks"]
        full = np.concatenate([blocks["xx"].ravel(), blocks["xy"].ravel(), blocks["yy"].ravel()])
        size = float(np.max(np.abs(full)))
        normal_size = float(max(np.max(np.abs(blocks["xx"][chart.ys])), np.max(np.abs(blocks["xy"][chart.ys]))))
        if kind in ("zero", "tangent"):
            ok = size < tol
        elif kind == "transversal":
            ok = normal_size > tol
        else:
            ok = True
        out.append({"x": x, "kind": kind, "rank": dist.rank, "nb2_size": size,
                    "nb2_normal_size": normal_size, "consistent": bool(ok),
                    "ape": max(res["yy"], res["xy"], res["xx"])})
    return out


def fiber_constancy(J: AlmostComplexStructure, p1, p2, base_dims=(0, 1), fiber_dims=(2, 3)) -> dict:
    """Compare ``N_J(d_x, V)`` for fiber directions ``V`` at two points of one fiber.

    The remaining components of ``N_J`` follow from this block through
    antilinearity and ``J``; in these coordinates they are not constant.
    Also reports how far ``Im N_J`` is from the fiber directions.
    """
    p1, p2 = np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)
    if np.max(np.abs(p1[list(base_dims)] - p2[list(base_dims)])) > 0:
        raise InvalidSpecError("points must lie on the same fiber")
    i0, fd = base_dims[0], list(fiber_dims)
    N1, N2 = nijenhuis_tensor(J, p1), nijenhuis_tensor(J, p2)
    block = lambda N: N[:, i0, :][:, fd]
    off = lambda N: float(np.max(np.abs(N[list(base_dims)])))
    return {"difference": float(np.max(np.abs(block(N1) - block(N2)))),
            "block": block(N1), "image_off_fiber": max(off(N1), off(N2))}
