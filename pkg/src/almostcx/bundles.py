"""Canonical almost complex structures on tangent and normal bundles.

Total-space charts always list base coordinates first and fiber coordinates
after them, so a point is ``p = (x, y)`` and the submanifold (zero section)
is ``L = {y = 0}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .connections import (ConnectionField, complexify_connection, minimal_connection, minimality_residual,
                          nijenhuis_fn)
from .errors import ChartError, ContractError, PreconditionError
from .geometry import DEFAULT_TOL, AlmostComplexStructure, ChartDomain, generic_inverse, standard_matrix


def _is_dual(arr) -> bool:
    return any(isinstance(v, dual.Dual) for v in np.asarray(arr, dtype=object).flat)


def _numeric(arr):
    arr = np.asarray(arr, dtype=object)
    return arr if _is_dual(arr) else arr.astype(float)


def block_matrix(a, c, b, d):
    """``[[a, c], [b, d]]`` for float or dual blocks."""
    top = np.concatenate([np.asarray(a, dtype=object), np.asarray(c, dtype=object)], axis=1)
    bot = np.concatenate([np.asarray(b, dtype=object), np.asarray(d, dtype=object)], axis=1)
    return _numeric(np.concatenate([top, bot], axis=0))


# --- split charts -----------------------------------------------------------


@dataclass(frozen=True)
class SplitChart:
    """Chart ``(x, y)`` with ``x`` the first ``base_dim`` coordinates and ``L = {y = 0}``."""

    domain: ChartDomain
    base_dim: int

    def __post_init__(self):
        if self.base_dim <= 0 or self.base_dim % 2 or self.base_dim >= self.domain.dim:
            raise ChartError(f"base dimension {self.base_dim} incompatible with a {self.domain.dim}-dim chart")
        for k in range(self.base_dim, self.domain.dim):
            lo, hi = self.domain.bounds[k]
            if not lo < 0 < hi:
                raise ChartError("fiber coordinate ranges must contain 0")

    @property
    def fiber_dim(self) -> int:
        return self.domain.dim - self.base_dim

    @property
    def xs(self) -> slice:
        return slice(0, self.base_dim)

    @property
    def ys(self) -> slice:
        return slice(self.base_dim, self.domain.dim)

    def base_domain(self) -> ChartDomain:
        n = self.base_dim
        return ChartDomain(n, self.domain.bounds[:n], self.domain.periodic[:n], self.domain.names[:n])

    def point(self, x, y=None):
        x = np.asarray(x, dtype=object if _is_dual(x) else float)
        if y is None:
            y = np.zeros(self.fiber_dim)
        y = np.asarray(y, dtype=object if _is_dual(y) else float)
        return np.concatenate([x, y]).astype(object if (_is_dual(x) or _is_dual(y)) else float)

    def split(self, p):
        return p[self.xs], p[self.ys]

    def sample_base(self, rng, n, margin=0.1, accept=None):
        pts = self.domain.sample(rng, n, margin, accept=None if accept is None else lambda q: accept(self.point(q[self.xs])))
        return pts[:, self.xs]

    def sample_total(self, rng, n, margin=0.1, scale=1.0, accept=None):
        pts = self.domain.sample(rng, n, margin, accept)
        pts[:, self.ys] *= scale
        return pts

    def ph_residual(self, J: AlmostComplexStructure, x) -> float:
        """Size of the fiber components of ``J d_x`` on ``L`` (zero iff ``T L`` is J-invariant there)."""
        M = J.at(self.point(x))
        return float(np.max(np.abs(M[self.ys, self.xs])))

    def split_residual(self, J: AlmostComplexStructure, x) -> float:
        """Size of the base components of ``J d_y`` on ``L`` (zero iff ``span d_y`` is J-invariant)."""
        M = J.at(self.point(x))
        return float(np.max(np.abs(M[self.xs, self.ys])))

    def require_ph(self, J, samples=20, seed=0, tol=DEFAULT_TOL.alg, what="L"):
        rng = np.random.default_rng(seed)
        worst = max(self.ph_residual(J, x) for x in self.sample_base(rng, samples, accept=lambda q: J.guard_ok(q, DEFAULT_TOL.guard)))
        if worst > tol:
            raise PreconditionError(f"{what} is not pseudoholomorphic: |J(TL) mod TL| = {worst:.3e}")
        return worst

    def require_split(self, J, samples=20, seed=0, tol=DEFAULT_TOL.alg):
        rng = np.random.default_rng(seed)
        worst = max(self.split_residual(J, x) for x in self.sample_base(rng, samples, accept=lambda q: J.guard_ok(q, DEFAULT_TOL.guard)))
        if worst > tol:
            raise PreconditionError(f"fiber directions are not J-invariant along L: residual {worst:.3e}")
        return worst


def radius_vector(chart: SplitChart, p):
    """The radial field ``r = y^s d_{y^s}``."""
    r = np.zeros(chart.domain.dim, dtype=object if _is_dual(p) else float)
    r[chart.ys] = p[chart.ys]
    return r


# --- PH bundle charts -------------------------------------------------------


class PHBundleChart:
    """PH vector bundle structure in coordinates, fiber-linear in ``y``.

    ``a(x)`` is the base structure, ``D(x)`` the fiber structure and
    ``b(x)[s, i, j]`` the coupling, so that the total structure is
    ``J d_{x^i} = a^k_i d_{x^k} + b^s_{ij} y^j d_{y^s}``, ``J d_{y^j} = D^s_j d_{y^s}``.
    """

    def __init__(self, chart: SplitChart, a: Callable, b: Callable, D: Callable | None = None, name=""):
        self.chart = chart
        self.a = a
        self.b = b
        self._D = D
        self.name = name
        self._structure = None

    def D(self, x):
        if self._D is None:
            return standard_matrix(self.chart.fiber_dim)
        return self._D(x)

    def lower(self, x, y):
        """Lower-left block ``B(x, y)`` of the total structure."""
        return np.einsum("sij,j->si", np.asarray(self.b(x)), np.asarray(y))

    def matrix(self, p):
        x, y = self.chart.split(p)
        n, m = self.chart.base_dim, self.chart.fiber_dim
        return block_matrix(self.a(x), np.zeros((n, m)), self.lower(x, y), self.D(x))

    def structure(self, **kw) -> AlmostComplexStructure:
        if kw:
            kw.setdefault("name", self.name or "ph_bundle")
            return AlmostComplexStructure(self.matrix, self.chart.domain, **kw)
        if self._structure is None:
            self._structure = AlmostComplexStructure(self.matrix, self.chart.domain, name=self.name or "ph_bundle",
                                                     samples=50)
        return self._structure

    def coefficients(self, x):
        """``(a, D, b)`` as float arrays at a base point."""
        return dual.value(self.a(x)), dual.value(self.D(x)), dual.value(self.b(x))

    def with_lower(self, lower: Callable, name="") -> "PHBundleChart":
        """Copy whose lower-left block is an arbitrary function ``(x, y) -> B``."""
        other = PHBundleChart(self.chart, self.a, self.b, self._D, name or self.name + "*")
        other.lower = lower
        return other

    def max_difference(self, other: "PHBundleChart", xs) -> float:
        worst = 0.0
        for x in xs:
            for u, v in zip(self.coefficients(x), other.coefficients(x)):
                worst = max(worst, float(np.max(np.abs(u - v))))
        return worst


def product_bundle(chart: SplitChart, a: Callable | None = None) -> PHBundleChart:
    n, m = chart.base_dim, chart.fiber_dim
    a = a or (lambda x: standard_matrix(n))
    return PHBundleChart(chart, a, lambda x: np.zeros((m, n, m)), name="product")


def torus_model_bundle(chart: SplitChart, beta) -> PHBundleChart:
    """The line-bundle model over a curve as a PH bundle chart.

    ``beta(x) -> (beta1, beta2)``; reproduces the coupling of the structure
    ``J d_x = d_y + s xi - t J xi``.
    """

    def b(x):
        b1, b2 = beta(x)
        out = np.empty((2, 2, 2), dtype=object)
        out[0, 0] = (-2 * b2, 2 * b1)
        out[1, 0] = (2 * b1, 2 * b2)
        out[0, 1] = (2 * b1, 2 * b2)
        out[1, 1] = (2 * b2, -2 * b1)
        return _numeric(out)

    return PHBundleChart(chart, lambda x: standard_matrix(2), b, name="torus_model")


# --- tangent bundle ---------------------------------------------------------


def tangent_bundle_chart(base: ChartDomain, fiber_bound: float = 1.0) -> SplitChart:
    """Chart ``(x, v)`` on ``TM`` over a base chart; the fiber box is ``[-fiber_bound, fiber_bound]``."""
    n = base.dim
    dom = ChartDomain(2 * n, base.bounds + tuple((-fiber_bound, fiber_bound) for _ in range(n)),
                      base.periodic + tuple(False for _ in range(n)),
                      base.names + tuple(f"v_{name}" for name in base.names))
    return SplitChart(dom, n)


def _require_minimal(conn, J, samples=10, seed=0, tol=1e-7):
    rng = np.random.default_rng(seed)
    pts = J.domain.sample(rng, samples, 0.05, accept=lambda q: J.guard_ok(q, DEFAULT_TOL.guard))
    worst = max(max(minimality_residual(conn, J, q)) for q in pts)
    if worst > tol:
        raise ContractError(f"connection is not minimal for J (residual {worst:.3e})")
    return worst


def tb1_structure(J: AlmostComplexStructure, conn: ConnectionField, fiber_bound=1.0, check=True) -> AlmostComplexStructure:
    """``J (+) J`` with respect to the horizontal/vertical splitting of a minimal connection."""
    if check:
        _require_minimal(conn, J)
    chart = tangent_bundle_chart(J.domain, fiber_bound)
    jf, gf = J.fn, conn.fn

    def fn(p):
        x, y = chart.split(p)
        Jx, G = jf(x), gf(x)
        C = np.einsum("ms,sij,j->mi", Jx, G, y) - np.einsum("mkj,ki,j->mi", G, Jx, y)
        return block_matrix(Jx, np.zeros_like(Jx, dtype=float), C, Jx)

    out = AlmostComplexStructure(fn, chart.domain, name=f"TB-I({J.name})", samples=50, guard=_lift_guard(J, chart))
    out.chart = chart
    return out


def tb2_structure(J: AlmostComplexStructure, fiber_bound=1.0) -> AlmostComplexStructure:
    """Complete lift: ``[[J, 0], [sum_i y^i d_i J, J]]``."""
    chart = tangent_bundle_chart(J.domain, fiber_bound)
    jf = J.fn

    def fn(p):
        x, y = chart.split(p)
        Jx = jf(x)
        C = np.einsum("kjh,h->kj", dual.partials(jf, x), y)
        return block_matrix(Jx, np.zeros_like(Jx, dtype=float), C, Jx)

    out = AlmostComplexStructure(fn, chart.domain, name=f"TB-II({J.name})", samples=50, guard=_lift_guard(J, chart))
    out.chart = chart
    return out


def _lift_guard(J, chart):
    if J.guard is None:
        return None
    return lambda p: J.guard(p[chart.xs])


def fiber_scaling(J: AlmostComplexStructure, z: complex, p):
    """Image point and differential of ``v -> (a + b J) v`` on the fibers of ``TM``."""
    a, b = complex(z).real, complex(z).imag
    n = J.domain.dim
    x, y = p[:n], p[n:]
    Jx = J.at(x)
    M = np.einsum("kjh,j->kh", dual.value(dual.partials(J.fn, x)), y)
    Zp = np.concatenate([x, a * y + b * Jx @ y])
    Zs = np.block([[np.eye(n), np.zeros((n, n))], [b * M, a * np.eye(n) + b * Jx]])
    return Zp, Zs


def fiber_scaling_commutator(Jhat: AlmostComplexStructure, J: AlmostComplexStructure, z: complex, p) -> np.ndarray:
    """``Jhat(Z p) Z_* - Z_* Jhat(p)``."""
    p = np.asarray(p, dtype=float)
    Zp, Zs = fiber_scaling(J, z, p)
    return Jhat.at(Zp) @ Zs - Zs @ Jhat.at(p)


def expected_tb2_commutator_block(J: AlmostComplexStructure, z: complex, p) -> np.ndarray:
    """``b N_J(y, .)``: the predicted lower-left block of the TB-II commutator."""
    n = J.domain.dim
    x, y = p[:n], p[n:]
    N = dual.value(nijenhuis_fn(J)(np.asarray(x, dtype=float)))
    return complex(z).imag * np.einsum("kai,a->ki", N, y)


# --- normal bundles ---------------------------------------------------------


def nb2_structure(J: AlmostComplexStructure, chart: SplitChart, check=True) -> PHBundleChart:
    """Fiber-dilation limit: ``[[A(x,0), 0], [d_F B(x,y), D(x,0)]]``.

    ``d_F B`` is the exact ``y``-derivative of the lower-left block at ``y = 0``.
    """
    if check:
        chart.require_ph(J)
        chart.require_split(J)
    jf, xs, ys = J.fn, chart.xs, chart.ys
    m = chart.fiber_dim

    def on_L(x):
        return jf(chart.point(x))

    def b(x):
        return dual.partials(lambda y: jf(chart.point(x, y))[ys, xs], np.zeros(m))

    return PHBundleChart(chart, lambda x: on_L(x)[xs, xs], b, lambda x: on_L(x)[ys, ys], name=f"NB-II({J.name})")


def nb1_connection(J: AlmostComplexStructure, chart: SplitChart, gauge=None) -> ConnectionField:
    """Minimal connection obtained from the coordinate-flat one (optionally shifted by ``gauge``)."""
    conn = minimal_connection(complexify_connection(ConnectionField.flat(chart.domain), J), J)
    if gauge is not None:
        conn = conn.shifted(gauge)
    return conn


def totally_geodesic_residual(conn: ConnectionField, chart: SplitChart, x) -> float:
    """Normal components of ``nabla_{d_x} d_x`` on ``L``."""
    G = dual.value(conn.fn(chart.point(x)))
    return float(np.max(np.abs(G[chart.ys, chart.xs, chart.xs])))


def nb1_structure(J: AlmostComplexStructure, chart: SplitChart, gauge=None, check=True) -> PHBundleChart:
    """Quotient structure of a minimal connection for which ``L`` is totally geodesic."""
    if check:
        chart.require_ph(J)
    conn = nb1_connection(J, chart, gauge)
    if check:
        rng = np.random.default_rng(1)
        worst = max(totally_geodesic_residual(conn, chart, x) for x in chart.sample_base(rng, 5))
        if worst > 1e-8:
            raise ContractError(f"L is not totally geodesic for the constructed connection ({worst:.3e})")
    jf, gf, xs, ys = J.fn, conn.fn, chart.xs, chart.ys

    def b(x):
        p = chart.point(x)
        M, G = jf(p), gf(p)
        a, D = M[xs, xs], M[ys, ys]
        Gh = G[ys, xs, ys]
        return np.einsum("sm,mij->sij", D, Gh) - np.einsum("ki,skj->sij", a, Gh)

    out = PHBundleChart(chart, lambda x: jf(chart.point(x))[xs, xs], b, lambda x: jf(chart.point(x))[ys, ys],
                        name=f"NB-I({J.name})")
    out.connection = conn
    return out


def symmetric_gauge(J: AlmostComplexStructure, seed=0, scale=0.3, chart: SplitChart | None = None):
    """Random symmetric J-bilinear ``A(p)`` (smooth in ``p``) for gauge tests.

    With ``chart`` given, the normal part of ``A`` on ``TL x TL`` vanishes along
    ``L`` so that ``L`` stays totally geodesic.
    """
    from .connections import symmetric_complex_tensor

    dim = J.domain.dim
    rng = np.random.default_rng(seed)
    c0 = rng.normal(size=(dim, dim, dim)) * scale
    c1 = rng.normal(size=(dim, dim, dim, dim)) * scale

    def A(p):
        raw = c0 + np.einsum("kijh,h->kij", c1, p)
        if chart is not None:
            raw = raw.astype(object)
            raw[chart.ys, chart.xs, chart.xs] = raw[chart.ys, chart.xs, chart.xs] * p[chart.base_dim]
        return symmetric_complex_tensor(raw, J.fn(p))

    return A


# --- N' tensor, normal integrability and the n.i.f. transform ---------------


def sharp(j: int) -> int:
    """0-based form of ``#j = j - (-1)^j`` on 1-based indices: pairs 0<->1, 2<->3, ..."""
    return j ^ 1


def _sign(j: int) -> int:
    """``(-1)^j`` for the 1-based index of 0-based ``j``."""
    return -1 if j % 2 == 0 else 1


def canonical_gamma(bundle: PHBundleChart, x):
    """A connection compatible with the coupling: ``Gamma^s_ij = -1/2 (D b_ij)^s``."""
    return -0.5 * np.einsum("sm,mij->sij", bundle.D(x), bundle.b(x))


def nprime_from_gamma(G, a):
    """Coefficients ``gamma^s_ij`` from Christoffel symbols (standard fiber structure).

    ``G[s, i, j]`` is ``nabla_{d_x^i} d_y^j = G^s_ij d_y^s`` and ``a`` the base structure.
    """
    G = np.asarray(G)
    m, n, _ = G.shape
    perm = np.array([sharp(j) for j in range(m)])
    sg = np.array([_sign(j) for j in range(m)], dtype=float)
    Gs = G[perm][:, :, perm]                     # G^{#s}_{i,#j}
    t1 = sg[:, None, None] * sg[None, None, :] * Gs
    t2 = sg[:, None, None] * np.einsum("ki,skj->sij", a, G[perm])
    t3 = sg[None, None, :] * np.einsum("ki,skj->sij", a, G[:, :, perm])
    return t1 - t2 - t3 - G


def nprime_formula(bundle: PHBundleChart, x) -> np.ndarray:
    """``gamma^s_ij(x)`` through the Christoffel-symbol formula."""
    D = dual.value(bundle.D(x))
    if np.max(np.abs(D - standard_matrix(len(D)))) > 1e-12:
        raise ContractError("the coordinate formula for N' needs the standard fiber structure")
    return dual.value(nprime_from_gamma(dual.value(canonical_gamma(bundle, x)), dual.value(bundle.a(x))))


def _total_nijenhuis(bundle: PHBundleChart, p):
    return dual.value(nijenhuis_fn(bundle.matrix)(np.asarray(p, dtype=float)))


def nprime_direct(bundle: PHBundleChart, x, y=None) -> np.ndarray:
    """``gamma^s_ij`` read off ``N(d_{x^i}, d_{y^j})`` at the fiber point ``y``."""
    c = bundle.chart
    N = _total_nijenhuis(bundle, c.point(x, y))
    return N[c.ys, c.xs, c.ys]


@dataclass
class NPrimeTensor:
    bundle: PHBundleChart

    def gamma(self, x):
        return nprime_formula(self.bundle, x)

    def direct(self, x, y=None):
        return nprime_direct(self.bundle, x, y)

    def fiber_constancy(self, x, y1, y2) -> float:
        return float(np.max(np.abs(self.direct(x, y1) - self.direct(x, y2))))

    def formula_vs_direct(self, x, y=None) -> float:
        return float(np.max(np.abs(self.gamma(x) - self.direct(x, y))))


def nprime_tensor(bundle: PHBundleChart) -> NPrimeTensor:
    return NPrimeTensor(bundle)


def nif_transform(bundle: PHBundleChart) -> PHBundleChart:
    """Normally integrable form ``J_0 = J - 1/2 J N_J(r, .)`` in coefficient form.

    With ``N(d_{x^i}, d_{y^j}) = gamma^s_ij d_{y^s}`` the coupling becomes
    ``b + 1/2 D gamma``; base and fiber structures are unchanged.
    """
    c = bundle.chart

    def b0(x):
        N = nijenhuis_fn(bundle.matrix)(c.point(x))
        gamma = N[c.ys, c.xs, c.ys]
        return bundle.b(x) + 0.5 * np.einsum("sm,mij->sij", bundle.D(x), gamma)

    return PHBundleChart(c, bundle.a, b0, bundle._D, name=f"nif({bundle.name})")


def nif_matrix(bundle: PHBundleChart, p) -> np.ndarray:
    """Literal ``J - 1/2 J N_J(r, .)`` at a total-space point."""
    p = np.asarray(p, dtype=float)
    M = dual.value(bundle.matrix(p))
    N = _total_nijenhuis(bundle, p)
    r = radius_vector(bundle.chart, p)
    return M - 0.5 * M @ np.einsum("kab,a->kb", N, r)


def reassembly_residual(bundle: PHBundleChart, nif: PHBundleChart, p) -> float:
    """``|J - (J_0 + 1/2 J_0 N_J(r, .))|`` at ``p``."""
    p = np.asarray(p, dtype=float)
    M = dual.value(bundle.matrix(p))
    M0 = dual.value(nif.matrix(p))
    N = _total_nijenhuis(bundle, p)
    r = radius_vector(bundle.chart, p)
    return float(np.max(np.abs(M - (M0 + 0.5 * M0 @ np.einsum("kab,a->kb", N, r)))))


def t14_check(J: AlmostComplexStructure, chart: SplitChart, samples=10, seed=0) -> float:
    """``sup |NB-I - nif(NB-II)|`` over coefficient values at sampled base points."""
    nb1 = nb1_structure(J, chart)
    nf = nif_transform(nb2_structure(J, chart))
    rng = np.random.default_rng(seed)
    xs = chart.sample_base(rng, samples, accept=lambda q: J.guard_ok(q, DEFAULT_TOL.guard))
    return nb1.max_difference(nf, xs)


def addition_ph_check(bundle: PHBundleChart, samples=20, seed=0) -> float:
    """Commutation of fiberwise addition with the structure on the fibered product.

    On ``E x_L E`` with coordinates ``(x, z, w)`` the product structure is
    ``[[a, 0, 0], [B(z), D, 0], [B(w), 0, D]]`` and ``alpha(x, z, w) = (x, z + w)``.
    """
    c = bundle.chart
    n, m = c.base_dim, c.fiber_dim
    rng = np.random.default_rng(seed)
    alpha = np.block([[np.eye(n), np.zeros((n, 2 * m))], [np.zeros((m, n)), np.eye(m), np.eye(m)]])
    worst = 0.0
    for q in c.sample_total(rng, samples, scale=0.5):
        x = q[c.xs]
        z = q[c.ys]
        w = 0.5 * rng.uniform(-1, 1, m)
        a, D = dual.value(bundle.a(x)), dual.value(bundle.D(x))
        Bz, Bw = dual.value(bundle.lower(x, z)), dual.value(bundle.lower(x, w))
        prod = np.block([[a, np.zeros((n, 2 * m))], [Bz, D, np.zeros((m, m))], [Bw, np.zeros((m, m)), D]])
        at_sum = dual.value(bundle.matrix(c.point(x, z + w)))
        worst = max(worst, float(np.max(np.abs(alpha @ prod - at_sum @ alpha))))
    return worst


def quadratic_corruption(bundle: PHBundleChart, eps=1.0) -> PHBundleChart:
    """Negative control: add a fiber-quadratic term to the coupling."""
    base_lower = bundle.lower

    def lower(x, y):
        B = base_lower(x, y)
        q = eps * (y @ y)
        return B + q * np.ones_like(dual.value(B))

    return bundle.with_lower(lower, name=f"corrupt({bundle.name})")


# --- Nijenhuis tensor of NB-II and projectability ----------------------------


def normal_nijenhuis_jet(J: AlmostComplexStructure, chart: SplitChart, x, fd=False, h=DEFAULT_TOL.fd_step):
    """``N_J`` on ``L`` and the ``y``-derivatives of its normal component there.

    Returns ``(N, dN)`` with ``dN[k, a, b, j] = d_{y^j} N^k_ab`` (normal ``k`` only
    meaningful). ``fd=True`` uses 4th-order central differences instead of duals.
    """
    nf = nijenhuis_fn(J)
    m = chart.fiber_dim
    x = np.asarray(x, dtype=float)
    along = lambda y: nf(chart.point(x, y))
    N = dual.value(along(np.zeros(m)))
    if fd:
        from .geometry import fd_derivative
        cols = [fd_derivative(along, np.zeros(m), e, h) for e in np.eye(m)]
        dN = np.stack(cols, axis=-1)
    else:
        dN = dual.value(dual.partials(along, np.zeros(m)))
    return N, dN


def nb2_nijenhuis(J: AlmostComplexStructure, chart: SplitChart, x, y, bundle: PHBundleChart | None = None, fd=False):
    """Compare ``N`` of the NB-II structure at ``(x, y)`` with the ambient prediction.

    Returns a dict of residuals: ``yy`` (must vanish), ``xy`` (against the
    normal part of ``N_J`` on ``L``) and ``xx`` (against ``N_J`` on ``L`` plus the
    linear term ``y^k d_{y^k} N_J^perp``), together with the raw blocks.
    """
    bundle = bundle or nb2_structure(J, chart, check=False)
    xs, ys = chart.xs, chart.ys
    p = chart.point(x, y)
    Nc = _total_nijenhuis(bundle, p)
    N, dN = normal_nijenhuis_jet(J, chart, x, fd=fd)
    y = np.asarray(y, dtype=float)

    pred_xx = N[:, xs, xs].copy()
    pred_xx[ys] += np.einsum("kabj,j->kab", dN[ys][:, xs, xs], y)
    pred_xy = np.zeros_like(N[:, xs, ys])
    pred_xy[ys] = N[ys, xs, ys]
    res = {
        "yy": float(np.max(np.abs(Nc[:, ys, ys]))),
        "xy": float(np.max(np.abs(Nc[:, xs, ys] - pred_xy))),
        "xx": float(np.max(np.abs(Nc[:, xs, xs] - pred_xx))),
    }
    res["blocks"] = {"xx": Nc[:, xs, xs], "xy": Nc[:, xs, ys], "yy": Nc[:, ys, ys]}
    return res


def projectability_residual(Jtot, base_fn, chart: SplitChart, p) -> float:
    """``|pi_* N_Jtot - N_base o pi_*|`` at a total-space point (``Jtot`` a matrix function)."""
    p = np.asarray(p, dtype=float)
    N = dual.value(nijenhuis_fn(Jtot)(p))
    Nb = dual.value(nijenhuis_fn(base_fn)(p[chart.xs]))
    pred = np.zeros_like(N[chart.xs])
    pred[:, chart.xs, chart.xs] = Nb
    return float(np.max(np.abs(N[chart.xs] - pred)))


def vertical_image_residual(Jtot, chart: SplitChart, p) -> float:
    """Horizontal components of ``N_Jtot`` (vanish over a curve)."""
    N = dual.value(nijenhuis_fn(Jtot)(np.asarray(p, dtype=float)))
    return float(np.max(np.abs(N[chart.xs])))


def shear_pullback(J: AlmostComplexStructure, chart: SplitChart, alpha: Callable) -> AlmostComplexStructure:
    """Pull ``J`` back along ``(x, y) -> (x + alpha(x) y, y)``; ``alpha(x)`` is ``base x fiber``."""
    xs, ys = chart.xs, chart.ys
    jf = J.fn

    def phi(q):
        x, y = chart.split(q)
        return np.concatenate([x + np.asarray(alpha(x)) @ y, y])

    def fn(q):
        dphi = dual.partials(phi, q)
        M = jf(phi(q))
        return _numeric(generic_inverse(dphi) @ M @ dphi)

    return AlmostComplexStructure(fn, chart.domain, name=f"shear({J.name})", samples=30)
