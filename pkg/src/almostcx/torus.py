"""PH line bundles over elliptic curves and the linearized Cauchy-Riemann operator.

The torus is ``C / (2 pi Z + omega Z)`` with real periodic coordinates
``(s1, s2) in [0, 1)^2`` and ``z = 2 pi s1 + omega s2``. The fiber multiplier
along ``omega`` is ``lambda``; only topologically trivial bundles (``p = 0``)
are discretized. ``beta`` is given in the global fiber coordinate, where the
linearized equation ``f_zbar + alpha f + beta conj(f) = 0`` has doubly
periodic coefficients and constant ``alpha``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual
from .errors import InvalidSpecError
from .geometry import ChartDomain, ScalarField

TWO_PI = 2.0 * math.pi
TORUS_COORDS = ("s1", "s2")


def torus_domain() -> ChartDomain:
    return ChartDomain(2, ((0.0, 1.0), (0.0, 1.0)), (True, True), TORUS_COORDS)


# --- bundle data ------------------------------------------------------------


@dataclass
class EllipticBundleSpec:
    """Gluing data ``(omega, lambda, p)`` and the coupling ``beta = beta_re + i beta_im``.

    ``beta_re``/``beta_im`` are scalar fields on the ``(s1, s2)`` torus chart
    (expression strings, callables or constants).
    """

    omega: complex
    lam: complex
    p: int = 0
    beta_re: object = 0.0
    beta_im: object = 0.0
    name: str = ""

    def __post_init__(self):
        self.omega = complex(self.omega)
        self.lam = complex(self.lam)
        if not self.omega.imag > 0:
            raise InvalidSpecError(f"Im omega must be positive, got {self.omega}")
        if self.lam == 0:
            raise InvalidSpecError("lambda must be nonzero")
        if int(self.p) != self.p:
            raise InvalidSpecError("p must be an integer")
        self.p = int(self.p)
        dom = torus_domain()
        self._br = self.beta_re if isinstance(self.beta_re, ScalarField) else ScalarField(self.beta_re, dom)
        self._bi = self.beta_im if isinstance(self.beta_im, ScalarField) else ScalarField(self.beta_im, dom)

    def beta_fn(self, q):
        """``(beta_re, beta_im)`` at a (possibly dual) torus point ``q = (s1, s2)``."""
        return self._br.fn(q), self._bi.fn(q)

    def beta(self, q) -> complex:
        q = torus_domain().locate(q)
        br, bi = self.beta_fn(q)
        return complex(float(dual.real_part(br)), float(dual.real_part(bi)))

    def beta_grid(self, n: int) -> np.ndarray:
        g = np.arange(n) / n
        return np.array([[self.beta((a, b)) for b in g] for a in g])

    def is_constant_beta(self) -> bool:
        return all(isinstance(v, (int, float)) for v in (self.beta_re, self.beta_im))


@dataclass(frozen=True)
class NormalizedModulus:
    omega: complex
    lam: complex
    steps: tuple = ()
    basis: tuple = ()      # new generators (2 pi, omega) expressed in the original z-plane, up to scale

    def satisfies_band(self) -> bool:
        o, l = self.omega, self.lam
        return (abs(o) >= TWO_PI * (1 - 1e-12) and -math.pi < o.real <= math.pi + 1e-12 and o.imag > 0
                and math.exp(-o.imag) < abs(l) <= 1 + 1e-12)


def _principal_log(lam: complex) -> complex:
    """Principal branch; the negative real axis gets ``Im ln = pi``."""
    lam = complex(lam)
    if lam.imag == 0 and lam.real < 0:
        return complex(math.log(-lam.real), math.pi)
    return cmath.log(lam)


def normalize_modulus(omega, lam, max_steps=200) -> NormalizedModulus:
    """Bring ``(omega, lambda)`` into the standard band by lattice and gauge changes.

    Moves used: ``omega -> omega - 2 pi k`` (multiplier unchanged); the swap
    ``(2 pi, omega) -> (omega, -2 pi)`` rescaled to ``(2 pi, -4 pi^2/omega)``
    followed by the gauge ``w -> w e^{cz}`` that makes the ``2 pi`` multiplier
    trivial; and ``lambda -> lambda e^{i k omega}`` (gauge ``w -> w e^{ikz}``).
    """
    omega, lam = complex(omega), complex(lam)
    if not omega.imag > 0:
        raise InvalidSpecError(f"Im omega must be positive, got {omega}")
    if lam == 0:
        raise InvalidSpecError("lambda must be nonzero")
    steps = []
    g1, g2 = complex(TWO_PI), omega      # generators in the original z-plane
    for _ in range(max_steps):
        k = math.ceil((omega.real - math.pi) / TWO_PI)
        if k:
            omega -= TWO_PI * k
            g2 -= k * g1
            steps.append(f"T^{-k}")
        if abs(omega) >= TWO_PI:
            break
        # swap generators, rescale, re-gauge so the multiplier along 2 pi is 1
        new_omega = -TWO_PI * TWO_PI / omega
        c = -_principal_log(lam) / TWO_PI
        lam = cmath.exp(c * new_omega)
        omega = new_omega
        g1, g2 = g2, -g1
        steps.append("S")
    else:
        raise InvalidSpecError("modulus normalization did not converge")
    k = math.ceil(math.log(abs(lam)) / omega.imag)
    if k:
        lam = lam * cmath.exp(1j * k * omega)
        steps.append(f"gauge e^(i{k}z)")
    # exact band edges: |lambda| == e^{-Im omega} moves to the upper edge
    if abs(lam) <= math.exp(-omega.imag):
        lam = lam * cmath.exp(-1j * omega)
        steps.append("gauge e^(-iz)")
    return NormalizedModulus(omega, lam, tuple(steps), (g1, g2))


def lattice_points(omega: complex, radius: float, n=6) -> set:
    """Rounded lattice points ``a 2pi + b omega`` inside a disc (lattice-equivalence oracle)."""
    pts = set()
    for a in range(-n, n + 1):
        for b in range(-n, n + 1):
            z = a * TWO_PI + b * omega
            if abs(z) <= radius:
                pts.add((round(z.real, 8), round(z.imag, 8)))
    return pts


def alpha_constant(omega, lam) -> tuple[complex, float]:
    """``alpha = (i/2) ln(lambda) / Im omega`` and ``tau = ln|lambda| / Im omega``."""
    omega, lam = complex(omega), complex(lam)
    if not omega.imag > 0 or lam == 0:
        raise InvalidSpecError("need Im omega > 0 and lambda != 0")
    alpha = 0.5j * _principal_log(lam) / omega.imag
    tau = math.log(abs(lam)) / omega.imag
    return alpha, tau


def lambda_field(beta) -> Callable:
    """``Lambda = -2 i conj(beta)``; accepts a complex callable or a constant."""
    if callable(beta):
        return lambda q: -2j * np.conj(beta(q))
    b = complex(beta)
    return lambda q: -2j * b.conjugate()


def zbar_coefficients(omega: complex) -> tuple[complex, complex]:
    """``d/dzbar = c1 d/ds1 + c2 d/ds2`` for ``z = 2 pi s1 + omega s2``."""
    den = omega.conjugate() - omega
    return -(omega / TWO_PI) / den, 1.0 / den


def z_coefficients(omega: complex) -> tuple[complex, complex]:
    den = omega - omega.conjugate()
    return -(omega.conjugate() / TWO_PI) / den, 1.0 / den


# --- Riemann-Roch-type criterion --------------------------------------------


def _lambda_parts(spec: EllipticBundleSpec, phase_rate: float):
    """``q -> (Re Lambda, Im Lambda)`` for the coefficient in the original fiber coordinate."""

    def fn(q):
        br, bi = spec.beta_fn(q)
        phi = phase_rate * q[1]
        c, s = dual.cos(phi), dual.sin(phi)
        ore = br * c - bi * s
        oim = br * s + bi * c
        return np.array([-2 * oim, -2 * ore], dtype=object)

    return fn


@dataclass
class RRTResult:
    holds: bool
    branch: str                 # "vanishing" or "margin"
    worst_margin: float
    worst_point: tuple
    tau: float
    epsilon: float
    margins: np.ndarray = field(repr=False, default=None)


def rrt_criterion(spec: EllipticBundleSpec, epsilon=0.5, grid=64) -> RRTResult:
    """Sufficient condition for a trivial kernel, sampled on a ``grid x grid`` lattice.

    Pointwise margin ``(1 - eps)|Lambda|^2 - |tau Lambda| - |d_zbar Lambda|``
    with exact derivatives. When ``Lambda`` vanishes identically the criterion
    reduces to ``lambda != 1``.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidSpecError("epsilon must lie in (0, 1)")
    alpha, tau = alpha_constant(spec.omega, spec.lam)
    # beta in the original coordinate differs by the unimodular factor exp(2 i arg(lambda) s2)
    rate = 2.0 * _principal_log(spec.lam).imag
    fn = _lambda_parts(spec, rate)
    c1, c2 = zbar_coefficients(spec.omega)
    g = np.arange(grid) / grid
    margins = np.empty((grid, grid))
    lam_abs = np.empty((grid, grid))
    for a, s1 in enumerate(g):
        for b, s2 in enumerate(g):
            q = np.array([s1, s2])
            val = dual.value(fn(q)).astype(float)
            d = dual.partials(fn, q).astype(float)
            L = complex(val[0], val[1])
            dL = c1 * complex(d[0, 0], d[1, 0]) + c2 * complex(d[0, 1], d[1, 1])
            lam_abs[a, b] = abs(L)
            margins[a, b] = (1 - epsilon) * abs(L) ** 2 - abs(tau * L) - abs(dL)
    if lam_abs.max() < 1e-14:
        return RRTResult(spec.lam != 1, "vanishing", math.inf if spec.lam != 1 else -math.inf,
                         (0.0, 0.0), tau, epsilon, margins)
    idx = np.unravel_index(np.argmin(margins), margins.shape)
    worst = float(margins[idx])
    return RRTResult(worst >= 0.0, "margin", worst, (g[idx[0]], g[idx[1]]), tau, epsilon, margins)


# --- discretized operator ----------------------------------------------------


def fourier_diff_matrix(n: int) -> np.ndarray:
    """Spectral derivative on ``n`` equispaced points of ``[0, 1)`` (complex, anti-Hermitian).

    The Nyquist mode gets the one-sided wavenumber ``+n/2`` so that only
    constants are annihilated; a real antisymmetric matrix would drop it and
    leave spurious kernel elements.
    """
    if n < 2 or n % 2:
        raise InvalidSpecError("grid size must be even and >= 2")
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = n // 2
    F = np.fft.fft(np.eye(n), axis=0)
    return np.fft.ifft(2j * math.pi * k[:, None] * F, axis=0)


def realify(C: np.ndarray) -> np.ndarray:
    """Real ``2n x 2n`` form of a complex-linear map on interleaved ``(Re, Im)`` pairs."""
    return np.kron(C.real, np.eye(2)) + np.kron(C.imag, np.array([[0.0, -1.0], [1.0, 0.0]]))


def conj_block(beta: np.ndarray) -> np.ndarray:
    """Real form of ``f -> beta conj(f)`` (pointwise)."""
    n = beta.size
    M = np.zeros((2 * n, 2 * n))
    b = beta.ravel()
    for k in range(n):
        M[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[b[k].real, b[k].imag], [b[k].imag, -b[k].real]]
    return M


@dataclass
class CROperator:
    grid: int
    matrix: np.ndarray = field(repr=False)
    alpha: complex
    omega: complex
    beta: np.ndarray = field(repr=False)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Apply to a complex grid function ``f[a, b] = f(a/N, b/N)``."""
        v = np.empty(2 * f.size)
        v[0::2], v[1::2] = f.real.ravel(), f.imag.ravel()
        out = self.matrix @ v
        return (out[0::2] + 1j * out[1::2]).reshape(f.shape)


def dz_matrices(omega: complex, n: int):
    """Complex matrices of ``d/dzbar`` and ``d/dz`` on the ``n x n`` grid (index ``a*n + b``)."""
    D = fourier_diff_matrix(n)
    I = np.eye(n)
    D1, D2 = np.kron(D, I), np.kron(I, D)
    c1, c2 = zbar_coefficients(omega)
    e1, e2 = z_coefficients(omega)
    return c1 * D1 + c2 * D2, e1 * D1 + e2 * D2


def assemble_cr_operator(spec: EllipticBundleSpec, n: int) -> CROperator:
    """Real matrix of ``f -> f_zbar + alpha f + beta conj(f)`` on the ``n x n`` grid."""
    if spec.p != 0:
        raise InvalidSpecError("only topologically trivial bundles (p = 0) are discretized")
    alpha, _ = alpha_constant(spec.omega, spec.lam)
    dzb, _ = dz_matrices(spec.omega, n)
    C = dzb + alpha * np.eye(n * n)
    beta = spec.beta_grid(n)
    return CROperator(n, realify(C) + conj_block(beta), alpha, spec.omega, beta)


@dataclass
class SpectrumReport:
    grid: int
    singular_values: np.ndarray = field(repr=False)
    threshold: float
    kernel_dim: int
    cokernel_dim: int
    sigma_min: float
    sigma_max: float
    refined: "SpectrumReport | None" = None

    @property
    def index(self) -> int:
        return self.kernel_dim - self.cokernel_dim

    def converged(self) -> bool:
        return self.refined is None or self.refined.kernel_dim == self.kernel_dim


def spectrum(op: CROperator, rel=1e-8, threshold=None) -> SpectrumReport:
    sv = np.linalg.svd(op.matrix, compute_uv=False)
    thr = rel * sv[0] if threshold is None else threshold
    ker = int(np.sum(sv < thr))
    coker = int(np.sum(np.linalg.svd(op.matrix.T, compute_uv=False) < thr))
    return SpectrumReport(op.grid, sv, thr, ker, coker, float(sv[-1]), float(sv[0]))


def kernel_analysis(spec: EllipticBundleSpec, n=16, rel=1e-8, threshold=None, refine=True) -> SpectrumReport:
    """SVD of the discretized operator; optionally repeated on a ``3n/2`` grid."""
    rep = spectrum(assemble_cr_operator(spec, n), rel, threshold)
    if refine:
        m = (3 * n) // 2
        m += m % 2
        rep.refined = spectrum(assemble_cr_operator(spec, m), rel, threshold)
    return rep


# --- graphs of sections and the linearized operator --------------------------


def _xy_partials(omega: complex):
    """``(d/dx, d/dy)`` as combinations of ``(d/ds1, d/ds2)`` for ``x + iy = z``."""
    dx = np.array([1.0 / TWO_PI, 0.0])
    dy = np.array([-omega.real / (TWO_PI * omega.imag), 1.0 / omega.imag])
    return dx, dy


def graph_ph_residual(spec: EllipticBundleSpec, f: Callable, points) -> dict:
    """Equation residual ``f_zbar + beta conj(f)`` and the graph-frame residual.

    ``f(q) -> (f1, f2)`` on the torus chart (dual-capable). The frame residual
    is ``J e1 - e2`` for the graph ``(x, y) -> (x, y, f1, f2)`` of the line
    bundle model; it equals ``(0, 0, -2 Im R, 2 Re R)`` where ``R`` is the
    equation residual. Returns per-point arrays and their sup-difference.
    """
    from .structures import torus_model_fn

    dx, dy = _xy_partials(spec.omega)
    eq, frame, gap = [], [], 0.0
    for q in points:
        q = np.asarray(q, dtype=float)
        val = np.asarray(dual.value(np.array(f(q), dtype=object)), dtype=float)
        d = np.asarray(dual.partials(lambda r: np.array(f(r), dtype=object), q), dtype=float)
        fx, fy = d @ dx, d @ dy
        fzb = 0.5 * (complex(fx[0], fx[1]) + 1j * complex(fy[0], fy[1]))
        b = spec.beta(q)
        R = fzb + b * complex(val[0], -val[1])
        J = torus_model_fn(lambda p, b=b: (b.real, b.imag))(np.array([0.0, 0.0, val[0], val[1]]))
        e1 = np.array([1.0, 0.0, fx[0], fx[1]])
        e2 = np.array([0.0, 1.0, fy[0], fy[1]])
        fr = J @ e1 - e2
        eq.append(R)
        frame.append(fr)
        gap = max(gap, float(np.max(np.abs(fr - np.array([0.0, 0.0, -2 * R.imag, 2 * R.real])))))
    return {"equation": np.array(eq), "frame": np.array(frame), "agreement": gap}


def gromov_identity_check(J, chart, section: Callable, xs, conn=None) -> dict:
    """Compare three expressions for the linearized operator along ``L = {y = 0}``.

    ``section(x) -> sigma`` is a (dual-capable) normal vector field on ``L``.
    For each base coordinate vector ``X``:

    * true linearization ``1/2 (dv(X) + J dv(jX) + (d_v J) jX)``;
    * ``1/2 (nabla_X v + J nabla_{jX} v) + 1/4 N(v, X)`` with a minimal ``nabla``;
    * the Cauchy-Riemann operator of the fiber-dilated structure,
      ``1/2 (d_X sigma + D d_{jX} sigma + B(sigma) jX)``.

    Returns sup-differences ``mis_vs_true`` (full vectors) and
    ``normal_vs_nb2`` (normal components of the minimal-connection form).
    """
    from .bundles import nb1_connection, nb2_structure
    from .connections import nijenhuis_tensor

    conn = conn or nb1_connection(J, chart)
    nb2 = nb2_structure(J, chart)
    n, d = chart.base_dim, chart.domain.dim
    xsl, ysl = chart.xs, chart.ys
    worst_full = worst_norm = 0.0
    for x in xs:
        x = np.asarray(x, dtype=float)
        p = chart.point(x)
        sig = np.asarray(dual.value(np.asarray(section(x), dtype=object)), dtype=float)
        dsig = np.asarray(dual.partials(lambda u: np.asarray(section(u), dtype=object), x), dtype=float)
        v = np.zeros(d)
        v[ysl] = sig
        Jp = dual.value(J.fn(p)).astype(float)
        a = Jp[xsl, xsl]
        dJv = np.asarray(dual.derivative(J.fn, p, v), dtype=float)
        G = dual.value(conn.fn(p)).astype(float)
        N = nijenhuis_tensor(J, p)
        aN, DN, bN = nb2.coefficients(x)
        for i in range(n):
            X = np.zeros(n)
            X[i] = 1.0
            jX = a @ X
            Xf, jXf = np.zeros(d), np.zeros(d)
            Xf[xsl], jXf[xsl] = X, jX
            dvX, dvjX = np.zeros(d), np.zeros(d)
            dvX[ysl], dvjX[ysl] = dsig @ X, dsig @ jX
            true = 0.5 * (dvX + Jp @ dvjX + dJv @ jXf)
            nab = lambda W, dW: dW + np.einsum("kij,i,j->k", G, W, v)
            mis = 0.5 * (nab(Xf, dvX) + Jp @ nab(jXf, dvjX)) + 0.25 * np.einsum("kij,i,j->k", N, v, Xf)
            cr = 0.5 * (dsig @ X + DN @ (dsig @ jX) + np.einsum("sij,j,i->s", bN, sig, jX))
            worst_full = max(worst_full, float(np.max(np.abs(mis - true))))
            worst_norm = max(worst_norm, float(np.max(np.abs(mis[ysl] - cr))))
    return {"mis_vs_true": worst_full, "normal_vs_nb2": worst_norm}
