"""Builtin almost complex structures on 4-dimensional charts (x, y, s, t).

``z = x + iy`` is the base (curve) coordinate and ``w = s + it`` the fiber
coordinate; the curve ``L = {s = t = 0}`` is pseudoholomorphic for each of
these structures.
"""

from __future__ import annotations

import numpy as np

from . import dual
from .geometry import AlmostComplexStructure, ChartDomain, generic_inverse, standard_matrix

COORDS = ("x", "y", "s", "t")


def default_chart(lo=-0.5, hi=0.5) -> ChartDomain:
    return ChartDomain.box(COORDS, lo, hi)


def _matrix(cols):
    """Assemble a 4x4 matrix whose columns are ``J d_x, J d_y, J d_s, J d_t``."""
    arr = np.empty((4, 4), dtype=object)
    for i, col in enumerate(cols):
        for k, v in enumerate(col):
            arr[k, i] = v
    if not any(isinstance(x, dual.Dual) for x in arr.flat):
        arr = arr.astype(float)
    return arr


def coupled_structure_fn(coeffs):
    """``J d_x = a1 d_x + (1+a2) d_y + b1 d_s + b2 d_t``, ``J d_s = d_t``.

    ``coeffs(p) -> (a1, a2, b1, b2)``; the remaining columns follow from ``J^2 = -1``.
    """

    def fn(p):
        a1, a2, b1, b2 = coeffs(p)
        q = 1 + a2
        jx = (a1, q, b1, b2)
        jy = ((-1 - a1 * a1) / q, -a1, (b2 - a1 * b1) / q, (-b1 - a1 * b2) / q)
        return _matrix((jx, jy, (0.0, 0.0, 0.0, 1.0), (0.0, 0.0, -1.0, 0.0)))

    return fn


def closed_form_coeffs(p):
    """The explicit solution ``a1 = -b1 = -s/(1+t)``, ``a2 = -b2 = -t/(1+t)``."""
    s, t = p[2], p[3]
    a1 = -s / (1 + t)
    a2 = -t / (1 + t)
    return a1, a2, -a1, -a2


def ck_example(domain: ChartDomain | None = None, **kw) -> AlmostComplexStructure:
    """Four-dimensional example structure built from the closed-form solution."""
    domain = domain or default_chart()
    guard = lambda p: abs(float(dual.real_part(p[3])) + 1.0)
    return AlmostComplexStructure(coupled_structure_fn(closed_form_coeffs), domain, guard=guard,
                                  name="ck_example", **kw)


def torus_model_fn(beta):
    """Line-bundle model ``J d_x = d_y + s xi - t J xi`` with ``xi = 2 b1 d_t - 2 b2 d_s``.

    ``beta(p) -> (beta1, beta2)`` depends on ``(x, y)`` only.
    """

    def fn(p):
        b1, b2 = beta(p)
        s, t = p[2], p[3]
        jx = (0.0, 1.0, -2 * b2 * s + 2 * b1 * t, 2 * b1 * s + 2 * b2 * t)
        jy = (-1.0, 0.0, 2 * b1 * s + 2 * b2 * t, 2 * b2 * s - 2 * b1 * t)
        return _matrix((jx, jy, (0.0, 0.0, 0.0, 1.0), (0.0, 0.0, -1.0, 0.0)))

    return fn


def torus_model(beta=(0.5, 0.0), domain: ChartDomain | None = None, name="torus_model", **kw):
    """Model structure for ``beta`` given as a constant pair or a function of ``p``."""
    domain = domain or default_chart()
    if callable(beta):
        bfn = beta
    else:
        b = tuple(float(v) for v in beta)
        bfn = lambda p, b=b: b
    return AlmostComplexStructure(torus_model_fn(bfn), domain, name=name, **kw)


def wavy_beta(p):
    """A non-constant coefficient used across the tests."""
    x, y = p[0], p[1]
    return 0.5 + 0.2 * dual.sin(x + 0.3) * dual.cos(y), 0.1 + 0.15 * dual.cos(2 * x - y)


def tangent_image_structure(domain: ChartDomain | None = None, amp=0.4, **kw):
    """Upper-triangular structure ``[[J0, C], [0, J0]]`` whose Nijenhuis image lies in ``TL``.

    ``C = c1 K1 + c2 K2`` with ``K1, K2`` anticommuting with ``J0``; the
    fibers never feed back into the base, so the NB-II structure is flat.
    """
    domain = domain or default_chart()
    J0 = standard_matrix(2)
    K1 = np.array([[1.0, 0.0], [0.0, -1.0]])
    K2 = np.array([[0.0, 1.0], [1.0, 0.0]])

    def fn(p):
        x, y, s, t = p
        c1 = amp * (x * s + dual.sin(y) * t)
        c2 = amp * (y * s - x * x * t + 0.5 * s * t)
        C = c1 * K1 + c2 * K2
        top = np.concatenate([J0.astype(object), C], axis=1)
        bottom = np.concatenate([np.zeros((2, 2), dtype=object), J0.astype(object)], axis=1)
        M = np.concatenate([top, bottom], axis=0)
        if not any(isinstance(v, dual.Dual) for v in M.flat):
            M = M.astype(float)
        return M

    return AlmostComplexStructure(fn, domain, name="tangent_image", **kw)


def perturb_standard(amplitude: float, seed: int, domain: ChartDomain, base_dim: int | None = None):
    """``J = S J_std S^{-1}`` with ``S = 1 + amplitude K(p)``, ``K`` random quadratic.

    Conjugation keeps ``J^2 = -1`` exactly. Both off-diagonal blocks of ``K``
    are multiplied by a linear fiber coordinate, so along ``L = {fiber = 0}``
    (first ``base_dim`` coordinates free) ``J`` is block diagonal: ``L`` is PH
    and the fiber directions are J-invariant.
    """
    dim = domain.dim
    base_dim = dim // 2 if base_dim is None else base_dim
    rng = np.random.default_rng(seed)
    c0 = rng.normal(size=(dim, dim)) / dim
    c1 = rng.normal(size=(dim, dim, dim)) / dim
    c2 = rng.normal(size=(dim, dim, dim)) * 0.5 / dim
    Jstd = standard_matrix(dim)
    if amplitude == 0:
        return AlmostComplexStructure(lambda p: Jstd.copy(), domain, name="perturbed(0)", validate=False)

    def fn(p):
        p = np.asarray(p)
        K = c0 + np.einsum("abk,k->ab", c1, p) + np.einsum("abk,k->ab", c2, p * p)
        if base_dim < dim:
            fiber = p[base_dim] + 0.5 * p[dim - 1]
            K = K.astype(object)
            K[base_dim:, :base_dim] = K[base_dim:, :base_dim] * fiber
            K[:base_dim, base_dim:] = K[:base_dim, base_dim:] * fiber
        S = np.eye(dim) + amplitude * K
        if S.dtype != object:
            return S @ Jstd @ np.linalg.inv(S)
        return S @ Jstd @ generic_inverse(S)

    return AlmostComplexStructure(fn, domain, name=f"perturbed({amplitude},{seed})")


def integrable_pullback(domain: ChartDomain | None = None, amp=0.2, **kw):
    """Integrable, non-constant: ``J = dphi^{-1} J_std dphi`` for the map

    ``phi = (x + a sin y, y + a x^2, s + a s t, t + a sin x)``.
    """
    domain = domain or default_chart()
    Jstd = standard_matrix(4)

    def fn(p):
        x, y, s, t = p
        zero = 0.0 * x
        one = zero + 1.0
        dphi = np.array([[one, amp * dual.cos(y), zero, zero],
                         [2 * amp * x, one, zero, zero],
                         [zero, zero, one + amp * t, amp * s],
                         [amp * dual.cos(x), zero, zero, one]], dtype=object)
        if not any(isinstance(v, dual.Dual) for v in dphi.flat):
            dphi = dphi.astype(float)
            return np.linalg.solve(dphi, Jstd @ dphi)
        return generic_inverse(dphi) @ Jstd @ dphi

    return AlmostComplexStructure(fn, domain, name="integrable_pullback", **kw)
