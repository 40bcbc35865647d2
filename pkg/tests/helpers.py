"""Shared fixtures-as-functions for the test modules."""

import numpy as np

from almostcx import connections as C
from almostcx import structures as S
from almostcx.bundles import SplitChart
from almostcx.geometry import AlmostComplexStructure, VectorField

DOM = S.default_chart()
CHART = SplitChart(DOM, 2)


def builtins():
    return [
        AlmostComplexStructure.standard(DOM),
        S.ck_example(),
        S.torus_model(S.wavy_beta),
        S.perturb_standard(0.3, 5, DOM),
        S.tangent_image_structure(),
    ]


def random_connection(seed, scale=0.3, domain=DOM):
    """Polynomial (degree 2) Christoffel symbols with random coefficients."""
    d = domain.dim
    rng = np.random.default_rng(seed)
    c0 = rng.normal(size=(d, d, d)) * scale
    c1 = rng.normal(size=(d, d, d, d)) * scale
    c2 = rng.normal(size=(d, d, d, d)) * scale

    def fn(p):
        p = np.asarray(p)
        return c0 + np.einsum("kijh,h->kij", c1, p) + np.einsum("kijh,h->kij", c2, p * p)

    return C.ConnectionField(fn, domain, name=f"rand{seed}")


def coord(i, domain=DOM):
    e = np.zeros(domain.dim)
    e[i] = 1.0
    return VectorField.constant(e, domain)


def poly_field(seed, domain=DOM):
    d = domain.dim
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=d), rng.normal(size=(d, d)) * 0.5
    return VectorField(lambda p: a + b @ p + 0.3 * p[0] * p[1], domain)
