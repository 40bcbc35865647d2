"""Tagged dual numbers for exact forward-mode derivatives.

Each seeding call draws a fresh tag, so nested differentiation (a derivative
taken inside a function that is itself being differentiated) never confuses
perturbations: a dual with a larger tag is always the outer wrapper and any
dual of smaller tag inside it behaves as a constant.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

_tags = itertools.count(1)


class Dual:
    """``re + du*eps`` with ``eps**2 = 0``; ``re``/``du`` may be nested duals."""

    __slots__ = ("re", "du", "tag")

    def __init__(self, re, du=0.0, tag=0):
        self.re = re
        self.du = du
        self.tag = tag

    def _split(self, other):
        # (a, da, b, db, tag) with both sides expressed relative to the outer tag
        if isinstance(other, Dual):
            if other.tag == self.tag:
                return self.re, self.du, other.re, other.du, self.tag
            if other.tag > self.tag:
                return self, 0.0, other.re, other.du, other.tag
        return self.re, self.du, other, 0.0, self.tag

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, da, b, db, t = self._split(other)
        return Dual(a + b, da + db, t)

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, da, b, db, t = self._split(other)
        return Dual(a - b, da - db, t)

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(other - self.re, -self.du, self.tag)

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, da, b, db, t = self._split(other)
        return Dual(a * b, a * db + da * b, t)

    def __rmul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(other * self.re, other * self.du, self.tag)

    def __truediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        a, da, b, db, t = self._split(other)
        return Dual(a / b, (da * b - a * db) / (b * b), t)

    def __rtruediv__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return Dual(other / self.re, -other * self.du / (self.re * self.re), self.tag)

    def __neg__(self):
        return Dual(-self.re, -self.du, self.tag)

    def __pos__(self):
        return self

    def __pow__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        if isinstance(other, Dual):
            return exp(other * log(self))
        if other == 0:
            return Dual(1.0 + 0.0 * self.re, 0.0 * self.du, self.tag)
        return Dual(self.re ** other, other * self.re ** (other - 1) * self.du, self.tag)

    def __rpow__(self, other):
        return exp(self * math.log(other))

    def __abs__(self):
        return -self if real_part(self) < 0 else self

    def _cmp(self, other):
        return real_part(self), real_part(other)

    def __lt__(self, other):
        a, b = self._cmp(other)
        return a < b

    def __le__(self, other):
        a, b = self._cmp(other)
        return a <= b

    def __gt__(self, other):
        a, b = self._cmp(other)
        return a > b

    def __ge__(self, other):
        a, b = self._cmp(other)
        return a >= b

    def __float__(self):
        return float(real_part(self))

    def __repr__(self):
        return f"Dual({self.re!r}, {self.du!r}, tag={self.tag})"


def real_part(x):
    """Strip every dual layer and return the underlying float."""
    while isinstance(x, Dual):
        x = x.re
    return x


def value(a):
    """Float array of primal values of a (possibly object) array."""
    arr = np.asarray(a)
    if arr.dtype != object:
        return arr.astype(float)
    return np.vectorize(real_part, otypes=[float])(arr)


def _lift(f, df):
    def fn(x):
        if isinstance(x, Dual):
            return Dual(fn(x.re), df(x.re) * x.du, x.tag)
        return f(x)

    fn.__name__ = f.__name__
    return fn


def _dsqrt(x):
    return 0.5 / sqrt(x)


sin = _lift(math.sin, lambda x: cos(x))
cos = _lift(math.cos, lambda x: -sin(x))
exp = _lift(math.exp, lambda x: exp(x))
log = _lift(math.log, lambda x: 1.0 / x)
sqrt = _lift(math.sqrt, _dsqrt)
tan = _lift(math.tan, lambda x: 1.0 / (cos(x) * cos(x)))
atan = _lift(math.atan, lambda x: 1.0 / (1.0 + x * x))
sinh = _lift(math.sinh, lambda x: cosh(x))
cosh = _lift(math.cosh, lambda x: sinh(x))


def fabs(x):
    return abs(x)


def seed(p, v):
    """Return ``p + eps*v`` under a fresh tag, plus the tag."""
    tag = next(_tags)
    pts = np.empty(len(p), dtype=object)
    for k, (pk, vk) in enumerate(zip(p, v)):
        pts[k] = Dual(pk, float(vk), tag)
    return pts, tag


def extract(result, tag):
    """Split a computed result into (value, derivative) for ``tag``."""
    arr = np.asarray(result, dtype=object)
    val = np.empty(arr.shape, dtype=object)
    der = np.empty(arr.shape, dtype=object)
    for idx, x in np.ndenumerate(arr):
        if isinstance(x, Dual) and x.tag == tag:
            val[idx], der[idx] = x.re, x.du
        else:
            val[idx], der[idx] = x, 0.0
    return _squeeze_numeric(val), _squeeze_numeric(der)


def _squeeze_numeric(arr):
    if all(not isinstance(x, Dual) for x in arr.flat):
        out = arr.astype(float)
        return out if out.shape else float(out)
    return arr if arr.shape else arr[()]


def derivative(f, p, v):
    """Exact directional derivative ``d/de f(p + e v)`` at ``e = 0``."""
    pts, tag = seed(p, v)
    return extract(f(pts), tag)[1]


def partials(f, p):
    """Array of all coordinate partials; the derivative index is appended last."""
    dim = len(p)
    cols = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        cols.append(np.asarray(derivative(f, p, e)))
    return np.stack(cols, axis=-1)
