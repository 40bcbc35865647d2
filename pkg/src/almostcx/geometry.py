"""Charts, tensor-valued fields and the pointwise derivative engine.

Fields are immutable wrappers around a pointwise function ``p -> array``.
The function is written generically, so evaluating it on a dual-number point
yields exact directional derivatives. Coordinates come in complex pairs
``(x1, x2), (x3, x4), ...`` and the standard structure maps
``d/dx1 -> d/dx2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import dual
from .errors import CapabilityError, ChartError, ContractError, DomainError
from .expr import compile_expr, denominators, parse


@dataclass(frozen=True)
class Tolerances:
    alg: float = 1e-9
    fd: float = 1e-4
    guard: float = 0.05
    fd_step: float = 1e-5

    def scaled(self, k: float) -> "Tolerances":
        return Tolerances(self.alg * k, self.fd * k, self.guard, self.fd_step)


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class ChartDomain:
    dim: int
    bounds: tuple = None
    periodic: tuple = None
    names: tuple = None

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2:
            raise ChartError(f"chart dimension must be even and positive, got {self.dim}")
        bounds = self.bounds or tuple((-np.inf, np.inf) for _ in range(self.dim))
        periodic = self.periodic or tuple(False for _ in range(self.dim))
        names = self.names or tuple(f"x{k + 1}" for k in range(self.dim))
        if len(bounds) != self.dim or len(periodic) != self.dim or len(names) != self.dim:
            raise ChartError("bounds/periodic/names must have one entry per coordinate")
        for (lo, hi), per in zip(bounds, periodic):
            if not lo < hi:
                raise ChartError(f"empty coordinate interval ({lo}, {hi})")
            if per and not (np.isfinite(lo) and np.isfinite(hi)):
                raise ChartError("periodic coordinates need finite bounds")
        object.__setattr__(self, "bounds", tuple(tuple(map(float, b)) for b in bounds))
        object.__setattr__(self, "periodic", tuple(bool(x) for x in periodic))
        object.__setattr__(self, "names", tuple(names))

    @classmethod
    def box(cls, names: Sequence[str], lo=-1.0, hi=1.0, periodic=None):
        return cls(len(names), tuple((lo, hi) for _ in names), periodic, tuple(names))

    def locate(self, p):
        """Validate ``p`` (wrapping periodic coordinates); return it as an array."""
        p = np.asarray(p, dtype=object if _is_object(p) else float)
        if p.shape != (self.dim,):
            raise ChartError(f"point of shape {p.shape} on a {self.dim}-dim chart")
        out = p.copy()
        for k, ((lo, hi), per) in enumerate(zip(self.bounds, self.periodic)):
            v = dual.real_part(out[k])
            if per:
                shift = np.floor((v - lo) / (hi - lo)) * (hi - lo)
                if shift:
                    out[k] = out[k] - shift
            elif not lo <= v <= hi:
                raise DomainError(f"coordinate {self.names[k]}={v} outside [{lo}, {hi}]")
        return out

    def sample(self, rng: np.random.Generator, n: int, margin: float = 0.0, accept=None):
        """``n`` random interior points; ``accept`` filters (e.g. singularity guards)."""
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        lo = np.where(np.isfinite(lo), lo, -1.0)
        hi = np.where(np.isfinite(hi), hi, 1.0)
        width = hi - lo
        pts = []
        tries = 0
        while len(pts) < n:
            tries += 1
            if tries > 100 * n + 1000:
                raise DomainError("could not sample enough points away from singularities")
            q = lo + width * (margin + (1 - 2 * margin) * rng.random(self.dim))
            if accept is None or accept(q):
                pts.append(q)
        return np.array(pts)


def _is_object(p) -> bool:
    arr = np.asarray(p, dtype=object)
    return any(isinstance(x, dual.Dual) for x in arr.flat)


class Field:
    """Tensor-valued field: a generic pointwise function plus bookkeeping.

    ``exact`` marks a function that is safe to evaluate on dual numbers.
    ``guard`` (optional) returns the distance of a point to the nearest
    singularity of the backing expressions.
    """

    def __init__(self, fn: Callable, domain: ChartDomain, shape=None, exact=True, guard=None, name=""):
        self.fn = fn
        self.domain = domain
        self.shape = shape
        self.exact = exact
        self.guard = guard
        self.name = name

    def __call__(self, p):
        return self.fn(self.domain.locate(p))

    def at(self, p) -> np.ndarray:
        """Float components at a numeric point."""
        return dual.value(self(p))

    def guard_ok(self, p, margin: float) -> bool:
        return self.guard is None or self.guard(p) > margin

    def __repr__(self):
        return f"{type(self).__name__}({self.name or self.fn!r}, dim={self.domain.dim})"


class ScalarField(Field):
    """Real function on a chart, backed by an expression string or a callable."""

    def __init__(self, backing, domain: ChartDomain, exact=None, name=""):
        self.expression = None
        guard = None
        if isinstance(backing, str):
            ast = parse(backing, domain.names)
            fn = compile_expr(ast, domain.names)
            dens = [compile_expr(d, domain.names) for d in denominators(ast)]
            if dens:
                guard = lambda p, dens=dens: min(abs(float(dual.real_part(d(p)))) for d in dens)
            self.expression = ast
            exact = True
            name = name or backing
        elif callable(backing):
            fn = backing
            exact = bool(exact)
        else:
            const = float(backing)
            fn = lambda p, c=const: c
            exact = True
            name = name or str(const)
        super().__init__(fn, domain, (), exact, guard, name)


def _stack(entries, shape):
    arr = np.empty(len(entries), dtype=object)
    arr[:] = entries
    if not any(isinstance(x, dual.Dual) for x in entries):
        arr = arr.astype(float)
    return arr.reshape(shape)


def field_from_components(components, domain: ChartDomain, name="") -> Field:
    """Tensor field from a nested list of expression strings / scalar fields."""
    comp = np.array(components, dtype=object)
    scalars = [c if isinstance(c, ScalarField) else ScalarField(c if not isinstance(c, (int, float)) else float(c), domain)
               for c in comp.flat]
    fns = [s.fn for s in scalars]
    shape = comp.shape
    guards = [s.guard for s in scalars if s.guard is not None]

    def fn(p):
        return _stack([f(p) for f in fns], shape)

    guard = (lambda p: min(g(p) for g in guards)) if guards else None
    return Field(fn, domain, shape, all(s.exact for s in scalars), guard, name)


class VectorField(Field):
    def __init__(self, fn, domain: ChartDomain, exact=True, guard=None, name=""):
        super().__init__(fn, domain, (domain.dim,), exact, guard, name)

    @classmethod
    def from_components(cls, components, domain, name=""):
        f = field_from_components(components, domain, name)
        return cls(f.fn, domain, f.exact, f.guard, name)

    @classmethod
    def constant(cls, vec, domain, name=""):
        v = np.asarray(vec, dtype=float)
        return cls(lambda p, v=v: v.copy(), domain, name=name or f"const{list(v)}")


class Tensor21Field(Field):
    """Components ``T[k, i, j]`` of a vector-valued bilinear form ``T(d_i, d_j)``."""

    SYMMETRIES = ("none", "antisymmetric", "symmetric")

    def __init__(self, fn, domain: ChartDomain, symmetry="none", exact=True, name=""):
        if symmetry not in self.SYMMETRIES:
            raise ValueError(f"unknown symmetry tag {symmetry!r}")
        self.symmetry = symmetry
        super().__init__(fn, domain, (domain.dim,) * 3, exact, None, name)

    def check_symmetry(self, p, tol=1e-9) -> float:
        t = self.at(p)
        if self.symmetry == "antisymmetric":
            return float(np.max(np.abs(t + t.transpose(0, 2, 1))))
        if self.symmetry == "symmetric":
            return float(np.max(np.abs(t - t.transpose(0, 2, 1))))
        return 0.0


def standard_matrix(dim: int) -> np.ndarray:
    """Standard complex structure: 2x2 blocks [[0, -1], [1, 0]]."""
    J = np.zeros((dim, dim))
    for k in range(0, dim, 2):
        J[k + 1, k] = 1.0
        J[k, k + 1] = -1.0
    return J


class AlmostComplexStructure(Field):
    """Matrix field ``J[k, i] = J^k_i`` (column ``i`` is ``J d_i``) with ``J^2 = -1``.

    Construction samples the chart and rejects (never repairs) a field whose
    square misses ``-Id`` by more than ``tol``.
    """

    def __init__(self, fn, domain: ChartDomain, exact=True, guard=None, name="",
                 tol: float = DEFAULT_TOL.alg, samples: int = 200, seed: int = 0, margin: float = DEFAULT_TOL.guard,
                 validate: bool = True):
        super().__init__(fn, domain, (domain.dim, domain.dim), exact, guard, name)
        self.max_square_residual = None
        if validate:
            rng = np.random.default_rng(seed)
            pts = domain.sample(rng, samples, 0.01, accept=lambda q: self.guard_ok(q, margin))
            worst = max(square_residual(self.at(q)) for q in pts)
            self.max_square_residual = worst
            if worst > tol:
                raise ContractError(f"J^2 + Id residual {worst:.3e} exceeds {tol:.1e} for {name or 'structure'}")

    @classmethod
    def from_components(cls, components, domain, name="", **kw):
        f = field_from_components(components, domain, name)
        return cls(f.fn, domain, f.exact, f.guard, name, **kw)

    @classmethod
    def standard(cls, domain: ChartDomain):
        J = standard_matrix(domain.dim)
        return cls(lambda p: J.copy(), domain, name="J_std", validate=False)


def generic_inverse(M):
    """Gauss-Jordan inverse that also runs on dual-number matrices."""
    n = len(M)
    A = np.array(M, dtype=object)
    I = np.eye(n).astype(object)
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(float(dual.real_part(A[r, c]))))
        if piv != c:
            A[[c, piv]] = A[[piv, c]]
            I[[c, piv]] = I[[piv, c]]
        d = A[c, c]
        A[c] = A[c] / d
        I[c] = I[c] / d
        for r in range(n):
            if r != c:
                f = A[r, c]
                A[r] = A[r] - f * A[c]
                I[r] = I[r] - f * I[c]
    return I


def square_residual(J) -> float:
    J = np.asarray(J, dtype=float)
    return float(np.max(np.abs(J @ J + np.eye(len(J)))))


# --- derivative engine ------------------------------------------------------


@dataclass
class Derivative:
    value: np.ndarray
    method: str  # "dual" or "fd"
    meta: dict = field(default_factory=dict)


def eval_field(F: Field, p):
    """All components of ``F`` at ``p`` as floats."""
    return F.at(p)


def fd_derivative(fn, p, v, h: float = DEFAULT_TOL.fd_step):
    """Fourth-order central difference of ``fn`` along ``v``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    f = lambda t: dual.value(fn(p + t * v))
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def directional_derivative(F: Field, p, v, allow_fd: bool = False, h: float = DEFAULT_TOL.fd_step) -> Derivative:
    """Derivative of ``F`` at ``p`` along ``v``: exact via duals, else flagged FD."""
    p = F.domain.locate(p)
    if F.exact:
        return Derivative(np.asarray(dual.value(dual.derivative(F.fn, p, v))), "dual")
    if not allow_fd:
        raise CapabilityError(f"{F!r} is not dual-safe and finite differences were not permitted")
    return Derivative(fd_derivative(F.fn, p, v, h), "fd", {"step": h})


def jacobian(fn, p):
    """Partials of a generic pointwise function; derivative index last."""
    return dual.partials(fn, p)


def _same_chart(*fields):
    doms = {id(f.domain) for f in fields}
    if len(doms) > 1 and len({f.domain for f in fields}) > 1:
        raise ChartError("fields live on different charts")
    return fields[0].domain


def bracket_fn(X, Y):
    """Pointwise function for ``[X, Y]^k = X^i d_i Y^k - Y^i d_i X^k``."""
    fx = X.fn if isinstance(X, Field) else X
    fy = Y.fn if isinstance(Y, Field) else Y

    def fn(p):
        x, y = fx(p), fy(p)
        dY = dual.partials(fy, p)
        dX = dual.partials(fx, p)
        return dY @ x - dX @ y

    return fn


def lie_bracket(X: VectorField, Y: VectorField, p) -> np.ndarray:
    dom = _same_chart(X, Y)
    return dual.value(bracket_fn(X, Y)(dom.locate(p)))


def apply_matrix(J: Field, X) -> VectorField:
    """The vector field ``J X``."""
    fx = X.fn if isinstance(X, Field) else X
    return VectorField(lambda p: J.fn(p) @ fx(p), J.domain, name=f"J({getattr(X, 'name', '')})")
