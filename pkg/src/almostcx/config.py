"""TOML config files for torus specs, marching data and structures.

Every scalar value may be a number or an expression string (see ``expr``).

Torus spec::

    [bundle]
    omega = [0.0, "2*pi"]      # real and imaginary part
    lambda = [1.0, 0.0]
    p = 0
    beta_re = "0.5 + 0.1*cos(2*pi*s1)"   # or beta = [re, im] / beta = "re"
    beta_im = "0"

Marching data::

    [initial]
    a1 = "-s"
    b1 = "s"
    [forcing]
    c1 = "0"
    [grid]
    s_min = -1.0
    s_max = 1.0
    n_s = 21

Structure (either a builtin or explicit matrix entries ``J[k][i] = J^k_i``)::

    [structure]
    builtin = "perturbed"        # ck_example | torus_model | perturbed | tangent_image | standard
    amplitude = 0.3
    seed = 5

    [structure]
    coordinates = ["x", "y", "s", "t"]
    bounds = [-0.5, 0.5]
    J = [["0", "-1", ...], ...]
"""

from __future__ import annotations

from pathlib import Path

import tomli

from .errors import InvalidSpecError
from .expr import ExprError, compile_expr, parse
from .geometry import AlmostComplexStructure, ChartDomain, field_from_components


class ConfigError(InvalidSpecError):
    """Malformed config file (maps to exit status 2)."""


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def constant(value, what="value") -> float:
    """A number, or an expression string without variables."""
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(compile_expr(parse(value, ()), ())(()))
        except ExprError as exc:
            raise ConfigError(f"{what}: {exc}") from exc
    raise ConfigError(f"{what}: expected a number or expression, got {type(value).__name__}")


def complex_pair(value, what) -> complex:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{what}: expected [re, im]")
    return complex(constant(value[0], what), constant(value[1], what))


def expression(value, names, what) -> str | float:
    """Validate an expression against the allowed variable names."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{what}: expected an expression string")
    try:
        parse(value, names)
    except ExprError as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    return value


def _table(doc: dict, name: str, path, required=True) -> dict:
    tab = doc.get(name)
    if tab is None:
        if required:
            raise ConfigError(f"{path}: missing [{name}] table")
        return {}
    if not isinstance(tab, dict):
        raise ConfigError(f"{path}: [{name}] must be a table")
    return tab


def _unknown(tab: dict, allowed, where):
    extra = set(tab) - set(allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def load_bundle_spec(path):
    from .torus import TORUS_COORDS, EllipticBundleSpec

    tab = _table(read_toml(path), "bundle", path)
    _unknown(tab, ("omega", "lambda", "p", "beta", "beta_re", "beta_im", "name"), f"{path} [bundle]")
    if "beta" in tab:
        if "beta_re" in tab or "beta_im" in tab:
            raise ConfigError(f"{path}: give either beta or beta_re/beta_im")
        beta = tab["beta"]
        re_, im_ = (beta if isinstance(beta, list) and len(beta) == 2 else (beta, 0.0))
        tab = dict(tab, beta_re=re_, beta_im=im_)
    for key in ("omega", "lambda"):
        if key not in tab:
            raise ConfigError(f"{path}: missing key {key!r}")
    p = tab.get("p", 0)
    if not isinstance(p, int) or isinstance(p, bool):
        raise ConfigError(f"{path}: p must be an integer")
    try:
        return EllipticBundleSpec(
            omega=complex_pair(tab["omega"], "omega"),
            lam=complex_pair(tab["lambda"], "lambda"),
            p=p,
            beta_re=expression(tab.get("beta_re", 0.0), TORUS_COORDS, "beta_re"),
            beta_im=expression(tab.get("beta_im", 0.0), TORUS_COORDS, "beta_im"),
            name=str(tab.get("name", Path(path).stem)),
        )
    except ConfigError:
        raise
    except InvalidSpecError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_ck_init(path, **overrides):
    from .generator import CKInitialData

    doc = read_toml(path)
    init = _table(doc, "initial", path)
    forcing = _table(doc, "forcing", path, required=False)
    grid = _table(doc, "grid", path, required=False)
    _unknown(init, ("a1", "a2", "b1", "b2"), f"{path} [initial]")
    _unknown(forcing, ("c1", "c2", "x", "y"), f"{path} [forcing]")
    _unknown(grid, ("s_min", "s_max", "n_s", "t_max", "step", "bound"), f"{path} [grid]")
    kw = {k: expression(init.get(k, 0.0), ("s",), k) for k in ("a1", "a2", "b1", "b2")}
    kw.update({k: expression(forcing.get(k, 0.0), ("x", "y"), k) for k in ("c1", "c2")})
    kw["base_point"] = (constant(forcing.get("x", 0.0), "x"), constant(forcing.get("y", 0.0), "y"))
    kw["s_range"] = (constant(grid.get("s_min", -1.0), "s_min"), constant(grid.get("s_max", 1.0), "s_max"))
    if "n_s" in grid:
        kw["n_s"] = int(grid["n_s"])
    for key in ("t_max", "step", "bound"):
        if key in grid:
            kw[key] = constant(grid[key], key)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return CKInitialData(**kw)
    except InvalidSpecError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


BUILTINS = ("ck_example", "torus_model", "perturbed", "tangent_image", "standard")


def builtin_structure(name: str, tab: dict | None = None) -> AlmostComplexStructure:
    from . import structures as st

    tab = tab or {}
    if name == "ck_example":
        return st.ck_example()
    if name == "torus_model":
        beta = (constant(tab.get("beta_re", 0.5), "beta_re"), constant(tab.get("beta_im", 0.0), "beta_im"))
        return st.torus_model(beta)
    if name == "perturbed":
        return st.perturb_standard(constant(tab.get("amplitude", 0.3), "amplitude"), int(tab.get("seed", 0)),
                                   st.default_chart())
    if name == "tangent_image":
        return st.tangent_image_structure()
    if name == "standard":
        return AlmostComplexStructure.standard(st.default_chart())
    raise ConfigError(f"unknown builtin structure {name!r}; choose from {', '.join(BUILTINS)}")


def load_structure(path) -> AlmostComplexStructure:
    tab = _table(read_toml(path), "structure", path)
    if "builtin" in tab:
        return builtin_structure(str(tab["builtin"]), tab)
    names = tab.get("coordinates")
    if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
        raise ConfigError(f"{path}: 'coordinates' must be a list of names")
    dim = len(names)
    lo, hi = tab.get("bounds", [-0.5, 0.5])
    try:
        domain = ChartDomain.box(names, constant(lo, "bounds"), constant(hi, "bounds"))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    rows = tab.get("J")
    if not isinstance(rows, list) or len(rows) != dim or any(not isinstance(r, list) or len(r) != dim for r in rows):
        raise ConfigError(f"{path}: 'J' must be a {dim}x{dim} array")
    comps = [[expression(v, names, f"J[{k}][{i}]") for i, v in enumerate(r)] for k, r in enumerate(rows)]
    F = field_from_components(comps, domain, name=Path(path).stem)
    try:
        return AlmostComplexStructure(F.fn, domain, guard=F.guard, name=F.name,
                                      margin=float(tab.get("guard_margin", 0.05)))
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc
