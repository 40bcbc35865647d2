"""Command-line front end: ``almostcx verify|torus|gen|nf``.

Exit status: 0 when every check passes, 1 when any check fails, 2 for
configuration or parse errors.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np

from .config import ConfigError, load_bundle_spec, load_ck_init, load_structure
from .errors import GeometryError
from .expr import ExprError
from .reports import Report, verify
from .suites import REGISTRY, SUITES

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _emit(report: Report, args) -> int:
    print(report.to_text())
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_document())
    return EXIT_OK if report.passed else EXIT_FAIL


# --- verify ---------------------------------------------------------------------


def cmd_verify(args) -> int:
    if args.list:
        for c in sorted(REGISTRY, key=lambda c: c.id):
            if args.suite in ("all", c.suite):
                print(f"{c.id:<40} tol={c.tolerance:.0e}  {c.anchor}")
        return EXIT_OK
    try:
        rep = verify(args.suite, args.seed, args.tol_scale, args.mutate, args.samples)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    return _emit(rep, args)


# --- torus ----------------------------------------------------------------------


def cmd_torus(args) -> int:
    from . import torus as T

    spec = load_bundle_spec(args.spec)
    if args.grid < 2 or args.grid % 2:
        raise ConfigError("--grid must be an even integer >= 2")
    rep = Report(f"torus {args.spec}", args.seed)
    t0 = time.perf_counter()
    alpha, tau = T.alpha_constant(spec.omega, spec.lam)
    nm = T.normalize_modulus(spec.omega, spec.lam)
    rrt = T.rrt_criterion(spec, args.epsilon, grid=args.rrt_grid)
    rep.info.update({
        "omega": spec.omega, "lambda": spec.lam, "p": spec.p, "alpha": alpha, "tau": tau,
        "normalized_omega": nm.omega, "normalized_lambda": nm.lam,
        "rrt_holds": rrt.holds, "rrt_branch": rrt.branch, "rrt_worst_margin": rrt.worst_margin,
    })
    if spec.p != 0:
        rep.add("torus.p", "topologically trivial bundles only", math.inf, 0.5, 0,
                "p != 0 is not discretized")
        rep.wall_time = time.perf_counter() - t0
        return _emit(rep, args)
    sp = T.kernel_analysis(spec, args.grid, rel=args.rel)
    rep.info.update({"grid": args.grid, "kernel_dim": sp.kernel_dim, "cokernel_dim": sp.cokernel_dim,
                     "sigma_min": sp.sigma_min, "sigma_max": sp.sigma_max, "threshold": sp.threshold,
                     "refined_grid": sp.refined.grid, "refined_kernel_dim": sp.refined.kernel_dim})
    rep.add("torus.kernel-converged", "kernel dimension stable under grid refinement",
            abs(sp.kernel_dim - sp.refined.kernel_dim), 0.5, 2)
    rep.add("torus.index-balance", "index zero: kernel and cokernel dimensions agree",
            abs(sp.kernel_dim - sp.cokernel_dim), 0.5, 1)
    rep.add("torus.criterion-consistency", "criterion holds => trivial kernel",
            sp.kernel_dim if rrt.holds else 0, 0.5, 1)
    if args.sweep:
        sig = {}
        for n in sorted({max(4, (args.grid // 2) + (args.grid // 2) % 2), args.grid, sp.refined.grid}):
            r = T.kernel_analysis(spec, n, rel=args.rel, refine=False)
            # smallest singular value off the kernel
            sig[n] = float(np.min(r.singular_values[r.singular_values > r.threshold]))
            rep.info[f"sigma_gap_N{n}"] = sig[n]
        ref = sig[args.grid]
        drift = max(abs(v - ref) for v in sig.values()) / ref if ref > 0 else 0.0
        rep.add("torus.sigma-gap-stable", "smallest nonzero singular value stable across grids", drift, 0.1, len(sig))
    rep.wall_time = time.perf_counter() - t0
    return _emit(rep, args)


# --- gen ------------------------------------------------------------------------


def cmd_gen(args) -> int:
    from . import generator as GEN

    data = load_ck_init(args.init, t_max=args.t_max, step=args.step)
    rep = Report(f"gen ck {args.init}", args.seed)
    t0 = time.perf_counter()
    g = GEN.ck_march(data)
    err = g.max_error(GEN.closed_form_fields)
    rep.info.update({"t_max": data.t_max, "step": data.step, "n_s": data.n_s, "last_t": g.last_t,
                     "aborted": g.aborted, "pde_residual": g.residual, "closed_form_sup_error": err,
                     "caveat": g.caveat})
    rep.add("gen.completed", "marching reached t_max without blow-up", 0.0 if not g.aborted else math.inf, 0.5, 1)
    rep.add("gen.pde-residual", "grid residual of the marched system", g.residual, args.res_tol, g.t.size)
    use_cf = args.closed_form
    if use_cf is None:
        u0 = data.initial()
        use_cf = bool(np.allclose(u0, GEN.closed_form_fields(data.s, 0.0 * data.s), atol=1e-12)
                      and max(map(abs, data.forcing())) == 0.0)
    if use_cf:
        rep.add("gen.closed-form", "agreement with a1 = -b1 = -s/(1+t), a2 = -b2 = -t/(1+t)", err, 1e-4, g.t.size)
    J = g.structure()
    p = np.array([0.0, 0.0, 0.5 * (g.s[0] + g.s[-1]), 0.5 * g.last_t])
    cd = GEN.characteristic_distribution(J, p)
    rep.info.update({"square_residual": J.max_square_residual, "char_rank_mid": cd.rank})
    rep.add("gen.square", "generated structure squares to -1", J.max_square_residual, 1e-9, 40)
    rep.wall_time = time.perf_counter() - t0
    return _emit(rep, args)


# --- nf -------------------------------------------------------------------------


def _base_dim(text: str, names) -> int:
    text = text.strip()
    if text.isdigit():
        return int(text)
    parts = [t.strip() for t in text.split(",") if t.strip()]
    if tuple(parts) != tuple(names[:len(parts)]):
        raise ConfigError(f"--submanifold must list the leading coordinates of {list(names)}")
    return len(parts)


def cmd_nf(args) -> int:
    from . import bundles as B
    from . import jets as JT

    J = load_structure(args.structure)
    base = _base_dim(args.submanifold, J.domain.names)
    chart = B.SplitChart(J.domain, base)
    rep = Report(f"nf {args.structure}", args.seed)
    t0 = time.perf_counter()
    rng = np.random.default_rng(args.seed)
    nf = JT.normal_form_1jet(J, chart)
    xs = chart.sample_base(rng, args.samples, 0.1)
    worst_v = worst_k = worst_p = 0.0
    for x in xs:
        r = JT.prime_nijenhuis_residuals(nf, x)
        worst_v = max(worst_v, r["vertical"], r["tangent"])
        k = JT.vanishing_order(nf.prime.fn, chart, x, rng.normal(size=chart.fiber_dim))
        worst_k = max(worst_k, abs(k - 2.0) if math.isfinite(k) else 0.0)
        P = JT.p_tensor(J, nf.tilde(), chart, x)
        Jp = J.at(chart.point(x))
        worst_p = max(worst_p, JT.antilinearity_residual(P, Jp), JT.symmetry_relation_residual(P, Jp),
                      JT.tangent_argument_residuals(P, chart)["normal"])
    rep.add("nf.prime-vertical", "corrected structure: N vanishes with a vertical argument on L", worst_v, 1e-7, len(xs))
    rep.add("nf.square-order", "corrected structure squares to -1 to second order", worst_k, 0.1, len(xs))
    rep.add("nf.p-tensor", "P tensor relations", worst_p, 1e-9, len(xs))
    pn = JT.point_normal_form(J, chart.point(xs[0]))
    rep.add("nf.point-normal-form", "linear term -(1/4) J N at a point", pn.residual(), 1e-9, 1)
    rep.info.update({"base_dim": base, "fiber_dim": chart.fiber_dim,
                     "nijenhuis_norm_at_origin": float(np.max(np.abs(pn.nijenhuis)))})
    rep.wall_time = time.perf_counter() - t0
    return _emit(rep, args)


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="almostcx", description="Verify identities of almost complex structures.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="write the machine-readable report here")

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    v.add_argument("--mutate", metavar="CHECK_ID", help="corrupt one identity (testing aid)")
    v.add_argument("--samples", type=int, default=40, help="random points per structure")
    v.add_argument("--list", action="store_true", help="list checks and exit")
    common(v)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("torus", help="kernel analysis of a line bundle over a torus")
    t.add_argument("--spec", required=True)
    t.add_argument("--grid", type=int, default=16)
    t.add_argument("--sweep", action="store_true", help="also report sigma_min across grid sizes")
    t.add_argument("--epsilon", type=float, default=0.5)
    t.add_argument("--rrt-grid", type=int, default=64)
    t.add_argument("--rel", type=float, default=1e-8, help="relative SVD threshold")
    common(t)
    t.set_defaults(func=cmd_torus)

    g = sub.add_parser("gen", help="generate structures")
    gsub = g.add_subparsers(dest="kind", required=True)
    ck = gsub.add_parser("ck", help="march the fiber-constancy system in t")
    ck.add_argument("--init", required=True)
    ck.add_argument("--t-max", type=float)
    ck.add_argument("--step", type=float)
    ck.add_argument("--res-tol", type=float, default=1e-6)
    ck.add_argument("--closed-form", action=argparse.BooleanOptionalAction, default=None,
                    help="check against the closed-form solution (default: when the initial data match it)")
    common(ck)
    ck.set_defaults(func=cmd_gen)

    n = sub.add_parser("nf", help="normal-form diagnostics along a submanifold")
    n.add_argument("--structure", required=True)
    n.add_argument("--submanifold", required=True, help="number of leading coordinates, or their names")
    n.add_argument("--samples", type=int, default=3)
    common(n)
    n.set_defaults(func=cmd_nf)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ExprError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
