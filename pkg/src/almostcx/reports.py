"""Verification records and their text/document renderings.

The machine-readable document is flat key/value text, one ``[[check]]``
record per check; it happens to be valid TOML, so it can be read back with
any TOML parser.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

from .suites import Check, Context, checks_for


@dataclass
class CheckRecord:
    check_id: str
    anchor: str
    residual: float
    tolerance: float
    samples: int
    seed: int
    error: str = ""

    @property
    def passed(self) -> bool:
        return not self.error and self.residual < self.tolerance


@dataclass
class Report:
    command: str
    seed: int = 0
    records: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def add(self, check_id, anchor, residual, tolerance, samples=1, error=""):
        rec = CheckRecord(check_id, anchor, float(residual), float(tolerance), int(samples), self.seed, error)
        self.records.append(rec)
        return rec

    def failed(self) -> list:
        return [r.check_id for r in self.records if not r.passed]

    def to_text(self) -> str:
        lines = [f"{self.command}  seed={self.seed}  wall={self.wall_time:.2f}s"]
        for key, val in self.info.items():
            lines.append(f"  {key}: {_fmt(val)}")
        width = max((len(r.check_id) for r in self.records), default=10)
        for r in self.records:
            mark = "PASS" if r.passed else "FAIL"
            tail = f"  error: {r.error}" if r.error else ""
            lines.append(f"  [{mark}] {r.check_id:<{width}}  residual={r.residual:.3e}  tol={r.tolerance:.1e}"
                         f"  n={r.samples}{tail}")
        n_fail = len(self.failed())
        lines.append(f"{len(self.records) - n_fail}/{len(self.records)} checks passed")
        return "\n".join(lines)

    def to_document(self) -> str:
        out = [f"command = {_value(self.command)}", f"seed = {self.seed}",
               f"wall_time = {_value(self.wall_time)}", f"passed = {_value(self.passed)}"]
        if self.info:
            out.append("")
            out.append("[info]")
            out.extend(f"{_key(k)} = {_value(v)}" for k, v in self.info.items())
        for r in self.records:
            out.append("")
            out.append("[[check]]")
            for key, val in (("id", r.check_id), ("anchor", r.anchor), ("residual", r.residual),
                             ("tolerance", r.tolerance), ("passed", r.passed), ("samples", r.samples),
                             ("seed", r.seed), ("error", r.error)):
                out.append(f"{key} = {_value(val)}")
        return "\n".join(out) + "\n"


def _key(k: str) -> str:
    return k if k.replace("_", "").replace("-", "").isalnum() else json.dumps(k)


def _value(v) -> str:
    if hasattr(v, "item") and getattr(v, "ndim", 1) == 0:
        v = v.item()  # numpy scalar
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, complex):
        return f"[{_value(v.real)}, {_value(v.imag)}]"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    return json.dumps(str(v))


def _fmt(v) -> str:
    if hasattr(v, "item") and getattr(v, "ndim", 1) == 0:
        v = v.item()
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, complex):
        return f"{v.real:.6g}{v.imag:+.6g}i"
    return str(v)


def run_check(check: Check, report: Report, ctx: Context, tol_scale: float = 1.0) -> CheckRecord:
    try:
        residual, n = check.run(ctx)
        return report.add(check.id, check.anchor, residual, check.tolerance * tol_scale, n)
    except Exception as exc:  # a crashing check is a failing check
        return report.add(check.id, check.anchor, math.inf, check.tolerance * tol_scale, 0,
                          f"{type(exc).__name__}: {exc}")


def verify(suite: str, seed=0, tol_scale=1.0, mutate: str | None = None, samples=40) -> Report:
    """Run a suite (or ``all``); ``mutate`` names the one check to corrupt."""
    checks = sorted(checks_for(suite), key=lambda c: c.id)
    if mutate is not None and mutate not in {c.id for c in checks}:
        raise KeyError(f"unknown check {mutate!r} in suite {suite!r}")
    rep = Report(f"verify {suite}", seed)
    t0 = time.perf_counter()
    for c in checks:
        ctx = Context(seed=seed, mutate=(c.id == mutate), samples=samples)
        run_check(c, rep, ctx, tol_scale)
    rep.wall_time = time.perf_counter() - t0
    if mutate:
        rep.info["mutated"] = mutate
    return rep
