"""Command-line experiment harness.

``alr run <spec.json>`` validates an experiment document, dispatches it to
the owning module, caches the result by spec hash and writes CSV (and an
optional SVG plot).  ``alr recipes`` lists the bundled experiment
documents.

Optional ``tolerances`` in a document tighten the numerical gates:
``max_cond`` bounds the Galerkin condition number and ``self_convergence``
the relative change under grid doubling of conformal certificates.

Exit codes: 0 success, 2 validation error, 3 numerical gate failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from . import __version__
from .certificates import best_dual_nocore, dual_with_core, primal_radial, sandwich_check
from .conformal import NumericalGateError, PolynomialMap, dual_certificate
from .eccentric import EccentricConfig, TruncationError, galerkin_solve, primal_certificate
from .harmonics import EVEN
from .plasmon import SphericalPlasmonProblem, halfspace_plasmon_check, residual_root, sphere_flux_residual
from .radial import RadialConfig, SingularSystemError, SourceSpectrum, classify_resonance, energy

__all__ = ["SCHEMA", "CSV_COLUMNS", "ValidationError", "ExperimentSpec", "ResultRecord", "run", "main"]

SCHEMA = "alr-experiment/1"
CSV_COLUMNS = ("eta", "value", "term_coupling", "term_psi", "term_v", "residual_constraint", "verdict")
APPENDIX_COLUMNS = ("n", "l", "R", "epsilon", "residual", "expected")
KINDS = (
    "radial-solve",
    "sweep",
    "dual-cert",
    "primal-cert",
    "eccentric-cert",
    "eccentric-solve",
    "conformal-cert",
    "appendix-check",
    "sandwich",
)
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class ValidationError(ValueError):
    """Invalid experiment document; ``violations`` lists each failed precondition."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# ---------------------------------------------------------------- spec parsing


def _parse_source(d: dict) -> SourceSpectrum:
    if not isinstance(d, dict):
        raise ValidationError(["source must be an object"])
    if "power" in d:
        return SourceSpectrum.algebraic(float(d["power"]), int(d.get("K", 60)), float(d.get("even", 1.0)), float(d.get("odd", 0.0)))
    if "alpha" in d or "beta" in d:
        return SourceSpectrum(tuple(map(tuple, d.get("alpha", ()))), tuple(map(tuple, d.get("beta", ()))))
    raise ValidationError(["source needs either 'power' (with 'K') or explicit 'alpha'/'beta' pairs"])


def _parse_etas(spec) -> tuple[float, ...]:
    if spec is None:
        return ()
    if isinstance(spec, dict):
        a, b = spec["decades"]
        per = int(spec.get("per_decade", 1))
        n = int(round((b - a) * per))
        return tuple(10.0 ** (-(a + j / per)) for j in range(n + 1))
    return tuple(float(e) for e in spec)


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True)
class ExperimentSpec:
    """A validated, fully resolved experiment document."""

    kind: str
    name: str
    cases: tuple[dict, ...]
    source: dict
    etas: tuple[float, ...]
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        problems = []
        if d.get("schema") != SCHEMA:
            problems.append(f"schema must be '{SCHEMA}' (got {d.get('schema')!r})")
        kind = d.get("kind")
        if kind not in KINDS:
            problems.append(f"kind must be one of {', '.join(KINDS)} (got {kind!r})")
        if problems:
            raise ValidationError(problems)
        geometry = dict(d.get("geometry", {}))
        cases = tuple({**geometry, **c} for c in d.get("cases", [{}])) or (geometry,)
        try:
            etas = _parse_etas(d.get("eta"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError([f"eta grid is malformed: {exc}"]) from None
        spec = cls(kind, str(d.get("name", kind)), cases, dict(d.get("source", {})), etas, dict(d.get("tolerances", {})), dict(d.get("options", {})))
        spec.validate()
        return spec

    def resolved(self) -> dict:
        out = asdict(self)
        out["schema"] = SCHEMA
        out["cases"] = [dict(sorted(c.items())) for c in self.cases]
        out["etas"] = list(self.etas)
        return out

    @property
    def hash(self) -> str:
        blob = json.dumps({"spec": self.resolved(), "version": __version__}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def validate(self) -> None:
        problems = []
        if self.kind != "appendix-check":
            if not self.etas:
                problems.append("eta grid is empty: at least one loss value is required")
            if any(not (e > 0 and math.isfinite(e)) for e in self.etas):
                problems.append("every eta must be positive and finite")
            if any(b >= a for a, b in zip(self.etas, self.etas[1:])):
                problems.append("eta grid must be strictly decreasing")
            if self.kind == "sweep" and len(self.etas) < 2:
                problems.append("a sweep needs at least two eta values to classify")
            try:
                src = _parse_source(self.source)
                if src.is_empty():
                    problems.append("source spectrum is empty")
            except ValidationError as exc:
                problems.extend(exc.violations)
            except (TypeError, ValueError) as exc:
                problems.append(f"source: {exc}")
        if problems:
            raise ValidationError(problems)
        for case in self.cases:
            problems.extend(f"[{_label(case)}] {p}" if len(self.cases) > 1 else p for p in _case_problems(self.kind, case, self))
        if problems:
            raise ValidationError(problems)


def _label(case: dict) -> str:
    if "label" in case:
        return str(case["label"])
    keys = [k for k in ("R", "q", "core", "rho", "z0") if k in case]
    return "_".join(f"{k}{case[k]}" for k in keys) or "case"


def _case_problems(kind: str, g: dict, spec: ExperimentSpec) -> list[str]:
    """Domain preconditions of the owning module, phrased as violated conditions."""
    out = []
    try:
        if kind in ("radial-solve", "sweep", "dual-cert", "primal-cert", "sandwich"):
            R, q = float(g["R"]), float(g["q"])
            if not 1 < R < q:
                out.append(f"need 1 < R < q (got R={R}, q={q}): the source circle must lie outside the shell")
            core = bool(g.get("core", True))
            if kind == "primal-cert" and core and not q > R**1.5:
                out.append(f"q <= R^(3/2) = {R**1.5:.6g}: the source lies inside the critical radius, where bounded primal certificates do not exist")
        elif kind in ("eccentric-cert", "eccentric-solve"):
            cfg = _eccentric_config(g, spec, spec.etas[0])
            if kind == "eccentric-cert":
                adm = cfg.admissibility
                if not adm.q_over_R3[0]:
                    out.append(f"q <= R^3 = {cfg.R**3:.6g}: the source is not far enough out for the two-center construction")
                if not adm.eps_condition[0]:
                    lhs, rhs = adm.eps_condition[1:]
                    out.append(f"(|z0| + R^2/q)/rho^2 = {lhs:.6g} >= 1/R = {rhs:.6g}: the core is too far from concentric")
                if not adm.shift_condition[0]:
                    out.append("1 + |z0| > R: the shifted core circle crosses the shell boundary")
        elif kind == "conformal-cert":
            _polynomial_map(g)
        elif kind == "appendix-check":
            for n in g.get("dimensions", [3]):
                if int(n) < 2:
                    out.append(f"dimension {n} < 2")
    except KeyError as exc:
        out.append(f"missing geometry field {exc}")
    except (TypeError, ValueError) as exc:
        out.append(str(exc))
    return out


def _eccentric_config(g: dict, spec: ExperimentSpec, eta: float) -> EccentricConfig:
    return EccentricConfig(float(g["R"]), float(g["q"]), eta, _parse_source(spec.source), float(g.get("rho", 1.0)), _complex(g.get("z0", 0.0)))


def _polynomial_map(g: dict) -> PolynomialMap:
    coeffs = tuple(_complex(c) for c in g.get("map", []))
    return PolynomialMap(coeffs, float(g["R"]), float(g["q"]), float(g["s"]), None if g.get("Q") is None else float(g["Q"]))


# ---------------------------------------------------------------- execution


@dataclass
class Row:
    eta: float | None
    value: float
    term_coupling: float | None = None
    term_psi: float | None = None
    term_v: float | None = None
    residual_constraint: float | None = None
    verdict: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class ResultRecord:
    """Outcome of one experiment: rows per case, verdicts and the resolved spec."""

    spec_hash: str
    spec: dict
    cases: list[dict]
    wall_clock: float = 0.0
    cached: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1, default=_json_default)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(type(o))


def _point(kind: str, g: dict, source: dict, eta: float, options: dict, tolerances: dict) -> dict:
    """One grid point; module-level so that it can run in worker processes."""
    src = _parse_source(source)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if kind in ("radial-solve", "sweep"):
            rep = energy(RadialConfig(float(g["R"]), float(g["q"]), eta, src, bool(g.get("core", True))))
            return asdict(Row(eta, rep.E, residual_constraint=rep.identity_residual, extra={"tail_bound": rep.tail_bound, "max_cond": rep.max_cond}))
        if kind == "dual-cert":
            R, q, core = float(g["R"]), float(g["q"]), bool(g.get("core", True))
            if core:
                d = dual_with_core(R, q, eta, src)
            else:
                d = best_dual_nocore(R, q, eta, src)
            return asdict(Row(eta, d.J, *d.terms, d.constraint_residual, "conclusive" if d.conclusive else "inconclusive", {"k": d.k, "lam": d.lam}))
        if kind == "primal-cert":
            p = primal_radial(float(g["R"]), float(g["q"]), eta, src, bool(g.get("core", True)))
            return asdict(Row(eta, p.I, None, p.terms[0], p.terms[1], p.constraint_residual, "", {"k_star": p.k_star}))
        if kind == "sandwich":
            s = sandwich_check(RadialConfig(float(g["R"]), float(g["q"]), eta, src, bool(g.get("core", True))))
            return asdict(Row(eta, s.E, None, None, None, min(s.lower_margin, s.upper_margin), "ok" if s.ok else "violated", {"J": s.J, "I": s.I}))
        if kind == "eccentric-cert":
            cfg = EccentricConfig(float(g["R"]), float(g["q"]), eta, src, float(g.get("rho", 1.0)), _complex(g.get("z0", 0.0)))
            p = primal_certificate(cfg)
            return asdict(Row(eta, p.I, None, p.terms[0] + p.terms[1], p.terms[2], p.constraint_residual, "", {"k_star": p.k_star, "m_star": p.extra["m_star"]}))
        if kind == "eccentric-solve":
            cfg = EccentricConfig(float(g["R"]), float(g["q"]), eta, src, float(g.get("rho", 1.0)), _complex(g.get("z0", 0.0)))
            r = galerkin_solve(cfg, M=int(options.get("M", 40)), max_cond=float(tolerances.get("max_cond", 1e12)))
            return asdict(Row(eta, r.E, r.E_source, None, None, r.identity_residual, "", {"cond": r.cond, "M": r.M}))
        if kind == "conformal-cert":
            c = dual_certificate(
                _polynomial_map(g), src, eta, parity=options.get("parity", EVEN), tol=float(tolerances.get("self_convergence", 1e-6))
            )
            return asdict(Row(eta, c.J_lower, *c.terms, c.flux_residual, "", {"k": c.k, "lam": c.lam, "J_opt": c.J_opt, "self_convergence": c.self_convergence}))
    raise ValidationError([f"kind {kind!r} has no per-eta runner"])


def _appendix_rows(g: dict) -> list[dict]:
    rows = []
    eps = float(g.get("epsilon", -1.0))
    for n in g.get("dimensions", [2, 3]):
        for R in g.get("radii", [0.5, 1.0, 2.0]):
            for l in range(1, int(g.get("l_max", 10)) + 1):
                p = SphericalPlasmonProblem(int(n), l, float(R), eps)
                expected = -(int(n) - 2) * float(R) ** (l - 1) if eps == -1.0 else float("nan")
                rows.append({"n": int(n), "l": l, "R": float(R), "epsilon": eps, "residual": sphere_flux_residual(p), "expected": expected})
    return rows


def _summarize(kind: str, rows: list[dict]) -> str:
    if kind in ("sweep", "radial-solve", "eccentric-solve", "eccentric-cert", "primal-cert", "dual-cert", "conformal-cert") and len(rows) >= 2:
        v = classify_resonance([r["eta"] for r in rows], [r["value"] for r in rows])
        return v.verdict
    if kind == "sandwich":
        return "ok" if all(r["verdict"] == "ok" for r in rows) else "violated"
    return ""


def execute(spec: ExperimentSpec, jobs: int = 1) -> ResultRecord:
    """Run every case of ``spec``; grid points may run concurrently, output order is fixed."""
    t0 = time.perf_counter()
    cases = []
    for g in spec.cases:
        label = _label(g)
        if spec.kind == "appendix-check":
            table = _appendix_rows(g)
            extra = {}
            for n in g.get("dimensions", [2, 3]):
                rr = residual_root(int(n), 1)
                extra[f"root_n{n}_l1"] = {"root": rr.root, "closed_form": rr.closed_form, "reciprocal_value": rr.reciprocal_value}
            hs = {str(n): halfspace_plasmon_check(n, [1.0] * (n - 1)) for n in (2, 3, 5)}
            ok = all(abs(r["residual"] - r["expected"]) <= 1e-12 * max(1.0, abs(r["expected"])) for r in table)
            cases.append({"label": label, "rows": table, "verdict": "ok" if ok else "violated", "extra": {**extra, "halfspace": hs}})
            continue
        args = [(spec.kind, g, spec.source, eta, spec.options, spec.tolerances) for eta in spec.etas]
        if jobs > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                rows = list(ex.map(_point_star, args))
        else:
            rows = [_point(*a) for a in args]
        verdict = _summarize(spec.kind, rows)
        if spec.kind == "sweep":
            for r in rows:
                r["verdict"] = verdict
        cases.append({"label": label, "rows": rows, "verdict": verdict})
    return ResultRecord(spec.hash, spec.resolved(), cases, time.perf_counter() - t0)


def _point_star(a):
    return _point(*a)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return "%.17g" % x


def csv_text(kind: str, case: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = APPENDIX_COLUMNS if kind == "appendix-check" else CSV_COLUMNS
    w.writerow(cols)
    for r in case["rows"]:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def svg_plot(case: dict, title: str, width: int = 480, height: int = 360) -> str:
    """Log-log line plot of ``|value|`` against ``eta``; nonpositive values are marked hollow."""
    pts = [(r["eta"], r["value"]) for r in case["rows"] if r.get("eta") and r.get("value")]
    pad = 50
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">']
    out.append(f'<text x="{width / 2}" y="18" text-anchor="middle">{_xml(title)}</text>')
    if len(pts) >= 1:
        lx = [math.log10(e) for e, _ in pts]
        ly = [math.log10(abs(v)) for _, v in pts]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
        x1 = x1 if x1 > x0 else x0 + 1
        y1 = y1 if y1 > y0 else y0 + 1

        def X(v):
            return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

        def Y(v):
            return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

        out.append(f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#888"/>')
        path = " ".join(f"{'M' if i == 0 else 'L'}{X(a):.2f},{Y(b):.2f}" for i, (a, b) in enumerate(zip(lx, ly)))
        out.append(f'<path d="{path}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>')
        for (a, b), (_, v) in zip(zip(lx, ly), pts):
            fill = "#1f4e9c" if v > 0 else "none"
            out.append(f'<circle cx="{X(a):.2f}" cy="{Y(b):.2f}" r="3" fill="{fill}" stroke="#1f4e9c"/>')
        out.append(f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">log10 eta [{x0:.3g}, {x1:.3g}]</text>')
        out.append(f'<text x="14" y="{height / 2}" transform="rotate(-90 14 {height / 2})" text-anchor="middle">log10 |value| [{y0:.3g}, {y1:.3g}]</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xml(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def cache_dir() -> Path:
    env = os.environ.get("ALR_CACHE_DIR")
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "alr"


def run(spec_path: str | Path, out: str | Path = ".", use_cache: bool = True, svg: bool = False, jobs: int = 1) -> ResultRecord:
    """Validate, execute (or load from cache) and write outputs for one spec file."""
    spec = load_spec(spec_path)
    cdir = cache_dir()
    cfile = cdir / f"{spec.hash}.json"
    record = None
    if use_cache and cfile.exists():
        record = ResultRecord.from_json(cfile.read_text())
        record.cached = True
    if record is None:
        record = execute(spec, jobs)
        previous = cfile.read_text() if cfile.exists() else None
        if previous is not None and json.loads(previous)["cases"] != json.loads(record.to_json())["cases"]:
            warnings.warn(f"recomputed results differ from the cached record {cfile}", RuntimeWarning, stacklevel=2)
        cdir.mkdir(parents=True, exist_ok=True)
        cfile.write_text(record.to_json())
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for case in record.cases:
        stem = spec.name if len(record.cases) == 1 else f"{spec.name}__{case['label']}"
        (out / f"{stem}.csv").write_text(csv_text(spec.kind, case), encoding="utf-8")
        if svg and spec.kind != "appendix-check":
            (out / f"{stem}.svg").write_text(svg_plot(case, f"{spec.name} {case['label']}"), encoding="utf-8")
    (out / f"{spec.name}.record.json").write_text(record.to_json(), encoding="utf-8")
    return record


def recipes() -> dict[str, Path]:
    root = resources.files("alr") / "recipes"
    return {p.name[:-5]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")}


def load_spec(path: str | Path) -> ExperimentSpec:
    p = Path(path)
    if not p.exists():
        named = recipes().get(str(path).removesuffix(".json"))
        if named is None:
            raise ValidationError([f"no spec file or bundled recipe named {str(path)!r}"])
        p = named
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError([f"{p}: not valid JSON ({exc})"]) from None
    return ExperimentSpec.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="alr", description="Run lossy plasmonic resonance experiments.")
    parser.add_argument("--version", action="version", version=f"alr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    pr = sub.add_parser("run", help="run an experiment document")
    pr.add_argument("spec", help="path to a spec file or the name of a bundled recipe")
    pr.add_argument("--out", default=".", help="output directory (default: current)")
    pr.add_argument("--no-cache", action="store_true", help="recompute even if a cached record exists")
    pr.add_argument("--svg", action="store_true", help="also write a log-log SVG plot per case")
    pr.add_argument("--jobs", type=int, default=1, help="worker processes for the eta grid")
    sub.add_parser("recipes", help="list bundled experiment documents")
    args = parser.parse_args(argv)

    if args.command == "recipes":
        for name, path in recipes().items():
            doc = json.loads(path.read_text(encoding="utf-8"))
            print(f"{name:22s} {doc.get('kind', ''):16s} {doc.get('description', '')}")
        return EXIT_OK
    try:
        record = run(args.spec, args.out, use_cache=not args.no_cache, svg=args.svg, jobs=args.jobs)
    except ValidationError as exc:
        print("validation error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalGateError, SingularSystemError, TruncationError) as exc:
        print(f"numerical gate failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for case in record.cases:
        tag = " (cached)" if record.cached else ""
        print(f"{case['label']}: {len(case['rows'])} rows, verdict {case['verdict'] or '-'}{tag}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
