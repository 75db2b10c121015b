"""
Command line front end: scans, bound checks, constructions and fits.

Usage::

    fermisea measure      --inline '{"type":"intervals","intervals":[[-1.5708,1.5708]]}'
    fermisea lambda       --sea half.json --a 0.1
    fermisea directions   --sea sea.json
    fermisea entropy-scan --sea half.json --L geom:64..512:8 --fit log --out scan.csv
    fermisea bound-scan   --sea sea.json --L 1..32 --quad-tol 1e-6
    fermisea construct    --family log_suppressed --L geom:8..512:13 --out exotic.json
    fermisea verify       --sea exotic.json --family log_suppressed --L 8..512:8
    fermisea fit          --rows scan.csv --model log

Exit codes: 0 ok, 2 spec error, 3 numeric failure, 4 budget exceeded,
5 verification failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bounds import fhm_bound_exact, fhm_bound_quadrature
from .constructor import (
    DEFAULT_A0,
    DEFAULT_K,
    DEFAULT_MARGIN,
    DEFAULT_SAFETY,
    FAMILIES,
    GrowthTarget,
    construct_for_target,
    verify_entropy_target,
)
from .errors import BudgetExceeded, DegenerateFit, FermiSeaError, SpecError, VerificationFailed
from .fermi_sea import FermiSea, classify_directions, lambda_measure, overlap
from .seaspec import dump_sea_spec, parse_sea_spec
from .spectrum import DEFAULT_CAP, entropy_of_state
from .symbol import SymbolCoefficients, coefficient_table, restricted_symbol, write_matrix_csv

log = logging.getLogger("fermisea")

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_NUMERIC = 3
EXIT_BUDGET = 4
EXIT_VERIFY = 5

CSV_HEADER = ["L", "dim", "entropy_nats", "trace_bound", "fhm_exact", "fhm_quadrature", "runtime_ms"]
MODELS = ("log", "area-log", "power")

DEFAULTS = {
    "dim": None,
    "L": "1..8",
    "quad_tol": None,
    "cap": DEFAULT_CAP,
    "workers": 1,
    "seed": 0,
    "out": None,
    "format": "csv",
    "timing": False,
}


def parse_L_spec(text: str) -> list[int]:
    """``"a..b[:step]"``, ``"geom:a..b:n"`` or a comma list ``"1,2,4"``."""
    text = str(text).strip()
    try:
        if text.startswith("geom:"):
            body = text[5:]
            rng, n = body.rsplit(":", 1)
            a, b = (int(v) for v in rng.split(".."))
            values = np.unique(np.rint(np.geomspace(a, b, int(n))).astype(int))
        elif ".." in text:
            rng, _, step = text.partition(":")
            a, b = (int(v) for v in rng.split(".."))
            values = range(a, b + 1, int(step) if step else 1)
        else:
            values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise SpecError(1, f"bad L specification {text!r}: {exc}") from exc
    out = sorted({int(v) for v in values})
    if not out or out[0] < 1:
        raise SpecError(1, f"L specification {text!r} must give positive integers")
    return out


@dataclass
class RunConfig:
    command: str
    sea: FermiSea | None = None
    dim: int | None = None
    L_values: list = field(default_factory=list)
    quad_tol: float | None = None
    cap: int = DEFAULT_CAP
    workers: int = 1
    out: str | None = None
    format: str = "csv"
    seed: int = 0
    timing: bool = False

    def validate(self) -> None:
        if self.workers < 1:
            raise SpecError(1, "worker count must be >= 1")
        if self.sea is not None:
            d = self.sea.dim
            if self.dim is not None and self.dim != d:
                raise SpecError(1, f"--dim {self.dim} disagrees with the sea's dimension {d}")
            for L in self.L_values:
                if L < 1 or L ** d > self.cap:
                    raise SpecError(1, f"L = {L} gives matrix dimension {L ** d} beyond cap {self.cap}")


@dataclass
class ScanRow:
    L: int
    dim: int
    entropy_nats: float
    trace_bound: float
    fhm_exact: float
    fhm_quadrature: float | None = None
    runtime_ms: float | None = None
    error: str | None = None


@dataclass
class FitBlock:
    model: str
    coefficients: dict
    residual: float


@dataclass
class ScanResult:
    rows: list
    fit: FitBlock | None = None

    @property
    def failed(self) -> list:
        return [r for r in self.rows if r.error]


def _scan_row(sea: FermiSea, table: SymbolCoefficients, L: int, cap: int, quad: bool, timing: bool) -> ScanRow:
    t0 = time.perf_counter()
    try:
        rec = entropy_of_state(sea, L, table=table, cap=cap)
        exact = fhm_bound_exact(sea, L, table)
        fq = fhm_bound_quadrature(sea, L) if quad else None
    except FermiSeaError as exc:
        return ScanRow(L=L, dim=sea.dim, entropy_nats=math.nan, trace_bound=math.nan,
                       fhm_exact=math.nan, error=f"{type(exc).__name__}: {exc}")
    elapsed = (time.perf_counter() - t0) * 1e3 if timing else None
    return ScanRow(L=L, dim=sea.dim, entropy_nats=rec.entropy_nats, trace_bound=rec.trace_bound,
                   fhm_exact=exact, fhm_quadrature=fq, runtime_ms=elapsed)


def run_entropy_scan(cfg: RunConfig, quadrature: bool = False) -> ScanResult:
    """Rows for every requested L, ordered by L whatever the worker count."""
    cfg.validate()
    Ls = sorted(set(cfg.L_values))
    table = coefficient_table(cfg.sea, Ls[-1])
    if cfg.workers == 1:
        rows = [_scan_row(cfg.sea, table, L, cfg.cap, quadrature, cfg.timing) for L in Ls]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_scan_row, cfg.sea, table, L, cfg.cap, quadrature, cfg.timing) for L in Ls]
            rows = [f.result() for f in futures]
    rows.sort(key=lambda r: r.L)
    return ScanResult(rows=rows)


def fit_scaling(rows, model: str, dim: int | None = None) -> FitBlock:
    """Least squares fit of ``S_L`` against one of the scaling models.

    ``log``       S = a ln L + b
    ``area-log``  S = c L^(d-1) ln L + b
    ``power``     S = a L^beta (fit in log-log space)
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
    pts = [(float(r.L), float(r.entropy_nats), int(r.dim)) for r in rows if not getattr(r, "error", None)]
    if len(pts) < 3:
        raise DegenerateFit("need at least 3 rows")
    L = np.array([p[0] for p in pts])
    S = np.array([p[1] for p in pts])
    d = dim if dim is not None else pts[0][2]
    if model == "power":
        if np.any(S <= 0):
            raise DegenerateFit("power-law fit needs positive entropies")
        A = np.column_stack((np.log(L), np.ones_like(L)))
        y = np.log(S)
    elif model == "log":
        A = np.column_stack((np.log(L), np.ones_like(L)))
        y = S
    else:
        A = np.column_stack((L ** (d - 1) * np.log(L), np.ones_like(L)))
        y = S
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise DegenerateFit("design matrix is rank deficient")
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    if model == "power":
        coefficients = {"a": float(math.exp(coef[1])), "beta": float(coef[0])}
    elif model == "log":
        coefficients = {"a": float(coef[0]), "b": float(coef[1])}
    else:
        coefficients = {"c": float(coef[0]), "b": float(coef[1])}
    return FitBlock(model=model, coefficients=coefficients, residual=resid)


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def render_csv(result: ScanResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(result.rows, key=lambda r: r.L):
        writer.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def render_json(result: ScanResult) -> str:
    payload = {
        "rows": [{k: v for k, v in asdict(r).items() if not (k == "error" and v is None)}
                 for r in sorted(result.rows, key=lambda r: r.L)],
        "fit": asdict(result.fit) if result.fit else None,
    }
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"


def emit_results(result: ScanResult, fmt: str = "csv", path=None) -> None:
    """Write rows as CSV or JSON; ``path=None`` writes to stdout."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    text = render_csv(result) if fmt == "csv" else render_json(result)
    if path is None:
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def load_scan(path) -> ScanResult:
    """Read back rows written by :func:`emit_results` (either format)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        payload = json.loads(text)
        rows = [ScanRow(**r) for r in payload["rows"]]
        fit = FitBlock(**payload["fit"]) if payload.get("fit") else None
        return ScanResult(rows=rows, fit=fit)
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(ScanRow(
            L=int(rec["L"]), dim=int(rec["dim"]),
            entropy_nats=float(rec["entropy_nats"]), trace_bound=float(rec["trace_bound"]),
            fhm_exact=float(rec["fhm_exact"]),
            fhm_quadrature=float(rec["fhm_quadrature"]) if rec["fhm_quadrature"] else None,
            runtime_ms=float(rec["runtime_ms"]) if rec["runtime_ms"] else None,
        ))
    return ScanResult(rows=rows)


# -- argument handling -------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, sea: bool = True) -> None:
    if sea:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--sea", metavar="FILE", help="sea specification file (JSON)")
        src.add_argument("--inline", metavar="JSON", help="sea specification given inline")
    p.add_argument("--dim", type=int, default=None, help="expected dimension of the sea")
    p.add_argument("--L", dest="L", default=None, help='"a..b[:step]", "geom:a..b:n" or "1,2,4"')
    p.add_argument("--quad-tol", dest="quad_tol", type=float, default=None)
    p.add_argument("--cap", type=int, default=None, help="largest matrix dimension to eigensolve")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--config", default=None, help="JSON config with the same keys as the flags")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--timing", action="store_true", default=None,
                   help="fill runtime_ms (makes output non-reproducible)")


def _add_target(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=FAMILIES, default="log_suppressed")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--table", default=None, help="CSV file of L,F_L pairs for the table family")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fermisea", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="Lebesgue measure of a sea")
    _add_common(p)
    p = sub.add_parser("lambda", help="Lambda_M(a) and overlap at one shift")
    _add_common(p)
    p.add_argument("--a", required=True, help="comma separated shift components")
    p = sub.add_parser("directions", help="relevant / irrelevant principal directions")
    _add_common(p)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-9)
    p = sub.add_parser("entropy-scan", help="S_L and trace bounds over an L range")
    _add_common(p)
    p.add_argument("--fit", choices=MODELS, default=None)
    p.add_argument("--dump-q", metavar="PATH", default=None,
                   help="also write Q_L of the largest L as CSV (re,im pairs per row)")
    p = sub.add_parser("bound-scan", help="kernel bound: coefficient identity vs quadrature")
    _add_common(p)
    p = sub.add_parser("construct", help="build an exotic sea for a growth target")
    _add_common(p, sea=False)
    _add_target(p)
    p.add_argument("--safety", type=float, default=DEFAULT_SAFETY)
    p.add_argument("--K", type=int, default=DEFAULT_K)
    p.add_argument("--a0", type=float, default=DEFAULT_A0)
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN)
    p.add_argument("--doublings", type=int, default=1)
    p = sub.add_parser("verify", help="entropy sweep of a sea against a growth target")
    _add_common(p)
    _add_target(p)
    p = sub.add_parser("fit", help="fit a scaling model to a saved scan")
    _add_common(p, sea=False)
    p.add_argument("--rows", required=True, help="CSV or JSON written by entropy-scan")
    p.add_argument("--model", choices=MODELS, default="log")
    return parser


def _merged(args: argparse.Namespace) -> dict:
    config = {}
    if getattr(args, "config", None):
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SpecError(exc.lineno, f"config: {exc.msg}") from exc
    merged = dict(DEFAULTS)
    merged.update({k.replace("-", "_"): v for k, v in config.items()})
    for key, value in vars(args).items():
        if value is not None:
            merged[key] = value
    return merged


def _load_sea(opts: dict) -> FermiSea:
    if opts.get("sea"):
        try:
            text = Path(opts["sea"]).read_text(encoding="utf-8")
        except OSError as exc:
            raise SpecError(1, f"cannot read {opts['sea']}: {exc}") from exc
        return parse_sea_spec(text)
    if opts.get("inline"):
        return parse_sea_spec(opts["inline"])
    raise SpecError(1, "give a sea with --sea FILE or --inline JSON")


def _config(command: str, opts: dict, sea: FermiSea | None) -> RunConfig:
    cfg = RunConfig(
        command=command, sea=sea, dim=opts.get("dim"), L_values=parse_L_spec(opts["L"]),
        quad_tol=opts.get("quad_tol"), cap=int(opts["cap"]), workers=int(opts["workers"]),
        out=opts.get("out"), format=opts["format"], seed=int(opts["seed"]), timing=bool(opts["timing"]),
    )
    cfg.validate()
    return cfg


def _target(opts: dict, d: int) -> GrowthTarget:
    table = ()
    if opts["family"] == "table":
        if not opts.get("table"):
            raise SpecError(1, "--table is required for the table family")
        with open(opts["table"], encoding="utf-8") as fh:
            table = tuple((int(r[0]), float(r[1])) for r in csv.reader(fh) if r and r[0].strip().isdigit())
    return GrowthTarget(opts["family"], d, alpha=opts["alpha"], scale=opts["scale"], table=table)


def _write_text(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def _run(args: argparse.Namespace) -> int:
    opts = _merged(args)
    cmd = args.command
    if cmd == "measure":
        sea = _load_sea(opts)
        print(repr(sea.measure()))
        return EXIT_OK
    if cmd == "lambda":
        sea = _load_sea(opts)
        a = [float(v) for v in opts["a"].split(",")]
        a = a[0] if sea.dim == 1 else a
        print(json.dumps({"lambda": lambda_measure(sea, a), "overlap": overlap(sea, a), "measure": sea.measure()}))
        return EXIT_OK
    if cmd == "directions":
        sea = _load_sea(opts)
        reports = classify_directions(sea, samples=opts["samples"], tol=opts["tol"])
        print(json.dumps([{"axis": r.axis + 1, "relevant": r.relevant, "max_lambda": r.max_lambda}
                          for r in reports], indent=2))
        return EXIT_OK
    if cmd in ("entropy-scan", "bound-scan"):
        sea = _load_sea(opts)
        cfg = _config(cmd, opts, sea)
        result = run_entropy_scan(cfg, quadrature=(cmd == "bound-scan"))
        if cmd == "entropy-scan" and opts.get("fit"):
            result.fit = fit_scaling(result.rows, opts["fit"], sea.dim)
            log.info("fit %s: %s residual %.3e", result.fit.model, result.fit.coefficients, result.fit.residual)
        if opts.get("dump_q"):
            write_matrix_csv(restricted_symbol(sea, max(cfg.L_values)), opts["dump_q"])
        emit_results(result, cfg.format, cfg.out)
        status = EXIT_OK
        for row in result.rows:
            if row.error:
                log.error("L=%d failed: %s", row.L, row.error)
                status = EXIT_NUMERIC
            elif row.entropy_nats < row.trace_bound - 1e-9:
                log.error("L=%d violates S_L >= Tr Q(1-Q)", row.L)
                status = EXIT_NUMERIC
            elif abs(row.fhm_exact - row.trace_bound) > 1e-10 * max(abs(row.trace_bound), 1e-300) + 1e-13:
                log.error("L=%d kernel identity broken: %r vs %r", row.L, row.fhm_exact, row.trace_bound)
                status = EXIT_NUMERIC
            elif cmd == "bound-scan":
                tol = cfg.quad_tol if cfg.quad_tol is not None else (1e-6 if sea.dim == 1 else 1e-4)
                scale = max(abs(row.fhm_exact), 1e-300)
                if abs(row.fhm_quadrature - row.fhm_exact) > tol * scale:
                    log.error("L=%d quadrature gap %.3e exceeds %.1e", row.L,
                              abs(row.fhm_quadrature - row.fhm_exact) / scale, tol)
                    status = EXIT_NUMERIC
        return status
    if cmd == "construct":
        target = _target(opts, 1)
        Ls = parse_L_spec(opts["L"] if opts["L"] != DEFAULTS["L"] else "geom:8..512:13")
        built = construct_for_target(target, Ls, safety=opts["safety"], K=opts["K"], a0=opts["a0"],
                                     margin=opts["margin"], max_doublings=opts["doublings"], cap=int(opts["cap"]))
        meta = dict(built.exotic.metadata)
        meta["L_star"] = built.report.L_star
        meta["doublings"] = built.doublings
        _write_text(dump_sea_spec(built.exotic.sea, meta), opts.get("out"))
        log.info("ladder counts %s, L_star %s", built.exotic.ladder.counts, built.report.L_star)
        return EXIT_OK if built.report.reached else EXIT_VERIFY
    if cmd == "verify":
        sea = _load_sea(opts)
        cfg = _config(cmd, opts, sea)
        report = verify_entropy_target(sea, _target(opts, sea.dim), cfg.L_values, cap=cfg.cap)
        payload = {"L_star": report.L_star, "rows": [asdict(r) for r in report.rows]}
        _write_text(json.dumps(payload, indent=2) + "\n", cfg.out)
        return EXIT_OK if report.reached else EXIT_VERIFY
    if cmd == "fit":
        result = load_scan(opts["rows"])
        fit = fit_scaling(result.rows, opts["model"], opts.get("dim"))
        _write_text(json.dumps(asdict(fit), indent=2) + "\n", opts.get("out"))
        return EXIT_OK
    raise AssertionError(cmd)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except SpecError as exc:
        log.error("spec error: %s", exc)
        return EXIT_SPEC
    except BudgetExceeded as exc:
        log.error("budget exceeded: %s", exc)
        return EXIT_BUDGET
    except VerificationFailed as exc:
        log.error("verification failed: %s", exc)
        return EXIT_VERIFY
    except (FermiSeaError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
