"""Command-line entry point: ``needle-lab {prob,simulate,sweep,verify,thresholds}``.

Single results are printed as one JSON object on stdout, sweeps as CSV.
Exit status is 0 on success, 1 when ``verify`` finds a failing check and 2
on bad arguments.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from contextlib import nullcontext

import numpy as np

from . import analytic
from .core import Embedding, GridCell, Needle, NeedleLabError, Spherocylinder, validate_and_canonicalize
from .landscape import AspectSweepSpec, find_lambda_thresholds, psi_marginal_oracle, sweep_aspect, sweep_length
from .montecarlo import RngSpec, default_threads, estimate
from .quadrature import QuadratureSettings

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

ALL_VARIANTS = analytic.VARIANTS + analytic.BNP_VARIANTS

# (a, b, sigma) cells checked by `verify` when no --grid-list is given
DEFAULT_VERIFY_GRID = [
    (4.0, 3.0, 0.5),
    (3.0, 3.0, 0.3),
    (1.0, 1.0, 0.1),
    (6.0, 2.0, 0.4),
    (2.5, 1.0, 0.2),
]


class UsageError(Exception):
    pass


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _float_list(text: str) -> list[float]:
    """``"0.25,0.5"`` or ``"start:stop:step"`` (inclusive stop)."""
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("step must be > 0")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    return [_float(v) for v in text.split(",") if v.strip()]


def _settings(args) -> QuadratureSettings:
    return QuadratureSettings(n_unit=args.quad_nunit, epsilon=args.quad_eps)


def _finite(obj):
    # strict JSON has no Infinity; spell it the way the flags do
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_finite(obj), allow_nan=False)


def _add_shape_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--variant", required=True, choices=ALL_VARIANTS)
    p.add_argument("--l", type=_float, required=True, help="rod length")
    p.add_argument("--sigma", type=_float, default=None, help="spherocylinder diameter")
    p.add_argument("--a", type=_float, default=None, help="cell width; 'inf' selects the single line family")
    p.add_argument("--b", type=_float, required=True, help="cell height")
    p.add_argument("--quad-eps", type=_float, default=1e-9)
    p.add_argument("--quad-nunit", type=int, default=10_000)


def _resolve(args):
    """Validated (variant parts, l, sigma, a, b) from shape flags."""
    emb, is_sc, bnp = analytic.variant_parts(args.variant)
    if is_sc and args.sigma is None:
        raise UsageError(f"--sigma is required for {args.variant}")
    if not is_sc and args.sigma not in (None, 0.0):
        raise UsageError(f"--sigma is not used by {args.variant}")
    a = math.inf if bnp else args.a
    if a is None:
        raise UsageError("--a is required (use --a inf for a single line family)")
    sigma = args.sigma if is_sc else 0.0
    if not math.isinf(a):
        validate_and_canonicalize(a, args.b, Spherocylinder(args.l, sigma) if is_sc else Needle(args.l))
    return emb, is_sc, args.l, sigma, a, args.b


def cmd_prob(args) -> int:
    emb, is_sc, l, sigma, a, b = _resolve(args)
    settings = _settings(args)
    p = analytic.probability(args.variant, l, a, b, sigma, settings)
    out = {
        "p": p.value,
        "regime": p.regime.label if p.regime is not None else None,
        "inputs": {"variant": args.variant, "l": l, "sigma": sigma if is_sc else None, "a": a, "b": b},
        "quad_settings": {"n_unit": settings.n_unit, "epsilon": settings.epsilon,
                          "max_refinements": settings.max_refinements},
    }
    print(_dump(out))
    return EXIT_OK


def cmd_simulate(args) -> int:
    emb, is_sc, l, sigma, a, b = _resolve(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    shape = Spherocylinder(l, sigma) if is_sc else Needle(l)
    if math.isinf(a):
        grid = b
    else:
        grid, shape = validate_and_canonicalize(a, b, shape)
    res = estimate(shape, emb, grid, args.n, RngSpec(args.seed, args.stream), threads=args.threads)
    out = res.as_dict()
    out["inputs"] = {"variant": args.variant, "l": l, "sigma": sigma if is_sc else None, "a": a, "b": b}
    print(_dump(out))
    return EXIT_OK


def _write_csv(rows, with_mc: bool, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    header = ["abscissa", "p_analytic"] + (["p_mc", "std_err"] if with_mc else []) + ["regime"]
    w.writerow(header)
    for r in sorted(rows, key=lambda r: r.abscissa):
        rec = [repr(r.abscissa), repr(r.p)]
        if with_mc:
            rec += [repr(r.p_mc), repr(r.std_err)]
        rec.append(r.regime)
        w.writerow(rec)


def cmd_sweep(args) -> int:
    settings = _settings(args)
    emb, is_sc, bnp = analytic.variant_parts(args.variant)
    if bnp:
        raise UsageError("use --mode length --a-over-b inf for the single line family")
    if args.mode == "length":
        rows = sweep_length(args.variant, args.l_over_b, [args.a_over_b], args.sigma_over_b, args.b,
                            settings, threads=args.threads)
    else:
        spec = AspectSweepSpec(args.lam, args.sigma_l, args.t_min, args.t_max, args.t_steps, args.variant)
        rows = sweep_aspect(spec, settings, threads=args.threads)
    if args.with_mc:
        rows = [_with_mc(args, i, r, emb, is_sc) for i, r in enumerate(rows)]
    ctx = nullcontext(sys.stdout) if args.out == "-" else open(args.out, "w", encoding="utf-8", newline="")
    with ctx as fh:
        _write_csv(rows, bool(args.with_mc), fh)
    return EXIT_OK


def _with_mc(args, index, row, emb, is_sc):
    from dataclasses import replace

    if args.mode == "length":
        b = args.b
        l = row.abscissa * b
        a = math.inf if math.isinf(args.a_over_b) else args.a_over_b * b
        sigma = args.sigma_over_b * b if is_sc else 0.0
    else:
        # same l = 1 scaling as the analytic column
        l = 1.0
        a = math.sqrt(row.abscissa / args.lam)
        b = 1.0 / math.sqrt(args.lam * row.abscissa)
        sigma = args.sigma_l if is_sc else 0.0
    shape = Spherocylinder(l, sigma) if is_sc else Needle(l)
    if math.isinf(a):
        grid = b
    else:
        grid, shape = validate_and_canonicalize(a, b, shape)
    res = estimate(shape, emb, grid, args.with_mc, RngSpec(args.seed, index), threads=args.threads)
    return replace(row, p_mc=res.p_hat, std_err=res.std_err)


def _read_grid_list(path: str) -> list[tuple[float, float, float]]:
    cells = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].strip().startswith("#"):
                continue
            try:
                a, b, s = (float(v) for v in rec[:3])
            except ValueError:
                if not cells and rec[0].strip().lower() == "a":
                    continue  # header row
                raise UsageError(f"bad grid-list row {rec!r}")
            cells.append((a, b, s))
    if not cells:
        raise UsageError(f"no (a, b, sigma) rows in {path}")
    return cells


def run_verification(cells, settings: QuadratureSettings) -> list[dict]:
    """All verification checks over the given cells; one dict per check."""
    results = []

    def add(kind, label, diff, tol):
        results.append({"check": kind, "case": label, "diff": diff, "tol": tol, "passed": bool(diff <= tol)})

    for a, b, s in cells:
        grid, _ = validate_and_canonicalize(a, b, Needle(1.0))
        for variant in analytic.VARIANTS:
            sig = s if variant.endswith("-sc") else None
            rep = analytic.check_boundary_consistency(variant, grid, sig, settings)
            for c in rep.checks:
                add("boundary", f"{variant} a={grid.a} b={grid.b} sigma={rep.sigma} at {c.name}={c.length:.6g}",
                    c.diff, c.tol)
        for sig in (0.0, s):
            if sig >= grid.b:
                continue
            shape = Spherocylinder(1.0, sig) if sig else Needle(1.0)
            edges = [t for t in (grid.b - sig, grid.a - sig, math.hypot(grid.a - sig, grid.b - sig))]
            ls = [0.5 * edges[0], 0.5 * (edges[0] + edges[1]) if edges[1] > edges[0] else 1.01 * edges[0],
                  0.5 * (edges[1] + edges[2]), 1.5 * edges[2]]
            for l in ls:
                direct = analytic._prob_3d(l, sig, grid, settings).value
                oracle = psi_marginal_oracle(l, sig, grid, settings)
                add("psi-marginal", f"3d {'sc' if sig else 'needle'} l={l:.6g} a={grid.a} b={grid.b} sigma={sig}",
                    abs(direct - oracle), 1e-5)
        for variant in analytic.VARIANTS:
            emb, is_sc, _ = analytic.variant_parts(variant)
            sig = s if is_sc else 0.0
            if sig >= grid.b:
                continue
            for frac in (0.5, 2.0):
                l = frac * grid.b
                far = analytic.probability(variant, l, 1e6 * grid.b, grid.b, sig, settings).value
                shape = Spherocylinder(l, sig) if is_sc else Needle(l)
                lim = analytic.prob_bnp(shape, emb, grid.b, settings).value
                add("bnp-limit", f"{variant} l={l:.6g} b={grid.b} sigma={sig}", abs(far - lim), 1e-5)
    return results


def cmd_verify(args) -> int:
    cells = _read_grid_list(args.grid_list) if args.grid_list else DEFAULT_VERIFY_GRID
    results = run_verification(cells, _settings(args))
    n_fail = sum(not r["passed"] for r in results)
    table = io.StringIO()
    table.write(f"{'check':<13} {'status':<6} {'diff':>11} {'tol':>8}  case\n")
    for r in results:
        status = "ok" if r["passed"] else "FAIL"
        table.write(f"{r['check']:<13} {status:<6} {r['diff']:11.3e} {r['tol']:8.0e}  {r['case']}\n")
    table.write(f"{len(results) - n_fail}/{len(results)} checks passed\n")
    sys.stderr.write(table.getvalue())
    print(_dump({"passed": n_fail == 0, "n_checks": len(results), "n_failed": n_fail, "checks": results}))
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


def cmd_thresholds(args) -> int:
    if args.variant != "2d-needle":
        raise UsageError("thresholds are only available for --variant 2d-needle")
    th = find_lambda_thresholds(args.variant, _settings(args), tol=args.tol, t_max=args.t_max, t_steps=args.t_steps)
    print(_dump({
        "lambda1": th.lambda1,
        "lambda2": th.lambda2,
        "lambda3": th.lambda3,
        "tol": th.tol,
        "search_interval": list(th.search_interval),
        "t_max": args.t_max,
        "t_steps": args.t_steps,
    }))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="needle-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prob", help="closed-form intersection probability")
    _add_shape_args(p)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("simulate", help="Monte Carlo estimate")
    _add_shape_args(p)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="CSV sweep over l/b or a/b")
    p.add_argument("--mode", choices=("length", "aspect"), required=True)
    p.add_argument("--variant", choices=analytic.VARIANTS, required=True)
    p.add_argument("--a-over-b", type=_float, default=1.0)
    p.add_argument("--sigma-over-b", type=_float, default=0.0)
    p.add_argument("--b", type=_float, default=3.0)
    p.add_argument("--l-over-b", type=_float_list, default=_float_list("0.05:3:0.05"))
    p.add_argument("--lam", type=_float, default=1.0)
    p.add_argument("--sigma-l", type=_float, default=0.0)
    p.add_argument("--t-min", type=_float, default=1.0)
    p.add_argument("--t-max", type=_float, default=8.0)
    p.add_argument("--t-steps", type=int, default=2000)
    p.add_argument("--with-mc", type=int, default=0, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", default="-")
    p.add_argument("--quad-eps", type=_float, default=1e-9)
    p.add_argument("--quad-nunit", type=int, default=10_000)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="boundary, tilt-marginal and single-family limit checks")
    p.add_argument("--grid-list", default=None, help="CSV of a,b,sigma rows")
    p.add_argument("--quad-eps", type=_float, default=1e-9)
    p.add_argument("--quad-nunit", type=int, default=10_000)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("thresholds", help="lambda values where the minima of P(a/b) restructure")
    p.add_argument("--variant", default="2d-needle")
    p.add_argument("--tol", type=_float, default=1e-4)
    p.add_argument("--t-max", type=_float, default=8.0)
    p.add_argument("--t-steps", type=int, default=2000)
    p.add_argument("--quad-eps", type=_float, default=1e-9)
    p.add_argument("--quad-nunit", type=int, default=10_000)
    p.set_defaults(func=cmd_thresholds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = default_threads()
    try:
        return args.func(args)
    except (UsageError, NeedleLabError) as exc:
        sys.stderr.write(f"needle-lab {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
