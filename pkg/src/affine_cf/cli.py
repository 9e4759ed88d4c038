"""Command-line front end.

Subcommands:
  eval      evaluate the CF series over a (t, u, x) grid
  compare   evaluate and report errors against the matching oracle
  tables    dump the exact-rational series coefficients c_(alpha, beta)
  triangle  print the term-counting triangle with row sums

Grid axes are given as "lo:hi:count" or a single number; multivariate u/x
axes are separated by ';'.  Output is CSV (default) or JSON, deterministic
row order regardless of worker scheduling.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np

from . import __version__
from .gensym import (
    BASELINE_REGISTRY,
    eval_generalized,
    heston_baseline,
    vasicek_baseline,
    zero_baseline,
)
from .oracle import (
    HestonParams,
    VasicekParams,
    levy_khintchine_cf,
    riccati_cf,
)
from .series_eval import eval_globalized, eval_local
from .symalg import coefficient_recursion, coefficients_to_jsonable, counting_triangle
from .symbols import AffineModel, load_model

FORMAT_HEADER = "# affine-cf v1"


class CliError(Exception):
    pass


def _parse_axis(spec: str) -> list:
    """'lo:hi:count' -> linspace; a bare number -> one-point axis."""
    parts = spec.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise CliError(f"bad axis spec {spec!r}; want 'lo:hi:count' or a number")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise CliError(f"axis count must be >= 1 in {spec!r}")
    return list(np.linspace(lo, hi, n))


def _parse_vector_spec(spec: str, dimension: int, name: str) -> list:
    """';'-separated per-coordinate axes -> list of d-vectors (cartesian)."""
    axes = [_parse_axis(s) for s in spec.split(";")]
    if len(axes) == 1 and dimension > 1:
        axes = axes + [[0.0]] * (dimension - 1)
    if len(axes) != dimension:
        raise CliError(
            f"{name} spec {spec!r} has {len(axes)} axes for dimension {dimension}"
        )
    return [list(v) for v in product(*axes)]


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _resolve_baseline(name: str, model: AffineModel):
    if name not in BASELINE_REGISTRY:
        raise CliError(
            f"unknown baseline {name!r}; available: {sorted(BASELINE_REGISTRY)}"
        )
    if name == "zero":
        return zero_baseline(model.dimension)
    if name == "vasicek":
        if model.dimension != 1:
            raise CliError("vasicek baseline requires a 1-d model")
        return vasicek_baseline(VasicekParams(
            a0=0.5 * model.a0[0][0], b0=model.b0[0], b1=model.b_slope[0][0]))
    # heston: extract the solvable diffusion core from a Heston-shaped model
    if model.dimension != 2:
        raise CliError("heston baseline requires a 2-d model")
    a_v = np.asarray(model.a_slope[1], float)
    s = float(np.sqrt(a_v[1, 1]))
    if s <= 0 or a_v[0, 0] != 1.0:
        raise CliError("model is not Heston-shaped (need a_slope[2] = "
                       "[[1, rho s],[rho s, s^2]])")
    rho = float(a_v[0, 1] / s)
    bs = np.asarray(model.b_slope, float)
    return heston_baseline(HestonParams(
        b00=model.b0[0], b10=model.b0[0], b11=bs[0, 1],
        b20=model.b0[1], b21=-bs[1, 1], s=s, rho=rho))


def _grid_rows(args, model: AffineModel):
    ts = _parse_axis(args.t)
    us = _parse_vector_spec(args.u, model.dimension, "--u")
    xs = _parse_vector_spec(args.x, model.dimension, "--x")
    points = list(product(ts, xs, us))  # t-major, then x, then u

    baseline = None
    if args.mode == "generalized":
        baseline = _resolve_baseline(args.baseline, model)

    def one(point):
        t, x, u = point
        try:
            if args.mode == "local":
                res = eval_local(model, x, u, t, args.k)
            elif args.mode == "global":
                res = eval_globalized(model, x, u, t, args.k, beta=args.beta)
            else:
                res = eval_generalized(model, baseline, x, u, t, args.k)
        except Exception as exc:  # surfaced per row, not fatal
            return point, None, f"{type(exc).__name__}: {exc}"
        return point, res, ""

    jobs = args.jobs or os.cpu_count() or 1
    if jobs > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, points))  # map preserves input order
    else:
        results = [one(p) for p in points]
    return results


def _oracle_for(model: AffineModel):
    slopes_zero = all(
        not np.any(np.asarray(m, float)) for m in model.a_slope
    ) and not np.any(np.asarray(model.b_slope, float)) and all(
        getattr(j, "total_mass", 0.0) == 0.0 for j in model.jumps[1:]
    )
    if slopes_zero:
        return "levy-khintchine", lambda x, u, t: levy_khintchine_cf(model, x, u, t)
    return "riccati-rk4", lambda x, u, t: riccati_cf(model, x, u, t).value


def _point_columns(point, res, reason, k):
    t, x, u = point
    row = {"t": t}
    for i, v in enumerate(x, 1):
        row[f"x{i}"] = v
    for i, v in enumerate(u, 1):
        row[f"u{i}"] = v
    if res is None:
        row.update(re=float("nan"), im=float("nan"),
                   abs=float("nan"), tail=float("nan"))
    else:
        row.update(re=res.value.real, im=res.value.imag,
                   abs=abs(res.value), tail=res.tail_estimate)
    row["K"] = k
    row["reason"] = reason
    return row


def cmd_eval(args) -> dict:
    model = load_model(args.model)
    rows = []
    for point, res, reason in _grid_rows(args, model):
        rows.append(_point_columns(point, res, reason, args.k))
    return {"command": "eval", "mode": args.mode, "k": args.k, "rows": rows}


def cmd_compare(args) -> dict:
    import statistics
    import time

    model = load_model(args.model)
    oracle_name, oracle = _oracle_for(model)
    t_series = time.perf_counter()
    computed = _grid_rows(args, model)
    t_series = time.perf_counter() - t_series

    rows = []
    rels = []
    t_oracle = time.perf_counter()
    for point, res, reason in computed:
        t, x, u = point
        row = _point_columns(point, res, reason, args.k)
        try:
            ref = oracle(x, u, t)
        except Exception as exc:
            row.update(oracle_re=float("nan"), oracle_im=float("nan"),
                       abs_err=float("nan"), rel_err=float("nan"))
            row["reason"] = (row["reason"] + "; " if row["reason"] else "") \
                + f"oracle {type(exc).__name__}: {exc}"
            rows.append(row)
            continue
        if res is None:
            row.update(oracle_re=ref.real, oracle_im=ref.imag,
                       abs_err=float("nan"), rel_err=float("nan"))
        else:
            err = abs(res.value - ref)
            rel = err / max(abs(ref), 1e-300)
            rels.append(rel)
            row.update(oracle_re=ref.real, oracle_im=ref.imag,
                       abs_err=err, rel_err=rel)
        rows.append(row)
    t_oracle = time.perf_counter() - t_oracle

    summary = {
        "oracle": oracle_name,
        "points": len(rows),
        "max_rel_err": max(rels) if rels else float("nan"),
        "median_rel_err": statistics.median(rels) if rels else float("nan"),
        "series_seconds": t_series,
        "oracle_seconds": t_oracle,
    }
    return {"command": "compare", "mode": args.mode, "k": args.k,
            "oracle": oracle_name, "rows": rows, "summary": summary}


def cmd_tables(args) -> dict:
    if args.k > args.max_k:
        raise CliError(f"--k {args.k} exceeds the configured cap {args.max_k}")
    rows = coefficient_recursion(args.dimension, args.k)
    return {"command": "tables", "dimension": args.dimension, "k": args.k,
            "coefficients": coefficients_to_jsonable(rows)}


def cmd_triangle(args) -> dict:
    if args.k > 20:
        raise CliError("triangle rows are capped at 20")
    tri = counting_triangle(args.k)
    rows = []
    import math

    for n, row in enumerate(tri.rows, start=1):
        rn = sum(row)
        rows.append({"n": n, "counts": row, "R": rn,
                     "R_over_factorial": rn / math.factorial(n),
                     "within_bound": rn <= math.factorial(n)})
    return {"command": "triangle", "rows": rows}


# ---------------------------------------------------------------------------
# Output formatting
# ---------------------------------------------------------------------------


def _write_csv(payload: dict, fh) -> None:
    fh.write(FORMAT_HEADER + "\n")
    cmd = payload["command"]
    if cmd in ("eval", "compare"):
        rows = payload["rows"]
        if not rows:
            return
        cols = list(rows[0].keys())
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([
                row[c] if isinstance(row[c], (str, int)) else _fmt(row[c])
                for c in cols
            ])
        if "summary" in payload:
            s = payload["summary"]
            fh.write(f"# max_rel_err {_fmt(s['max_rel_err'])}\n")
            fh.write(f"# median_rel_err {_fmt(s['median_rel_err'])}\n")
    elif cmd == "tables":
        writer = csv.writer(fh)
        writer.writerow(["k", "alpha", "beta", "num", "den"])
        for k, entries in payload["coefficients"].items():
            for e in entries:
                writer.writerow([k, e["alpha"], e["beta"], e["num"], e["den"]])
    else:  # triangle
        writer = csv.writer(fh)
        writer.writerow(["n", "counts", "R", "R_over_factorial", "within_bound"])
        for row in payload["rows"]:
            writer.writerow([row["n"], " ".join(map(str, row["counts"])),
                             row["R"], _fmt(row["R_over_factorial"]),
                             row["within_bound"]])


def _emit(payload: dict, args) -> None:
    buf = io.StringIO()
    if args.format == "json":
        json.dump({"version": FORMAT_HEADER.lstrip("# "), **payload}, buf,
                  indent=2, default=str)
        buf.write("\n")
    else:
        _write_csv(payload, buf)
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="affine-cf",
        description="Characteristic functions of affine processes via "
                    "symbol-calculus power series.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--model", required=True, help="model JSON path")
        sp.add_argument("--k", type=int, default=16, help="truncation order")
        sp.add_argument("--t", default="0.5", help="time axis 'lo:hi:n' or value")
        sp.add_argument("--u", default="1.0",
                        help="frequency axes, ';'-separated per coordinate")
        sp.add_argument("--x", default="0.0",
                        help="state axes, ';'-separated per coordinate")
        sp.add_argument("--mode", choices=("local", "global", "generalized"),
                        default="local")
        sp.add_argument("--baseline", default="zero",
                        help="baseline name for generalized mode "
                             f"({sorted(BASELINE_REGISTRY)})")
        sp.add_argument("--beta", type=float, default=None,
                        help="time-transform scale override (global mode)")
        sp.add_argument("--jobs", type=int, default=None,
                        help="worker threads (default: cpu count)")
        add_output(sp)

    def add_output(sp):
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    add_common(sub.add_parser("eval", help="evaluate the CF over a grid"))
    add_common(sub.add_parser("compare", help="evaluate and compare to oracle"))

    sp = sub.add_parser("tables", help="dump exact series coefficients")
    sp.add_argument("--k", type=int, default=6, help="highest row")
    sp.add_argument("--dimension", type=int, default=1)
    sp.add_argument("--max-k", type=int, default=20, dest="max_k",
                    help="cap on the requested order")
    add_output(sp)

    sp = sub.add_parser("triangle", help="print the counting triangle")
    sp.add_argument("--k", type=int, default=8, help="number of rows")
    add_output(sp)
    return p


_DISPATCH = {
    "eval": cmd_eval,
    "compare": cmd_compare,
    "tables": cmd_tables,
    "triangle": cmd_triangle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = _DISPATCH[args.command](args)
    except (CliError, OSError, ValueError, KeyError, ZeroDivisionError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 2
    _emit(payload, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
