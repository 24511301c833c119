"""Command-line entry point: configs in, reproducible CSV/JSON reports out.

Subcommands:

    functionals    rate functionals of a named function over an (n, alpha) grid
    verify-bounds  error-vs-bound suites (first/second order, holomorphic)
    optimality     lower-bound exponent fits from scalar spectral sweeps
    orders         empirical convergence-order fits per (t, alpha)
    sharpness      sharp-constant experiments (scalar sup, shift integrals)
    report         aggregate CSVs into a pass/fail summary by bound tag

Exit codes: 0 all pass, 1 any row failed or a fit missed its window,
2 usage errors.  Output ordering is deterministic regardless of --jobs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import functionals as fns
from . import opcalc, rates
from .cmfun import ScaledFamily, make_builtin, power_scale

USAGE_ERROR = 2
FAILURE = 1


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def write_csv(path: str, fieldnames, rows):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(fieldnames)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in fieldnames])
    finally:
        if path:
            out.close()


def write_json(path: str, rows):
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True, default=_fmt)
        fh.write("\n")


def _parse_list(text: str, cast=float):
    items = [x for x in text.split(",") if x.strip()]
    if not items:
        raise SystemExit(USAGE_ERROR)
    return [cast(x) for x in items]


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = json.load(fh)
    for key in ("scheme", "generator", "suite"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key, cast in (("t", float), ("n", int), ("alpha", float)):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = _parse_list(val, cast)
    return cfg


def _grids(cfg):
    ts = [float(x) for x in cfg.get("t", [1.0])]
    ns = [int(x) for x in cfg.get("n", [])]
    alphas = [float(x) for x in cfg.get("alpha", [1.0])]
    if not ns or any(n < 1 for n in ns) or any(t <= 0 for t in ts):
        print("error: need a nonempty positive n grid and positive t grid", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    return ts, ns, alphas


BOUND_FIELDS = ["scheme", "generator", "t", "n", "alpha", "vector_id",
                "error", "bound", "slack", "tag", "pass"]


def _run_grid(tasks, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(lambda f: f(), tasks))
    else:
        results = [f() for f in tasks]
    rows = [r for chunk in results for r in chunk]
    rows.sort(key=lambda r: (r["scheme"], r["generator"], r["t"], r["n"],
                             r["alpha"], r["vector_id"]))
    return rows


def cmd_functionals(args) -> int:
    cfg = _load_config(args)
    name = cfg.get("scheme") or args.g
    if not name:
        print("error: --g is required", file=sys.stderr)
        return USAGE_ERROR
    g = make_builtin(name)
    if isinstance(g, ScaledFamily):
        print("error: functionals needs a fixed function (give t)", file=sys.stderr)
        return USAGE_ERROR
    ns = _parse_list(args.n or "1", int)
    alphas = _parse_list(args.alpha or "0,0.5,1", float)
    rows = []
    for n in ns:
        gn = power_scale(g, n)
        L = fns.euler_power_L(n) if g.name == "euler" else (
            fns.functional_L(gn) if gn.measure is not None else math.nan)
        a = fns.a_of(gn) if math.isfinite(gn.moments[2]) else math.nan
        b = fns.b_of(gn) if math.isfinite(gn.moments[3]) else math.nan
        d0 = fns.d0_of(gn) if math.isfinite(gn.moments[4]) else math.nan
        try:
            d1 = fns.d1_of(gn) if math.isfinite(gn.moments[4]) and gn.tail_integrable else math.nan
        except fns.DivergentError:
            d1 = math.nan
        for alpha in alphas:
            qv = fns.c_alpha_quad(gn, alpha)
            exact = fns.euler_c_alpha_exact(n, alpha) if g.name == "euler" else math.nan
            rows.append({
                "g": g.name, "n": n, "alpha": alpha, "L": L, "a": a, "b": b,
                "c_alpha_quadrature": qv.value, "c_alpha_exact": exact,
                "d0": d0, "d1": d1, "residual_flags": qv.flag,
            })
    fields = ["g", "n", "alpha", "L", "a", "b", "c_alpha_quadrature",
              "c_alpha_exact", "d0", "d1", "residual_flags"]
    write_csv(args.out, fields, rows)
    if args.json and args.out:
        write_json(args.out + ".json", rows)
    return 0


def _suite_tasks(cfg, seed):
    scheme = cfg.get("scheme", "euler")
    gen = cfg.get("generator", "diag_imag:k=128")
    suite = cfg.get("suite", "first")
    g = make_builtin(scheme)
    A = opcalc.make_generator(gen)
    vectors = opcalc.test_vectors(A, seed=seed)
    Mc = opcalc.semigroup_constants(A)
    M0 = Mc.M[0]
    ts, ns, alphas = _grids(cfg)
    tasks = []
    for t in ts:
        for n in ns:
            if suite == "first":
                tasks.append(lambda t=t, n=n: [
                    r.row() for r in rates.first_order_bounds(g, A, t, n, alphas, vectors, M0)])
            elif suite == "nonb2":
                tasks.append(lambda t=t, n=n: [
                    r.row() for r in rates.non_b2_bounds(g, A, t, n, alphas, vectors, M0)])
            elif suite == "second":
                tasks.append(lambda t=t, n=n: [
                    r.row() for r in rates.second_order_bounds(g, A, t, n, vectors, M0)])
            elif suite == "holo":
                cfn = (lambda n, a: rates.euler_sharp_r(n, a)) if scheme == "euler" else None
                tasks.append(lambda t=t, n=n, cfn=cfn: [
                    r.row() for r in rates.holomorphic_bounds(g, A, t, n, alphas, vectors, Mc,
                                                              c_alpha_fn=cfn)])
            elif suite == "holo2":
                tasks.append(lambda t=t, n=n: [
                    r.row() for r in rates.holomorphic_second_order(g, A, t, n, alphas,
                                                                    vectors, Mc)])
            else:
                print(f"error: unknown suite {suite!r}", file=sys.stderr)
                raise SystemExit(USAGE_ERROR)
    return tasks


def cmd_verify_bounds(args) -> int:
    cfg = _load_config(args)
    tasks = _suite_tasks(cfg, args.seed)
    rows = _run_grid(tasks, args.jobs)
    write_csv(args.out, BOUND_FIELDS, rows)
    if args.json and args.out:
        write_json(args.out + ".json", rows)
    return FAILURE if any(not r["pass"] for r in rows) else 0


def cmd_optimality(args) -> int:
    cfg = _load_config(args)
    scheme = cfg.get("scheme", "euler")
    g = make_builtin(scheme)
    if isinstance(g, ScaledFamily):
        print("error: optimality needs a fixed function", file=sys.stderr)
        return USAGE_ERROR
    ts, ns, alphas = _grids(cfg)
    spectrum = cfg.get("spectrum", "imaginary")
    order = int(cfg.get("order", 1))
    rows = []
    bad = False
    for t in ts:
        for alpha in alphas:
            rep = rates.optimality_lower(g, alpha, t, ns, spectrum, order=order)
            tol = float(cfg.get("exponent_tol", 0.1))
            ok = rep["flag"] == "ok" and abs(rep["fitted_exponent"] - rep["expected_exponent"]) <= tol
            bad = bad or not ok
            rows.append({
                "scheme": scheme, "spectrum": spectrum, "t": t, "alpha": alpha,
                "order": order, "fitted_exponent": rep["fitted_exponent"],
                "expected_exponent": rep["expected_exponent"],
                "r_squared": rep["r_squared"], "flag": rep["flag"], "pass": ok,
            })
    fields = ["scheme", "spectrum", "t", "alpha", "order", "fitted_exponent",
              "expected_exponent", "r_squared", "flag", "pass"]
    write_csv(args.out, fields, rows)
    return FAILURE if bad else 0


def cmd_orders(args) -> int:
    cfg = _load_config(args)
    scheme = cfg.get("scheme", "euler")
    gen = cfg.get("generator", "diag_imag:k=128")
    g = make_builtin(scheme)
    A = opcalc.make_generator(gen)
    vectors = opcalc.test_vectors(A, seed=args.seed)
    ts, ns, alphas = _grids(cfg)
    rows = []
    for t in ts:
        points = []
        for n in ns:
            errs = rates._errors(g, A, t, n, vectors)
            points.append((n, max(errs)))
        fit = rates.fit_order(points)
        rows.append({
            "scheme": scheme, "generator": gen, "t": t,
            "slope": fit.slope, "intercept": fit.intercept,
            "r_squared": fit.r_squared, "used_points": fit.used_points,
            "flag": fit.flag,
        })
    fields = ["scheme", "generator", "t", "slope", "intercept", "r_squared",
              "used_points", "flag"]
    write_csv(args.out, fields, rows)
    return 0


def cmd_sharpness(args) -> int:
    ns = _parse_list(args.n or "4,16,64,256,1024", int)
    bad = False
    rows = []
    if args.which in ("euler", "both"):
        rep = rates.euler_scalar_sharpness(ns)
        for r in rep["rows"]:
            rows.append({"experiment": "euler-scalar", "n": r["n"], "value": r["sup"],
                         "scaled": r["n_sup"], "reference": rep["limit"], "pass": True})
    if args.which in ("shift", "both"):
        rep = rates.shift_second_order_sharpness([n for n in ns if n >= 2])
        for r in rep["rows"]:
            ok = abs(r["I2"]) <= r["I2_bound"] * (1 + 1e-9) + 1e-13
            bad = bad or not ok
            rows.append({"experiment": "shift-I1I2", "n": r["n"], "value": r["I1"],
                         "scaled": r["I1_scaled"], "reference": rep["target"], "pass": ok})
    fields = ["experiment", "n", "value", "scaled", "reference", "pass"]
    write_csv(args.out, fields, rows)
    return FAILURE if bad else 0


def cmd_report(args) -> int:
    summary = {}
    for path in args.inputs:
        with open(path) as fh:
            for row in csv.DictReader(fh):
                tag = row.get("tag") or row.get("experiment") or "untagged"
                ok = row.get("pass", "true") == "true"
                cell = summary.setdefault(tag, {"pass": 0, "fail": 0})
                cell["pass" if ok else "fail"] += 1
    rows = [{"tag": tag, "passed": c["pass"], "failed": c["fail"],
             "status": "ok" if c["fail"] == 0 else "FAIL"}
            for tag, c in sorted(summary.items())]
    write_csv(args.out, ["tag", "passed", "failed", "status"], rows)
    return FAILURE if any(r["failed"] for r in rows) else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmapprox",
                                description="semigroup approximation verification toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output CSV path (default: stdout)")
        sp.add_argument("--json", action="store_true", help="also write a JSON mirror")
        sp.add_argument("--jobs", type=int, default=0, help="parallel grid workers")
        sp.add_argument("--tol-rel", type=float, default=1e-9)
        sp.add_argument("--tol-abs", type=float, default=1e-13)
        sp.add_argument("--seed", type=lambda s: int(s, 0), default=opcalc.DEFAULT_SEED)
        sp.add_argument("--scheme")
        sp.add_argument("--generator")
        sp.add_argument("--suite")
        sp.add_argument("--t")
        sp.add_argument("--n")
        sp.add_argument("--alpha")

    sp = sub.add_parser("functionals", help="rate functionals over an (n, alpha) grid")
    common(sp)
    sp.add_argument("--g", help="function name, e.g. euler or kendall:t=0.5")
    sp.set_defaults(func=cmd_functionals)

    sp = sub.add_parser("verify-bounds", help="error-vs-bound suites")
    common(sp)
    sp.set_defaults(func=cmd_verify_bounds)

    sp = sub.add_parser("optimality", help="lower-bound exponent fits")
    common(sp)
    sp.set_defaults(func=cmd_optimality)

    sp = sub.add_parser("orders", help="convergence-order fits")
    common(sp)
    sp.set_defaults(func=cmd_orders)

    sp = sub.add_parser("sharpness", help="sharp-constant experiments")
    common(sp)
    sp.add_argument("--which", choices=("euler", "shift", "both"), default="both")
    sp.set_defaults(func=cmd_sharpness)

    sp = sub.add_parser("report", help="aggregate CSVs into a pass/fail summary")
    common(sp)
    sp.add_argument("inputs", nargs="+", help="CSV files to aggregate")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
