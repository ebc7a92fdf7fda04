"""Command-line front end: ``chaos-swr <subcommand> ...``.

JSON is the canonical output; ``--format csv`` writes a flattened projection
of the same records.  Files are written atomically, and bound violations are
reported as data (exit status 0), never as failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bounds, coeff, montecarlo, oracle, samplers, two_sample
from .chaos import clean_values, eval_chaos_batch

SCHEME_CHOICES = ("swr", "iid", "coupled")


# --- argument types ----------------------------------------------------------


def _positive_float(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _even_int(s):
    v = int(s)
    if v < 2 or v % 2:
        raise argparse.ArgumentTypeError(f"expected an even integer >= 2, got {s}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {s}")
    return v


def _seed(s):
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _probability(s):
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {s}")
    return v


def _levels(s):
    try:
        vals = [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse levels {s!r}") from None
    if not vals or any(not 0 < v < 1 for v in vals):
        raise argparse.ArgumentTypeError("levels must be a comma-separated list in (0, 1)")
    return vals


# --- output -----------------------------------------------------------------


def _flatten(record, prefix=""):
    out = {}
    for k, v in record.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = " ".join(str(e) for e in v)
        else:
            out[key] = "" if v is None else v
    return out


def _render(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    records = payload.get("results", [])
    if isinstance(records, dict):
        records = [records]
    flat = [_flatten(r) for r in records]
    fields = []
    for r in flat:
        fields.extend(k for k in r if k not in fields)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in flat:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def write_atomic(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, command, results, extra=None):
    payload = {"command": command, "config": _config_dict(args), "results": results}
    if extra:
        payload.update(extra)
    write_atomic(_render(payload, args.format), args.out)


def _config_dict(args):
    skip = {"func", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# --- shared option groups ---------------------------------------------------


def _add_output(p):
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default json)")
    p.add_argument("--out", help="output file (default stdout); written atomically")


def _add_matrix_source(p, required=True):
    p.add_argument("--matrix", help="CSV file with an n x n coefficient matrix")
    p.add_argument("--ensemble", choices=coeff.ENSEMBLES, help="generate the matrix from a named ensemble")
    p.add_argument("--n", type=_even_int, help="matrix size for --ensemble")
    p.add_argument("--M", type=_positive_float, default=1.0, help="entry scale for --ensemble (default 1)")
    p.add_argument("--seed", type=_seed, default=0, help="seed (default 0)")


def _add_constants(p):
    p.add_argument("--kappa", type=_positive_float, default=bounds.BoundConstants.kappa,
                   help="Rademacher chaos constant (non-normative default 4)")
    p.add_argument("--c", type=_positive_float, default=bounds.BoundConstants.c,
                   help="threshold constant of the simplified bound (non-normative default 1)")
    p.add_argument("--C", type=_positive_float, default=bounds.BoundConstants.C,
                   help="probability constant of the simplified bound (non-normative default 8)")


def _add_delta(p):
    p.add_argument("--delta-policy", choices=("default", "optimized", "fixed"), default="default",
                   help="default: ceil(sqrt(2 n x)); optimized: scan all delta; fixed: use --delta")
    p.add_argument("--delta", type=_nonneg_int, help="delta for --delta-policy fixed")
    p.add_argument("--target-prob", type=float, default=1.0,
                   help="probability cap for --delta-policy optimized (default 1)")


def _matrix(args) -> coeff.CoefficientMatrix:
    if args.matrix:
        return coeff.load_matrix(args.matrix)
    if args.ensemble:
        if args.n is None:
            raise ValueError("--ensemble needs --n")
        return coeff.generate(args.ensemble, args.n, args.seed, args.M)
    raise ValueError("give a matrix with --matrix or --ensemble/--n")


def _constants(args) -> bounds.BoundConstants:
    return bounds.BoundConstants(kappa=args.kappa, c=args.c, C=args.C)


def load_constants(path, base: bounds.BoundConstants = bounds.BoundConstants()) -> bounds.BoundConstants:
    """Constants from JSON: a {"kappa", "c", "C"} mapping, a calibration report,
    a list of reports, or a ``calibrate`` command output."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "results" in data:
        data = data["results"]
    items = data if isinstance(data, list) else [data]
    values = asdict(base)
    for item in items:
        if "constant_name" in item:
            values[item["constant_name"]] = float(item["value"])
            if item["constant_name"] == "c" and "C" in item.get("details", {}):
                values["C"] = float(item["details"]["C"])
        else:
            values.update({k: float(item[k]) for k in ("kappa", "c", "C") if k in item})
    return bounds.BoundConstants(**values)


# --- subcommands ------------------------------------------------------------


def cmd_gen_matrix(args):
    A = coeff.generate(args.ensemble, args.n, args.seed, args.M)
    write_atomic(coeff.matrix_to_csv(A), args.out)


def cmd_bound(args):
    A = _matrix(args)
    k = _constants(args)
    results = []
    for x in args.x:
        d = bounds.select_delta(A, x, args.delta_policy, k.kappa, args.delta, args.target_prob)
        rep = bounds.term_breakdown(A, x, d, k.kappa, k.c).to_json()
        thr, prob = bounds.theorem1_bound(A.n, coeff.max_abs(A), x, k)
        rep["theorem1"] = {"threshold": thr, "probability": prob}
        rep["delta_policy"] = args.delta_policy
        results.append(rep)
    _emit(args, "bound", results, {"n": A.n, "sigma": coeff.sigma(A), "max_abs": coeff.max_abs(A)})


def cmd_compare(args):
    A = _matrix(args)
    rows = montecarlo.compare_bounds(
        A, args.x, delta_policy=args.delta_policy, constants=_constants(args), scheme=args.scheme,
        engine=args.engine, reps=args.reps, rng=samplers.RngSpec(args.seed, "compare"), conf=args.conf,
        delta=args.delta, which=tuple(args.bound or ("prop1", "theorem1")),
        modes=tuple(args.mode or ("absolute", "one-sided")), target_prob=args.target_prob,
    )
    _emit(args, "compare", [r.to_json() for r in rows])


def diagnose_coupling(n: int) -> dict:
    exact = oracle.enumerate_balanced(n)
    cl = oracle.coupled_law(n)
    T = oracle.exact_T_law(n)
    table = []
    for d in range(0, n + 1):
        p = oracle.T_cdf(T, n - d)
        b = bounds.hoeffding_T_bound(n, d)
        table.append({"delta": d, "exact_P_T_le_n_minus_delta": p, "hoeffding_bound": b, "holds": p <= b})
    return {
        "n": n,
        "tv_coupled_vs_without_replacement": oracle.tv_distance(cl, exact),
        "coupled_support_size": len(cl.outcomes),
        "balanced_support_size": len(exact.outcomes),
        "all_coupled_balanced": all(sum(o) == 0 for o in cl.outcomes),
        "T_law": {str(t): float(p) for t, p in zip(T.outcomes, T.probs)},
        "hoeffding_table": table,
        "note": "coupled law differs from uniform sampling without replacement when tv > 0",
    }


def cmd_diagnose_coupling(args):
    rep = diagnose_coupling(args.n)
    if args.format == "csv":
        _emit(args, "diagnose-coupling", rep["hoeffding_table"])
    else:
        _emit(args, "diagnose-coupling", rep)


def cmd_two_sample(args):
    data = two_sample.load_dataset(args.data, args.data_format)
    if args.kernel == "tabulated":
        if not args.kernel_table:
            raise ValueError("--kernel tabulated needs --kernel-table")
        g = two_sample.Kernel("tabulated", table=coeff.load_matrix(args.kernel_table).entries)
    else:
        g = two_sample.Kernel(args.kernel, bandwidth=args.bandwidth)
    constants = None
    if args.constants_from:
        constants = load_constants(args.constants_from)
    res = two_sample.perm_test(data, g, reps=args.reps, rng=samplers.RngSpec(args.seed, "perm-test"),
                               levels=args.levels, constants=constants)
    _emit(args, "two-sample", res.to_json())


def cmd_calibrate(args):
    if args.matrix:
        instances = [coeff.load_matrix(p) for p in args.matrix]
        names = list(args.matrix)
    elif args.ensemble:
        if not args.n:
            raise ValueError("--ensemble needs at least one --n")
        instances, names = [], []
        for n in args.n:
            for k in range(args.count):
                instances.append(coeff.generate(args.ensemble, n, args.seed + k, args.M))
                names.append(f"{args.ensemble}(n={n}, seed={args.seed + k}, M={args.M})")
    else:
        instances, names = [], []
    if not instances:
        raise ValueError("calibration needs at least one instance (--matrix or --ensemble/--n)")
    if args.constant == "kappa":
        rep = montecarlo.calibrate_kappa(instances, tolerance=args.tolerance, descriptions=names)
    else:
        rep = montecarlo.calibrate_c(instances, C_fixed=args.C, xs=args.x or [1.0, 2.0, 4.0], mode=args.mode,
                                     scheme=args.scheme, tolerance=args.tolerance, descriptions=names)
    _emit(args, "calibrate", rep.to_json())


def cmd_sample(args):
    rng = samplers.RngSpec(args.seed, args.stream)
    A = coeff.load_matrix(args.matrix) if args.matrix else None
    if A is not None and A.n != args.n:
        raise ValueError(f"matrix has n={A.n}, --n is {args.n}")
    signs = samplers.draw_signs(args.n, args.scheme, args.reps, rng)
    results = []
    if args.scheme == "coupled":
        paths = samplers.draw_signs(args.n, "iid", args.reps, rng)
        T = samplers.stopping_times(paths)
    values = clean_values(A, eval_chaos_batch(A, signs)) if A is not None else None
    for r in range(args.reps):
        rec = {"replicate": r, "signs": signs[r].tolist()}
        if args.scheme == "coupled":
            rec["path"] = paths[r].tolist()
            rec["stopping_time"] = int(T[r])
        if values is not None:
            rec["chaos"] = float(values[r])
        results.append(rec)
    _emit(args, "sample", results)


def cmd_enumerate(args):
    if args.what == "balanced":
        law = oracle.enumerate_balanced(args.n)
    elif args.what == "coupled":
        law = oracle.coupled_law(args.n)
    elif args.what == "T":
        law = oracle.exact_T_law(args.n)
    else:
        law = oracle.exact_chaos_law(_matrix(args), args.scheme)
    if args.format == "csv":
        write_atomic(law.to_csv(), args.out)
    else:
        _emit(args, "enumerate", law.to_json())


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaos-swr",
        description="Tail bounds, exact laws and Monte Carlo checks for order-2 chaos "
        "under sampling without replacement.  CHAOS_SWR_THREADS caps worker threads "
        "(results never depend on it).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-matrix", help="write an n x n matrix from a named ensemble")
    p.add_argument("--ensemble", choices=coeff.ENSEMBLES, required=True)
    p.add_argument("--n", type=_even_int, required=True)
    p.add_argument("--M", type=_positive_float, default=1.0, help="entry scale (default 1)")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_gen_matrix, format="csv")

    p = sub.add_parser("bound", help="threshold/probability reports with term breakdown")
    _add_matrix_source(p)
    p.add_argument("--x", type=_positive_float, action="append", required=True, help="x value (repeatable)")
    _add_delta(p)
    _add_constants(p)
    _add_output(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("compare", help="bounds against exact or Monte Carlo tail probabilities")
    _add_matrix_source(p)
    p.add_argument("--x", type=_positive_float, action="append", required=True, help="x value (repeatable)")
    _add_delta(p)
    _add_constants(p)
    p.add_argument("--scheme", choices=SCHEME_CHOICES, default="swr")
    p.add_argument("--engine", choices=("enumeration", "monte-carlo"), default="enumeration")
    p.add_argument("--reps", type=_positive_int, default=100_000)
    p.add_argument("--conf", type=_probability, default=0.99)
    p.add_argument("--mode", choices=("one-sided", "absolute"), action="append",
                   help="tail mode (repeatable; default both)")
    p.add_argument("--bound", choices=("prop1", "theorem1"), action="append",
                   help="bound family (repeatable; default both)")
    _add_output(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("diagnose-coupling", help="TV distance and exact T law vs the Hoeffding bound")
    p.add_argument("--n", type=_even_int, required=True)
    _add_output(p)
    p.set_defaults(func=cmd_diagnose_coupling)

    p = sub.add_parser("two-sample", help="permutation test of the two-sample U-statistic")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--data-format", choices=("csv-long", "csv-two-col"), default="csv-long")
    p.add_argument("--kernel", choices=("product", "gaussian", "tabulated"), default="gaussian")
    p.add_argument("--bandwidth", type=_positive_float, default=1.0)
    p.add_argument("--kernel-table", help="CSV table for --kernel tabulated")
    p.add_argument("--reps", type=_positive_int, default=9999)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--levels", type=_levels, default=[0.05], help="comma-separated significance levels")
    p.add_argument("--constants-from", help="JSON with kappa/c/C or calibration report(s)")
    _add_output(p)
    p.set_defaults(func=cmd_two_sample)

    p = sub.add_parser("calibrate", help="calibrate kappa or c on exact enumerated laws")
    p.add_argument("--constant", choices=("kappa", "c"), required=True)
    p.add_argument("--matrix", action="append", help="instance CSV (repeatable)")
    p.add_argument("--ensemble", choices=coeff.ENSEMBLES)
    p.add_argument("--n", type=_even_int, action="append", help="instance size (repeatable)")
    p.add_argument("--count", type=_positive_int, default=1, help="instances per n (default 1)")
    p.add_argument("--M", type=_positive_float, default=1.0)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--C", type=_positive_float, default=8.0, help="fixed C when calibrating c")
    p.add_argument("--x", type=_positive_float, action="append", help="x grid for c (default 1, 2, 4)")
    p.add_argument("--mode", choices=("one-sided", "absolute"), default="one-sided")
    p.add_argument("--scheme", choices=SCHEME_CHOICES, default="swr")
    p.add_argument("--tolerance", type=_positive_float, default=1e-9)
    _add_output(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sample", help="draw sign vectors (and optionally chaos values)")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--scheme", choices=SCHEME_CHOICES, default="swr")
    p.add_argument("--reps", type=_positive_int, default=10)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--stream", default="default", help="stream label")
    p.add_argument("--matrix", help="also evaluate the chaos for this matrix")
    _add_output(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("enumerate", help="exact laws by exhaustive enumeration")
    p.add_argument("--what", choices=("balanced", "coupled", "T", "chaos"), required=True)
    _add_matrix_source(p)
    p.add_argument("--scheme", choices=SCHEME_CHOICES, default="swr")
    _add_output(p)
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "sample" and args.scheme != "iid" and args.n % 2:
        parser.error("--n must be even for balanced schemes")
    if getattr(args, "command", None) == "enumerate" and args.what != "chaos" and args.n is None:
        parser.error("--n is required")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"chaos-swr: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
