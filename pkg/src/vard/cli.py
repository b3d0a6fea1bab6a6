"""Command-line entry points.

Subcommands: ``fit``, ``path``, ``cv``, ``predict``, ``curves``,
``simulate``.  All outputs (CSV, JSON model documents, optional PNG plots)
are written atomically; any failure exits nonzero with a message on stderr
and leaves no partial files behind.

The ``--spec`` argument names a JSON file declaring column handling, either
a list of column objects or ``{"columns": [...]}``::

    {"columns": [
      {"name": "medv", "role": "response"},
      {"name": "crim", "role": "numeric", "transform": "log"},
      {"name": "chas", "role": "categorical"},
      {"name": "id",   "role": "excluded"}
    ]}

Columns present in the data file but absent from the spec default to
numeric with 10 knots.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from ._io import write_csv
from .artifact import ModelArtifact
from .data import ColumnSpec, build_design, load_table
from .errors import VardError
from .modelselect import cross_validate, make_alpha_grid, path_fit
from .simbench import run_experiment
from .solver import FitConfig, fit

__all__ = ["main"]


def _load_specs(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise VardError(f"{path}: invalid JSON ({exc})") from None
    if isinstance(doc, dict):
        doc = doc.get("columns")
    if not isinstance(doc, list):
        raise VardError(f"{path}: expected a list of column objects")
    specs = []
    for entry in doc:
        if not isinstance(entry, dict) or "name" not in entry:
            raise VardError(f"{path}: every column object needs a 'name'")
        try:
            specs.append(ColumnSpec(**entry))
        except TypeError as exc:
            raise VardError(f"{path}: bad column object {entry!r} ({exc})") from None
    return specs


def _design_from_args(args):
    specs = _load_specs(args.spec)
    ds = load_table(args.data, specs)
    return ds, build_design(ds)


def _block_norms(terms, blocks):
    """Figure-style coefficient norms: μ rescaled by √v per coordinate
    (as if each block had an identity Gram), ℓ2 for nonlinear bundles and
    the signed value for single-column blocks."""
    out = []
    for term, st in zip(terms, blocks):
        scaled = st.mu * np.sqrt(term.v)
        if term.kind == "nonlinear":
            out.append(float(np.linalg.norm(scaled)))
        else:
            out.append(float(scaled[0]))
    return out


def _cmd_fit(args) -> int:
    ds, design = _design_from_args(args)
    result = fit(design.terms, design.y, FitConfig(alpha=args.alpha),
                 layout=design.layout, intercept=design.intercept)
    ModelArtifact.from_fit(design, result, ds).save(args.out)
    counts = {}
    for label in result.classifications.values():
        counts[label] = counts.get(label, 0) + 1
    print(f"fit: alpha={args.alpha:g} objective={result.objective:.6g} "
          f"sweeps={result.sweeps_used} converged={result.converged}")
    print("fit: classifications " +
          " ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    print(f"fit: model written to {args.out}")
    return 0


def _cmd_path(args) -> int:
    _, design = _design_from_args(args)
    grid = make_alpha_grid(design.terms, design.y, count=args.grid_count,
                           span_decades=args.span_decades)
    config = FitConfig(alpha=grid.values[0])
    results = path_fit(design.terms, design.y, grid, config,
                       layout=design.layout, intercept=design.intercept)
    labels = [t.label for t in design.terms]
    rows = []
    for alpha, result in zip(grid.values, results):
        rows.append([float(alpha)] + _block_norms(design.terms, result.blocks))
    write_csv(args.out, ["alpha"] + labels, rows)
    print(f"path: {len(rows)} alphas x {len(labels)} blocks written to {args.out}")
    if args.plot:
        from .plots import render_path
        norms = np.array([r[1:] for r in rows])
        render_path(grid.values, labels, norms, args.plot)
        print(f"path: figure written to {args.plot}")
    return 0


def _cmd_cv(args) -> int:
    ds, design = _design_from_args(args)
    grid = make_alpha_grid(design.terms, design.y, count=args.grid_count,
                           span_decades=args.span_decades)
    config = FitConfig(alpha=grid.values[0])
    cv = cross_validate(ds, grid, folds=args.folds, seed=args.seed, config=config)
    rows = [(float(a), float(m), float(s))
            for a, m, s in zip(cv.alphas, cv.mean_mse, cv.sd_mse)]
    write_csv(args.out, ("alpha", "mean_mse", "sd_mse"), rows)
    print(f"cv: alpha_min={cv.alpha_min:.6g} "
          f"(mean MSE {cv.mean_mse[cv.index_min]:.6g})")
    print(f"cv: alpha_015se={cv.alpha_015se:.6g} "
          f"(mean MSE {cv.mean_mse[cv.index_015se]:.6g})")
    print(f"cv: table written to {args.out}")
    result = fit(design.terms, design.y, FitConfig(alpha=cv.alpha_015se),
                 layout=design.layout, intercept=design.intercept)
    ModelArtifact.from_fit(design, result, ds).save(args.model)
    print(f"cv: model refit at alpha_015se written to {args.model}")
    if args.plot:
        from .plots import render_cv
        render_cv(cv.alphas, cv.mean_mse, cv.sd_mse, cv.alpha_min,
                  cv.alpha_015se, args.plot)
        print(f"cv: figure written to {args.plot}")
    return 0


def _cmd_predict(args) -> int:
    artifact = ModelArtifact.load(args.model)
    ds = load_table(args.data, artifact.column_specs(), require_response=False)
    yhat = artifact.predict(ds)
    write_csv(args.out, ("yhat",), [(float(v),) for v in yhat])
    print(f"predict: {len(yhat)} predictions written to {args.out}")
    return 0


def _cmd_curves(args) -> int:
    artifact = ModelArtifact.load(args.model)
    header, rows = artifact.curve(args.feature, grid=args.grid)
    write_csv(args.out, header, rows)
    print(f"curves: {len(rows)} rows for {args.feature!r} written to {args.out}")
    if args.plot:
        from .plots import render_curve
        render_curve(args.feature, header, rows, args.plot)
        print(f"curves: figure written to {args.plot}")
    return 0


def _cmd_simulate(args) -> int:
    report = run_experiment(args.experiment, args.case,
                            replicates=args.replicates, seed=args.seed,
                            per_replicate_cv=args.per_replicate_cv)
    report.to_csv(args.out)
    print(f"simulate: experiment {args.experiment} case {args.case}, "
          f"{args.replicates} replicates")
    print(f"simulate: alpha_min={report.alpha_min:.6g} "
          f"alpha_015se={report.alpha_015se:.6g}")
    for row in report.rows:
        label = " ".join(str(v) for v in row[:-2])
        print(f"simulate: {label} = {row[-2]:.4g} +/- {row[-1]:.4g}")
    print(f"simulate: report written to {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vard",
        description="Sparse additive regression with per-feature adaptive "
                    "smoothness (zero / linear / nonlinear feature selection).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model at a fixed alpha")
    p.add_argument("--data", required=True, help="CSV data file")
    p.add_argument("--spec", required=True, help="JSON column spec file")
    p.add_argument("--alpha", required=True, type=float)
    p.add_argument("--out", required=True, help="model JSON output path")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("path", help="regularization path of block norms")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--grid-count", type=int, default=100)
    p.add_argument("--span-decades", type=float, default=6.0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--plot", default=None, help="optional PNG figure path")
    p.set_defaults(func=_cmd_path)

    p = sub.add_parser("cv", help="cross-validate alpha and refit")
    p.add_argument("--data", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-count", type=int, default=100)
    p.add_argument("--span-decades", type=float, default=6.0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--model", required=True,
                   help="model JSON path (refit at alpha_015se)")
    p.add_argument("--plot", default=None, help="optional PNG figure path")
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("curves", help="fitted contribution of one feature")
    p.add_argument("--model", required=True)
    p.add_argument("--feature", required=True)
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--plot", default=None, help="optional PNG figure path")
    p.set_defaults(func=_cmd_curves)

    p = sub.add_parser("simulate", help="run a benchmark experiment case")
    p.add_argument("--experiment", required=True, type=int, choices=(1, 2))
    p.add_argument("--case", required=True, type=int)
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-replicate-cv", action="store_true",
                   help="re-run CV on every replicate instead of freezing "
                        "alpha after the first")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
