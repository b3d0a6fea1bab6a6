"""Tabular data ingestion and design construction.

Columns are declared with :class:`ColumnSpec` roles: one ``response``, any
number of ``numeric`` (splined), ``categorical`` (one-hot, every level kept)
and ``excluded`` columns.  Numeric columns may ask for a ``log`` transform,
validated at load time (hard error on non-positive cells, naming the row).

``build_design`` turns a dataset into solver-ready blocks: for every numeric
feature a standardized nonlinear bundle plus one centered linear column, in
input column order — all nonlinear bundles first, then all linear columns,
then one centered d=1 indicator block per categorical level (levels ordered
lexicographically on their string form).  The response is centered and its
mean kept as the model intercept.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .basis import RawBasis, natural_cubic_basis, penalty_matrix, place_knots
from .errors import DegenerateFeatureError, SchemaError
from .solver import FeatureLayout
from .standardize import StandardizedTerm, apply_transform, linear_term, standardize_term

__all__ = [
    "ColumnSpec",
    "Dataset",
    "NumericFeature",
    "CategoricalFeature",
    "Design",
    "load_table",
    "encode_categorical",
    "build_design",
    "transform_column",
]

_ROLES = ("response", "numeric", "categorical", "excluded")
_TRANSFORMS = ("none", "log")


@dataclass(frozen=True)
class ColumnSpec:
    """Declared handling of one column."""

    name: str
    role: str = "numeric"
    transform: str = "none"
    knot_count: int = 10

    def __post_init__(self):
        if self.role not in _ROLES:
            raise SchemaError(f"column {self.name!r}: unknown role {self.role!r}")
        if self.transform not in _TRANSFORMS:
            raise SchemaError(f"column {self.name!r}: unknown transform {self.transform!r}")
        if self.knot_count < 3:
            raise SchemaError(f"column {self.name!r}: knot_count must be >= 3")


@dataclass(frozen=True)
class Dataset:
    """Typed columns in file order.  Numeric/response columns are float
    arrays (untransformed); categorical columns are string lists."""

    names: tuple
    columns: dict
    specs: dict
    response: str | None

    @property
    def n(self) -> int:
        first = self.columns[self.names[0]]
        return len(first)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        cols = {}
        for name in self.names:
            col = self.columns[name]
            if isinstance(col, np.ndarray):
                cols[name] = col[idx]
            else:
                cols[name] = [col[i] for i in idx]
        return Dataset(self.names, cols, self.specs, self.response)


def _parse_float(cell: str, line_no: int, name: str) -> float:
    try:
        val = float(cell)
    except ValueError:
        raise SchemaError(
            f"line {line_no}, column {name!r}: cannot parse {cell!r} as a number"
        ) from None
    if not math.isfinite(val):
        raise SchemaError(f"line {line_no}, column {name!r}: non-finite value {cell!r}")
    return val


def load_table(path, specs, require_response: bool = True) -> Dataset:
    """Read a delimited text file (comma, header row mandatory).

    ``specs`` is a sequence of ColumnSpec; file columns without a spec
    default to numeric with the default knot count.  Unparseable or missing
    cells are hard errors naming the file line.
    """
    by_name = {s.name: s for s in specs}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names in header")
        rows = list(reader)

    responses = [s.name for s in specs if s.role == "response"]
    if len(responses) != 1:
        raise SchemaError(f"exactly one response column required, got {responses}")
    response = responses[0]
    for s in specs:
        if s.name not in header and not (s.name == response and not require_response):
            raise SchemaError(f"{path}: declared column {s.name!r} missing from header")

    resolved = {name: by_name.get(name, ColumnSpec(name)) for name in header}
    names = tuple(n for n in header if resolved[n].role != "excluded")
    raw = {name: [] for name in names}
    for i, row in enumerate(rows):
        line_no = i + 2  # header is line 1
        if len(row) != len(header):
            raise SchemaError(f"line {line_no}: expected {len(header)} cells, got {len(row)}")
        for name, cell in zip(header, row):
            if resolved[name].role != "excluded":
                raw[name].append(cell.strip())
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    columns = {}
    for name in names:
        spec = resolved[name]
        cells = raw[name]
        if spec.role == "categorical":
            if any(c == "" for c in cells):
                bad = cells.index("") + 2
                raise SchemaError(f"line {bad}, column {name!r}: missing value")
            columns[name] = cells
            continue
        vals = np.empty(len(cells))
        for i, cell in enumerate(cells):
            if cell == "":
                raise SchemaError(f"line {i + 2}, column {name!r}: missing value")
            vals[i] = _parse_float(cell, i + 2, name)
        if spec.transform == "log":
            nonpos = np.nonzero(vals <= 0.0)[0]
            if nonpos.size:
                raise SchemaError(
                    f"line {int(nonpos[0]) + 2}, column {name!r}: log transform "
                    f"requires strictly positive values, got {vals[nonpos[0]]!r}"
                )
        columns[name] = vals

    response_in_data = response if response in names else None
    return Dataset(names=names, columns=columns, specs=resolved, response=response_in_data)


def encode_categorical(column, name: str):
    """One-hot encode *all* levels of a categorical column, centered.

    Returns (levels, level_means, matrix) with one column per level in
    lexicographic order; each column is the level indicator minus its mean,
    so it sums to zero.  Identifiability of the full (no reference level)
    encoding is left to the sparsity penalty.
    """
    values = [str(c) for c in column]
    levels = sorted(set(values))
    if len(levels) < 2:
        raise DegenerateFeatureError(f"categorical column {name!r} has a single level")
    n = len(values)
    mat = np.zeros((n, len(levels)))
    for j, lv in enumerate(levels):
        mat[:, j] = [1.0 if val == lv else 0.0 for val in values]
    means = mat.mean(axis=0)
    return levels, means, mat - means


def transform_column(raw, transform: str, name: str = "") -> np.ndarray:
    """Apply a declared numeric transform to raw values."""
    x = np.asarray(raw, dtype=float)
    if transform == "log":
        if np.any(x <= 0.0):
            raise SchemaError(f"column {name!r}: log transform requires positive values")
        return np.log(x)
    return x


@dataclass(frozen=True)
class NumericFeature:
    """Everything needed to rebuild one numeric feature's blocks at new data."""

    name: str
    transform: str
    basis: RawBasis
    term: StandardizedTerm  # nonlinear block (carries the transform maps)
    train_min: float        # original (pre-transform) units
    train_max: float

    def transformed(self, raw) -> np.ndarray:
        return transform_column(raw, self.transform, self.name)

    def nonlinear_matrix(self, raw: np.ndarray) -> np.ndarray:
        x = self.transformed(raw)
        return apply_transform(self.term, self.basis.evaluate(x), self.basis.linear(x))

    def linear_column(self, raw: np.ndarray) -> np.ndarray:
        return self.basis.linear(self.transformed(raw))


@dataclass(frozen=True)
class CategoricalFeature:
    name: str
    levels: tuple
    level_means: np.ndarray

    def level_matrix(self, column) -> np.ndarray:
        values = [str(c) for c in column]
        mat = np.zeros((len(values), len(self.levels)))
        for j, lv in enumerate(self.levels):
            mat[:, j] = [1.0 if val == lv else 0.0 for val in values]
        return mat - self.level_means


@dataclass(frozen=True)
class Design:
    """Solver-ready view of a dataset plus the replay recipes."""

    terms: tuple
    y: np.ndarray
    intercept: float
    layout: FeatureLayout
    numeric: tuple
    categorical: tuple

    def matrices_for(self, ds: Dataset):
        """Design matrices for new rows, aligned with ``terms``."""
        out = [f.nonlinear_matrix(ds.columns[f.name]) for f in self.numeric]
        out += [f.linear_column(ds.columns[f.name])[:, None] for f in self.numeric]
        for f in self.categorical:
            mat = f.level_matrix(ds.columns[f.name])
            out += [mat[:, [j]] for j in range(mat.shape[1])]
        return out

    def predict(self, result, ds: Dataset) -> np.ndarray:
        yhat = np.full(ds.n, result.intercept)
        for Z, st in zip(self.matrices_for(ds), result.blocks):
            if st.r2 != 0.0:
                yhat += Z @ st.mu
        return yhat


def build_design(ds: Dataset) -> Design:
    """Build the block list: p standardized nonlinear bundles (column
    order), then p centered linear columns, then categorical level blocks."""
    if ds.response is None:
        raise SchemaError("dataset has no response column; cannot build a design")
    numeric_names = [n for n in ds.names if ds.specs[n].role == "numeric"]
    cat_names = [n for n in ds.names if ds.specs[n].role == "categorical"]

    numeric_feats = []
    nl_terms = []
    lin_terms = []
    for name in numeric_names:
        spec = ds.specs[name]
        raw = ds.columns[name]
        x = transform_column(raw, spec.transform, name)
        knots = place_knots(x, spec.knot_count)
        basis = natural_cubic_basis(knots, x)
        S = penalty_matrix(basis)
        term = standardize_term(x, basis, S, label=f"{name}:nl")
        numeric_feats.append(NumericFeature(
            name=name, transform=spec.transform, basis=basis, term=term,
            train_min=float(np.min(raw)), train_max=float(np.max(raw)),
        ))
        nl_terms.append(term)
        lin_terms.append(linear_term(basis.linear(x), f"{name}:lin"))

    cat_feats = []
    level_terms = []
    for name in cat_names:
        levels, means, mat = encode_categorical(ds.columns[name], name)
        cat_feats.append(CategoricalFeature(name, tuple(levels), means))
        for j, lv in enumerate(levels):
            level_terms.append(linear_term(mat[:, j], f"{name}={lv}", kind="level"))

    terms = tuple(nl_terms + lin_terms + level_terms)
    if not terms:
        raise SchemaError("no usable feature columns")

    p = len(numeric_names)
    names = list(numeric_names)
    nonlinear_ix = list(range(p))
    linear_ix = [(p + j,) for j in range(p)]
    k = 2 * p
    for feat in cat_feats:
        for lv in feat.levels:
            names.append(f"{feat.name}={lv}")
            nonlinear_ix.append(None)
            linear_ix.append((k,))
            k += 1
    layout = FeatureLayout(tuple(names), tuple(nonlinear_ix), tuple(linear_ix))

    y_raw = ds.columns[ds.response]
    intercept = float(np.mean(y_raw))
    return Design(
        terms=terms,
        y=y_raw - intercept,
        intercept=intercept,
        layout=layout,
        numeric=tuple(numeric_feats),
        categorical=tuple(cat_feats),
    )
