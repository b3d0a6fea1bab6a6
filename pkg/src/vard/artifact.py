"""Self-contained fitted-model document (versioned JSON).

The artifact stores, per numeric feature, the knot locations, the basis
centering constants, the three standardization maps and the fitted block
coefficients; per categorical feature, the levels, their training means and
the per-level coefficients.  That is sufficient to predict on new raw data
with no access to the training set.  Floats survive the JSON round trip
exactly (shortest-repr serialization).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text
from .basis import RawBasis
from .data import ColumnSpec, Dataset, Design, transform_column
from .errors import SchemaError
from .solver import FitResult
from .standardize import StandardizedTerm, apply_transform

__all__ = ["FORMAT_VERSION", "ModelArtifact", "from_fit"]

FORMAT_VERSION = 1


def _basis_from_record(rec) -> RawBasis:
    return RawBasis(
        H=np.empty((0, len(rec["col_means"]))),
        knots=np.asarray(rec["knots"], dtype=float),
        col_means=np.asarray(rec["col_means"], dtype=float),
        x_mean=float(rec["x_mean"]),
    )


def _term_from_record(rec) -> StandardizedTerm:
    whiten = np.asarray(rec["whiten"], dtype=float)
    return StandardizedTerm(
        Z=np.empty((0, whiten.shape[1])),
        v=np.asarray(rec["v_nonlinear"], dtype=float),
        kind="nonlinear",
        label=rec["name"] + ":nl",
        proj=np.asarray(rec["proj"], dtype=float),
        whiten=whiten,
        rotate=np.asarray(rec["rotate"], dtype=float),
    )


@dataclass(frozen=True)
class ModelArtifact:
    payload: dict

    # -- construction ------------------------------------------------------

    @staticmethod
    def from_fit(design: Design, result: FitResult, ds: Dataset) -> "ModelArtifact":
        if ds.response is None:
            raise SchemaError("cannot build an artifact from a dataset without a response")
        p = len(design.numeric)
        numeric = []
        for j, feat in enumerate(design.numeric):
            st_nl = result.blocks[j]
            st_lin = result.blocks[p + j]
            lin_v = design.terms[p + j].v
            numeric.append({
                "name": feat.name,
                "transform": feat.transform,
                "train_min": feat.train_min,
                "train_max": feat.train_max,
                "knots": feat.basis.knots.tolist(),
                "col_means": feat.basis.col_means.tolist(),
                "x_mean": feat.basis.x_mean,
                "proj": feat.term.proj.tolist(),
                "whiten": feat.term.whiten.tolist(),
                "rotate": feat.term.rotate.tolist(),
                "v_nonlinear": feat.term.v.tolist(),
                "mu_nonlinear": st_nl.mu.tolist(),
                "phi_nonlinear": st_nl.phi.tolist(),
                "r2_nonlinear": st_nl.r2,
                "v_linear": float(lin_v[0]),
                "mu_linear": float(st_lin.mu[0]),
                "phi_linear": float(st_lin.phi[0]),
                "r2_linear": st_lin.r2,
                "classification": result.classifications[feat.name],
            })
        categorical = []
        k = 2 * p
        for feat in design.categorical:
            nlev = len(feat.levels)
            states = result.blocks[k:k + nlev]
            categorical.append({
                "name": feat.name,
                "levels": list(feat.levels),
                "level_means": feat.level_means.tolist(),
                "mu": [float(st.mu[0]) for st in states],
                "r2": [st.r2 for st in states],
            })
            k += nlev
        specs = [
            {"name": s.name, "role": s.role, "transform": s.transform,
             "knot_count": s.knot_count}
            for s in ds.specs.values()
        ]
        payload = {
            "format_version": FORMAT_VERSION,
            "model": "vard-additive-regression",
            "response": ds.response,
            "alpha": result.alpha,
            "intercept": result.intercept,
            "objective": result.objective,
            "sweeps_used": result.sweeps_used,
            "converged": result.converged,
            "columns": specs,
            "numeric_features": numeric,
            "categorical_features": categorical,
        }
        return ModelArtifact(payload)

    # -- persistence -------------------------------------------------------

    def save(self, path) -> None:
        atomic_write_text(path, json.dumps(self.payload, indent=1) + "\n")

    @staticmethod
    def load(path) -> "ModelArtifact":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        version = payload.get("format_version")
        if version != FORMAT_VERSION:
            raise SchemaError(f"unsupported artifact format version {version!r}")
        return ModelArtifact(payload)

    # -- use ---------------------------------------------------------------

    @property
    def response(self) -> str:
        return self.payload["response"]

    @property
    def alpha(self) -> float:
        return self.payload["alpha"]

    @property
    def intercept(self) -> float:
        return self.payload["intercept"]

    def column_specs(self):
        return [ColumnSpec(**rec) for rec in self.payload["columns"]]

    def classifications(self) -> dict:
        out = {rec["name"]: rec["classification"]
               for rec in self.payload["numeric_features"]}
        for rec in self.payload["categorical_features"]:
            nonzero = [lv for lv, r2 in zip(rec["levels"], rec["r2"]) if r2 > 0.0]
            out[rec["name"]] = "zero" if not nonzero else "linear"
        return out

    def nonzero_levels(self, name: str):
        for rec in self.payload["categorical_features"]:
            if rec["name"] == name:
                return [lv for lv, r2 in zip(rec["levels"], rec["r2"]) if r2 > 0.0]
        raise KeyError(name)

    def _numeric_contribution(self, rec, raw) -> np.ndarray:
        x = transform_column(raw, rec["transform"], rec["name"])
        basis = _basis_from_record(rec)
        out = basis.linear(x) * rec["mu_linear"]
        mu_nl = np.asarray(rec["mu_nonlinear"], dtype=float)
        if np.any(mu_nl != 0.0):
            term = _term_from_record(rec)
            out = out + apply_transform(term, basis.evaluate(x), basis.linear(x)) @ mu_nl
        return out

    def _categorical_contribution(self, rec, column) -> np.ndarray:
        values = [str(c) for c in column]
        mu = np.asarray(rec["mu"], dtype=float)
        means = np.asarray(rec["level_means"], dtype=float)
        base = -float(means @ mu)  # all-zero indicator row
        lookup = {lv: base + mu[j] for j, lv in enumerate(rec["levels"])}
        return np.array([lookup.get(val, base) for val in values])

    def predict(self, ds: Dataset) -> np.ndarray:
        """Predicted response for a dataset loaded with this artifact's
        column specs (response column optional)."""
        yhat = np.full(ds.n, float(self.intercept))
        for rec in self.payload["numeric_features"]:
            if rec["name"] not in ds.columns:
                raise SchemaError(f"prediction data is missing column {rec['name']!r}")
            yhat += self._numeric_contribution(rec, ds.columns[rec["name"]])
        for rec in self.payload["categorical_features"]:
            if rec["name"] not in ds.columns:
                raise SchemaError(f"prediction data is missing column {rec['name']!r}")
            yhat += self._categorical_contribution(rec, ds.columns[rec["name"]])
        return yhat

    def curve(self, feature: str, grid: int = 200):
        """Fitted per-feature contribution on an even grid over the
        feature's training range (original units).

        Returns (header, rows): numeric features give ("x", "fhat") pairs,
        categorical features one ("level", "fhat") row per level.
        """
        for rec in self.payload["numeric_features"]:
            if rec["name"] == feature:
                if grid < 2:
                    raise ValueError("grid must be at least 2")
                xs = np.linspace(rec["train_min"], rec["train_max"], grid)
                fhat = self._numeric_contribution(rec, xs)
                return ("x", "fhat"), list(zip(xs.tolist(), fhat.tolist()))
        for rec in self.payload["categorical_features"]:
            if rec["name"] == feature:
                rows = []
                for j, lv in enumerate(rec["levels"]):
                    contrib = self._categorical_contribution(rec, [lv])
                    rows.append((lv, float(contrib[0])))
                return ("level", "fhat"), rows
        raise SchemaError(f"model has no feature named {feature!r}")


def from_fit(design: Design, result: FitResult, ds: Dataset) -> ModelArtifact:
    return ModelArtifact.from_fit(design, result, ds)
