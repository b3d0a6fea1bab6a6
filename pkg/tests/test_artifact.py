"""Tests for the saved-model document: persistence, prediction, curves."""

import dataclasses
import json

import numpy as np
import pytest

from vard import (
    ColumnSpec,
    Dataset,
    FitConfig,
    ModelArtifact,
    SchemaError,
    alpha_max,
    build_design,
    fit,
    load_table,
)


def _training_dataset(rng, n=150):
    x1 = rng.uniform(-1.0, 1.0, size=n)
    x2 = rng.uniform(-1.0, 1.0, size=n)
    g = [("a", "b", "c")[i % 3] for i in range(n)]
    bump = np.array([{"a": 2.0, "b": -1.0, "c": -1.0}[v] for v in g])
    y = 4.0 * np.cos(1.7 * x1) + 2.0 * x2 + bump + rng.standard_normal(n) * 0.3
    specs = {
        "x1": ColumnSpec("x1", knot_count=8),
        "x2": ColumnSpec("x2", knot_count=8),
        "g": ColumnSpec("g", role="categorical"),
        "y": ColumnSpec("y", role="response"),
    }
    columns = {"x1": x1, "x2": x2, "g": g, "y": y}
    return Dataset(("x1", "x2", "g", "y"), columns, specs, "y")


def _fitted(rng):
    ds = _training_dataset(rng)
    design = build_design(ds)
    top = alpha_max(design.terms, design.y)
    result = fit(design.terms, design.y, FitConfig(alpha=top * 1e-2),
                 layout=design.layout, intercept=design.intercept)
    return ds, design, result


def test_save_load_roundtrip_bitwise(tmp_path):
    """JSON floats use shortest-repr serialization, so a reloaded model
    must predict bit-identically to the in-memory one."""
    rng = np.random.default_rng(0)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    path = tmp_path / "model.json"
    art.save(path)
    loaded = ModelArtifact.load(path)
    assert loaded.payload == art.payload
    np.testing.assert_array_equal(loaded.predict(ds), art.predict(ds))
    assert loaded.alpha == result.alpha
    assert loaded.intercept == result.intercept
    assert loaded.response == "y"


def test_predict_matches_design_predict():
    rng = np.random.default_rng(1)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    np.testing.assert_allclose(art.predict(ds), design.predict(result, ds),
                               atol=1e-9)


def test_predict_on_new_rows_without_response():
    rng = np.random.default_rng(2)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    new = Dataset(("x1", "x2", "g"),
                  {"x1": np.array([0.0, 0.5]), "x2": np.array([0.1, -0.2]),
                   "g": ["a", "c"]},
                  ds.specs, None)
    yhat = art.predict(new)
    assert yhat.shape == (2,)
    assert np.all(np.isfinite(yhat))
    # same rows appended to the training table give the same predictions
    full = art.predict(ds)
    probe = ds.subset([0])
    np.testing.assert_allclose(art.predict(probe), full[:1])


def test_predict_missing_column_rejected():
    rng = np.random.default_rng(3)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    crippled = Dataset(("x1",), {"x1": np.array([0.0])}, ds.specs, None)
    with pytest.raises(SchemaError, match="missing column"):
        art.predict(crippled)


def test_unseen_level_gets_baseline_contribution():
    rng = np.random.default_rng(4)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    rec = art.payload["categorical_features"][0]
    base = -float(np.dot(rec["level_means"], rec["mu"]))
    seen = Dataset(("x1", "x2", "g"),
                   {"x1": np.zeros(1), "x2": np.zeros(1), "g": ["a"]},
                   ds.specs, None)
    unseen = Dataset(("x1", "x2", "g"),
                     {"x1": np.zeros(1), "x2": np.zeros(1), "g": ["zz"]},
                     ds.specs, None)
    mu_a = rec["mu"][rec["levels"].index("a")]
    # a known level adds its coefficient on top of the all-zero-indicator row
    diff = art.predict(seen)[0] - art.predict(unseen)[0]
    assert diff == pytest.approx(mu_a, abs=1e-12)
    # any unseen label maps to the same baseline
    other = dataclasses.replace(unseen, columns={**unseen.columns, "g": ["qq"]})
    assert art.predict(other)[0] == art.predict(unseen)[0]
    assert np.isfinite(base)


def test_classifications_and_levels():
    rng = np.random.default_rng(5)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    cls = art.classifications()
    assert cls["x1"] == result.classifications["x1"]
    assert cls["x2"] == result.classifications["x2"]
    assert cls["x1"] == "nonlinear"
    assert cls["x2"] == "linear"
    active = art.nonzero_levels("g")
    assert set(active) <= {"a", "b", "c"}
    assert cls["g"] == ("linear" if active else "zero")
    with pytest.raises(KeyError):
        art.nonzero_levels("x1")


def test_column_specs_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    path = tmp_path / "model.json"
    art.save(path)
    specs = ModelArtifact.load(path).column_specs()
    assert specs == list(ds.specs.values())
    # the reloaded specs drive load_table for prediction files
    csv = tmp_path / "new.csv"
    csv.write_text("x1,x2,g\n0.1,0.2,b\n")
    new = load_table(csv, specs, require_response=False)
    assert art.predict(new).shape == (1,)


def test_version_mismatch_rejected(tmp_path):
    rng = np.random.default_rng(7)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    bad = dict(art.payload)
    bad["format_version"] = 99
    path = tmp_path / "model.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(SchemaError, match="format version"):
        ModelArtifact.load(path)


def test_from_fit_requires_response():
    rng = np.random.default_rng(8)
    ds, design, result = _fitted(rng)
    headless = dataclasses.replace(ds, response=None)
    with pytest.raises(SchemaError):
        ModelArtifact.from_fit(design, result, headless)


def test_numeric_curve_matches_prediction():
    """A single-feature model's curve must equal predict-minus-intercept
    on the same grid."""
    rng = np.random.default_rng(9)
    n = 120
    x = rng.uniform(0.0, 2.0, size=n)
    y = np.sin(3.0 * x) + rng.standard_normal(n) * 0.1
    specs = {"x": ColumnSpec("x", knot_count=9),
             "y": ColumnSpec("y", role="response")}
    ds = Dataset(("x", "y"), {"x": x, "y": y}, specs, "y")
    design = build_design(ds)
    top = alpha_max(design.terms, design.y)
    result = fit(design.terms, design.y, FitConfig(alpha=top * 1e-3),
                 layout=design.layout, intercept=design.intercept)
    art = ModelArtifact.from_fit(design, result, ds)

    header, rows = art.curve("x", grid=50)
    assert header == ("x", "fhat")
    assert len(rows) == 50
    xs = np.array([r[0] for r in rows])
    assert xs[0] == pytest.approx(x.min())
    assert xs[-1] == pytest.approx(x.max())
    grid_ds = Dataset(("x",), {"x": xs}, specs, None)
    np.testing.assert_allclose([r[1] for r in rows],
                               art.predict(grid_ds) - art.intercept,
                               atol=1e-12)


def test_categorical_curve_lists_levels():
    rng = np.random.default_rng(10)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    header, rows = art.curve("g")
    assert header == ("level", "fhat")
    assert [r[0] for r in rows] == ["a", "b", "c"]
    rec = art.payload["categorical_features"][0]
    base = -float(np.dot(rec["level_means"], rec["mu"]))
    for (lv, fhat), mu_j in zip(rows, rec["mu"]):
        assert fhat == pytest.approx(base + mu_j)


def test_curve_validation():
    rng = np.random.default_rng(11)
    ds, design, result = _fitted(rng)
    art = ModelArtifact.from_fit(design, result, ds)
    with pytest.raises(SchemaError, match="no feature named"):
        art.curve("nope")
    with pytest.raises(ValueError):
        art.curve("x1", grid=1)
