import math

import numpy as np
import pandas as pd
import pytest

from selmed.errors import NonConvergence, RankDeficient, SeparationDetected
from selmed.glm import Design, Term, build_design, fit_glm, sigmoid


def test_design_matrix_terms():
    design = build_design(["a", "b"], extra_products=[("a", "b")])
    df = pd.DataFrame({"a": [1.0, 2.0], "b": [3.0, 4.0]})
    X = design.matrix(df)
    assert design.names == ["1", "a", "b", "a:b"]
    np.testing.assert_allclose(X, [[1, 1, 3, 3], [1, 2, 4, 8]])


def test_design_overrides():
    design = build_design(["a", "b"], extra_products=[("a", "b")])
    df = pd.DataFrame({"a": [1.0, 2.0], "b": [3.0, 4.0]})
    X = design.matrix(df, {"a": 0.0})
    np.testing.assert_allclose(X[:, 1], [0, 0])
    np.testing.assert_allclose(X[:, 3], [0, 0])


def test_saturated_design():
    design = build_design(["a", "b", "c"], saturated=True)
    assert len(design.terms) == 8


def test_balanced_binary_regressor_gives_zero_slope():
    # 75/25 outcome split at both levels of x: slope exactly 0
    x = np.repeat([0.0, 1.0], 100)
    y = np.concatenate([np.repeat([1.0, 0.0], [75, 25])] * 2)
    design = build_design(["x"])
    df = pd.DataFrame({"x": x})
    fit = fit_glm(design.matrix(df), y, "logistic", design=design)
    assert abs(fit.coefficient("x")) < 1e-6
    assert abs(fit.coefficient("1") - math.log(0.75 / 0.25)) < 1e-6


def test_logistic_recovers_selection_slope():
    rng = np.random.default_rng(17)
    n = 100_000
    c = rng.standard_normal(n)
    s = (rng.random(n) < sigmoid(1.0 * c)).astype(float)
    design = build_design(["c"])
    fit = fit_glm(design.matrix(pd.DataFrame({"c": c})), s, "logistic",
                  design=design)
    assert fit.converged
    assert abs(fit.coefficient("c") - 1.0) < 0.05


def test_perfect_separation_detected():
    x = np.concatenate([np.zeros(50), np.ones(50)])
    y = x.copy()
    design = build_design(["x"])
    with pytest.raises(SeparationDetected):
        fit_glm(design.matrix(pd.DataFrame({"x": x})), y, "logistic",
                design=design)


def test_ridge_rescues_separation():
    x = np.concatenate([np.zeros(50), np.ones(50)])
    y = x.copy()
    design = build_design(["x"])
    fit = fit_glm(design.matrix(pd.DataFrame({"x": x})), y, "logistic",
                  design=design, ridge=1e-6)
    assert fit.converged


def test_rank_deficient():
    df = pd.DataFrame({"a": [0.0, 1.0, 0.0, 1.0], "b": [0.0, 1.0, 0.0, 1.0]})
    design = build_design(["a", "b"])
    y = np.array([0.0, 1.0, 1.0, 0.0])
    with pytest.raises(RankDeficient):
        fit_glm(design.matrix(df), y, "linear", design=design)


def test_linear_single_step_exact():
    rng = np.random.default_rng(2)
    n = 500
    a = rng.standard_normal(n)
    y = 2.0 + 3.0 * a + 0.1 * rng.standard_normal(n)
    design = build_design(["a"])
    fit = fit_glm(design.matrix(pd.DataFrame({"a": a})), y, "linear",
                  design=design)
    assert fit.iterations == 1
    assert abs(fit.coefficient("a") - 3.0) < 0.02
    assert fit.sigma2 == pytest.approx(0.01, rel=0.3)


def test_frequency_weights_match_expansion():
    # fitting weighted cells equals fitting the expanded data
    df = pd.DataFrame({"x": [0.0, 0.0, 1.0, 1.0]})
    y = np.array([0.0, 1.0, 0.0, 1.0])
    w = np.array([30.0, 10.0, 10.0, 30.0])
    design = build_design(["x"])
    fit_w = fit_glm(design.matrix(df), y, "logistic", design=design,
                    weights=w, tol=1e-12)
    x_full = np.repeat(df["x"].to_numpy(), w.astype(int))
    y_full = np.repeat(y, w.astype(int))
    fit_full = fit_glm(design.matrix(pd.DataFrame({"x": x_full})), y_full,
                       "logistic", design=design, tol=1e-12)
    np.testing.assert_allclose(fit_w.coefficients, fit_full.coefficients,
                               atol=1e-10)
    # saturated cells: fitted logits equal the empirical cell logits
    assert fit_w.coefficient("1") == pytest.approx(math.log(10 / 30), abs=1e-9)
