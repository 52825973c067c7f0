"""Estimators: selection weights, counterfactual-imputation mediation
estimates, the path-specific plug-in, and the bootstrap harness.

Nuisance models are fit unweighted on the selected sample; selection
weights enter only the outer average over covariates, matching the
adjustment formula in which every nuisance conditions on being selected
and only the covariate mixture is re-balanced. `weight_nuisance=True`
also pushes the weights inside the fits for sensitivity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
import pandas as pd

from .criteria import AdmissiblePair, PseQuery, edge_consistent, theorem3_check
from .data import Dataset, ModelSpec, encode_categoricals
from .errors import (
    CombinatorialGuard,
    DataError,
    DegenerateOutcome,
    EdgeInconsistent,
    EstimationError,
    EstimatorFailureRate,
    ExtremePropensity,
    IdentificationCheckFailed,
    RatioScaleRequiresBinaryOutcome,
)
from .glm import Design, GlmFit, build_design, fit_glm
from .graph import Admg, topological_order

PROPENSITY_FLOOR = 1e-3


@dataclass(frozen=True)
class WeightVector:
    """Inverse-probability-of-selection weights for the selected rows."""

    values: np.ndarray  # aligned with the selected rows, in row order
    row_index: np.ndarray  # positions of the selected rows in the dataset
    fit: GlmFit

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
            raise EstimationError("weights must be positive and finite")

    @property
    def mean_weight(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True)
class EffectEstimate:
    estimand: str  # TE | NDE | NIE | PSE
    scale: str  # difference | risk-ratio
    adjusted: bool
    point: float
    ci_low: float = float("nan")
    ci_high: float = float("nan")
    bootstrap_reps: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.bootstrap_reps > 0:
            assert self.ci_low <= self.point <= self.ci_high

    def to_json(self) -> dict:
        return {
            "estimand": self.estimand,
            "scale": self.scale,
            "mode": "adjusted" if self.adjusted else "naive",
            "point": self.point,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "bootstrap_reps": self.bootstrap_reps,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class EstimationOptions:
    scale: str = "difference"
    mode: str = "both"  # naive | adjusted | both
    boot: int = 0
    seed: int = 0
    mc_draws: int = 200
    interactions: Optional[bool] = None  # override ModelSpec.interactions
    saturated: bool = False
    ridge: float = 0.0
    weight_nuisance: bool = False
    weight_response: Optional[str] = None
    freq_col: Optional[str] = None
    x_active: float = 1.0
    x_reference: float = 0.0
    fit_tol: float = 1e-8

    def modes(self) -> list[str]:
        if self.mode == "both":
            return ["naive", "adjusted"]
        if self.mode in ("naive", "adjusted"):
            return [self.mode]
        raise EstimationError(f"unknown mode {self.mode!r}")


# ---------------------------------------------------------------------------
# selection weights


def selection_weights(
    data: Dataset,
    zt,
    interactions: bool = False,
    freq: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    ridge: float = 0.0,
    response: Optional[str] = None,
) -> WeightVector:
    """Fit selection ~ zt on every row, then weight each selected row by
    the marginal selection rate over its fitted selection probability.

    `response` overrides the modeled indicator: when the analysis rows are
    a fixed-size subsample of the units that survived selection, the
    survival column is the indicator whose inverse probability re-balances
    toward the full population (the extra uniform thinning contributes
    only a constant that cancels in the normalized average).
    """
    zt = list(zt)
    data.require_complete(zt, selected_only=False)
    response = response or data.selection_column
    data.require_complete([response], selected_only=False)
    frame, mapping = encode_categoricals(data, zt)
    mains = [name for col in zt for name in mapping[col]]
    design = build_design(mains, pairwise=interactions)
    X = design.matrix(frame)
    s = data.column(response).to_numpy(dtype=float)
    if not set(np.unique(s)) <= {0.0, 1.0}:
        raise DataError(f"weight response {response!r} must be binary")
    w = np.ones(len(s)) if freq is None else np.asarray(freq, dtype=float)
    fit = fit_glm(X, s, "logistic", design=design, weights=w, tol=tol, ridge=ridge)

    p_sel = float((w * s).sum() / w.sum())
    selected = np.flatnonzero(data.selected_mask)
    fitted = fit.predict(X[selected])
    if np.any(fitted < PROPENSITY_FLOOR):
        bad = selected[fitted < PROPENSITY_FLOOR]
        raise ExtremePropensity(bad.tolist(), float(fitted.min()))
    return WeightVector(values=p_sel / fitted, row_index=selected, fit=fit)


# ---------------------------------------------------------------------------
# nested counterfactual means (single mediator)


def _freq(data: Dataset, opts: EstimationOptions) -> Optional[np.ndarray]:
    if opts.freq_col is None:
        return None
    data.require_complete([opts.freq_col], selected_only=False)
    return data.column(opts.freq_col).to_numpy(dtype=float)


def _interactions(spec: ModelSpec, opts: EstimationOptions) -> bool:
    return spec.interactions if opts.interactions is None else opts.interactions


def _mediation_designs(
    spec: ModelSpec, mapping, opts: EstimationOptions
) -> tuple[Design, Design]:
    (mediator,) = spec.mediators
    z_mains = [name for col in spec.z for name in mapping[col]]
    pairwise = _interactions(spec, opts)
    outcome = build_design(
        [spec.exposure, mediator, *z_mains],
        pairwise=pairwise,
        saturated=opts.saturated,
        extra_products=[(spec.exposure, mediator)],
    )
    mediator_design = build_design(
        [spec.exposure, *z_mains],
        pairwise=pairwise,
        saturated=opts.saturated,
    )
    return outcome, mediator_design


def nested_counterfactual_means(
    data: Dataset, spec: ModelSpec, opts: EstimationOptions
) -> dict[str, dict[tuple[float, float], float]]:
    """E[Y(x, M(x'))] estimates per mode for the three settings the
    difference and ratio decompositions need.

    Fits the outcome model (outcome ~ exposure + mediator +
    exposure:mediator + z) and the mediator model (mediator ~ exposure + z)
    on the selected rows, imputes the inner mean per selected row, and
    averages: uniformly for the naive mode, selection-weighted for the
    adjusted mode. The mediator integral is an exact two-point sum for a
    binary mediator, the analytic plug-in for a linear outcome, and seeded
    Monte Carlo otherwise.
    """
    if len(spec.mediators) != 1:
        raise EstimationError("mediation estimation expects a single mediator")
    (mediator,) = spec.mediators
    used = [spec.exposure, mediator, spec.outcome, *spec.z]
    data.require_complete(used, selected_only=True)
    data.require_complete(spec.zt, selected_only=False)

    freq = _freq(data, opts)
    frame, mapping = encode_categoricals(
        data, [spec.exposure, mediator, spec.outcome, *spec.z]
    )
    if len(mapping[spec.exposure]) != 1 or len(mapping[mediator]) != 1:
        raise EstimationError("exposure and mediator must be numeric or binary")
    sel_mask = data.selected_mask
    selected = frame[sel_mask].reset_index(drop=True)
    freq_sel = freq[sel_mask] if freq is not None else None

    weights = None
    if "adjusted" in opts.modes():
        weights = selection_weights(
            data, spec.zt, interactions=_interactions(spec, opts),
            freq=freq, tol=opts.fit_tol, ridge=opts.ridge,
            response=opts.weight_response,
        )

    fit_w = freq_sel
    if opts.weight_nuisance and weights is not None:
        fit_w = weights.values if fit_w is None else fit_w * weights.values

    outcome_design, mediator_design = _mediation_designs(spec, mapping, opts)
    y = selected[spec.outcome].to_numpy(dtype=float)
    if spec.outcome_family == "logistic" and not set(np.unique(y)) <= {0.0, 1.0}:
        raise DataError("logistic outcome family needs a binary outcome")
    m_obs = selected[mediator].to_numpy(dtype=float)
    if spec.mediator_family == "logistic" and not set(np.unique(m_obs)) <= {0.0, 1.0}:
        raise DataError("logistic mediator family needs a binary mediator")

    outcome_fit = fit_glm(
        outcome_design.matrix(selected), y, spec.outcome_family,
        design=outcome_design, weights=fit_w, tol=opts.fit_tol, ridge=opts.ridge,
    )
    mediator_fit = fit_glm(
        mediator_design.matrix(selected), m_obs, spec.mediator_family,
        design=mediator_design, weights=fit_w, tol=opts.fit_tol, ridge=opts.ridge,
    )

    rng = np.random.default_rng([opts.seed, 2])

    def inner_mean(x: float, x_prime: float) -> np.ndarray:
        if spec.mediator_family == "logistic":
            p1 = mediator_fit.predict_rows(selected, {spec.exposure: x_prime})
            mu0 = outcome_fit.predict_rows(
                selected, {spec.exposure: x, mediator: 0.0}
            )
            mu1 = outcome_fit.predict_rows(
                selected, {spec.exposure: x, mediator: 1.0}
            )
            return mu0 * (1.0 - p1) + mu1 * p1
        m_mean = mediator_fit.predict_rows(selected, {spec.exposure: x_prime})
        if spec.outcome_family == "linear":
            # the outcome is linear in the mediator at fixed exposure, so
            # plugging the mediator mean integrates it out exactly
            work = selected.copy()
            work[mediator] = m_mean
            return outcome_fit.predict(
                outcome_design.matrix(work, {spec.exposure: x})
            )
        sd = math.sqrt(max(mediator_fit.sigma2, 0.0))
        total = np.zeros(len(selected))
        work = selected.copy()
        for _ in range(opts.mc_draws):
            work[mediator] = m_mean + sd * rng.standard_normal(len(selected))
            total += outcome_fit.predict(
                outcome_design.matrix(work, {spec.exposure: x})
            )
        return total / opts.mc_draws

    settings = [
        (opts.x_active, opts.x_active),
        (opts.x_active, opts.x_reference),
        (opts.x_reference, opts.x_reference),
    ]
    out: dict[str, dict[tuple[float, float], float]] = {}
    for mode in opts.modes():
        out[mode] = {}
    for x, x_prime in settings:
        mu = inner_mean(x, x_prime)
        for mode in opts.modes():
            if mode == "naive":
                avg_w = freq_sel if freq_sel is not None else np.ones(len(mu))
            else:
                avg_w = weights.values if freq_sel is None else (
                    weights.values * freq_sel
                )
            out[mode][(x, x_prime)] = float((avg_w * mu).sum() / avg_w.sum())
    return out


def _effects_from_means(
    means: dict[tuple[float, float], float],
    scale: str,
    x: float,
    x_prime: float,
) -> dict[str, float]:
    m_aa = means[(x, x)]
    m_ar = means[(x, x_prime)]
    m_rr = means[(x_prime, x_prime)]
    if scale == "difference":
        return {"TE": m_aa - m_rr, "NDE": m_ar - m_rr, "NIE": m_aa - m_ar}
    if scale == "risk-ratio":
        for name, denom in (("TE", m_rr), ("NDE", m_rr), ("NIE", m_ar)):
            if abs(denom) < 1e-300:
                raise DegenerateOutcome(f"{name} denominator is zero")
        return {"TE": m_aa / m_rr, "NDE": m_ar / m_rr, "NIE": m_aa / m_ar}
    raise EstimationError(f"unknown scale {scale!r}")


def estimate_mediation(
    data: Dataset, spec: ModelSpec, opts: EstimationOptions = EstimationOptions()
) -> list[EffectEstimate]:
    """Point (and optionally bootstrap) estimates of TE, NDE, NIE.

    The decompositions hold by construction: on the difference scale
    TE = NDE + NIE, on the ratio scale TE = NDE * NIE, both computed from
    the same three nested means.
    """
    if opts.scale == "risk-ratio" and spec.outcome_family != "logistic":
        raise RatioScaleRequiresBinaryOutcome(
            "risk-ratio estimates need a binary outcome (logistic family)"
        )

    def points(ds: Dataset) -> dict[str, float]:
        means = nested_counterfactual_means(ds, spec, opts)
        out = {}
        for mode, mm in means.items():
            effects = _effects_from_means(
                mm, opts.scale, opts.x_active, opts.x_reference
            )
            for estimand, value in effects.items():
                out[f"{estimand}/{mode}"] = value
        return out

    center = points(data)
    intervals = {}
    if opts.boot > 0:
        intervals = _bootstrap_statistics(points, data, opts.boot, opts.seed)

    results = []
    for estimand in ("TE", "NDE", "NIE"):
        for mode in opts.modes():
            key = f"{estimand}/{mode}"
            point = center[key]
            if opts.boot > 0:
                low, high = intervals[key]
                low, high = min(low, point), max(high, point)
            else:
                low = high = float("nan")
            results.append(EffectEstimate(
                estimand=estimand, scale=opts.scale,
                adjusted=(mode == "adjusted"), point=point,
                ci_low=low, ci_high=high,
                bootstrap_reps=opts.boot, seed=opts.seed,
            ))
    return results


# ---------------------------------------------------------------------------
# path-specific plug-in

MEDIATOR_COMBO_GUARD = 2 ** 12


def estimate_pse(
    data: Dataset,
    spec: ModelSpec,
    graph: Admg,
    query: PseQuery,
    pair: AdmissiblePair,
    opts: EstimationOptions = EstimationOptions(),
    skip_checks: bool = False,
) -> list[EffectEstimate]:
    """Plug-in estimate of the mean outcome under a path-specific setting.

    Column names of the exposure, mediators, and outcome must match the
    graph's vertex names. Mediator models condition on the exposure (when
    it is a graph parent), the mediator's mediator-parents, and z; the
    outcome model conditions on the exposure (when a parent), every
    mediator, and z. Exposure slots take the active value on chosen first
    edges and the reference value elsewhere. Returns one estimate per
    requested mode.
    """
    consistent, active = edge_consistent(graph, query)
    if not consistent:
        raise EdgeInconsistent("the chosen paths split a first-edge group")
    if not skip_checks:
        report = theorem3_check(graph, query, pair)
        if not report.verdict:
            raise IdentificationCheckFailed(report)

    (x_vertex,) = query.X if len(query.X) == 1 else (None,)
    if x_vertex is None:
        raise EstimationError("estimation supports a single exposure vertex")
    (y_vertex,) = query.Y if len(query.Y) == 1 else (None,)
    if y_vertex is None:
        raise EstimationError("estimation supports a single outcome vertex")
    if spec.exposure != x_vertex or spec.outcome != y_vertex:
        raise DataError(
            "spec exposure/outcome must match the graph query vertices"
        )

    order = topological_order(graph)
    from .criteria import _mediators_on_paths

    mediators = _mediators_on_paths(graph, query.X, query.Y)
    if set(spec.mediators) != set(mediators):
        raise DataError(
            f"spec mediators {sorted(spec.mediators)} must equal the causal-"
            f"path mediators {mediators}"
        )
    if list(spec.mediators) != mediators:
        raise DataError(
            f"mediators must be listed in topological order {mediators}"
        )
    if 2 ** len(mediators) > MEDIATOR_COMBO_GUARD:
        raise CombinatorialGuard(
            f"2^{len(mediators)} mediator combinations exceed the guard"
        )
    if spec.mediator_family != "logistic" or spec.outcome_family != "logistic":
        raise EstimationError(
            "the path-specific plug-in sums over binary mediators; use "
            "logistic mediator and outcome families"
        )

    used = [spec.exposure, *mediators, spec.outcome, *spec.z]
    data.require_complete(used, selected_only=True)
    data.require_complete(spec.zt, selected_only=False)
    freq = _freq(data, opts)
    frame, mapping = encode_categoricals(data, used)
    sel_mask = data.selected_mask
    selected = frame[sel_mask].reset_index(drop=True)
    freq_sel = freq[sel_mask] if freq is not None else None

    weights = None
    if "adjusted" in opts.modes():
        weights = selection_weights(
            data, spec.zt, interactions=_interactions(spec, opts),
            freq=freq, tol=opts.fit_tol, ridge=opts.ridge,
            response=opts.weight_response,
        )
    fit_w = freq_sel
    if opts.weight_nuisance and weights is not None:
        fit_w = weights.values if fit_w is None else fit_w * weights.values

    z_mains = [name for col in spec.z for name in mapping[col]]
    pairwise = _interactions(spec, opts)

    def slot(head: str) -> float:
        return (
            query.x_active if (x_vertex, head) in active else query.x_reference
        )

    # outcome model
    exposure_feeds_y = x_vertex in graph.parents(y_vertex)
    y_mains = ([spec.exposure] if exposure_feeds_y else []) + [*mediators, *z_mains]
    outcome_design = build_design(
        y_mains, pairwise=pairwise, saturated=opts.saturated,
        extra_products=(
            [(spec.exposure, m) for m in mediators] if exposure_feeds_y else []
        ),
    )
    y = selected[spec.outcome].to_numpy(dtype=float)
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise DataError("binary outcome required")
    outcome_fit = fit_glm(
        outcome_design.matrix(selected), y, "logistic",
        design=outcome_design, weights=fit_w, tol=opts.fit_tol,
        ridge=opts.ridge,
    )

    mediator_fits: dict[str, GlmFit] = {}
    mediator_designs: dict[str, Design] = {}
    for m in mediators:
        mains = []
        if x_vertex in graph.parents(m):
            mains.append(spec.exposure)
        mains += [p for p in mediators if p in graph.parents(m)]
        mains += z_mains
        design = build_design(mains, pairwise=pairwise, saturated=opts.saturated)
        m_col = selected[m].to_numpy(dtype=float)
        if not set(np.unique(m_col)) <= {0.0, 1.0}:
            raise DataError(f"mediator {m!r} must be binary")
        mediator_fits[m] = fit_glm(
            design.matrix(selected), m_col, "logistic",
            design=design, weights=fit_w, tol=opts.fit_tol, ridge=opts.ridge,
        )
        mediator_designs[m] = design

    # sum over all mediator value combinations
    n = len(selected)
    total = np.zeros(n)
    work = selected.copy()
    combos = np.array(
        np.meshgrid(*[[0.0, 1.0]] * len(mediators), indexing="ij")
    ).reshape(len(mediators), -1).T if mediators else np.zeros((1, 0))
    for combo in combos:
        for m, value in zip(mediators, combo):
            work[m] = value
        y_hat = outcome_fit.predict(
            outcome_design.matrix(work, {spec.exposure: slot(y_vertex)})
        )
        prob = np.ones(n)
        for m, value in zip(mediators, combo):
            p1 = mediator_fits[m].predict(
                mediator_designs[m].matrix(work, {spec.exposure: slot(m)})
            )
            prob *= p1 if value == 1.0 else (1.0 - p1)
        total += y_hat * prob

    results = []
    for mode in opts.modes():
        if mode == "naive":
            avg_w = freq_sel if freq_sel is not None else np.ones(n)
        else:
            avg_w = weights.values if freq_sel is None else (
                weights.values * freq_sel
            )
        point = float((avg_w * total).sum() / avg_w.sum())
        results.append(EffectEstimate(
            estimand="PSE", scale="mean", adjusted=(mode == "adjusted"),
            point=point, bootstrap_reps=0, seed=opts.seed,
        ))

    if opts.boot > 0:
        def points(ds: Dataset) -> dict[str, float]:
            sub = estimate_pse(
                ds, spec, graph, query, pair,
                replace(opts, boot=0), skip_checks=True,
            )
            return {
                ("adjusted" if e.adjusted else "naive"): e.point for e in sub
            }

        intervals = _bootstrap_statistics(points, data, opts.boot, opts.seed)
        out = []
        for est in results:
            mode = "adjusted" if est.adjusted else "naive"
            low, high = intervals[mode]
            out.append(replace(
                est,
                ci_low=min(low, est.point), ci_high=max(high, est.point),
                bootstrap_reps=opts.boot,
            ))
        results = out
    return results


# ---------------------------------------------------------------------------
# bootstrap


def _bootstrap_statistics(
    fn: Callable[[Dataset], dict[str, float]],
    data: Dataset,
    B: int,
    seed: int,
    alpha: float = 0.05,
) -> dict[str, tuple[float, float]]:
    """Percentile intervals for every statistic fn returns.

    Each replicate resamples the full row set (selected and non-selected
    rows jointly) with replacement and re-runs fn, re-fitting everything
    including the weights. Replicate seeds derive from (seed, index), so
    results do not depend on evaluation order. More than 10% failed
    replicates is an error.
    """
    if B < 1:
        raise EstimationError("bootstrap needs B >= 1")
    n = len(data)
    draws: dict[str, list[float]] = {}
    failures = 0
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        idx = rng.integers(0, n, size=n)
        try:
            stats = fn(data.subset(idx))
        except EstimationError:
            failures += 1
            continue
        for key, value in stats.items():
            draws.setdefault(key, []).append(value)
    if failures > 0.1 * B:
        raise EstimatorFailureRate(failures, B)
    out = {}
    for key, values in draws.items():
        arr = np.sort(np.asarray(values))
        out[key] = (
            float(np.percentile(arr, 100 * alpha / 2)),
            float(np.percentile(arr, 100 * (1 - alpha / 2))),
        )
    return out


def bootstrap_ci(
    estimator: Callable[[Dataset], float],
    data: Dataset,
    B: int,
    seed: int,
    alpha: float = 0.05,
) -> tuple[float, float]:
    """Percentile bootstrap interval for a scalar statistic of the data."""
    stats = _bootstrap_statistics(
        lambda ds: {"stat": estimator(ds)}, data, B, seed, alpha
    )
    return stats["stat"]
