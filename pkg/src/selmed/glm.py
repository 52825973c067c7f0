"""Design matrices and generalized linear model fitting.

Logistic models are fit by Newton scoring (iteratively reweighted least
squares) to a score-norm tolerance; linear models are solved in one
weighted least-squares step. Diverging coefficients abort with a
separation error instead of being silently regularized, because the exact
oracle comparisons depend on the fit solving the stated score equations.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .errors import NonConvergence, RankDeficient, SeparationDetected

COEF_GUARD = 15.0


@dataclass(frozen=True)
class Term:
    """One design column: a product of input columns; () is the intercept."""

    columns: tuple[str, ...]

    @property
    def name(self) -> str:
        return ":".join(self.columns) if self.columns else "1"


@dataclass(frozen=True)
class Design:
    terms: tuple[Term, ...]

    @property
    def names(self) -> list[str]:
        return [t.name for t in self.terms]

    def input_columns(self) -> list[str]:
        seen: list[str] = []
        for t in self.terms:
            for c in t.columns:
                if c not in seen:
                    seen.append(c)
        return seen

    def matrix(
        self,
        df: pd.DataFrame,
        overrides: Optional[dict[str, float]] = None,
    ) -> np.ndarray:
        """Evaluate the design on `df`, substituting override values for
        whole columns (used to evaluate counterfactual settings)."""
        overrides = overrides or {}
        n = len(df)
        cols: dict[str, np.ndarray] = {}

        def col(name: str) -> np.ndarray:
            if name not in cols:
                if name in overrides:
                    cols[name] = np.full(n, float(overrides[name]))
                else:
                    cols[name] = df[name].to_numpy(dtype=float)
            return cols[name]

        out = np.empty((n, len(self.terms)))
        for j, t in enumerate(self.terms):
            if not t.columns:
                out[:, j] = 1.0
            else:
                acc = col(t.columns[0]).copy()
                for c in t.columns[1:]:
                    acc = acc * col(c)
                out[:, j] = acc
        return out


def build_design(
    mains: Sequence[str],
    pairwise: bool = False,
    saturated: bool = False,
    extra_products: Sequence[tuple[str, str]] = (),
) -> Design:
    """Intercept + main effects, optionally with pairwise products, named
    extra products, or the full product expansion (for saturated fits over
    binary regressors)."""
    mains = list(dict.fromkeys(mains))
    if saturated:
        terms = [
            Term(tuple(c))
            for k in range(len(mains) + 1)
            for c in combinations(mains, k)
        ]
        return Design(tuple(terms))
    terms = [Term(())] + [Term((c,)) for c in mains]
    seen = {t.columns for t in terms}
    for a, b in extra_products:
        key = tuple(sorted((a, b)))
        if key not in seen:
            terms.append(Term(key))
            seen.add(key)
    if pairwise:
        for a, b in combinations(mains, 2):
            key = tuple(sorted((a, b)))
            if key not in seen:
                terms.append(Term(key))
                seen.add(key)
    return Design(tuple(terms))


@dataclass
class GlmFit:
    """A fitted GLM: coefficients per design term plus convergence facts."""

    design: Design
    family: str
    coefficients: np.ndarray
    converged: bool
    iterations: int
    max_abs_score: float
    sigma2: float = float("nan")  # residual variance, linear family only

    def coefficient(self, term_name: str) -> float:
        return float(self.coefficients[self.design.names.index(term_name)])

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coefficients

    def predict(self, X: np.ndarray) -> np.ndarray:
        eta = self.linear_predictor(X)
        if self.family == "logistic":
            return sigmoid(eta)
        return eta

    def predict_rows(
        self, df: pd.DataFrame, overrides: Optional[dict[str, float]] = None
    ) -> np.ndarray:
        return self.predict(self.design.matrix(df, overrides))


def sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta, dtype=float)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ex = np.exp(eta[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def fit_glm(
    X: np.ndarray,
    y: np.ndarray,
    family: str,
    design: Optional[Design] = None,
    weights: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    ridge: float = 0.0,
) -> GlmFit:
    """Fit a linear or logistic model, optionally with prior weights.

    Weights act as frequency/prior weights in the score and information;
    they may be fractional (exact-distribution fits use probabilities).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if design is None:
        design = Design(tuple(Term((f"x{j}",)) for j in range(p)))
    names = design.names

    if family == "linear":
        WX = X * w[:, None]
        xtx = X.T @ WX + ridge * np.eye(p)
        rank = np.linalg.matrix_rank(xtx)
        if rank < p:
            raise RankDeficient(f"design has rank {rank} < {p} columns")
        beta = np.linalg.solve(xtx, WX.T @ y)
        resid = y - X @ beta
        score = X.T @ (w * resid) - ridge * beta
        dof = max(w.sum() - p, 1.0)
        sigma2 = float((w * resid ** 2).sum() / dof)
        return GlmFit(
            design=design, family="linear", coefficients=beta,
            converged=True, iterations=1,
            max_abs_score=float(np.abs(score).max(initial=0.0)),
            sigma2=sigma2,
        )

    if family != "logistic":
        raise ValueError(f"unknown family {family!r}")
    if not set(np.unique(y)) <= {0.0, 1.0}:
        raise ValueError("logistic family needs a binary 0/1 response")

    beta = np.zeros(p)
    for iteration in range(max_iter + 1):
        mu = sigmoid(X @ beta)
        score = X.T @ (w * (y - mu)) - ridge * beta
        norm = float(np.abs(score).max(initial=0.0))
        if norm <= tol:
            return GlmFit(
                design=design, family="logistic", coefficients=beta,
                converged=True, iterations=iteration, max_abs_score=norm,
            )
        if iteration == max_iter:
            break
        info = X.T @ (X * (w * mu * (1.0 - mu))[:, None]) + ridge * np.eye(p)
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            raise RankDeficient(
                "singular information matrix; drop collinear terms"
            ) from None
        beta = beta + step
        worst = int(np.argmax(np.abs(beta)))
        if abs(beta[worst]) > COEF_GUARD and ridge == 0.0:
            raise SeparationDetected(names[worst], float(beta[worst]))
    raise NonConvergence(max_iter, norm)
