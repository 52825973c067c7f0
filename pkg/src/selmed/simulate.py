"""Simulation harness: a continuous mediation data-generating process with
tunable confounder-driven selection, and the naive-versus-adjusted sweep
over selection strengths.

The generating process is
    X ~ Bernoulli(0.5)
    C ~ Normal(0, 1)
    M = X + C + eps_M
    Y = 0.5 X + M + 2 M X + 0.5 C + eps_Y
with standard-normal errors, so the true natural direct effect is 0.5 and
the true natural indirect effect is 3. Selection follows
logit P(S=1 | C) = beta_s * C; rows that survive selection are subsampled
to a fixed analysis size so estimates are comparable across selection
strengths.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .data import Dataset, ModelSpec
from .errors import EstimationError, InsufficientSelected
from .estimate import EstimationOptions, estimate_mediation
from .glm import sigmoid

TRUE_NDE = 0.5
TRUE_NIE = 3.0

SWEEP_SPEC = ModelSpec(
    exposure="X", mediators=("M",), outcome="Y", z=("C",), zt=("C",),
    outcome_family="linear", mediator_family="linear",
)


@dataclass(frozen=True)
class ContinuousDgp:
    beta_s: float
    n0: int = 10_000
    n: int = 1_000
    seed: int = 0

    def __post_init__(self):
        if self.n > self.n0:
            raise EstimationError("analysis size n cannot exceed n0")
        if self.beta_s < 0:
            raise EstimationError("beta_s must be nonnegative")


def run_dgp(cfg: ContinuousDgp) -> Dataset:
    """Generate one dataset: n analysed rows with full columns, all other
    rows with only the external columns (X and C) retained.

    The selection column S marks membership in the analysis sample. All
    non-analysed rows from the same draw stay in the table so weights can
    be fit against the full referred population, and the survival
    indicator R (did the unit survive confounder-driven dropout, before
    the fixed-size thinning) is kept as an external column: R is the
    indicator whose inverse probability removes the selection bias, while
    the extra uniform thinning from R=1 down to n rows is covariate-free
    and cancels in normalized averages.
    """
    rng = np.random.default_rng(cfg.seed)
    x = (rng.random(cfg.n0) < 0.5).astype(float)
    c = rng.standard_normal(cfg.n0)
    m = 1.0 * x + 1.0 * c + rng.standard_normal(cfg.n0)
    y = 0.5 * x + 1.0 * m + 2.0 * (m * x) + 0.5 * c + rng.standard_normal(cfg.n0)

    survived = rng.random(cfg.n0) < sigmoid(cfg.beta_s * c)
    n_survived = int(survived.sum())
    if n_survived < cfg.n:
        raise InsufficientSelected(n_survived, cfg.n, cfg.n0)
    sampled_idx = rng.choice(np.flatnonzero(survived), size=cfg.n, replace=False)
    analysed = np.zeros(cfg.n0, dtype=bool)
    analysed[sampled_idx] = True

    df = pd.DataFrame({
        "X": x,
        "C": c,
        "M": np.where(analysed, m, np.nan),
        "Y": np.where(analysed, y, np.nan),
        "S": analysed.astype(float),
        "R": survived.astype(float),
    })
    return Dataset(df=df, selection_column="S", kinds={
        "X": "binary", "C": "continuous", "M": "continuous",
        "Y": "continuous", "S": "binary", "R": "binary",
    })


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)

    COLUMNS = (
        "beta_s", "estimand", "mode", "mean", "ci_low", "ci_high",
        "reps", "failures",
    )

    def cell(self, beta_s: float, estimand: str, mode: str) -> dict:
        for row in self.rows:
            if (
                row["beta_s"] == beta_s
                and row["estimand"] == estimand
                and row["mode"] == mode
            ):
                return row
        raise KeyError((beta_s, estimand, mode))

    def write_csv(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: row[k] for k in self.COLUMNS})


def _cell_seed(master_seed: int, beta_index: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(master_seed, beta_index, rep))


def _run_cell(args) -> tuple[int, int, Optional[dict[str, float]]]:
    beta_index, rep, beta_s, n0, n, master_seed = args
    seed = int(_cell_seed(master_seed, beta_index, rep).generate_state(1)[0])
    try:
        data = run_dgp(ContinuousDgp(beta_s=beta_s, n0=n0, n=n, seed=seed))
        estimates = estimate_mediation(
            data, SWEEP_SPEC,
            EstimationOptions(scale="difference", mode="both", boot=0),
        )
    except EstimationError:
        return beta_index, rep, None
    out = {}
    for est in estimates:
        mode = "adjusted" if est.adjusted else "naive"
        out[f"{est.estimand}/{mode}"] = est.point
    return beta_index, rep, out


def sweep(
    beta_grid: Sequence[float],
    reps: int,
    n0: int = 10_000,
    n: int = 1_000,
    master_seed: int = 0,
    threads: int = 1,
) -> SweepResult:
    """Replicate the naive-versus-adjusted comparison over the grid.

    Each cell draws its own dataset and estimates TE/NDE/NIE both ways;
    per-cell means carry a normal-approximation 95% band over replicates.
    Failed cells are counted, never silently dropped. Cell seeds derive
    from (master seed, grid index, replicate), so results are identical
    regardless of execution order or thread count.
    """
    if not beta_grid:
        raise EstimationError("beta grid must be nonempty")
    jobs = [
        (bi, rep, float(beta_s), n0, n, master_seed)
        for bi, beta_s in enumerate(beta_grid)
        for rep in range(reps)
    ]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_cell, jobs, chunksize=8))
    else:
        outcomes = [_run_cell(job) for job in jobs]

    by_cell: dict[int, list[dict]] = {}
    failures: dict[int, int] = {}
    for beta_index, rep, stats in outcomes:
        if stats is None:
            failures[beta_index] = failures.get(beta_index, 0) + 1
        else:
            by_cell.setdefault(beta_index, []).append(stats)

    result = SweepResult()
    for bi, beta_s in enumerate(beta_grid):
        stats = by_cell.get(bi, [])
        n_ok = len(stats)
        for estimand in ("TE", "NDE", "NIE"):
            for mode in ("naive", "adjusted"):
                key = f"{estimand}/{mode}"
                values = np.array([s[key] for s in stats]) if stats else np.array([])
                if n_ok == 0:
                    mean = ci_low = ci_high = float("nan")
                else:
                    mean = float(values.mean())
                    se = float(values.std(ddof=1) / np.sqrt(n_ok)) if n_ok > 1 else 0.0
                    ci_low, ci_high = mean - 1.96 * se, mean + 1.96 * se
                result.rows.append({
                    "beta_s": float(beta_s), "estimand": estimand,
                    "mode": mode, "mean": mean,
                    "ci_low": ci_low, "ci_high": ci_high,
                    "reps": n_ok, "failures": failures.get(bi, 0),
                })
    return result


def parse_beta_grid(text: str) -> list[float]:
    """Parse "0,0.5,1" or the arithmetic shorthand "0,0.25,...,2"."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if "..." in parts:
        idx = parts.index("...")
        if idx < 2 or idx != len(parts) - 2:
            raise EstimationError(
                "grid shorthand is 'first,second,...,last'"
            )
        first, second = float(parts[idx - 2]), float(parts[idx - 1])
        last = float(parts[idx + 1])
        step = second - first
        if step <= 0 or last < second:
            raise EstimationError("grid shorthand must increase")
        count = int(round((last - first) / step)) + 1
        grid = [first + i * step for i in range(count)]
        if abs(grid[-1] - last) > 1e-9:
            raise EstimationError("grid step does not divide the range")
        return grid
    return [float(p) for p in parts]


DEFAULT_BETA_GRID = [i * 0.25 for i in range(9)]  # nine points on [0, 2]
