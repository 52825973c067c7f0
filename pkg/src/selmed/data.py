"""Column-typed tables with a binary selection column and the structured
missingness that selection induces: selected rows carry every column,
non-selected rows carry only the externally observed ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

KINDS = ("binary", "categorical", "continuous")


def infer_kind(series: pd.Series) -> str:
    values = series.dropna()
    numeric = pd.to_numeric(values, errors="coerce")
    if numeric.isna().any():
        return "categorical"
    if set(np.unique(numeric)) <= {0.0, 1.0}:
        return "binary"
    return "continuous"


@dataclass
class Dataset:
    """A data table plus column kinds and the name of the selection column.

    The selection column must be 0/1 with no missing entries; validation of
    per-column completeness happens against the model that uses it (see
    `require_complete`).
    """

    df: pd.DataFrame
    selection_column: str
    kinds: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.selection_column not in self.df.columns:
            raise DataError(f"selection column {self.selection_column!r} missing")
        sel = self.df[self.selection_column]
        if sel.isna().any():
            raise DataError("selection column has missing values")
        if not set(np.unique(sel.to_numpy(dtype=float))) <= {0.0, 1.0}:
            raise DataError("selection column must be binary 0/1")
        for col in self.df.columns:
            self.kinds.setdefault(col, infer_kind(self.df[col]))
        for col, kind in self.kinds.items():
            if kind not in KINDS:
                raise DataError(f"unknown column kind {kind!r} for {col!r}")

    # -- accessors ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.df)

    @property
    def selected_mask(self) -> np.ndarray:
        return self.df[self.selection_column].to_numpy(dtype=float) == 1.0

    @property
    def n_selected(self) -> int:
        return int(self.selected_mask.sum())

    def column(self, name: str) -> pd.Series:
        if name not in self.df.columns:
            raise DataError(f"no column {name!r}")
        return self.df[name]

    def require_complete(self, columns: Iterable[str], selected_only: bool) -> None:
        """Raise unless the named columns are non-missing on the relevant rows."""
        rows = self.df[self.selected_mask] if selected_only else self.df
        for col in columns:
            if col not in self.df.columns:
                raise DataError(f"no column {col!r}")
            if rows[col].isna().any():
                where = "selected rows" if selected_only else "all rows"
                raise DataError(f"column {col!r} has missing values on {where}")

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(
            df=self.df.iloc[indices].reset_index(drop=True),
            selection_column=self.selection_column,
            kinds=dict(self.kinds),
        )

    def to_csv(self, path: str) -> None:
        self.df.to_csv(path, index=False)


def read_dataset(
    path: str,
    selection_column: str,
    kinds: Optional[dict[str, str]] = None,
) -> Dataset:
    """Load a CSV with a header row; empty cells are missing values."""
    df = pd.read_csv(
        path, dtype=str, keep_default_na=False, na_values=[""],
    )
    out = {}
    resolved = dict(kinds or {})
    for col in df.columns:
        kind = resolved.get(col) or infer_kind(df[col])
        resolved[col] = kind
        if kind == "categorical":
            out[col] = df[col]
        else:
            out[col] = pd.to_numeric(df[col], errors="raise")
    return Dataset(
        df=pd.DataFrame(out), selection_column=selection_column, kinds=resolved
    )


def encode_categoricals(
    data: Dataset, columns: Sequence[str]
) -> tuple[pd.DataFrame, dict[str, list[str]]]:
    """One-hot encode the categorical members of `columns` (first level
    dropped), leaving other columns as floats.

    Returns the encoded frame over exactly the requested columns plus the
    selection column, and a map from each input column to the numeric
    column name(s) representing it.
    """
    pieces = {data.selection_column: data.column(data.selection_column).astype(float)}
    mapping: dict[str, list[str]] = {}
    for col in columns:
        if col == data.selection_column:
            mapping[col] = [col]
            continue
        if data.kinds.get(col) == "categorical":
            series = data.column(col)
            levels = sorted(series.dropna().unique())
            names = []
            for level in levels[1:]:
                name = f"{col}={level}"
                pieces[name] = (series == level).astype(float).where(
                    series.notna(), np.nan
                )
                names.append(name)
            mapping[col] = names
        else:
            pieces[col] = data.column(col).astype(float)
            mapping[col] = [col]
    return pd.DataFrame(pieces), mapping


@dataclass(frozen=True)
class ModelSpec:
    """Roles of the data columns in the nuisance models."""

    exposure: str
    mediators: tuple[str, ...]
    outcome: str
    z: tuple[str, ...] = ()
    zt: tuple[str, ...] = ()
    interactions: bool = False
    outcome_family: str = "logistic"
    mediator_family: str = "logistic"

    def __post_init__(self):
        if isinstance(self.mediators, str):
            raise DataError("mediators must be a sequence of column names")
        object.__setattr__(self, "mediators", tuple(self.mediators))
        object.__setattr__(self, "z", tuple(self.z))
        object.__setattr__(self, "zt", tuple(self.zt))
        if not set(self.zt) <= set(self.z):
            raise DataError("zt must be a subset of z")
        for fam in (self.outcome_family, self.mediator_family):
            if fam not in ("logistic", "linear"):
                raise DataError(f"unknown family {fam!r}")
        roles = [self.exposure, self.outcome, *self.mediators, *self.z]
        if len(set(roles)) != len(roles):
            raise DataError("exposure, mediators, outcome, z must be distinct")

    def model_columns(self) -> list[str]:
        return [self.exposure, *self.mediators, self.outcome, *self.z]
