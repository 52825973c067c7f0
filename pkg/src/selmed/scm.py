"""Exact counterfactual oracle for discrete structural causal models.

Every non-selection vertex carries a deterministic structural function of
its parents and a finite-support noise term; the selection vertex is a
logistic function of its parents. Counterfactual expectations are computed
by enumerating all joint noise configurations, with exposure inputs
overridden per intercepted first edge: a child reads the assigned value in
place of its parent's computed value, which is exactly the semantics of
intervening on an extended node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .data import Dataset
from .errors import (
    GraphError,
    StateSpaceTooLarge,
    ZeroProbabilityConditioning,
)
from .graph import Admg, topological_order

STATE_SPACE_GUARD = 10 ** 7


@dataclass(frozen=True)
class Noise:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise GraphError("noise probabilities must sum to 1")
        if any(p < 0 for p in self.probs):
            raise GraphError("noise probabilities must be nonnegative")


@dataclass(frozen=True)
class DiscreteScm:
    """A structural model over the non-selection vertices of `graph`.

    `functions[v]` maps (parent values dict, noise value) to v's value;
    `support[v]` declares v's value range (needed to enumerate the sums in
    the closed-form identification formulas). `selection_logit` holds the
    intercept and per-parent coefficients of P(S=1 | parents).
    """

    graph: Admg
    noise: Mapping[str, Noise]
    functions: Mapping[str, Callable[[dict, float], float]]
    support: Mapping[str, tuple[float, ...]]
    selection_logit: tuple[float, Mapping[str, float]] = (0.0, {})

    def __post_init__(self):
        if self.graph.bidirected:
            raise GraphError(
                "discrete structural models require independent noises; "
                "replace bidirected edges with explicit latent vertices"
            )
        for v in self.model_vertices():
            if v not in self.noise or v not in self.functions:
                raise GraphError(f"vertex {v!r} lacks a noise or function")

    def model_vertices(self) -> list[str]:
        return [
            v for v in topological_order(self.graph) if v != self.graph.selection
        ]

    def p_selected(self, values: Mapping[str, float]) -> float:
        if self.graph.selection is None:
            raise GraphError("model has no selection vertex")
        intercept, coefs = self.selection_logit
        eta = intercept + sum(c * values[p] for p, c in coefs.items())
        return 1.0 / (1.0 + math.exp(-eta))


def _noise_configurations(scm: DiscreteScm):
    order = scm.model_vertices()
    total = 1
    for v in order:
        total *= len(scm.noise[v].values)
        if total > STATE_SPACE_GUARD:
            raise StateSpaceTooLarge(
                f"noise configuration count exceeds {STATE_SPACE_GUARD}"
            )
    import itertools

    spaces = [
        list(zip(scm.noise[v].values, scm.noise[v].probs)) for v in order
    ]
    for combo in itertools.product(*spaces):
        weight = 1.0
        noises = {}
        for v, (value, prob) in zip(order, combo):
            weight *= prob
            noises[v] = value
        yield noises, weight


def _evaluate(
    scm: DiscreteScm,
    noises: Mapping[str, float],
    assignment: Mapping[tuple[str, str], float],
) -> dict[str, float]:
    values: dict[str, float] = {}
    for v in scm.model_vertices():
        pa_vals = {}
        for p in scm.graph.parents(v):
            if p == scm.graph.selection:
                continue
            pa_vals[p] = assignment.get((p, v), values[p])
        values[v] = scm.functions[v](pa_vals, noises[v])
    return values


def oracle_counterfactual(
    scm: DiscreteScm,
    assignment: Mapping[tuple[str, str], float],
    outcome: str,
) -> float:
    """Exact expectation of `outcome` with each edge in `assignment`
    carrying the assigned value instead of the parent's value.

    A nested counterfactual like "outcome under x with the mediator
    behaving as under x'" is the assignment {(X, Y): x, (X, M): x'}.
    """
    scm.graph.require_all([outcome])
    for tail, head in assignment:
        if (tail, head) not in scm.graph.directed:
            raise GraphError(f"assignment edge {tail}->{head} not in graph")
    total = 0.0
    for noises, weight in _noise_configurations(scm):
        values = _evaluate(scm, noises, assignment)
        total += weight * values[outcome]
    return total


# ---------------------------------------------------------------------------
# exact joint and formula evaluation


@dataclass
class ExactJoint:
    """The SCM-implied joint over model vertices, with selection weights."""

    order: list[str]
    rows: list[tuple[dict[str, float], float, float]]  # (values, p, p * P(S=1|values))

    @classmethod
    def of(cls, scm: DiscreteScm) -> "ExactJoint":
        order = scm.model_vertices()
        acc: dict[tuple, float] = {}
        for noises, weight in _noise_configurations(scm):
            values = _evaluate(scm, noises, {})
            key = tuple(values[v] for v in order)
            acc[key] = acc.get(key, 0.0) + weight
        rows = []
        for key, p in sorted(acc.items()):
            values = dict(zip(order, key))
            p_s1 = p * scm.p_selected(values) if scm.graph.selection else 0.0
            rows.append((values, p, p_s1))
        return cls(order=order, rows=rows)

    def _mass(self, cond: Mapping[str, float], selected: Optional[bool]) -> float:
        total = 0.0
        for values, p, p_s1 in self.rows:
            if any(values[k] != v for k, v in cond.items()):
                continue
            if selected is None:
                total += p
            elif selected:
                total += p_s1
            else:
                total += p - p_s1
        return total

    def probability(
        self,
        event: Mapping[str, float],
        given: Mapping[str, float] = {},
        selected: Optional[bool] = None,
    ) -> float:
        denom = self._mass(given, selected)
        if denom <= 0.0:
            raise ZeroProbabilityConditioning(
                {**given, "S": selected} if selected is not None else dict(given)
            )
        return self._mass({**given, **event}, selected) / denom

    def expectation(
        self,
        target: str,
        given: Mapping[str, float] = {},
        selected: Optional[bool] = None,
    ) -> float:
        denom = self._mass(given, selected)
        if denom <= 0.0:
            raise ZeroProbabilityConditioning(
                {**given, "S": selected} if selected is not None else dict(given)
            )
        total = 0.0
        for values, p, p_s1 in self.rows:
            if any(values[k] != v for k, v in given.items()):
                continue
            mass = p if selected is None else (p_s1 if selected else p - p_s1)
            total += mass * values[target]
        return total / denom


def _value_combos(scm: DiscreteScm, vertices: Sequence[str]):
    import itertools

    spaces = [scm.support[v] for v in vertices]
    for combo in itertools.product(*spaces):
        yield dict(zip(vertices, combo))


def _covariate_mixture(
    joint: ExactJoint, scm: DiscreteScm, Z: Sequence[str], ZT: Sequence[str]
):
    """Weights p(z \\ zT | zT, S=1) * p(zT) per full z configuration."""
    Z = list(Z)
    ZT = list(ZT)
    for z_vals in _value_combos(scm, Z):
        zt_vals = {k: z_vals[k] for k in ZT}
        p_zt = joint._mass(zt_vals, None)
        if p_zt == 0.0:
            continue
        rest = {k: v for k, v in z_vals.items() if k not in ZT}
        if rest:
            mix = joint.probability(rest, zt_vals, selected=True) * p_zt
        else:
            mix = p_zt
        if mix == 0.0:
            continue
        yield z_vals, mix


def oracle_formula_eval(
    scm: DiscreteScm,
    formula: str,
    X: str,
    Y: str,
    pair,
    x: float,
    x_prime: float = 0.0,
    mediator: Optional[str] = None,
    mediators: Sequence[str] = (),
    active_edges: Iterable[tuple[str, str]] = (),
) -> float:
    """Evaluate an identification formula exactly on the SCM-implied joint.

    formula: "Eq3" plain adjustment, "Eq4" selection-aware adjustment,
    "Eq6" selected mediation formula (needs `mediator`), "Thm3"
    path-specific adjustment (needs ordered `mediators` and the active
    first edges). True conditional probabilities replace fitted models
    everywhere; the result is the formula's value for E[Y(...)] on the
    mean scale.
    """
    joint = ExactJoint.of(scm)
    Z = sorted(pair.Z)
    ZT = sorted(pair.ZT)
    g = scm.graph

    if formula == "Eq3":
        total = 0.0
        for z_vals in _value_combos(scm, Z):
            p_z = joint._mass(z_vals, None)
            if p_z == 0.0:
                continue
            total += p_z * joint.expectation(Y, {X: x, **z_vals}, selected=None)
        return total

    if formula == "Eq4":
        total = 0.0
        for z_vals, mix in _covariate_mixture(joint, scm, Z, ZT):
            total += mix * joint.expectation(Y, {X: x, **z_vals}, selected=True)
        return total

    if formula == "Eq6":
        if mediator is None:
            raise ValueError("Eq6 needs the mediator")
        total = 0.0
        for z_vals, mix in _covariate_mixture(joint, scm, Z, ZT):
            for m_vals in _value_combos(scm, [mediator]):
                p_m = joint.probability(
                    m_vals, {X: x_prime, **z_vals}, selected=True
                )
                if p_m == 0.0:
                    continue
                mean_y = joint.expectation(
                    Y, {X: x, **m_vals, **z_vals}, selected=True
                )
                total += mix * p_m * mean_y
        return total

    if formula == "Thm3":
        active = set(active_edges)
        mediators = list(mediators)

        def slot(head: str) -> float:
            return x if (X, head) in active else x_prime

        total = 0.0
        for z_vals, mix in _covariate_mixture(joint, scm, Z, ZT):
            for m_vals in _value_combos(scm, mediators):
                weight = mix
                for m in mediators:
                    cond = dict(z_vals)
                    if X in g.parents(m):
                        cond[X] = slot(m)
                    for p in g.parents(m):
                        if p in mediators:
                            cond[p] = m_vals[p]
                    weight *= joint.probability(
                        {m: m_vals[m]}, cond, selected=True
                    )
                    if weight == 0.0:
                        break
                if weight == 0.0:
                    continue
                cond = {**m_vals, **z_vals}
                if X in g.parents(Y):
                    cond[X] = slot(Y)
                total += weight * joint.expectation(Y, cond, selected=True)
        return total

    raise ValueError(f"unknown formula {formula!r}")


# ---------------------------------------------------------------------------
# random SCM corpora and dataset emission


def random_binary_scm(
    graph: Admg,
    rng: np.random.Generator,
    noise_low: float = 0.1,
    noise_high: float = 0.9,
    selection_scale: float = 1.5,
) -> DiscreteScm:
    """Binary SCM with random truth tables on `graph`.

    Each vertex computes a random boolean function of its parents, flipped
    by a Bernoulli noise bit; the flip keeps every conditional probability
    inside [noise_low, noise_high], so the conditionals the identification
    formulas divide by are always positive.
    """
    functions = {}
    noise = {}
    support = {}
    for v in topological_order(graph):
        if v == graph.selection:
            continue
        parents = tuple(sorted(p for p in graph.parents(v) if p != graph.selection))
        table = {
            combo: int(rng.integers(0, 2))
            for combo in np.ndindex(*([2] * len(parents)))
        }

        def fn(pa_vals, eps, parents=parents, table=table):
            key = tuple(int(pa_vals[p]) for p in parents)
            return float(table[key] ^ int(eps))

        p_noise = float(rng.uniform(noise_low, noise_high))
        functions[v] = fn
        noise[v] = Noise(values=(0.0, 1.0), probs=(1.0 - p_noise, p_noise))
        support[v] = (0.0, 1.0)

    logit: tuple[float, dict[str, float]] = (0.0, {})
    if graph.selection is not None:
        parents = sorted(
            p for p in graph.parents(graph.selection)
        )
        logit = (
            float(rng.uniform(-1.0, 1.0)),
            {p: float(rng.uniform(-selection_scale, selection_scale)) for p in parents},
        )
    return DiscreteScm(
        graph=graph, noise=noise, functions=functions,
        support=support, selection_logit=logit,
    )


def interventional_mean_truncated(scm: DiscreteScm, X: str, x: float, Y: str) -> float:
    """E[Y(x)] by truncated factorization over the exact joint: drop X's
    mechanism, fix X=x, and propagate. An independent cross-check for the
    noise-enumeration oracle."""
    order = scm.model_vertices()
    total = 0.0

    def rec(i: int, values: dict, weight: float):
        nonlocal total
        if weight == 0.0:
            return
        if i == len(order):
            total += weight * values[Y]
            return
        v = order[i]
        if v == X:
            rec(i + 1, {**values, v: x}, weight)
            return
        parents = [p for p in scm.graph.parents(v) if p != scm.graph.selection]
        for value in scm.support[v]:
            # P(v = value | parents) from the vertex mechanism
            p_val = 0.0
            for nval, nprob in zip(scm.noise[v].values, scm.noise[v].probs):
                if scm.functions[v]({p: values[p] for p in parents}, nval) == value:
                    p_val += nprob
            rec(i + 1, {**values, v: value}, weight * p_val)

    rec(0, {}, 1.0)
    return total


def forward_sample(
    scm: DiscreteScm,
    n: int,
    rng: np.random.Generator,
    assignment: Mapping[tuple[str, str], float] = {},
) -> pd.DataFrame:
    """Vectorized forward simulation (with optional edge assignments),
    including the selection column when the graph has one."""
    cols: dict[str, np.ndarray] = {}
    for v in scm.model_vertices():
        nz = scm.noise[v]
        eps = rng.choice(np.array(nz.values), size=n, p=np.array(nz.probs))
        parents = sorted(p for p in scm.graph.parents(v) if p != scm.graph.selection)
        out = np.empty(n)
        if not parents:
            for nval in nz.values:
                out[eps == nval] = scm.functions[v]({}, nval)
        else:
            stacked = [
                np.full(n, assignment[(p, v)]) if (p, v) in assignment else cols[p]
                for p in parents
            ]
            combos = {}
            for combo in np.ndindex(*([2] * len(parents))):
                for nval in nz.values:
                    combos[combo + (nval,)] = scm.functions[v](
                        dict(zip(parents, map(float, combo))), nval
                    )
            key = np.zeros(n, dtype=int)
            for arr in stacked:
                key = key * 2 + arr.astype(int)
            key = key * len(nz.values) + np.searchsorted(
                np.array(nz.values), eps
            )
            lookup = np.empty(2 ** len(parents) * len(nz.values))
            for combo, value in combos.items():
                idx = 0
                for c in combo[:-1]:
                    idx = idx * 2 + int(c)
                idx = idx * len(nz.values) + list(nz.values).index(combo[-1])
                lookup[idx] = value
            out = lookup[key]
        cols[v] = out
    if scm.graph.selection is not None:
        intercept, coefs = scm.selection_logit
        eta = np.full(n, intercept)
        for p, c in coefs.items():
            eta += c * cols[p]
        p_sel = 1.0 / (1.0 + np.exp(-eta))
        cols[scm.graph.selection] = (rng.random(n) < p_sel).astype(float)
    return pd.DataFrame(cols)


def exact_selected_dataset(scm: DiscreteScm, zt: Sequence[str]) -> Dataset:
    """The exact selected-and-external data as fractional counts.

    Selected rows carry every model column with weight P(values, S=1);
    non-selected rows carry only the external columns, aggregated to one
    row per external configuration with weight P(zt values, S=0). Running
    an estimator on this dataset with `freq_col="count"` evaluates it on
    the exact population the selection mechanism induces.
    """
    joint = ExactJoint.of(scm)
    sel = scm.graph.selection
    records = []
    for values, p, p_s1 in joint.rows:
        if p_s1 > 0.0:
            records.append({**values, sel: 1.0, "count": p_s1})
    ext: dict[tuple, float] = {}
    for values, p, p_s1 in joint.rows:
        key = tuple(values[c] for c in zt)
        ext[key] = ext.get(key, 0.0) + (p - p_s1)
    for key, mass in sorted(ext.items()):
        if mass <= 0.0:
            continue
        row = {c: float("nan") for c in joint.order}
        row.update(dict(zip(zt, key)))
        row[sel] = 0.0
        row["count"] = mass
        records.append(row)
    df = pd.DataFrame.from_records(records)
    return Dataset(df=df, selection_column=sel)


def sampled_selected_dataset(
    scm: DiscreteScm, zt: Sequence[str], n: int, rng: np.random.Generator
) -> Dataset:
    """Multinomial draw of `n` units over the exact cells, emitted in the
    same frequency-weighted layout as `exact_selected_dataset`."""
    joint = ExactJoint.of(scm)
    sel = scm.graph.selection
    cells = []
    probs = []
    for values, p, p_s1 in joint.rows:
        if p_s1 > 0:
            cells.append((values, 1.0))
            probs.append(p_s1)
        if p - p_s1 > 0:
            cells.append((values, 0.0))
            probs.append(p - p_s1)
    counts = rng.multinomial(n, np.array(probs) / sum(probs))
    records = []
    for (values, s), count in zip(cells, counts):
        if count == 0:
            continue
        if s == 1.0:
            records.append({**values, sel: s, "count": float(count)})
        else:
            row = {c: float("nan") for c in joint.order}
            row.update({c: values[c] for c in zt})
            row[sel] = 0.0
            row["count"] = float(count)
            records.append(row)
    df = pd.DataFrame.from_records(records)
    return Dataset(df=df, selection_column=sel)
