"""Identification criteria for total, mediation, and path-specific effects
under selection bias.

Every check returns a CriterionReport whose conditions carry a concrete
witness (an open path or an offending vertex) when they fail, so a negative
verdict is always diagnosable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional

from .errors import (
    EdgeInconsistent,
    MediatorMismatch,
    NoSelectionVertex,
    OverlapError,
    SearchSpaceTooLarge,
)
from .graph import Admg, Path, PathSetPi, descendants, districts, proper_causal_paths
from .separation import SeparationQuery, find_open_path, m_separated
from .surgery import extend_graph, proper_backdoor_graph, remove_incoming


@dataclass(frozen=True)
class AdmissiblePair:
    """Candidate covariate sets: Z for confounding, ZT with external data."""

    Z: frozenset[str]
    ZT: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "Z", frozenset(self.Z))
        object.__setattr__(self, "ZT", frozenset(self.ZT))
        if not self.ZT <= self.Z:
            raise OverlapError(
                f"ZT must be a subset of Z: {sorted(self.ZT - self.Z)} outside Z"
            )


@dataclass(frozen=True)
class Condition:
    label: str
    passed: bool
    witness: Optional[object] = None

    def witness_json(self):
        if self.witness is None:
            return None
        if isinstance(self.witness, Path):
            return self.witness.to_json()
        return self.witness

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "passed": self.passed,
            "witness": self.witness_json(),
        }


@dataclass(frozen=True)
class CriterionReport:
    verdict: bool
    conditions: tuple[Condition, ...]

    def __post_init__(self):
        assert self.verdict == all(c.passed for c in self.conditions)

    def condition(self, label: str) -> Condition:
        for c in self.conditions:
            if c.label == label:
                return c
        raise KeyError(label)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "conditions": [c.to_json() for c in self.conditions],
        }


def _report(conditions: list[Condition]) -> CriterionReport:
    return CriterionReport(
        verdict=all(c.passed for c in conditions),
        conditions=tuple(conditions),
    )


@dataclass(frozen=True)
class PseQuery:
    """A path-specific effect query: which causal paths carry the active
    exposure value."""

    X: frozenset[str]
    Y: frozenset[str]
    pi: PathSetPi
    x_active: float = 1.0
    x_reference: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "X", frozenset(self.X))
        object.__setattr__(self, "Y", frozenset(self.Y))

    def validate(self, g: Admg) -> None:
        self.pi.validate(g)


# ---------------------------------------------------------------------------
# separation helpers


def _separation_condition(
    g: Admg, label: str, A, B, Z, small_witness: bool = True
) -> Condition:
    """m-separation check that attaches an open path on failure."""
    A, B, Z = frozenset(A), frozenset(B), frozenset(Z)
    if not A or not B:
        return Condition(label, True)
    sep = m_separated(g, SeparationQuery(A, B, Z - A - B))
    witness = None
    if not sep and small_witness:
        witness = find_open_path(g, A, B, Z - A - B)
    return Condition(label, sep, witness)


def _conditioning_with_selection(g: Admg, Z: frozenset[str]) -> frozenset[str]:
    if g.selection is None:
        raise NoSelectionVertex("graph has no selection vertex")
    return Z | {g.selection}


# ---------------------------------------------------------------------------
# backdoor and generalized adjustment criteria


def backdoor_admissible(g: Admg, X, Y, Z) -> CriterionReport:
    """Classic backdoor criterion via the proper backdoor graph.

    (a) no element of Z descends from X; (b) Z m-separates X from Y once
    the first edge of every proper causal path is removed.
    """
    X = g.require_all(X)
    Y = g.require_all(Y)
    Z = g.require_all(Z)
    de_x = descendants(g, X)
    bad = sorted(Z & de_x)
    cond_a = Condition(
        "no-descendant-of-exposure", not bad, bad[0] if bad else None
    )
    pbd = proper_backdoor_graph(g, X, Y)
    cond_b = _separation_condition(pbd, "blocks-noncausal-paths", X, Y, Z)
    return _report([cond_a, cond_b])


def _gac_conditions(g: Admg, X, Y, pair: AdmissiblePair) -> list[Condition]:
    X = g.require_all(X)
    Y = g.require_all(Y)
    g.require_all(pair.Z)
    cond_set = _conditioning_with_selection(g, pair.Z)
    if g.selection in X | Y | pair.Z:
        raise OverlapError("selection vertex cannot appear in X, Y, or Z")
    if pair.Z & (X | Y):
        raise OverlapError(
            f"Z must be disjoint from X and Y: {sorted(pair.Z & (X | Y))}"
        )

    # 1. Z avoids descendants (in G with edges into X removed) of any non-X
    #    vertex on a proper causal path from X to Y.
    on_paths = set()
    for p in proper_causal_paths(g, X, Y).paths:
        on_paths.update(p.vertices)
    on_paths -= X
    g_bar = remove_incoming(g, X)
    forbidden = descendants(g_bar, on_paths) if on_paths else frozenset()
    bad = sorted(pair.Z & forbidden)
    cond1 = Condition(
        "z-avoids-causal-descendants", not bad, bad[0] if bad else None
    )

    pbd = proper_backdoor_graph(g, X, Y)
    cond2 = _separation_condition(
        pbd, "exposure-outcome-blocked", X, Y, cond_set
    )
    cond3 = _separation_condition(
        pbd, "outcome-selection-blocked", Y, {g.selection}, pair.ZT
    )
    return [cond1, cond2, cond3]


def gac_admissible(g: Admg, X, Y, pair: AdmissiblePair) -> CriterionReport:
    """Generalized adjustment criterion for the total effect with external
    covariate data on ZT."""
    return _report(_gac_conditions(g, X, Y, pair))


class ExtendedEquivalenceViolation(AssertionError):
    """The original and extended-graph criteria disagreed; this indicates a
    bug in the separation or surgery code, not bad input."""


def gac_extended_equivalence(g: Admg, X, Y, pair: AdmissiblePair) -> bool:
    """Evaluate the adjustment criterion in g and in its extended graph.

    The two verdicts are provably equal whenever every exposure vertex has
    a proper causal path to Y; this function asserts the equality and
    returns the shared verdict.
    """
    base = gac_admissible(g, X, Y, pair).verdict
    eg = extend_graph(g, X, Y)
    ext = gac_admissible(eg.graph, eg.exposure_nodes(), Y, pair).verdict
    if base != ext:
        raise ExtendedEquivalenceViolation(
            f"base verdict {base} != extended verdict {ext} "
            f"for X={sorted(frozenset(X))}, Y={sorted(frozenset(Y))}, "
            f"Z={sorted(pair.Z)}, ZT={sorted(pair.ZT)}"
        )
    return base


# ---------------------------------------------------------------------------
# path-specific machinery


def edge_consistent(
    g: Admg, q: PseQuery
) -> tuple[bool, frozenset[tuple[str, str]]]:
    """Check that q.pi is a union of whole first-edge groups.

    Returns (verdict, active first edges). The active edges receive the
    active exposure value downstream; all other first edges receive the
    reference value.
    """
    q.validate(g)
    all_paths = proper_causal_paths(g, q.X, q.Y)
    groups: dict[tuple[str, str], set[tuple[str, ...]]] = {}
    for p in all_paths.paths:
        groups.setdefault((p.vertices[0], p.vertices[1]), set()).add(p.vertices)
    chosen = {p.vertices for p in q.pi.paths}
    active = frozenset(
        edge for edge, cell in groups.items() if cell & chosen
    )
    consistent = all(
        groups[edge] <= chosen for edge in active
    )
    return consistent, active


def recanting_districts(
    g: Admg, q: PseQuery
) -> list[tuple[frozenset[str], tuple[Path, Path]]]:
    """Districts straddling the chosen and unchosen causal paths.

    A district D is flagged when one exposure vertex starts a chosen path
    through some member of D and an unchosen path through some (possibly
    equal) member of D. Each flagged district is returned with one witness
    pair of paths.
    """
    q.validate(g)
    all_paths = proper_causal_paths(g, q.X, q.Y).paths
    chosen = {p.vertices for p in q.pi.paths}
    inside = [p for p in all_paths if p.vertices in chosen]
    outside = [p for p in all_paths if p.vertices not in chosen]

    flagged = []
    for cell in districts(g):
        witness = None
        for p_in in inside:
            if p_in.vertices[1] not in cell:
                continue
            for p_out in outside:
                if (
                    p_out.vertices[0] == p_in.vertices[0]
                    and p_out.vertices[1] in cell
                ):
                    witness = (p_in, p_out)
                    break
            if witness:
                break
        if witness:
            flagged.append((cell, witness))
    return flagged


def _mediators_on_paths(g: Admg, X, Y) -> list[str]:
    """Non-exposure, non-outcome vertices on proper causal paths, in
    topological order."""
    X, Y = frozenset(X), frozenset(Y)
    on_paths: set[str] = set()
    for p in proper_causal_paths(g, X, Y).paths:
        on_paths.update(p.vertices)
    mediators = on_paths - X - Y
    return [v for v in g._order if v in mediators]


def mediator_parents(g: Admg, mediators: Iterable[str], m: str) -> frozenset[str]:
    """Parents of m among the mediator set."""
    return g.parents(m) & frozenset(mediators)


def _mediator_outcome_condition(
    g: Admg, X, Y, m: str, Z, extra: frozenset[str] = frozenset()
) -> Condition:
    """Blocked backdoor between one mediator and the outcome.

    Separation is tested in the proper backdoor graph with source set
    X + {m}; `extra` joins Z and the selection vertex in the conditioning
    set (the path-specific check adds the mediator's mediator-parents
    there, mirroring the adjustment formula's conditioning).
    """
    X = frozenset(X) | {m}
    pbd = proper_backdoor_graph(g, X, frozenset(Y))
    cond_set = _conditioning_with_selection(g, frozenset(Z) | extra)
    return _separation_condition(
        pbd, f"mediator-outcome-blocked[{m}]", {m}, Y, cond_set - {m}
    )


def theorem2_check(g: Admg, X, M, Y, pair: AdmissiblePair) -> CriterionReport:
    """Conditions for the selected mediation formula with a single mediator.

    The mediator must be exactly Ch(X) intersected with Pa(Y). Condition
    group 1 is the adjustment criterion for the total effect; condition 2
    blocks mediator-outcome backdoor paths given Z and the selection vertex.
    """
    X = g.require_all(X)
    Y = g.require_all(Y)
    M = g.require_all(M)
    if g.selection is None:
        raise NoSelectionVertex("graph has no selection vertex")
    if len(X) != 1 or len(Y) != 1 or len(M) != 1:
        raise MediatorMismatch(
            "the single-mediator check needs singleton exposure, mediator, "
            "and outcome"
        )

    (x,), (y,), (m,) = X, Y, M
    ch_pa = g.children(x) & g.parents(y)
    if M != ch_pa:
        raise MediatorMismatch(
            f"mediator must equal Ch(X) & Pa(Y) = {sorted(ch_pa)}, got {sorted(M)}"
        )

    conds = [
        Condition(f"gac.{c.label}", c.passed, c.witness)
        for c in _gac_conditions(g, X, Y, pair)
    ]
    conds.append(_mediator_outcome_condition(g, X, Y, m, pair.Z))
    return _report(conds)


def theorem3_check(
    g: Admg, q: PseQuery, pair: AdmissiblePair
) -> CriterionReport:
    """Conditions for the path-specific adjustment formula.

    Checks, in order: the query is edge-consistent (error otherwise), the
    adjustment criterion holds for the total effect, every mediator's
    backdoor paths to the outcome are blocked given Z, the selection
    vertex, and that mediator's mediator-parents, and no district straddles
    the chosen/unchosen paths.
    """
    if g.selection is None:
        raise NoSelectionVertex("graph has no selection vertex")
    consistent, _ = edge_consistent(g, q)
    if not consistent:
        raise EdgeInconsistent(
            "the chosen paths split a first-edge group; path-specific "
            "effects are only supported for whole groups"
        )

    conds = [
        Condition(f"gac.{c.label}", c.passed, c.witness)
        for c in _gac_conditions(g, q.X, q.Y, pair)
    ]
    mediators = _mediators_on_paths(g, q.X, q.Y)
    for m in mediators:
        conds.append(
            _mediator_outcome_condition(
                g, q.X, q.Y, m, pair.Z,
                extra=mediator_parents(g, mediators, m),
            )
        )

    flagged = recanting_districts(g, q)
    conds.append(
        Condition(
            "no-recanting-district",
            not flagged,
            None if not flagged else {
                "district": sorted(flagged[0][0]),
                "path_in_pi": flagged[0][1][0].to_json(),
                "path_not_in_pi": flagged[0][1][1].to_json(),
            },
        )
    )
    return _report(conds)


# ---------------------------------------------------------------------------
# separation facts behind the identification proofs


def mediation_premises(g: Admg, X, Y, Z) -> bool:
    """The two separation premises the mediation results rest on.

    Exposure-outcome and every mediator-outcome backdoor must be blocked by
    Z and the selection vertex in the respective proper backdoor graphs.
    """
    X = frozenset(X)
    Y = frozenset(Y)
    cond = _conditioning_with_selection(g, frozenset(Z))
    if not m_separated(
        g=proper_backdoor_graph(g, X, Y),
        query=SeparationQuery(X, Y, cond),
    ):
        return False
    for m in _mediators_on_paths(g, X, Y):
        pbd = proper_backdoor_graph(g, X | {m}, Y)
        if not m_separated(pbd, SeparationQuery({m}, Y, cond)):
            return False
    return True


def mediation_implied_separations(g: Admg, X, Y, Z) -> list[Condition]:
    """The eight extended-graph separations implied by the premises.

    Each is evaluated directly with the separation engine on the surgered
    extended graphs, one condition per (statement, mediator) instance.
    Labels follow the statement letters (a) through (h). Statement (e)
    conditions on the full mediator set: with several first edges the
    separation only holds once the other mediators are blocked, which is
    the form both identification proofs rely on.

    The implications presume the ambient adjustment setting: Z contains no
    descendant of a causal-path vertex and the selection vertex is not a
    descendant of the exposure (both are forced whenever the adjustment
    criterion itself holds).
    """
    X = frozenset(X)
    Y = frozenset(Y)
    cond = _conditioning_with_selection(g, frozenset(Z))
    eg = extend_graph(g, X, Y)
    ge = eg.graph
    xe = eg.exposure_nodes()
    xey = frozenset(eg.y_nodes.values())
    mediators = _mediators_on_paths(g, X, Y)
    into = {
        m: sorted(
            name for (src, head), name in eg.extended_nodes.items() if head == m
        )
        for m in mediators
    }

    out: list[Condition] = []

    def sep(label, graph, A, B, C):
        A, B, C = frozenset(A), frozenset(B), frozenset(C)
        ok = m_separated(graph, SeparationQuery(A, B, C - A - B))
        out.append(Condition(label, ok))

    sep("a", proper_backdoor_graph(ge, X, Y), X, Y, cond)
    sep("b", proper_backdoor_graph(ge, xe, Y), xe, Y, cond)
    bar_y = remove_incoming(ge, xey)
    for m in mediators:
        pam = mediator_parents(g, mediators, m)
        sep(f"c[{m}]", proper_backdoor_graph(ge, xe | {m}, Y), {m}, Y, cond)
        sep(f"d[{m}]", proper_backdoor_graph(ge, X | {m}, Y), {m}, Y, cond)
        for e_node in into[m]:
            sep(
                f"e[{m}:{e_node}]",
                proper_backdoor_graph(bar_y, {e_node}, Y),
                {e_node}, Y, cond | xey | frozenset(mediators),
            )
        sep(
            f"f[{m}]",
            proper_backdoor_graph(ge, xe | {m}, Y),
            {m}, Y, cond | pam,
        )
        sep(f"g[{m}]", proper_backdoor_graph(ge, xe, {m}), {m}, xe, cond)
        sep(
            f"h[{m}]",
            proper_backdoor_graph(ge, xe, {m}),
            {m}, xe, cond | pam,
        )
    return out


# ---------------------------------------------------------------------------
# admissible-pair search

# Cap on 2^|candidates| * 2^max_size; beyond this the subset walk is refused.
SEARCH_GUARD = 2 ** 20


def find_admissible_pairs(
    g: Admg, X, Y, candidates, max_size: int
) -> list[AdmissiblePair]:
    """All (Z, ZT) over the candidate pool passing the adjustment criterion.

    Ordered by (|Z|, |ZT|, lexicographic member lists).
    """
    X = g.require_all(X)
    Y = g.require_all(Y)
    candidates = g.require_all(candidates)
    if candidates & (X | Y | ({g.selection} if g.selection else set())):
        raise OverlapError("candidates must avoid X, Y, and the selection vertex")
    if 2 ** len(candidates) * 2 ** max_size > SEARCH_GUARD:
        raise SearchSpaceTooLarge(
            f"2^{len(candidates)} * 2^{max_size} pairs exceed the guard "
            f"({SEARCH_GUARD}); restrict candidates or max_size"
        )

    pool = sorted(candidates)
    found = []
    for size in range(0, min(max_size, len(pool)) + 1):
        for zs in combinations(pool, size):
            for tsize in range(0, size + 1):
                for zts in combinations(zs, tsize):
                    pair = AdmissiblePair(frozenset(zs), frozenset(zts))
                    if gac_admissible(g, X, Y, pair).verdict:
                        found.append(pair)
    found.sort(key=lambda p: (len(p.Z), len(p.ZT), sorted(p.Z), sorted(p.ZT)))
    return found
