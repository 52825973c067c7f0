"""Exception types shared across the package.

Every error raised by the library derives from SelmedError so the CLI can
map library failures to exit code 1 uniformly.
"""


class SelmedError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# graph construction / queries

class GraphError(SelmedError):
    pass


class CycleError(GraphError):
    """The directed part of the graph contains a cycle."""

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("directed cycle: " + " -> ".join(self.cycle))


class UnknownVertex(GraphError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown vertex: {name!r}")


class DuplicateEdge(GraphError):
    pass


class SelectionHasChildren(GraphError):
    """The selection vertex must be a directed sink."""


class SelectionBidirected(GraphError):
    """Bidirected edges at the selection vertex are not supported."""


class ReservedVertexName(GraphError):
    """User vertex names may not contain the extended-node infix."""


class OverlapError(GraphError):
    """Vertex sets that must be disjoint overlap."""


class GraphTooLarge(GraphError):
    """Guard for exhaustive path enumeration."""


class NameCollision(GraphError):
    """A generated extended-node name already exists in the graph."""


# ---------------------------------------------------------------------------
# criteria

class CriteriaError(SelmedError):
    pass


class NoSelectionVertex(CriteriaError):
    pass


class MediatorMismatch(CriteriaError):
    """Supplied mediator differs from Ch(X) intersected with Pa(Y)."""


class NotProperPath(CriteriaError):
    """A supplied path is not a proper causal path of the host graph."""


class EdgeInconsistent(CriteriaError):
    """The path set cannot be expressed as whole first-edge groups."""


class SearchSpaceTooLarge(CriteriaError):
    pass


# ---------------------------------------------------------------------------
# data / estimation

class DataError(SelmedError):
    pass


class EstimationError(SelmedError):
    pass


class NonConvergence(EstimationError):
    def __init__(self, iterations, score_norm):
        self.iterations = iterations
        self.score_norm = score_norm
        super().__init__(
            f"IRLS did not converge after {iterations} iterations "
            f"(max |score| = {score_norm:.3g})"
        )


class SeparationDetected(EstimationError):
    def __init__(self, term, value):
        self.term = term
        self.value = value
        super().__init__(
            f"coefficient for {term!r} reached {value:.3g} during IRLS; the "
            "data are (quasi-)separated. Drop the offending regressor or "
            "refit with a small ridge penalty (ridge=1e-6)."
        )


class RankDeficient(EstimationError):
    pass


class ExtremePropensity(EstimationError):
    def __init__(self, rows, minimum):
        self.rows = list(rows)
        self.minimum = minimum
        super().__init__(
            f"fitted selection probability below 1e-3 (min {minimum:.3g}) "
            f"for selected rows {self.rows[:10]}"
        )


class RatioScaleRequiresBinaryOutcome(EstimationError):
    pass


class DegenerateOutcome(EstimationError):
    """A ratio-scale denominator is zero."""


class EstimatorFailureRate(EstimationError):
    def __init__(self, failed, total):
        self.failed = failed
        self.total = total
        super().__init__(
            f"{failed}/{total} bootstrap replicates failed (> 10% tolerated)"
        )


class IdentificationCheckFailed(EstimationError):
    def __init__(self, report):
        self.report = report
        failed = [label for label, ok, _ in report.conditions if not ok]
        super().__init__(
            "identification conditions failed: " + ", ".join(failed)
            + " (pass skip_checks=True to estimate anyway)"
        )


class CombinatorialGuard(EstimationError):
    pass


class InsufficientSelected(SelmedError):
    def __init__(self, selected, requested, n0):
        self.selected = selected
        self.requested = requested
        super().__init__(
            f"only {selected}/{n0} rows selected "
            f"(rate {selected / n0:.3f}), need {requested}"
        )


# ---------------------------------------------------------------------------
# exact oracle

class OracleError(SelmedError):
    pass


class StateSpaceTooLarge(OracleError):
    pass


class ZeroProbabilityConditioning(OracleError):
    def __init__(self, event):
        self.event = event
        super().__init__(f"conditioning event has probability zero: {event}")
