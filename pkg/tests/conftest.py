import pytest

from selmed.graph import build_graph


@pytest.fixture
def fig1a():
    """X -> M -> Y with direct edge X -> Y."""
    return build_graph({
        "vertices": ["X", "M", "Y"],
        "directed": [["X", "M"], ["M", "Y"], ["X", "Y"]],
    })


@pytest.fixture
def fig1b():
    """Single mediator with confounder C and selection S <- C."""
    return build_graph({
        "vertices": ["X", "M", "Y", "C", "S"],
        "directed": [
            ["X", "M"], ["M", "Y"], ["X", "Y"],
            ["C", "M"], ["C", "Y"], ["C", "S"],
        ],
        "selection": "S",
    })


@pytest.fixture
def fig3a():
    """Two mediators M1, M2 with M1 -> M2 and a direct edge."""
    return build_graph({
        "vertices": ["X", "M1", "M2", "Y"],
        "directed": [
            ["X", "M1"], ["X", "M2"], ["X", "Y"],
            ["M1", "M2"], ["M1", "Y"], ["M2", "Y"],
        ],
    })


@pytest.fixture
def fig3a_conf():
    """Two mediators plus confounder C feeding both mediators, the outcome,
    and the selection vertex."""
    return build_graph({
        "vertices": ["X", "M1", "M2", "Y", "C", "S"],
        "directed": [
            ["X", "M1"], ["X", "M2"], ["X", "Y"],
            ["M1", "M2"], ["M1", "Y"], ["M2", "Y"],
            ["C", "M1"], ["C", "M2"], ["C", "Y"], ["C", "S"],
        ],
        "selection": "S",
    })


@pytest.fixture
def fig3a_bidirected():
    """Two mediators with an unmeasured common cause between them, plus a
    selection vertex hanging off X so selection-aware checks run."""
    return build_graph({
        "vertices": ["X", "M1", "M2", "Y", "S"],
        "directed": [
            ["X", "M1"], ["X", "M2"], ["X", "Y"],
            ["M1", "M2"], ["M1", "Y"], ["M2", "Y"],
            ["X", "S"],
        ],
        "bidirected": [["M1", "M2"]],
        "selection": "S",
    })
