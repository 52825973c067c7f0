import numpy as np
import pytest

from selmed.errors import GraphTooLarge, OverlapError
from selmed.graph import build_graph
from selmed.randgraph import random_admg, random_disjoint_sets
from selmed.separation import (
    SeparationQuery,
    find_open_path,
    m_separated,
    open_paths_oracle,
)


def q(A, B, Z=()):
    return SeparationQuery(frozenset(A), frozenset(B), frozenset(Z))


class TestWorkedExamples:
    def test_fig1b_x_s_marginal(self, fig1b):
        # X -> M <- C -> S and X -> Y <- C -> S both hit an unconditioned collider
        assert m_separated(fig1b, q({"X"}, {"S"}))
        assert open_paths_oracle(fig1b, q({"X"}, {"S"})) == []

    def test_fig1b_y_s(self, fig1b):
        assert m_separated(fig1b, q({"Y"}, {"S"}, {"C"}))
        assert not m_separated(fig1b, q({"Y"}, {"S"}))
        witness = open_paths_oracle(fig1b, q({"Y"}, {"S"}))
        assert [p.pretty() for p in witness] == [
            "Y <- C -> S", "Y <- M <- C -> S",
        ]

    def test_disconnected_components(self):
        g = build_graph({"vertices": ["A", "B", "C"], "directed": [["A", "B"]]})
        assert m_separated(g, q({"A"}, {"C"}))
        assert m_separated(g, q({"A", "B"}, {"C"}, ()))

    def test_fig1a_conditioned_mediator(self, fig1a):
        open_paths = open_paths_oracle(fig1a, q({"X"}, {"Y"}, {"M"}))
        assert [p.pretty() for p in open_paths] == ["X -> Y"]

    def test_edgeless(self):
        g = build_graph({"vertices": ["A", "B"]})
        assert open_paths_oracle(g, q({"A"}, {"B"})) == []

    def test_collider_opened_by_descendant_conditioning(self):
        # A -> C <- B with C -> D; conditioning on D opens the collider C
        g = build_graph({
            "vertices": ["A", "B", "C", "D"],
            "directed": [["A", "C"], ["B", "C"], ["C", "D"]],
        })
        assert m_separated(g, q({"A"}, {"B"}))
        assert not m_separated(g, q({"A"}, {"B"}, {"D"}))
        assert not m_separated(g, q({"A"}, {"B"}, {"C"}))

    def test_bidirected_chain(self):
        g = build_graph({
            "vertices": ["A", "B", "C"],
            "bidirected": [["A", "B"], ["B", "C"]],
        })
        # B is a collider on the only path; opened only by conditioning on it
        assert m_separated(g, q({"A"}, {"C"}))
        assert not m_separated(g, q({"A"}, {"C"}, {"B"}))

    def test_overlap_rejected(self, fig1a):
        with pytest.raises(OverlapError):
            m_separated(fig1a, q({"X"}, {"X", "Y"}))

    def test_oracle_guard(self):
        g = build_graph({"vertices": [f"V{i}" for i in range(17)]})
        with pytest.raises(GraphTooLarge):
            open_paths_oracle(g, q({"V0"}, {"V1"}))

    def test_witness_finder_agrees(self, fig1b):
        path = find_open_path(fig1b, {"Y"}, {"S"}, set())
        assert path is not None
        assert path.pretty() == "Y <- C -> S"
        assert find_open_path(fig1b, {"Y"}, {"S"}, {"C"}) is None


class TestEngineOracleAgreement:
    """Randomized cross-check of the reachability engine against exhaustive
    path enumeration (the acceptance suite runs the full-size version)."""

    def test_agreement_small_corpus(self):
        rng = np.random.default_rng(20240811)
        for _ in range(150):
            g = random_admg(rng, int(rng.integers(2, 8)))
            for _ in range(10):
                drawn = random_disjoint_sets(rng, g, 3)
                if drawn is None:
                    continue
                A, B, Z = drawn
                if rng.random() < 0.3:
                    Z = frozenset()
                query = q(A, B, Z)
                engine = m_separated(g, query)
                oracle = open_paths_oracle(g, query)
                assert engine == (len(oracle) == 0), (
                    g.sorted_directed(), g.sorted_bidirected(), query,
                )

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            g = random_admg(rng, 6)
            drawn = random_disjoint_sets(rng, g, 3)
            if drawn is None:
                continue
            A, B, Z = drawn
            assert m_separated(g, q(A, B, Z)) == m_separated(g, q(B, A, Z))

    def test_monotone_decomposition(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            g = random_admg(rng, 6)
            drawn = random_disjoint_sets(rng, g, 3)
            if drawn is None:
                continue
            A, B, Z = drawn
            if m_separated(g, q(A, B, Z)):
                for a in A:
                    assert m_separated(g, q({a}, B, Z))
