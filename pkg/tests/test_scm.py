import math

import numpy as np
import pytest

from selmed.criteria import AdmissiblePair, theorem2_check
from selmed.errors import StateSpaceTooLarge, ZeroProbabilityConditioning
from selmed.graph import build_graph
from selmed.scm import (
    DiscreteScm,
    ExactJoint,
    Noise,
    forward_sample,
    interventional_mean_truncated,
    oracle_counterfactual,
    oracle_formula_eval,
    random_binary_scm,
    sampled_selected_dataset,
)

PAIR_C = AdmissiblePair(frozenset({"C"}), frozenset({"C"}))


def constant_scm(fig1a, c=1.0):
    return DiscreteScm(
        graph=fig1a,
        noise={v: Noise((0.0,), (1.0,)) for v in "XMY"},
        functions={v: (lambda pa, e, c=c: c) for v in "XMY"},
        support={v: (c,) for v in "XMY"},
    )


class TestOracleCounterfactual:
    def test_constant_functions(self, fig1a):
        scm = constant_scm(fig1a, c=0.75)
        assert oracle_counterfactual(scm, {}, "Y") == 0.75
        assert oracle_counterfactual(
            scm, {("X", "Y"): 1.0, ("X", "M"): 0.0}, "Y"
        ) == 0.75

    def test_mediator_irrelevant_xor(self, fig1a):
        # Y = X xor 0, M arbitrary: the direct-edge assignment decides Y
        scm = DiscreteScm(
            graph=fig1a,
            noise={
                "X": Noise((0.0, 1.0), (0.5, 0.5)),
                "M": Noise((0.0, 1.0), (0.5, 0.5)),
                "Y": Noise((0.0,), (1.0,)),
            },
            functions={
                "X": lambda pa, e: e,
                "M": lambda pa, e: float(int(pa["X"]) ^ int(e)),
                "Y": lambda pa, e: float(int(pa["X"]) ^ int(e)),
            },
            support={v: (0.0, 1.0) for v in "XMY"},
        )
        assert oracle_counterfactual(
            scm, {("X", "Y"): 1.0, ("X", "M"): 0.0}, "Y"
        ) == 1.0
        assert oracle_counterfactual(
            scm, {("X", "Y"): 0.0, ("X", "M"): 1.0}, "Y"
        ) == 0.0

    def test_state_space_guard(self):
        g = build_graph({"vertices": [f"V{i}" for i in range(25)]})
        scm = DiscreteScm(
            graph=g,
            noise={v: Noise((0.0, 1.0), (0.5, 0.5)) for v in g.vertices},
            functions={v: (lambda pa, e: e) for v in g.vertices},
            support={v: (0.0, 1.0) for v in g.vertices},
        )
        with pytest.raises(StateSpaceTooLarge):
            oracle_counterfactual(scm, {}, "V0")

    def test_all_edges_assigned_equals_truncated(self, fig1b):
        rng = np.random.default_rng(11)
        for _ in range(20):
            scm = random_binary_scm(fig1b, rng)
            for x in (0.0, 1.0):
                assignment = {("X", "M"): x, ("X", "Y"): x}
                via_noise = oracle_counterfactual(scm, assignment, "Y")
                via_trunc = interventional_mean_truncated(scm, "X", x, "Y")
                assert abs(via_noise - via_trunc) < 1e-12

    def test_forward_simulation_cross_check(self, fig1b):
        rng = np.random.default_rng(5)
        scm = random_binary_scm(fig1b, rng)
        assignment = {("X", "M"): 0.0, ("X", "Y"): 1.0}
        exact = oracle_counterfactual(scm, assignment, "Y")
        n = 400_000
        sample = forward_sample(scm, n, rng, assignment)
        mc = sample["Y"].mean()
        se = math.sqrt(max(exact * (1 - exact), 1e-12) / n)
        assert abs(mc - exact) <= 3 * se + 1e-9


class TestFormulaEval:
    def test_eq4_matches_counterfactual_when_gac_holds(self, fig1b):
        rng = np.random.default_rng(21)
        for _ in range(25):
            scm = random_binary_scm(fig1b, rng)
            for x in (0.0, 1.0):
                lhs = oracle_formula_eval(scm, "Eq4", "X", "Y", PAIR_C, x=x)
                rhs = oracle_counterfactual(
                    scm, {("X", "M"): x, ("X", "Y"): x}, "Y"
                )
                assert abs(lhs - rhs) < 1e-9

    def test_eq6_matches_counterfactual_fig1b(self, fig1b):
        assert theorem2_check(fig1b, {"X"}, {"M"}, {"Y"}, PAIR_C).verdict
        rng = np.random.default_rng(22)
        for _ in range(25):
            scm = random_binary_scm(fig1b, rng)
            for x in (0.0, 1.0):
                for xp in (0.0, 1.0):
                    lhs = oracle_formula_eval(
                        scm, "Eq6", "X", "Y", PAIR_C,
                        x=x, x_prime=xp, mediator="M",
                    )
                    rhs = oracle_counterfactual(
                        scm, {("X", "Y"): x, ("X", "M"): xp}, "Y"
                    )
                    assert abs(lhs - rhs) < 1e-9

    def test_eq6_reduces_to_plain_mediation_without_selection_effect(self, fig1b):
        rng = np.random.default_rng(23)
        scm = random_binary_scm(fig1b, rng)
        scm = DiscreteScm(
            graph=scm.graph, noise=scm.noise, functions=scm.functions,
            support=scm.support, selection_logit=(0.3, {"C": 0.0}),
        )
        joint = ExactJoint.of(scm)
        for x, xp in [(1.0, 0.0), (0.0, 1.0)]:
            eq6 = oracle_formula_eval(
                scm, "Eq6", "X", "Y", PAIR_C, x=x, x_prime=xp, mediator="M"
            )
            # no-selection mediation formula, computed inline from the joint
            eq5 = 0.0
            for c in (0.0, 1.0):
                p_c = joint._mass({"C": c}, None)
                for m in (0.0, 1.0):
                    eq5 += (
                        p_c
                        * joint.probability({"M": m}, {"X": xp, "C": c})
                        * joint.expectation("Y", {"X": x, "M": m, "C": c})
                    )
            assert abs(eq6 - eq5) < 1e-12

    def test_thm3_matches_counterfactual_fig3a_conf(self, fig3a_conf):
        rng = np.random.default_rng(24)
        active = {("X", "M1")}
        for _ in range(15):
            scm = random_binary_scm(fig3a_conf, rng)
            lhs = oracle_formula_eval(
                scm, "Thm3", "X", "Y", PAIR_C,
                x=1.0, x_prime=0.0,
                mediators=["M1", "M2"], active_edges=active,
            )
            rhs = oracle_counterfactual(
                scm,
                {("X", "M1"): 1.0, ("X", "M2"): 0.0, ("X", "Y"): 0.0},
                "Y",
            )
            assert abs(lhs - rhs) < 1e-9

    def test_zero_probability_conditioning(self, fig1b):
        scm = DiscreteScm(
            graph=fig1b,
            noise={v: Noise((0.0,), (1.0,)) for v in "XMYC"},
            functions={
                "X": lambda pa, e: 1.0,  # X is never 0
                "C": lambda pa, e: 0.0,
                "M": lambda pa, e: pa["X"],
                "Y": lambda pa, e: pa["M"],
            },
            support={v: (0.0, 1.0) for v in "XMYC"},
            selection_logit=(0.0, {"C": 1.0}),
        )
        with pytest.raises(ZeroProbabilityConditioning):
            oracle_formula_eval(
                scm, "Eq6", "X", "Y", PAIR_C, x=1.0, x_prime=0.0, mediator="M"
            )


class TestDatasets:
    def test_sampled_dataset_counts(self, fig1b):
        rng = np.random.default_rng(3)
        scm = random_binary_scm(fig1b, rng)
        data = sampled_selected_dataset(scm, ["C"], 10_000, rng)
        total = data.column("count").sum()
        assert total == 10_000
        sel = data.df[data.selected_mask]
        assert not sel[["X", "M", "Y", "C"]].isna().any().any()
        unsel = data.df[~data.selected_mask]
        assert unsel["M"].isna().all() and unsel["Y"].isna().all()
        assert not unsel["C"].isna().any()
