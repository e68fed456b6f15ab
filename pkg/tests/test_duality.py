#!/usr/bin/env python3
"""
Tests for flows, induced virtual values and certificate verification.
"""

from fractions import Fraction as F

import pytest

from upgrade_pricing.analysis import pseudo_revenues
from upgrade_pricing.duality import (
    Flow,
    check_complementary_slackness,
    check_flow_feasibility,
    check_implementability,
    check_non_negativity,
    check_virtual_welfare_max,
    dual_bound,
    flow_excess,
    flow_pseudo_revenues,
    initial_flow,
    is_downward,
    lagrangian,
    verify_certificate,
    virtual_values,
    virtual_welfare,
)
from upgrade_pricing.model import Mechanism, revenue


def fr(*values):
    return tuple(F(v) for v in values)


class TestFlow:
    """Flow construction and bookkeeping."""

    def test_initial_flow_inst_b(self, inst_b):
        """Test that the initial flow is the chain 1 - F_{i-1} on i -> i-1 and nothing else."""
        flow = initial_flow(inst_b)
        assert flow.get(1, 0) == 1
        assert flow.get(2, 1) == F(5, 8)
        assert flow.get(3, 2) == F(3, 8)
        assert flow.get(4, 3) == F(1, 4)
        assert len(flow.entries) == 4

    def test_zero_weights_are_dropped(self):
        """Zero weights are not stored."""
        flow = Flow.from_mapping(2, {(1, 0): F(1), (2, 1): F(0)})
        assert flow.entries == (((1, 0), F(1)),)

    def test_self_loops_rejected(self):
        """Test that an edge from a type to itself is refused."""
        with pytest.raises(ValueError):
            Flow.from_mapping(2, {(1, 1): F(1)})

    def test_downward(self, inst_b, inst_b_final_flow):
        """Test downwardness on the initial, final and an upward flow."""
        assert is_downward(initial_flow(inst_b))
        assert is_downward(inst_b_final_flow)
        assert not is_downward(Flow.from_mapping(2, {(1, 2): F(1)}))

    def test_excess_equals_mass(self, inst_b, inst_b_final_flow):
        """Test that the final flow leaves exactly f_i at every node."""
        for i in inst_b.types():
            assert flow_excess(inst_b, inst_b_final_flow, i) == inst_b.prob(i)


class TestVirtualValues:
    """Virtual values and pseudo-revenues induced by a flow."""

    def test_initial_flow_reproduces_myerson_curves(self, inst_b):
        """Test that the initial flow induces the plain pseudo-revenue curves."""
        induced = flow_pseudo_revenues(inst_b, initial_flow(inst_b))
        assert induced.curves == pseudo_revenues(inst_b).curves

    def test_final_flow_virtual_values(self, inst_b, inst_b_final_flow):
        """Test the virtual values the final flow induces, both items."""
        phi = virtual_values(inst_b, inst_b_final_flow).phi
        assert tuple(row[0] for row in phi) == fr("3/8", 0, "3/2", "9/4")
        assert tuple(row[1] for row in phi) == fr(0, "-1/2", -1, 5)

    def test_final_flow_attains_closures(self, inst_b, inst_b_final_flow):
        """Test that item 1's induced curve is its closure."""
        induced = flow_pseudo_revenues(inst_b, inst_b_final_flow)
        closures = pseudo_revenues(inst_b)
        assert induced.curve(1) == closures.closure(1)

    def test_zero_flow_leaves_values(self, inst_b):
        """Test that with no flow every virtual value is the value itself."""
        phi = virtual_values(inst_b, Flow.zero(4)).phi
        assert phi == inst_b.theta


class TestConditions:
    """Each certificate condition on its own."""

    def test_negative_weight(self):
        """Test that a negative edge fails condition 1 and names its tail."""
        verdict = check_non_negativity(Flow.from_mapping(2, {(2, 1): F(-1)}))
        assert not verdict
        assert verdict.witness["j"] == 2

    def test_virtual_welfare_sign_violation(self, inst_b, inst_b_mechanism):
        """Test that the initial flow leaves phi_2^1 = -1/2 while type 2 gets item 1."""
        phi = virtual_values(inst_b, initial_flow(inst_b)).phi
        verdict = check_virtual_welfare_max(inst_b_mechanism.q, phi)
        assert not verdict
        assert (verdict.witness["i"], verdict.witness["k"]) == (2, 1)
        assert verdict.witness["phi"] == F(-1, 2)

    def test_implementability(self, inst_b, inst_b_mechanism):
        """Test that the two-tier mechanism is IC and IR."""
        assert check_implementability(inst_b, inst_b_mechanism)

    def test_overcharged_top_type_deviates(self, inst_b, inst_b_mechanism):
        """Test that charging type 4 a price of 7 makes it prefer every lower outcome."""
        m = Mechanism(q=inst_b_mechanism.q, t=inst_b_mechanism.t[:3] + (F(7),))
        verdict = check_implementability(inst_b, m)
        assert not verdict
        assert (verdict.witness["j"], verdict.witness["i"]) == (4, 1)
        assert verdict.witness["slack"] == F(-71, 64)
        assert verdict.witness["count"] == 3
        assert verdict.reason.startswith("IC: type 4 gains 71/64")

    def test_zero_flow_is_infeasible(self, inst_b):
        """Test that the zero flow fails feasibility at type 1."""
        verdict = check_flow_feasibility(inst_b, Flow.zero(4))
        assert not verdict
        assert verdict.witness["i"] == 1

    def test_complementary_slackness_on_final_flow(self, inst_b, inst_b_mechanism, inst_b_final_flow):
        """Test that every edge the final flow uses is binding."""
        assert check_complementary_slackness(inst_b, inst_b_mechanism, inst_b_final_flow)

    def test_slack_edge_with_flow(self, inst_b, inst_b_mechanism):
        """Test that flow on the slack IR edge of type 4 fails with slack 87/64."""
        flow = Flow.from_mapping(4, {(4, 0): F(1)})
        verdict = check_complementary_slackness(inst_b, inst_b_mechanism, flow)
        assert not verdict
        assert verdict.witness["slack"] == F(87, 64)


class TestCertificate:
    """Full verification and weak duality."""

    def test_final_flow_certifies_two_tier_mechanism(self, inst_b, inst_b_mechanism, inst_b_final_flow):
        """Test that the final flow certifies the two-tier mechanism with no failures."""
        verdict = verify_certificate(inst_b, inst_b_mechanism, inst_b_final_flow)
        assert verdict.overall
        assert list(verdict.failures()) == []

    def test_initial_flow_fails_sign_condition_only(self, inst_b, inst_b_mechanism):
        """Test that without ironing only the virtual welfare condition fails."""
        verdict = verify_certificate(inst_b, inst_b_mechanism, initial_flow(inst_b))
        assert not verdict
        assert [number for number, _, _ in verdict.failures()] == [2]

    def test_zero_mechanism_zero_flow(self, inst_b):
        """Test that the zero mechanism is implementable but the zero flow is not feasible."""
        verdict = verify_certificate(inst_b, Mechanism.zero(4, 2), Flow.zero(4))
        assert not verdict.feasibility
        assert verdict.implementability

    def test_lagrangian_identity(self, inst_b, inst_b_mechanism, inst_b_final_flow):
        """Test that revenue plus weighted slack equals virtual welfare."""
        phi = virtual_values(inst_b, inst_b_final_flow).phi
        assert lagrangian(inst_b, inst_b_mechanism, inst_b_final_flow) == \
            virtual_welfare(inst_b, inst_b_mechanism.q, phi)

    def test_dual_bound_matches_certified_revenue(self, inst_b, inst_b_mechanism, inst_b_final_flow):
        """Test that the dual bound closes the gap at 137/64."""
        assert dual_bound(inst_b, inst_b_final_flow) == revenue(inst_b, inst_b_mechanism) == F(137, 64)

    def test_dual_bound_dominates_revenue(self, inst_b, inst_b_mechanism):
        assert dual_bound(inst_b, initial_flow(inst_b)) >= revenue(inst_b, inst_b_mechanism)
