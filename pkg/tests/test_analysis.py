#!/usr/bin/env python3
"""
Tests for pseudo-revenues, closures, candidate intervals and the condition checkers.
"""

from fractions import Fraction as F

import pytest

from upgrade_pricing.analysis import (
    CutoffMode,
    IroningInterval,
    analyze_conditions,
    candidate_ironing_intervals,
    check_monotone_mrs,
    check_mostly_regular,
    check_regularity,
    check_weak_monotonicity,
    find_compatible_cutoffs,
    initial_virtual_values,
    is_quasi_concave,
    is_single_peaked,
    pseudo_revenues,
    quasi_concave_closure,
    search_type_orders,
)
from upgrade_pricing.errors import BadCutoff, TooLarge

from .conftest import make_instance


def fr(*values):
    return tuple(F(v) for v in values)


class TestPseudoRevenues:
    """Pseudo-revenue curves and Myersonian virtual values."""

    def test_inst_b_curves(self, inst_b):
        """Test that R_i^k = (1 - F_{i-1}) theta_i^k on the ironing fixture."""
        curves = pseudo_revenues(inst_b)
        assert curves.curve(1) == fr("57/64", "5/8", "3/4", "9/16")
        assert curves.curve(2) == fr(1, "25/32", "9/8", "5/4")

    def test_single_type(self):
        """A lone type sells to everyone at its value."""
        inst = make_instance([(7,)], [1])
        assert pseudo_revenues(inst).curve(1) == (F(7),)

    def test_inst_a_virtual_values(self, inst_a):
        """Test the Myersonian virtual values of the no-cutoff fixture, both items."""
        phi = initial_virtual_values(inst_a)
        assert tuple(row[0] for row in phi) == fr("-9/56", "-1/4", "-1/2", 1)
        assert tuple(row[1] for row in phi) == fr("-27/28", "1/2", 4, 1)

    def test_last_type_keeps_its_values(self, inst_b):
        """Test that the top type's virtual value is its own value."""
        assert initial_virtual_values(inst_b)[-1] == inst_b.row(4)

    def test_virtual_values_are_curve_slopes(self, inst_b):
        """Test that f_i phi_i = R_i - R_{i+1} for every item."""
        curves = pseudo_revenues(inst_b)
        phi = initial_virtual_values(inst_b)
        for k in inst_b.items():
            r = curves.curve(k) + (F(0),)
            for i in inst_b.types():
                assert inst_b.prob(i) * phi[i - 1][k - 1] == r[i - 1] - r[i]


class TestClosure:
    """Quasi-concave closure of short sequences."""

    @pytest.mark.parametrize("seq, expected", [
        (fr("57/64", "5/8", "3/4", "9/16"), fr("57/64", "3/4", "3/4", "9/16")),
        (fr(1, "25/32", "9/8", "5/4"), fr(1, 1, "9/8", "5/4")),
        (fr(1, 3, 2), fr(1, 3, 2)),
        (fr(3, 1, 2), fr(3, 2, 2)),
        (fr(2, 0, 2), fr(2, 2, 2)),
    ])
    def test_closure(self, seq, expected):
        """Test closures against hand-computed sequences."""
        assert quasi_concave_closure(seq) == expected

    def test_empty_sequence_rejected(self):
        """Test that an empty sequence has no closure."""
        with pytest.raises(ValueError):
            quasi_concave_closure(())

    def test_shape_predicates(self):
        assert is_quasi_concave(fr(1, 3, 3, 2))
        assert not is_quasi_concave(fr(3, 1, 2))
        assert is_single_peaked(fr(1, 3, 2), 2)
        assert not is_single_peaked(fr(1, 3, 2), 1)

    def test_candidate_intervals(self, inst_b, inst_a):
        """Test that each item of the ironing fixture has the single interval {2}, and item 2 of inst_a none."""
        curves = pseudo_revenues(inst_b)
        assert candidate_ironing_intervals(curves, 1) == [IroningInterval(1, 2, 2)]
        assert candidate_ironing_intervals(curves, 2) == [IroningInterval(2, 2, 2)]
        assert candidate_ironing_intervals(pseudo_revenues(inst_a), 2) == []

    def test_interval_helpers(self):
        """Test containment, nesting, length and printing of intervals."""
        outer, inner = IroningInterval(1, 2, 5), IroningInterval(2, 3, 4)
        assert 3 in outer and 6 not in outer
        assert inner.strictly_inside(outer)
        assert not outer.strictly_inside(inner)
        assert str(inner) == "{3, 4}"
        assert len(outer) == 4


class TestConditionCheckers:
    """Weak monotonicity, regularity, monotone MRS and mostly regularity."""

    def test_weak_monotonicity(self, inst_b, inst_a):
        """Test that a cutoff pair fails when a type below values the item more than one above, and names both."""
        assert check_weak_monotonicity(inst_b, (1, 4))
        verdict = check_weak_monotonicity(inst_a, (4, 2))
        assert not verdict
        assert verdict.witness == {"i": 2, "j": 4, "k": 2}

    def test_weak_monotonicity_single_sorted_item(self):
        """Sorted values are weakly monotone at every cutoff."""
        inst = make_instance([(1,), (2,), (5,)], ["1/3"] * 3)
        assert all(check_weak_monotonicity(inst, (c,)) for c in (1, 2, 3))

    def test_regularity(self, inst_a):
        """Test that inst_a is regular at (4, 2) and that moving item 2's cutoff to 1 exposes phi_1^2 < 0."""
        assert check_regularity(inst_a, (4, 2))
        verdict = check_regularity(inst_a, (4, 1))
        assert not verdict
        assert verdict.witness["i"] == 1 and verdict.witness["k"] == 2

    def test_cutoff_out_of_range(self, inst_b):
        """Test that cutoff 0 is refused rather than read as "sell to nobody"."""
        with pytest.raises(BadCutoff):
            check_regularity(inst_b, (0, 4))

    def test_monotone_mrs(self, inst_b):
        """Test rising rates of substitution, including the one-item case and a crossing pair."""
        assert check_monotone_mrs(inst_b)
        assert check_monotone_mrs(make_instance([(1,), (3,)], ["1/2", "1/2"]))
        verdict = check_monotone_mrs(make_instance([(1, 2), (2, 1)], ["1/2", "1/2"]))
        assert verdict.witness == {"i": 1, "j": 2, "k": 1, "l": 2}

    def test_inst_b_is_mostly_regular(self, inst_b):
        """Test that the ironing fixture passes all three mostly-regular conditions at (1, 4)."""
        assert check_mostly_regular(inst_b, (1, 4))

    def test_partial_overlap_fails_first_condition(self, overlap_instance):
        """Test that overlapping, non-nested intervals fail condition 1 with both spans as witness."""
        curves = pseudo_revenues(overlap_instance)
        assert curves.curve(1) == fr(10, 5, 6, 8, 3, 1)
        assert curves.curve(2) == fr(1, 2, 0, 1, 3, 4)
        verdict = check_mostly_regular(overlap_instance, (1, 6))
        assert not verdict
        assert verdict.witness["condition"] == 1
        assert verdict.witness["intervals"] == [[2, 3], [3, 4]]

    def test_non_peak_cutoff_rejected(self, inst_b):
        """Test that mostly-regular cutoffs must sit on a revenue peak."""
        with pytest.raises(BadCutoff):
            check_mostly_regular(inst_b, (2, 4))

    def test_regular_instance_is_vacuously_mostly_regular(self):
        """Test that an instance with no ironing intervals passes at its peaks."""
        inst = make_instance([(1, 1), (2, 3), (3, 5)], ["1/3"] * 3)
        curves = pseudo_revenues(inst)
        cutoffs = (curves.peaks(1)[0], curves.peaks(2)[0])
        assert check_mostly_regular(inst, cutoffs, curves)


class TestCutoffSearch:
    """Compatible cutoffs and type order search."""

    def test_inst_b_mostly_regular_cutoffs(self, inst_b):
        """Test that the mostly-regular search lands on (1, 4)."""
        found = find_compatible_cutoffs(inst_b, CutoffMode.MOSTLY_REGULAR)
        assert found.cutoffs == (1, 4)

    def test_inst_b_is_not_regular(self, inst_b):
        """Test that item 1 of the ironing fixture has no regular cutoff at all."""
        found = find_compatible_cutoffs(inst_b, CutoffMode.REGULAR)
        assert not found
        assert found.empty_item == 1

    def test_inst_a_has_no_regular_cutoffs(self, inst_a):
        """Test that inst_a has no compatible cutoff and blames item 2."""
        found = find_compatible_cutoffs(inst_a, CutoffMode.REGULAR)
        assert not found
        assert found.empty_item == 2

    def test_single_item_posted_price_cutoff(self):
        """Test that one item gets the posted-price cutoff."""
        inst = make_instance([(1,), (2,), (3,)], ["1/3"] * 3)
        assert find_compatible_cutoffs(inst, CutoffMode.REGULAR).cutoffs == (2,)

    def test_reversed_inst_b_is_reordered(self, inst_b):
        """Test that searching the reversed fixture recovers the original order."""
        reversed_b = inst_b.permuted((4, 3, 2, 1))
        found = search_type_orders(reversed_b, CutoffMode.MOSTLY_REGULAR)
        assert found.permutation == (4, 3, 2, 1)
        assert found.instance == inst_b
        assert found.cutoffs == (1, 4)

    def test_single_type_order(self):
        """One type, one order."""
        inst = make_instance([(2, 3)], [1])
        found = search_type_orders(inst, CutoffMode.REGULAR)
        assert found.permutation == (1,)

    def test_no_order_rescues_inst_a(self, inst_a):
        """Test that no permutation of inst_a is regular."""
        assert search_type_orders(inst_a, CutoffMode.REGULAR) is None

    def test_order_search_size_limit(self):
        """Test that nine types exceed the permutation search limit."""
        inst = make_instance([(i,) for i in range(1, 10)], ["1/9"] * 9)
        with pytest.raises(TooLarge):
            search_type_orders(inst, CutoffMode.REGULAR)


class TestConditionReport:
    """The combined report and its route."""

    def test_inst_b_routes_to_ironing(self, inst_b):
        """Test that the report for the ironing fixture takes the mostly-regular route."""
        report = analyze_conditions(inst_b)
        assert report.satisfied
        assert report.route is CutoffMode.MOSTLY_REGULAR
        assert report.cutoffs == (1, 4)
        assert report.monotone_mrs and report.mostly_regular

    def test_inst_a_unmet(self, inst_a):
        """Test that inst_a has no route and the regular search names item 2."""
        report = analyze_conditions(inst_a)
        assert not report.satisfied
        assert report.route is None
        assert report.compatible_regular.empty_item == 2
