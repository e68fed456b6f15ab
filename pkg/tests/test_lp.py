#!/usr/bin/env python3
"""
Tests for the exact simplex solver and the revenue and transfer LP builders.
"""

from fractions import Fraction as F

import pytest

from upgrade_pricing.lp import (
    Constraint,
    LinearProgram,
    LpStatus,
    Relation,
    Variable,
    build_revenue_lp,
    build_transfer_lp,
    mechanism_from_solution,
    solve_lp,
)
from upgrade_pricing.model import ic_ir_violations, revenue

from .conftest import make_instance


def program(variables, objective, *rows):
    return LinearProgram(
        variables=tuple(variables),
        objective=tuple(F(c) for c in objective),
        constraints=tuple(
            Constraint(name, tuple(F(a) for a in coefficients), relation, F(rhs))
            for name, coefficients, relation, rhs in rows
        ),
    )


class TestSimplex:
    """Small programs with known optima."""

    def test_single_upper_row(self):
        """Test the smallest bounded program."""
        solution = solve_lp(program([Variable("x")], [1], ("c", [1], Relation.LE, 3)))
        assert solution.is_optimal
        assert solution.value == 3
        assert solution["x"] == 3

    def test_equality_row(self):
        """Test that an equality row ties x and y at the cap."""
        solution = solve_lp(program(
            [Variable("x"), Variable("y")], [1, 1],
            ("cap", [1, 1], Relation.LE, 4),
            ("tie", [1, -1], Relation.EQ, 0),
        ))
        assert solution.value == 4
        assert (solution["x"], solution["y"]) == (2, 2)

    def test_redundant_equalities(self):
        """Test that a doubled equality row does not break phase one."""
        solution = solve_lp(program(
            [Variable("x"), Variable("y")], [1, 0],
            ("a", [1, 1], Relation.EQ, 2),
            ("b", [2, 2], Relation.EQ, 4),
        ))
        assert solution.value == 2

    def test_free_variable_goes_negative(self):
        """Test that a free variable is split and reaches -5."""
        solution = solve_lp(program([Variable("x", None, None)], [-1], ("floor", [1], Relation.GE, -5)))
        assert solution.value == 5
        assert solution["x"] == -5

    def test_upper_bound_only(self):
        """Test a variable bounded above and free below."""
        solution = solve_lp(program([Variable("x", None, F(7))], [1]))
        assert solution["x"] == 7

    def test_boxed_variable(self):
        """Test that a boxed variable sits at its lower bound when that is optimal."""
        solution = solve_lp(program([Variable("x", F(1), F(2))], [-1]))
        assert solution["x"] == 1
        assert solution.value == -1

    def test_boxed_variables_fill_to_their_bounds(self):
        """Test that a fractional knapsack picks the two best boxed goods without bound rows."""
        solution = solve_lp(program(
            [Variable("x", upper=F(1)), Variable("y", upper=F(1)), Variable("z", upper=F(1))], [3, 2, 4],
            ("cap", [1, 1, 1], Relation.LE, 2),
        ))
        assert solution.value == 7
        assert (solution["x"], solution["y"], solution["z"]) == (1, 0, 1)

    def test_basic_variable_leaves_at_its_upper_bound(self):
        """Test that y stops at 1/2 while x still has room below its own bound."""
        solution = solve_lp(program(
            [Variable("x", upper=F(1)), Variable("y", upper=F(1, 2))], [0, 1],
            ("below", [-1, 1], Relation.LE, 0),
        ))
        assert solution.value == F(1, 2)
        assert solution["y"] == F(1, 2)
        assert F(1, 2) <= solution["x"] <= 1

    def test_bounds_alone(self):
        """Test a program with bounds and no rows."""
        solution = solve_lp(program([Variable("x", upper=F(3)), Variable("y", upper=F(2))], [1, -1]))
        assert solution.value == 3
        assert (solution["x"], solution["y"]) == (3, 0)

    def test_infeasible(self):
        """Test that x >= 2 and x <= 1 is reported infeasible with no value."""
        solution = solve_lp(program(
            [Variable("x")], [1],
            ("low", [1], Relation.GE, 2),
            ("high", [1], Relation.LE, 1),
        ))
        assert solution.status is LpStatus.INFEASIBLE
        assert solution.value is None

    def test_unbounded(self):
        """Test that an unconstrained maximization is unbounded."""
        solution = solve_lp(program([Variable("x")], [1]))
        assert solution.status is LpStatus.UNBOUNDED

    @pytest.mark.parametrize("variables, objective", [
        ([Variable("x"), Variable("x")], [1, 1]),
        ([Variable("x")], [1, 2]),
        ([Variable("x", F(3), F(2))], [1]),
    ])
    def test_malformed_programs_rejected(self, variables, objective):
        """Test duplicate names and a short objective."""
        with pytest.raises(ValueError):
            program(variables, objective)


class TestDump:
    """Readable listing of a program."""

    def test_dump(self):
        """Test the LP-format dump of a two-variable program."""
        lp = program(
            [Variable("x"), Variable("y", None, None)], [1, -1],
            ("c1", [1, 2], Relation.LE, "1/2"),
        )
        assert lp.dump() == (
            "\\ lp: 2 variables, 1 rows\n"
            "maximize\n"
            "  obj: x - y\n"
            "subject to\n"
            "  c1: x + 2 y <= 1/2\n"
            "bounds\n"
            "  x >= 0\n"
            "  y free\n"
            "end\n"
        )

    def test_leading_negative_term(self):
        lp = program([Variable("x")], [-1])
        assert "  obj: -x\n" in lp.dump()


class TestRevenueLp:
    """Revenue maximization over all mechanisms."""

    def test_inst_b_optimum(self, inst_b):
        """Test the revenue LP of the ironing fixture: size, optimum 137/64, and the optimal mechanism."""
        lp = build_revenue_lp(inst_b)
        assert lp.num_variables == 12
        assert lp.num_rows == 16
        solution = solve_lp(lp)
        assert solution.value == F(137, 64)
        mechanism = mechanism_from_solution(inst_b, solution)
        assert revenue(inst_b, mechanism) == F(137, 64)
        assert ic_ir_violations(inst_b, mechanism) == []

    def test_single_item_posted_price(self):
        """Test that one item gives the posted-price optimum."""
        inst = make_instance([(1,), (2,), (3,)], ["1/3"] * 3)
        assert solve_lp(build_revenue_lp(inst)).value == F(4, 3)

    def test_single_type_extracts_everything(self):
        """Test that one type pays its full value for everything."""
        inst = make_instance([(2, 3)], [1])
        assert solve_lp(build_revenue_lp(inst)).value == 5

    def test_inst_a_optimum(self, inst_a):
        """Test that the item-two-first menu is optimal for inst_a at exactly 33/32."""
        solution = solve_lp(build_revenue_lp(inst_a))
        assert solution.value == F(33, 32)
        assert ic_ir_violations(inst_a, mechanism_from_solution(inst_a, solution)) == []

    @pytest.mark.slow
    def test_desk_scale_instance(self):
        """Test that twelve types and three goods solve exactly at the best grand bundle price."""
        inst = make_instance([(i, 2 * i, 3 * i) for i in range(1, 13)], ["1/12"] * 12)
        solution = solve_lp(build_revenue_lp(inst))
        assert solution.value == 21
        assert ic_ir_violations(inst, mechanism_from_solution(inst, solution)) == []

    def test_scaling_values_scales_the_optimum(self, inst_b):
        """Test that tripling every value triples the optimum."""
        scaled = make_instance([tuple(3 * v for v in inst_b.row(i)) for i in inst_b.types()], inst_b.f)
        assert solve_lp(build_revenue_lp(scaled)).value == 3 * F(137, 64)


class TestTransferLp:
    """Best transfers for a fixed allocation."""

    def test_inst_a_cutoff_allocation(self, inst_a):
        """Test the transfer LP for inst_a's cutoff allocation, 31/32."""
        q = [[F(v) for v in row] for row in ((0, 0), (0, 1), (0, 1), (1, 1))]
        lp = build_transfer_lp(inst_a, q)
        assert lp.num_variables == 4
        solution = solve_lp(lp)
        assert solution.value == F(31, 32)
        assert [solution[f"t[{i}]"] for i in range(1, 5)] == [0, F(3, 2), F(3, 2), 2]

    def test_allocation_shape_checked(self, inst_a):
        """Test that the allocation must have one row per type."""
        with pytest.raises(ValueError):
            build_transfer_lp(inst_a, [[F(0), F(0)]])
