import random

import pytest

from cmdarena.branches import (
    ActionNode,
    BranchValidationError,
    ConditionNode,
    ControlNode,
    action,
    branch,
    condition,
    control,
)
from cmdarena.dsl import DslSyntaxError, parse, print_canonical

from generators import random_branch


class TestParse:
    def test_smallest_program(self):
        b = parse('branch([action("thunderbolt")])')
        assert b == branch([ActionNode("thunderbolt")])

    def test_condition_with_repeat(self):
        b = parse(
            'branch([condition("distance_to_opponent < 6", [action("retreat")],'
            ' [action("thunderbolt")]), control("repeat")])'
        )
        expected = branch(
            [
                condition(
                    "distance_to_opponent < 6",
                    [action("retreat")],
                    [action("thunderbolt")],
                ),
                control("repeat"),
            ]
        )
        assert b == expected

    def test_mismatched_bracket_is_syntax_error(self):
        with pytest.raises(DslSyntaxError) as excinfo:
            parse('branch([action("tackle"]))')
        assert "']'" in str(excinfo.value)
        assert excinfo.value.line == 1

    def test_numbers_with_signs_and_fractions(self):
        b = parse('branch([action("move_to", -3, +2.5)])')
        assert b.nodes[0] == ActionNode("move_to", (-3.0, 2.5))

    def test_whitespace_and_trailing_commas(self):
        b = parse('branch( [ action( "tackle" ) , control( "end" ) , ] )')
        assert b == branch([action("tackle"), control("end")])

    def test_trailing_prose_ignored(self):
        b = parse('branch([action("tackle")])  # closes the gap, then hits')
        assert b == branch([action("tackle")])

    def test_semantic_failure_raises_validation_error(self):
        with pytest.raises(BranchValidationError, match="unknown action 'fly'"):
            parse('branch([action("fly")])')

    def test_bad_predicate_is_syntax_error(self):
        with pytest.raises(DslSyntaxError, match="bad predicate"):
            parse('branch([condition("self_hp <", [], [])])')

    def test_error_reports_line_and_column(self):
        with pytest.raises(DslSyntaxError) as excinfo:
            parse('branch([\n  action("tackle"),\n  zap("x")\n])')
        assert excinfo.value.line == 3
        assert excinfo.value.expected  # names the allowed tokens

    def test_truncated_input(self):
        with pytest.raises(DslSyntaxError, match="unexpected end of input"):
            parse('branch([control("never_ends")')


class TestPrintCanonical:
    def test_move_to_formatting(self):
        text = print_canonical(branch([ActionNode("move_to", (3.0, -2.5))]))
        assert text == 'branch([action("move_to", 3, -2.5)])'

    def test_nested_condition_prints_arms_in_source_order(self):
        b = branch(
            [
                condition(
                    "self_hp < 50",
                    [action("retreat"), action("idle", 1.0)],
                    [action("tackle")],
                )
            ]
        )
        assert print_canonical(b) == (
            'branch([condition("self_hp < 50", [action("retreat"), action("idle", 1)],'
            ' [action("tackle")])])'
        )

    def test_print_is_idempotent_through_parse(self):
        rng = random.Random(2024)
        for _ in range(100):
            b = random_branch(rng)
            text = print_canonical(b)
            assert print_canonical(parse(text)) == text

    def test_round_trip_restores_branch(self):
        rng = random.Random(99)
        for _ in range(200):
            b = random_branch(rng)
            assert parse(print_canonical(b)) == b
