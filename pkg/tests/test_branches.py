import json
import random

import pytest

from cmdarena.branches import (
    ActionNode,
    BehaviorBranch,
    BranchDecodeError,
    BranchValidationError,
    ConditionNode,
    ControlNode,
    action,
    branch,
    condition,
    control,
    decode_json,
    encode_json,
    node_count,
    validate,
)
from cmdarena.predicates import Comparison

from generators import random_branch


def nested_conditions(depth: int) -> BehaviorBranch:
    """A chain of conditions nested through then-arms, `depth` levels deep."""
    node = action("tackle")
    for _ in range(depth - 1):
        node = condition("self_hp > 0", [node], [])
    return branch([node])


class TestValidate:
    def test_minimal_valid_branch(self):
        assert validate(branch([action("thunderbolt")])).ok

    def test_move_to_arity(self):
        report = validate(branch([ActionNode("move_to", (1.0,))]))
        assert not report.ok
        assert report.violations[0].path == "nodes[0]"
        assert "move_to arity 2, got 1" in report.violations[0].rule

    def test_nesting_depth_limit(self):
        # depth 8 passes, depth 9 violates
        assert validate(nested_conditions(8)).ok
        report = validate(nested_conditions(9))
        assert not report.ok
        assert any("depth 9 > 8" in v.rule for v in report.violations)

    def test_empty_branch_rejected(self):
        report = validate(BehaviorBranch(()))
        assert any("no nodes" in v.rule for v in report.violations)

    def test_violation_paths_name_the_node(self):
        b = branch(
            [condition("self_hp > 0", [action("idle", 1.0), ActionNode("fly")], [])]
        )
        report = validate(b)
        assert [str(v) for v in report.violations] == [
            "nodes[0].then[1]: unknown action 'fly'"
        ]

    def test_validation_is_pure(self):
        b = nested_conditions(9)
        assert validate(b) == validate(b)

    @pytest.mark.parametrize(
        "mutant, rule_fragment",
        [
            (branch([ActionNode("fly")]), "unknown action"),
            (branch([ActionNode("idle", (0.0,))]), "idle duration"),
            (branch([ActionNode("idle", ())]), "idle arity 1, got 0"),
            (branch([ActionNode("tackle", (1.0,))]), "tackle arity 0, got 1"),
            (branch([ControlNode("loop")]), "unknown control"),
            (branch([condition("warp_level > 1", [action("tackle")], [])]), "unknown sensor"),
            (branch([action("tackle")] * 65), "node count 65 > 64"),
            (nested_conditions(9), "depth 9 > 8"),
        ],
    )
    def test_each_broken_rule_is_caught(self, mutant, rule_fragment):
        report = validate(mutant)
        assert not report.ok
        assert any(rule_fragment in v.rule for v in report.violations)

    def test_random_valid_branches_pass(self):
        rng = random.Random(77)
        for _ in range(200):
            b = random_branch(rng)
            report = validate(b)
            assert report.ok, report.violations


class TestCodec:
    def test_control_node_shape(self):
        assert encode_json(branch([control("end")])) == '{"nodes":[{"kind":"control","name":"end"}]}'

    def test_args_always_present(self):
        text = encode_json(branch([action("tackle")]))
        assert '"args":[]' in text

    def test_condition_shape(self):
        b = branch([condition("self_hp < 50", [action("retreat")], [])])
        obj = json.loads(encode_json(b))
        node = obj["nodes"][0]
        assert list(node.keys()) == ["kind", "pred", "then", "else"]
        assert node["pred"] == "self_hp < 50"

    def test_round_trip_100_random_branches(self):
        rng = random.Random(1234)
        for _ in range(100):
            b = random_branch(rng)
            assert decode_json(encode_json(b)) == b

    def test_encoding_is_byte_identical_across_calls(self):
        rng = random.Random(5)
        b = random_branch(rng)
        assert encode_json(b).encode() == encode_json(b).encode()

    def test_unknown_action_rejected_on_decode(self):
        with pytest.raises(BranchValidationError, match="unknown action 'fly'"):
            decode_json('{"nodes":[{"kind":"action","name":"fly","args":[]}]}')

    def test_unknown_kind_rejected(self):
        with pytest.raises(BranchDecodeError, match=r"\$\.nodes\[0\]: unknown kind 'loop'"):
            decode_json('{"nodes":[{"kind":"loop"}]}')

    def test_missing_field_rejected(self):
        with pytest.raises(BranchDecodeError, match="missing field 'args'"):
            decode_json('{"nodes":[{"kind":"action","name":"tackle"}]}')

    def test_wrong_arity_rejected(self):
        with pytest.raises(BranchValidationError, match="move_to arity 2"):
            decode_json('{"nodes":[{"kind":"action","name":"move_to","args":[1.0]}]}')

    def test_invalid_json_rejected(self):
        with pytest.raises(BranchDecodeError, match="invalid JSON"):
            decode_json("{nodes: }")

    def test_predicate_text_reparsed_on_decode(self):
        b = decode_json(
            '{"nodes":[{"kind":"condition","pred":"self_hp < 50","then":[],"else":[]}]}'
        )
        node = b.nodes[0]
        assert isinstance(node, ConditionNode)
        assert node.predicate == Comparison("self_hp", "<", 50.0)


def test_node_count_recursive():
    b = branch(
        [
            condition(
                "self_hp > 0",
                [action("tackle"), action("retreat")],
                [condition("self_hp > 0", [action("idle", 1.0)], [])],
            ),
            control("repeat"),
        ]
    )
    assert node_count(b) == 6
