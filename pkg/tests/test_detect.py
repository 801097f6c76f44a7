import json
import math
import random

import pytest

from gridinv.detect import (
    RotationPolicy,
    evaluate_record,
    evaluate_stream,
    rotate_subset,
    violations_to_jsonl,
)
from gridinv.discretize import Item, Transaction
from gridinv.errors import MonitorError
from gridinv.mine import mine_frequent
from gridinv.rules import AssociationRule, MiningConfig, RuleSet, generate_rules

from conftest import item, make_txns


def _mode_rule():
    return RuleSet([
        AssociationRule(
            (Item("MicroGrid.Q2C.MODE_CLOSE", "False"),),
            (Item("MicroGrid.Q2B.MODE_CLOSE", "False"),),
            0.959, 1.0, 1.022,
        )
    ])


def _txn(ts, **states):
    return Transaction(ts, frozenset(Item(k, v) for k, v in states.items()))


class TestEvaluateRecord:
    def test_violation_with_failed_items(self):
        txn = Transaction(5, frozenset([
            Item("MicroGrid.Q2C.MODE_CLOSE", "False"),
            Item("MicroGrid.Q2B.MODE_CLOSE", "True"),
        ]))
        hits = evaluate_record(txn, _mode_rule())
        assert len(hits) == 1
        v = hits[0]
        assert v.timestamp == 5
        assert v.rule_id == 0
        assert v.failed_items == (Item("MicroGrid.Q2B.MODE_CLOSE", "False"),)
        assert v.antecedent_snapshot == (Item("MicroGrid.Q2C.MODE_CLOSE", "False"),)

    def test_vacuous_antecedent(self):
        txn = Transaction(5, frozenset([
            Item("MicroGrid.Q2C.MODE_CLOSE", "True"),
            Item("MicroGrid.Q2B.MODE_CLOSE", "True"),
        ]))
        assert evaluate_record(txn, _mode_rule()) == []

    def test_satisfied_rule(self):
        txn = Transaction(5, frozenset([
            Item("MicroGrid.Q2C.MODE_CLOSE", "False"),
            Item("MicroGrid.Q2B.MODE_CLOSE", "False"),
        ]))
        assert evaluate_record(txn, _mode_rule()) == []

    def test_pruned_constant_consulted(self):
        # consequent attribute was pruned as constant False at mining time
        rules = RuleSet(
            [AssociationRule((item("a"),), (Item("c", "False"),), 0.9, 1.0, 1.0)],
            {"constants": {"c": "False"}},
        )
        assert evaluate_record(_txn(0, a="1"), rules) == []
        # live value contradicting the recorded constant still trips
        assert len(evaluate_record(_txn(0, a="1", c="True"), rules)) == 1

    def test_unknown_attribute_is_error(self):
        rules = RuleSet([AssociationRule((item("a"),), (item("zz"),), 0.9, 1.0, 1.0)])
        with pytest.raises(MonitorError, match="zz"):
            evaluate_stream([_txn(0, a="1")], rules)

    def test_monotone_in_activation(self):
        rules = RuleSet([
            AssociationRule((item("a"),), (item("b"),), 0.9, 1.0, 1.0),
            AssociationRule((item("a"),), (item("c"),), 0.9, 1.0, 1.0),
        ])
        txn = _txn(0, a="1", b="0", c="0")
        small = evaluate_record(txn, rules, active={0})
        full = evaluate_record(txn, rules, active={0, 1})
        assert {v.rule_id for v in small} <= {v.rule_id for v in full}


class TestRotation:
    def test_full_fraction_all_ids(self):
        rules = RuleSet([
            AssociationRule((item("a"),), (Item(f"b{i}", "1"),), 0.9, 1.0, 1.0)
            for i in range(10)
        ])
        policy = RotationPolicy(1.0, 10, seed=1)
        for epoch in (0, 3, 99):
            assert rotate_subset(rules, policy, epoch) == frozenset(range(10))

    def test_ceiling_size(self):
        rules = RuleSet([
            AssociationRule((item("a"),), (Item(f"b{i}", "1"),), 0.9, 1.0, 1.0)
            for i in range(10)
        ])
        assert len(rotate_subset(rules, RotationPolicy(0.3, 5, 1), 0)) == 3
        assert len(rotate_subset(rules, RotationPolicy(0.25, 5, 1), 0)) == math.ceil(2.5)

    def test_deterministic_replay(self):
        rules = RuleSet([
            AssociationRule((item("a"),), (Item(f"b{i}", "1"),), 0.9, 1.0, 1.0)
            for i in range(50)
        ])
        policy = RotationPolicy(0.5, 10, seed=7)
        for epoch in range(5):
            assert rotate_subset(rules, policy, epoch) == rotate_subset(rules, policy, epoch)

    def test_epochs_differ(self):
        rules = RuleSet([
            AssociationRule((item("a"),), (Item(f"b{i}", "1"),), 0.9, 1.0, 1.0)
            for i in range(60)
        ])
        policy = RotationPolicy(0.5, 10, seed=7)
        assert rotate_subset(rules, policy, 0) != rotate_subset(rules, policy, 1)

    @pytest.mark.parametrize("kwargs", [
        {"subset_fraction": 0.0}, {"subset_fraction": 1.5}, {"epoch_length": 0},
    ])
    def test_policy_domain(self, kwargs):
        defaults = {"subset_fraction": 0.5, "epoch_length": 10, "seed": 1}
        with pytest.raises(MonitorError):
            RotationPolicy(**{**defaults, **kwargs})


class TestEvaluateStream:
    def test_zero_violations_on_training_data(self):
        txns = make_txns("ab ab b ab ab " * 20)
        table = mine_frequent(txns, 0.5)
        rules = generate_rules(table, MiningConfig(min_support=0.5))
        assert len(rules) >= 1
        violations, summary = evaluate_stream(txns, rules)
        assert violations == []
        assert summary.violations == 0
        assert summary.records == 100

    def test_zero_training_fp_random_datasets(self):
        for seed in range(30):
            rng = random.Random(seed)
            tokens = [
                "".join(ch for ch in "abcde" if rng.random() < 0.7) or "a"
                for _ in range(rng.randint(5, 40))
            ]
            txns = make_txns(" ".join(tokens))
            table = mine_frequent(txns, 0.3, max_size=None)
            rules = generate_rules(table, MiningConfig(min_support=0.3))
            _, summary = evaluate_stream(txns, rules)
            assert summary.violations == 0, f"seed {seed}"

    def test_five_flips_give_five_violations(self):
        rules = RuleSet([AssociationRule((item("a"),), (item("b"),), 0.9, 1.0, 1.0)])
        flipped = {10, 25, 40, 41, 77}
        txns = [
            _txn(t, a="1", b="0" if t in flipped else "1") for t in range(100)
        ]
        violations, summary = evaluate_stream(txns, rules)
        assert summary.violations == 5
        assert {v.timestamp for v in violations} == flipped

    def test_rotation_epochs(self):
        rules = RuleSet([
            AssociationRule((item("a"),), (Item(f"b{i}", "1"),), 0.9, 1.0, 1.0)
            for i in range(8)
        ])
        txns = [
            Transaction(t, frozenset({Item("a", "0")} | {Item(f"b{i}", "1") for i in range(8)}))
            for t in range(30)
        ]
        policy = RotationPolicy(0.5, 10, seed=7)
        _, summary = evaluate_stream(txns, rules, policy)
        assert summary.epochs == 3
        # replay is identical
        v2, s2 = evaluate_stream(txns, rules, policy)
        assert s2.epochs == 3 and v2 == []

    def test_histogram_counts(self):
        rules = RuleSet([
            AssociationRule((item("a"),), (item("b"),), 0.9, 1.0, 1.0),
            AssociationRule((item("a"),), (item("c"),), 0.9, 1.0, 1.0),
        ])
        txns = [_txn(0, a="1", b="0", c="1"), _txn(1, a="1", b="0", c="0")]
        _, summary = evaluate_stream(txns, rules)
        assert summary.violating_rule_histogram == {0: 2, 1: 1}


def test_violations_jsonl_shape():
    rules = RuleSet([AssociationRule((item("a"),), (item("b"),), 0.9, 1.0, 1.0)])
    violations, _ = evaluate_stream([_txn(3, a="1", b="0")], rules)
    line = violations_to_jsonl(violations).strip()
    obj = json.loads(line)
    assert obj == {
        "timestamp": 3,
        "rule_id": 0,
        "failed_items": ["b=1"],
        "antecedent": ["a=1"],
    }
