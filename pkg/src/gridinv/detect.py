"""Run mined rules as invariant monitors over discretized record streams.

A rule fires a violation at a record when its antecedent is fully present
but some consequent item is not. Attributes that were pruned as constants
at mining time are evaluated against the constant state carried in the
rule set's provenance, so tampering with a "constant" signal still trips.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field

from .errors import MonitorError


@dataclass(frozen=True)
class Violation:
    """One rule broken at one timestamp."""

    timestamp: int
    rule_id: int
    failed_items: tuple  # consequent items not satisfied
    antecedent_snapshot: tuple

    def to_json(self):
        return json.dumps(
            {
                "timestamp": self.timestamp,
                "rule_id": self.rule_id,
                "failed_items": [str(i) for i in self.failed_items],
                "antecedent": [str(i) for i in self.antecedent_snapshot],
            }
        )


@dataclass(frozen=True)
class RotationPolicy:
    """Deterministic per-epoch sampling of the active rule subset."""

    subset_fraction: float
    epoch_length: int
    seed: int

    def __post_init__(self):
        if not (0 < self.subset_fraction <= 1):
            raise MonitorError(
                f"subset_fraction must be in (0, 1], got {self.subset_fraction}"
            )
        if self.epoch_length < 1:
            raise MonitorError(f"epoch_length must be >= 1, got {self.epoch_length}")


def rotate_subset(rules, policy, epoch_index):
    """Pseudo-random rule-id subset for one epoch; same inputs, same subset.

    Seeding goes through a string so the draw is stable across platforms
    and interpreter runs (no hash randomization involved).
    """
    n = len(rules.rules)
    if n == 0:
        raise MonitorError("cannot rotate over an empty rule set")
    k = math.ceil(policy.subset_fraction * n)
    rng = random.Random(f"{policy.seed}:{epoch_index}")
    return frozenset(rng.sample(range(n), k))


def _item_holds(item, txn_states, constants):
    state = txn_states.get(item.attribute)
    if state is None:
        state = constants.get(item.attribute)
    return state == item.state


def evaluate_record(transaction, rules, active=None, known_attributes=None):
    """Violations of the active rules at one record.

    ``known_attributes``, when given, is the attribute universe of the
    stream plus recorded constants; a rule naming anything else is an error.
    """
    constants = rules.constant_states()
    states = transaction.states()
    violations = []
    ids = range(len(rules.rules)) if active is None else sorted(active)
    for rule_id in ids:
        rule = rules.rules[rule_id]
        if known_attributes is not None:
            for item in rule.antecedent + rule.consequent:
                if item.attribute not in known_attributes:
                    raise MonitorError(
                        f"rule {rule_id} references attribute {item.attribute!r} "
                        "absent from the stream's schema"
                    )
        if not all(_item_holds(i, states, constants) for i in rule.antecedent):
            continue
        failed = tuple(i for i in rule.consequent if not _item_holds(i, states, constants))
        if failed:
            violations.append(
                Violation(transaction.timestamp, rule_id, failed, rule.antecedent)
            )
    return violations


@dataclass
class StreamSummary:
    records: int
    violations: int
    violating_rule_histogram: dict  # rule_id -> violation count
    epochs: int = 1

    def to_json(self):
        return json.dumps(
            {
                "records": self.records,
                "violations": self.violations,
                "violating_rule_histogram": {
                    str(k): v for k, v in sorted(self.violating_rule_histogram.items())
                },
                "epochs": self.epochs,
            },
            indent=2,
        )

    def to_text(self):
        lines = [
            f"records evaluated : {self.records}",
            f"violations        : {self.violations}",
            f"epochs            : {self.epochs}",
        ]
        if self.violating_rule_histogram:
            lines.append("violations per rule:")
            for rule_id, count in sorted(
                self.violating_rule_histogram.items(), key=lambda kv: (-kv[1], kv[0])
            ):
                lines.append(f"  rule {rule_id:>6}: {count}")
        return "\n".join(lines) + "\n"


def evaluate_stream(transactions, rules, policy=None):
    """Evaluate a time-ordered stream; epoch e covers records
    [e*epoch_length, (e+1)*epoch_length). Returns (violations, summary)."""
    known = {i.attribute for t in transactions for i in t.items}
    known |= set(rules.constant_states())
    for rule_id, rule in enumerate(rules.rules):
        for item in rule.antecedent + rule.consequent:
            if item.attribute not in known:
                raise MonitorError(
                    f"rule {rule_id} references attribute {item.attribute!r} "
                    "absent from the stream's schema"
                )

    violations = []
    histogram = Counter()
    epochs = 1
    active = None
    current_epoch = -1
    for idx, txn in enumerate(transactions):
        if policy is not None:
            epoch = idx // policy.epoch_length
            if epoch != current_epoch:
                active = rotate_subset(rules, policy, epoch)
                current_epoch = epoch
            epochs = epoch + 1
        hits = evaluate_record(txn, rules, active=active)
        for v in hits:
            histogram[v.rule_id] += 1
        violations.extend(hits)
    summary = StreamSummary(
        records=len(transactions),
        violations=len(violations),
        violating_rule_histogram=dict(histogram),
        epochs=epochs,
    )
    return violations, summary


def violations_to_jsonl(violations):
    return "".join(v.to_json() + "\n" for v in violations)
