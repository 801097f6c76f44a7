"""Association rules: generation, metric identities, filtering, serialization.

Confidence and lift are computed from integer containment counts so that
confidence == 1.0 is an exact count equality, never a float coincidence.
Default thresholds: support 0.60, confidence 1.0, lift >= 1.0.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from itertools import combinations
from pathlib import Path

from .discretize import Item
from .errors import ClosureError, RuleError
from .mine import canonical_itemset

METRIC_TOLERANCE = 1e-9


@dataclass(frozen=True)
class AssociationRule:
    """antecedent => consequent with support, confidence and lift."""

    antecedent: tuple
    consequent: tuple
    support: float
    confidence: float
    lift: float

    def __post_init__(self):
        object.__setattr__(self, "antecedent", canonical_itemset(self.antecedent))
        object.__setattr__(self, "consequent", canonical_itemset(self.consequent))
        a_attrs = {i.attribute for i in self.antecedent}
        c_attrs = {i.attribute for i in self.consequent}
        if a_attrs & c_attrs:
            raise RuleError(
                f"antecedent and consequent share attributes: {sorted(a_attrs & c_attrs)}"
            )

    def key(self):
        return (self.antecedent, self.consequent)

    def __str__(self):
        ant = ", ".join(str(i) for i in self.antecedent)
        con = ", ".join(str(i) for i in self.consequent)
        return f"{ant} => {con}"


@dataclass(frozen=True)
class MiningConfig:
    min_support: float = 0.60
    min_confidence: float = 1.0
    min_lift: float = 1.0
    max_itemset_size: int = 4

    def __post_init__(self):
        if not (0 < self.min_support <= 1):
            raise RuleError(f"min_support must be in (0, 1], got {self.min_support}")
        if not (0 < self.min_confidence <= 1):
            raise RuleError(f"min_confidence must be in (0, 1], got {self.min_confidence}")
        if self.min_lift <= 0:
            raise RuleError(f"min_lift must be positive, got {self.min_lift}")
        if self.max_itemset_size < 2:
            raise RuleError(f"max_itemset_size must be >= 2, got {self.max_itemset_size}")


@dataclass
class RuleSet:
    """Deduplicated rules, sorted by (support desc, antecedent, consequent)."""

    rules: list
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        unique = []
        for r in self.rules:
            if r.key() in seen:
                continue
            seen.add(r.key())
            unique.append(r)
        unique.sort(
            key=lambda r: (
                -r.support,
                tuple(str(i) for i in r.antecedent),
                tuple(str(i) for i in r.consequent),
            )
        )
        self.rules = unique

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def constant_states(self):
        """Attribute -> state map recorded when constants were pruned before mining."""
        return dict(self.provenance.get("constants", {}))


def transactions_fingerprint(transactions):
    h = hashlib.sha256()
    for t in transactions:
        h.update(str(t.timestamp).encode())
        for s in sorted(str(i) for i in t.items):
            h.update(s.encode())
        h.update(b"\n")
    return h.hexdigest()


def _bipartition_rules(itemset, table, config):
    n = table.total_transactions
    c_full = table.counts.get(itemset)
    items = list(itemset)
    out = []
    for r in range(1, len(items)):
        for idx in combinations(range(len(items)), r):
            x = tuple(items[i] for i in idx)
            y = tuple(items[i] for i in range(len(items)) if i not in idx)
            cx = table.counts.get(x)
            cy = table.counts.get(y)
            if cx is None or cy is None:
                missing = x if cx is None else y
                raise ClosureError(
                    f"table violates downward closure: missing subset {missing}"
                )
            confidence = c_full / cx
            if confidence < config.min_confidence:
                continue
            lift = confidence * n / cy
            if lift < config.min_lift:
                continue
            out.append(AssociationRule(x, y, c_full / n, confidence, lift))
    return out


def generate_rules(table, config=None, workers=1, constants=None, fingerprint=None):
    """Emit every bipartition X => Y of every frequent itemset that passes the
    confidence and lift filters. Output is schedule-independent."""
    config = config or MiningConfig()
    itemsets = [s for s in table.counts if len(s) >= 2]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = pool.map(lambda s: _bipartition_rules(s, table, config), itemsets)
            rules = [r for chunk in chunks for r in chunk]
    else:
        rules = [r for s in itemsets for r in _bipartition_rules(s, table, config)]
    provenance = {
        "config": asdict(config),
        "dataset_fingerprint": fingerprint,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "constants": dict(constants or {}),
    }
    return RuleSet(rules, provenance)


def remove_redundant(ruleset):
    """Optional post-pass: drop a confidence-1 rule when a confidence-1 rule
    with the same consequent and a strictly smaller antecedent exists."""
    by_consequent = {}
    for r in ruleset.rules:
        if r.confidence == 1.0:
            by_consequent.setdefault(r.consequent, []).append(r)
    keep = []
    for r in ruleset.rules:
        redundant = False
        if r.confidence == 1.0:
            mine = set(r.antecedent)
            for other in by_consequent.get(r.consequent, ()):
                if other is not r and set(other.antecedent) < mine:
                    redundant = True
                    break
        if not redundant:
            keep.append(r)
    return RuleSet(keep, dict(ruleset.provenance))


@dataclass
class MetricReport:
    """Outcome of the metric-identity checks for one rule."""

    ok: bool
    failures: list
    implied_antecedent_support: float
    implied_consequent_support: float


def check_metric_consistency(rule, tolerance=METRIC_TOLERANCE):
    """Verify that (support, confidence, lift) can coexist.

    Uses the identities confidence = support/S(X) and lift = confidence/S(Y):
    the implied S(X) and S(Y) must be valid probabilities and upper-bound the
    joint support. With confidence 1, S(X) must equal the support.
    """
    s, c, l = rule.support, rule.confidence, rule.lift
    failures = []
    if not (0 < s <= 1 + tolerance):
        failures.append(f"support {s} outside (0, 1]")
    if not (0 < c <= 1 + tolerance):
        failures.append(f"confidence {c} outside (0, 1]")
    if l <= 0:
        failures.append(f"lift {l} is not positive")
    sx = sy = float("nan")
    if not failures:
        if s > c + tolerance:
            failures.append(f"support {s} exceeds confidence {c}")
        sx = s / c
        sy = c / l
        if not (0 < sx <= 1 + tolerance):
            failures.append(f"implied antecedent support {sx:.6g} outside (0, 1]")
        if not (0 < sy <= 1 + tolerance):
            failures.append(f"implied consequent support {sy:.6g} outside (0, 1]")
        if s > sy + tolerance:
            failures.append(f"support {s} exceeds implied consequent support {sy:.6g}")
        if abs(c - 1) <= tolerance and abs(sx - s) > tolerance:
            failures.append(f"confidence 1 but implied antecedent support {sx:.6g} != support {s}")
    return MetricReport(not failures, failures, sx, sy)


# ---------------------------------------------------------------------------
# Serialization: CSV (with provenance comment) and JSON-lines

CSV_HEADER = ["support", "confidence", "lift", "antecedent", "consequent"]


def _fmt(x):
    return str(int(x)) if x == int(x) else repr(x)


def _join(itemset):
    return ", ".join(str(i) for i in itemset)


def _split(text):
    return tuple(Item.parse(tok.strip()) for tok in text.split(",") if tok.strip())


def export_rules(ruleset, fmt="csv"):
    if fmt == "csv":
        buf = io.StringIO()
        if ruleset.provenance:
            buf.write("# provenance " + json.dumps(ruleset.provenance, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in ruleset.rules:
            writer.writerow(
                [_fmt(r.support), _fmt(r.confidence), _fmt(r.lift), _join(r.antecedent), _join(r.consequent)]
            )
        return buf.getvalue()
    if fmt == "jsonl":
        lines = []
        if ruleset.provenance:
            lines.append(json.dumps({"provenance": ruleset.provenance}, sort_keys=True))
        for r in ruleset.rules:
            lines.append(
                json.dumps(
                    {
                        "support": r.support,
                        "confidence": r.confidence,
                        "lift": r.lift,
                        "antecedent": [str(i) for i in r.antecedent],
                        "consequent": [str(i) for i in r.consequent],
                    }
                )
            )
        return "\n".join(lines) + "\n"
    raise RuleError(f"unknown rule format {fmt!r}")


def import_rules(text, fmt="csv"):
    if fmt == "csv":
        provenance = {}
        body = []
        for line in text.splitlines():
            if line.startswith("# provenance "):
                provenance = json.loads(line[len("# provenance "):])
            elif line.startswith("#") or not line.strip():
                continue
            else:
                body.append(line)
        if not body:
            raise RuleError("rule CSV has no header row")
        reader = csv.reader(io.StringIO("\n".join(body)))
        header = next(reader)
        if header != CSV_HEADER:
            raise RuleError(f"unexpected rule CSV header: {header}")
        rules = [
            AssociationRule(_split(ant), _split(con), float(s), float(c), float(l))
            for s, c, l, ant, con in reader
        ]
        return RuleSet(rules, provenance)
    if fmt == "jsonl":
        provenance = {}
        rules = []
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            if "provenance" in obj and "support" not in obj:
                provenance = obj["provenance"]
                continue
            rules.append(
                AssociationRule(
                    tuple(Item.parse(t) for t in obj["antecedent"]),
                    tuple(Item.parse(t) for t in obj["consequent"]),
                    obj["support"],
                    obj["confidence"],
                    obj["lift"],
                )
            )
        return RuleSet(rules, provenance)
    raise RuleError(f"unknown rule format {fmt!r}")


def save_rules(ruleset, path, fmt="csv"):
    Path(path).write_text(export_rules(ruleset, fmt), encoding="utf-8")


def load_rules(path, fmt=None):
    p = Path(path)
    if fmt is None:
        fmt = "jsonl" if p.suffix in (".jsonl", ".ndjson") else "csv"
    return import_rules(p.read_text(encoding="utf-8"), fmt)
