"""Turn raw telemetry into binary-valued transactions.

Four mechanisms: tolerance-band binarization of continuous signals
(in-band -> state 1, out-of-band -> state 0), decoding of breaker status
codes (10/01/11 -> OPEN/CLOSE/FAULT), passthrough of booleans and nominal
labels, plus constant-attribute pruning and transition-run smoothing.
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass
from fnmatch import fnmatch
from pathlib import Path
from typing import Optional, Union

from .errors import DiscretizeError
from .ingest import STATUS_CODES

STATUS_MAP = {"10": "OPEN", "01": "CLOSE", "11": "FAULT"}
STATUS_ENCODE = {v: k for k, v in STATUS_MAP.items()}


@dataclass(frozen=True, order=True)
class Item:
    """One discretized fact, canonically rendered as ``attribute=state``."""

    attribute: str
    state: str

    def __str__(self):
        return f"{self.attribute}={self.state}"

    @classmethod
    def parse(cls, text):
        attribute, sep, state = text.partition("=")
        if not sep or not attribute or not state:
            raise DiscretizeError(f"not an attribute=state item: {text!r}")
        return cls(attribute, state)


@dataclass(frozen=True)
class Transaction:
    """One discretized record: a timestamp and a set of items (<=1 per attribute)."""

    timestamp: int
    items: frozenset

    def states(self):
        return {it.attribute: it.state for it in self.items}


@dataclass(frozen=True)
class ToleranceBand:
    """In-band test around a nominal value: state 1 iff |v - nominal| <= f*|nominal|."""

    nominal: float
    tolerance_fraction: float

    def __post_init__(self):
        if not (0 < self.tolerance_fraction < 1):
            raise DiscretizeError(
                f"tolerance_fraction must be in (0,1), got {self.tolerance_fraction}"
            )
        if self.nominal == 0:
            raise DiscretizeError("tolerance band with nominal 0 is not meaningful")


@dataclass(frozen=True)
class StatusDecode:
    pass


@dataclass(frozen=True)
class BooleanPassthrough:
    pass


@dataclass(frozen=True)
class NominalPassthrough:
    pass


@dataclass(frozen=True)
class Drop:
    pass


Rule = Union[ToleranceBand, StatusDecode, BooleanPassthrough, NominalPassthrough, Drop]


@dataclass
class DiscretizationSpec:
    """Exactly one rule per attribute."""

    rules: dict

    def rule_for(self, attribute):
        try:
            return self.rules[attribute]
        except KeyError:
            raise DiscretizeError(f"no discretization rule for {attribute!r}") from None


@dataclass(frozen=True)
class BandDefinition:
    """Names a tolerance band for attributes matching a glob pattern or unit."""

    pattern: str
    nominal: float
    tolerance_fraction: float = 0.05
    unit: Optional[str] = None

    def matches(self, attr):
        if fnmatch(attr.name, self.pattern):
            return True
        return self.unit is not None and attr.unit == self.unit


def build_default_spec(schema, band_definitions=(), dataset=None):
    """Assign a rule to every attribute in the schema.

    Continuous attributes take the first matching band definition; unmatched
    ones fall back to a 5% band around their modal nonzero value, which
    requires ``dataset``. Status codes decode, booleans and nominals pass
    through.
    """
    names = {a.name for a in schema}
    for bd in band_definitions:
        literal = not any(ch in bd.pattern for ch in "*?[")
        if literal and bd.pattern not in names:
            raise DiscretizeError(f"band definition references unknown attribute {bd.pattern!r}")

    rules = {}
    for attr in schema:
        if attr.kind == "status-code":
            rules[attr.name] = StatusDecode()
        elif attr.kind == "boolean":
            rules[attr.name] = BooleanPassthrough()
        elif attr.kind == "nominal":
            rules[attr.name] = NominalPassthrough()
        else:
            band = next((bd for bd in band_definitions if bd.matches(attr)), None)
            if band is not None:
                rules[attr.name] = ToleranceBand(band.nominal, band.tolerance_fraction)
            else:
                rules[attr.name] = _modal_band(attr.name, dataset)
    return DiscretizationSpec(rules)


def _modal_band(name, dataset):
    if dataset is None:
        raise DiscretizeError(
            f"no band definition matches {name!r} and no dataset given for the modal fallback"
        )
    counts = Counter(v for v in dataset.column(name) if v != 0)
    if not counts:
        # all-zero column: any positive nominal maps every cell to state 0,
        # which constant pruning then removes
        return ToleranceBand(1.0, 0.05)
    # ties broken toward the smaller value for determinism
    modal = min(counts, key=lambda v: (-counts[v], v))
    return ToleranceBand(float(modal), 0.05)


def discretize_value(rule, value):
    """Map one raw scalar to its item state under the given rule."""
    if isinstance(rule, ToleranceBand):
        v = float(value)
        in_band = abs(v - rule.nominal) <= rule.tolerance_fraction * abs(rule.nominal)
        return "1" if in_band else "0"
    if isinstance(rule, StatusDecode):
        if value not in STATUS_CODES:
            raise DiscretizeError(f"unknown status code {value!r}")
        return STATUS_MAP[value]
    if isinstance(rule, BooleanPassthrough):
        return "True" if value else "False"
    if isinstance(rule, NominalPassthrough):
        return str(value)
    raise DiscretizeError(f"rule {rule!r} does not discretize values")


def discretize_dataset(dataset, spec):
    """Apply a spec to every record; missing cells simply contribute no item."""
    transactions = []
    for rec in dataset.records:
        items = set()
        for name, value in rec.values.items():
            if value is None:
                continue
            rule = spec.rule_for(name)
            if isinstance(rule, Drop):
                continue
            items.add(Item(name, discretize_value(rule, value)))
        transactions.append(Transaction(rec.timestamp, frozenset(items)))
    return transactions


def prune_constants(transactions):
    """Remove attributes whose state never changes.

    Returns the pruned transactions plus a map of pruned attribute name ->
    its constant state (the detector needs those states later).
    """
    if not transactions:
        raise DiscretizeError("cannot prune an empty transaction list")
    n = len(transactions)
    presence = Counter()
    states = {}
    for txn in transactions:
        for it in txn.items:
            presence[it.attribute] += 1
            states.setdefault(it.attribute, set()).add(it.state)
    constant = {
        attr: next(iter(ss))
        for attr, ss in states.items()
        if presence[attr] == n and len(ss) == 1
    }
    if not constant:
        return list(transactions), {}
    pruned = [
        Transaction(t.timestamp, frozenset(i for i in t.items if i.attribute not in constant))
        for t in transactions
    ]
    return pruned, constant


def _runs(seq):
    runs = []
    for s in seq:
        if runs and runs[-1][0] == s:
            runs[-1][1] += 1
        else:
            runs.append([s, 1])
    return runs


def resolve_transitions(transactions, window=3):
    """Smooth short transition runs per attribute.

    A maximal run shorter than ``window`` that sits between two stable runs
    (length >= window) of the same state is rewritten to that state. Runs
    touching the sequence edges are left as-is.
    """
    if window < 1:
        raise DiscretizeError(f"window must be >= 1, got {window}")
    positions = {}  # attribute -> list of (txn index, state)
    for idx, txn in enumerate(transactions):
        for it in txn.items:
            positions.setdefault(it.attribute, []).append((idx, it.state))

    rewritten = {}  # (txn index, attribute) -> new state
    for attr, seq in positions.items():
        states = [s for _, s in seq]
        runs = _runs(states)
        pos = 0
        for i, (state, length) in enumerate(runs):
            if length < window and 0 < i < len(runs) - 1:
                prev_state, prev_len = runs[i - 1]
                next_state, next_len = runs[i + 1]
                if prev_len >= window and next_len >= window and prev_state == next_state:
                    for k in range(pos, pos + length):
                        rewritten[(seq[k][0], attr)] = prev_state
            pos += length

    if not rewritten:
        return list(transactions)
    out = []
    for idx, txn in enumerate(transactions):
        items = frozenset(
            Item(it.attribute, rewritten.get((idx, it.attribute), it.state))
            for it in txn.items
        )
        out.append(Transaction(txn.timestamp, items))
    return out


# ---------------------------------------------------------------------------
# Spec file format: one line per attribute, attribute<TAB>kind<TAB>params

_KIND_TOKENS = {
    StatusDecode: "status",
    BooleanPassthrough: "boolean",
    NominalPassthrough: "nominal",
    Drop: "drop",
}


def serialize_spec(spec):
    lines = []
    for attr in sorted(spec.rules):
        rule = spec.rules[attr]
        if isinstance(rule, ToleranceBand):
            lines.append(
                f"{attr}\tband\tnominal={rule.nominal!r},tolerance={rule.tolerance_fraction!r}"
            )
        else:
            lines.append(f"{attr}\t{_KIND_TOKENS[type(rule)]}\t")
    return "\n".join(lines) + "\n"


def parse_spec(text):
    rules = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DiscretizeError(f"spec line {line_no}: expected 3 tab-separated fields")
        attr, kind, params = parts
        if attr in rules:
            raise DiscretizeError(f"spec line {line_no}: duplicate attribute {attr!r}")
        if kind == "band":
            kv = dict(p.split("=", 1) for p in params.split(",") if p)
            try:
                rules[attr] = ToleranceBand(float(kv["nominal"]), float(kv["tolerance"]))
            except (KeyError, ValueError):
                raise DiscretizeError(f"spec line {line_no}: bad band params {params!r}") from None
        elif kind == "status":
            rules[attr] = StatusDecode()
        elif kind == "boolean":
            rules[attr] = BooleanPassthrough()
        elif kind == "nominal":
            rules[attr] = NominalPassthrough()
        elif kind == "drop":
            rules[attr] = Drop()
        else:
            raise DiscretizeError(f"spec line {line_no}: unknown rule kind {kind!r}")
    return DiscretizationSpec(rules)


def save_spec(spec, path):
    Path(path).write_text(serialize_spec(spec), encoding="utf-8")


def load_spec(path):
    return parse_spec(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Transactions file format: optional '#constant' header lines, then one line
# per transaction: epoch_seconds<TAB>item;item;...

def serialize_transactions(transactions, constants=None):
    lines = []
    for attr in sorted(constants or {}):
        lines.append(f"#constant\t{attr}={constants[attr]}")
    for txn in transactions:
        items = ";".join(sorted(str(i) for i in txn.items))
        lines.append(f"{txn.timestamp}\t{items}")
    return "\n".join(lines) + "\n"


def parse_transactions(text):
    transactions = []
    constants = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#constant\t"):
            item = Item.parse(line.split("\t", 1)[1])
            constants[item.attribute] = item.state
            continue
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DiscretizeError(f"transactions line {line_no}: expected 2 fields")
        ts = int(parts[0])
        items = frozenset(Item.parse(tok) for tok in parts[1].split(";") if tok)
        transactions.append(Transaction(ts, items))
    return transactions, constants


def save_transactions(transactions, path, constants=None):
    Path(path).write_text(serialize_transactions(transactions, constants), encoding="utf-8")


def load_transactions(path):
    return parse_transactions(Path(path).read_text(encoding="utf-8"))
