"""Frequent-itemset mining.

``mine_frequent`` is an FP-growth implementation (frequency-ordered prefix
tree, recursively mined conditional trees). ``brute_force_frequent`` is the
deliberately naive exhaustive oracle used to cross-check it; the two must
agree exactly on any input the oracle can handle.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from .discretize import Item
from .errors import ClosureError, MiningError

BRUTE_FORCE_MAX_ITEMS = 20


def canonical_itemset(items):
    """Sorted tuple of items; rejects duplicate attributes."""
    out = tuple(sorted(items, key=str))
    if not out:
        raise MiningError("itemset must be non-empty")
    attrs = [i.attribute for i in out]
    if len(set(attrs)) != len(attrs):
        raise MiningError(f"itemset has duplicate attributes: {out}")
    return out


@dataclass
class FrequentItemsetTable:
    """All itemsets at or above min_support, with their containment counts."""

    counts: dict  # canonical itemset tuple -> transaction count
    total_transactions: int
    min_support: float

    @property
    def entries(self):
        """Map itemset -> support fraction."""
        n = self.total_transactions
        return {iset: c / n for iset, c in self.counts.items()}

    def support(self, itemset):
        key = canonical_itemset(itemset)
        if key not in self.counts:
            raise ClosureError(f"itemset not in table: {key}")
        return self.counts[key] / self.total_transactions

    def count(self, itemset):
        key = canonical_itemset(itemset)
        if key not in self.counts:
            raise ClosureError(f"itemset not in table: {key}")
        return self.counts[key]

    def __len__(self):
        return len(self.counts)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["support", "itemset"])
        n = self.total_transactions
        for iset in sorted(self.counts, key=lambda s: (-self.counts[s], s)):
            writer.writerow([_fmt(self.counts[iset] / n), ";".join(str(i) for i in iset)])
        return buf.getvalue()


def _fmt(x):
    return str(int(x)) if x == int(x) else repr(x)


def support(itemset, transactions):
    """Fraction of transactions containing the itemset (exact count / |D|)."""
    if not transactions:
        raise MiningError("support is undefined over an empty transaction list")
    key = frozenset(canonical_itemset(itemset))
    hits = sum(1 for t in transactions if key <= t.items)
    return hits / len(transactions)


def _min_count(min_support, n):
    # smallest integer c with c/n >= min_support, robust to float rounding
    import math

    c = math.ceil(min_support * n)
    while c > 0 and (c - 1) / n >= min_support:
        c -= 1
    if c / n < min_support:
        c += 1
    return max(c, 1)


class _Node:
    __slots__ = ("item", "count", "parent", "children")

    def __init__(self, item, parent):
        self.item = item
        self.count = 0
        self.parent = parent
        self.children = {}


def _build_tree(itemlists):
    root = _Node(-1, None)
    header = {}
    for ids, cnt in itemlists:
        node = root
        for i in ids:
            child = node.children.get(i)
            if child is None:
                child = _Node(i, node)
                node.children[i] = child
                header.setdefault(i, []).append(child)
            child.count += cnt
            node = child
    return header


def _fpgrowth(header, min_count, suffix, max_size, out):
    # mine least-frequent items first (largest id = rarest under our ordering)
    for item in sorted(header, reverse=True):
        count = sum(node.count for node in header[item])
        if count < min_count:
            continue
        found = (item,) + suffix
        out[found] = count
        if max_size is not None and len(found) >= max_size:
            continue
        base = []
        for node in header[item]:
            path = []
            p = node.parent
            while p.item != -1:
                path.append(p.item)
                p = p.parent
            if path:
                path.reverse()
                base.append((path, node.count))
        if not base:
            continue
        ccount = Counter()
        for path, cnt in base:
            for i in path:
                ccount[i] += cnt
        keep = {i for i, c in ccount.items() if c >= min_count}
        filtered = [
            ([i for i in path if i in keep], cnt) for path, cnt in base
        ]
        filtered = [(p, c) for p, c in filtered if p]
        if filtered:
            _fpgrowth(_build_tree(filtered), min_count, found, max_size, out)


def mine_frequent(transactions, min_support, max_size=4):
    """All itemsets with support >= min_support (inclusive), up to max_size items.

    Deterministic: tree item order is descending global frequency with
    lexicographic tie-break. ``max_size=None`` removes the size cap.
    """
    if not transactions:
        raise MiningError("cannot mine an empty transaction list")
    if not (0 < min_support <= 1):
        raise MiningError(f"min_support must be in (0, 1], got {min_support}")
    if max_size is not None and max_size < 1:
        raise MiningError(f"max_size must be >= 1, got {max_size}")
    n = len(transactions)
    min_count = _min_count(min_support, n)

    item_counts = Counter()
    for t in transactions:
        for it in t.items:
            item_counts[it] += 1
    frequent = [it for it, c in item_counts.items() if c >= min_count]
    order = {
        it: i
        for i, it in enumerate(sorted(frequent, key=lambda it: (-item_counts[it], str(it))))
    }
    by_id = {i: it for it, i in order.items()}

    itemlists = []
    for t in transactions:
        ids = sorted(order[it] for it in t.items if it in order)
        if ids:
            itemlists.append((ids, 1))

    raw = {}
    if itemlists:
        _fpgrowth(_build_tree(itemlists), min_count, (), max_size, raw)

    counts = {}
    for ids, cnt in raw.items():
        counts[canonical_itemset(by_id[i] for i in ids)] = cnt
    return FrequentItemsetTable(counts, n, min_support)


def brute_force_frequent(transactions, min_support, max_size=None):
    """Exhaustive oracle: test every itemset up to max_size by direct counting.

    Guarded to at most 20 distinct items; intended for tests only.
    """
    if not transactions:
        raise MiningError("cannot mine an empty transaction list")
    if not (0 < min_support <= 1):
        raise MiningError(f"min_support must be in (0, 1], got {min_support}")
    universe = sorted({it for t in transactions for it in t.items}, key=str)
    if len(universe) > BRUTE_FORCE_MAX_ITEMS:
        raise MiningError(
            f"item universe too large for brute force: {len(universe)} > {BRUTE_FORCE_MAX_ITEMS}"
        )
    n = len(transactions)
    cap = len(universe) if max_size is None else min(max_size, len(universe))

    # one transaction-membership bitmask per item
    masks = {it: 0 for it in universe}
    for row, t in enumerate(transactions):
        for it in t.items:
            masks[it] |= 1 << row

    counts = {}
    for size in range(1, cap + 1):
        for combo in combinations(universe, size):
            attrs = {i.attribute for i in combo}
            if len(attrs) != len(combo):
                continue
            m = masks[combo[0]]
            for it in combo[1:]:
                m &= masks[it]
            c = m.bit_count()
            if c and c / n >= min_support:
                counts[combo] = c
    return FrequentItemsetTable(counts, n, min_support)
