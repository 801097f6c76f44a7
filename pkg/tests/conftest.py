import pytest

from gridinv.discretize import Item, Transaction


def make_txns(spec):
    """Build transactions from shorthand like "abc ab ac bc": each letter is
    an attribute holding state 1."""
    out = []
    for t, token in enumerate(spec.split()):
        out.append(Transaction(t, frozenset(Item(ch, "1") for ch in token)))
    return out


def item(ch):
    return Item(ch, "1")


@pytest.fixture
def abcd_txns():
    # the worked example: D = [{a,b,c},{a,b},{a,c},{b,c}]
    return make_txns("abc ab ac bc")
