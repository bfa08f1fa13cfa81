import itertools

from wfdual.particles import format_label, label_key, label_less


def oracle_less(a, b):
    """The order's three clauses, written out independently."""
    na, nb = max(a), max(b)
    if na != nb:
        return na < nb
    if len(a) != len(b):
        return len(a) < len(b)
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def all_labels(max_entry=3, max_len=3):
    out = []
    for length in range(1, max_len + 1):
        out.extend(itertools.product(range(1, max_entry + 1), repeat=length))
    return out


def test_examples_from_order_clauses():
    assert label_less((1, 1), (2,))      # smaller max entry wins
    assert label_less((2,), (1, 2))      # equal max, shorter wins
    assert label_less((1, 2), (2, 1))    # equal max and length: lexicographic


def test_matches_clause_oracle_exhaustively():
    labels = all_labels()
    for a in labels:
        for b in labels:
            assert label_less(a, b) == oracle_less(a, b)


def test_strict_total_order_axioms():
    labels = all_labels()
    for a in labels:
        assert not label_less(a, a)  # irreflexive
    for a, b in itertools.combinations(labels, 2):
        # total and antisymmetric
        assert label_less(a, b) != label_less(b, a)
    # transitivity on the sorted sequence
    ordered = sorted(labels, key=label_key)
    for x, y in zip(ordered, ordered[1:]):
        assert label_less(x, y)
    for i, j in itertools.combinations(range(len(ordered)), 2):
        assert label_less(ordered[i], ordered[j])


def test_format_label():
    assert format_label((3, 1, 2)) == "3.1.2"
