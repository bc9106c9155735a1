import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gogrow.rank_index import RankIndex


def sort_oracle(entries):
    """Entries as {label: position}; descending (position, label) order."""
    return sorted(((p, l) for l, p in entries.items()), reverse=True)


def test_kth_largest_basic():
    idx = RankIndex([("a", 3.0), ("b", 1.0), ("c", 2.0)])
    assert idx.kth_largest(2) == 2.0
    assert idx.kth_largest(1) == 3.0
    assert idx.kth_largest(3) == 1.0


def test_kth_largest_singleton():
    idx = RankIndex([("only", 4.25)])
    assert idx.kth_largest(1) == 4.25


def test_kth_tie_takes_larger_label():
    idx = RankIndex([("a", 2.0), ("b", 2.0)])
    assert idx.kth(1) == (2.0, "b")
    assert idx.kth(2) == (2.0, "a")


def test_kth_out_of_range():
    idx = RankIndex([("a", 1.0)])
    with pytest.raises(IndexError):
        idx.kth_largest(0)
    with pytest.raises(IndexError):
        idx.kth_largest(2)


def test_rank_of_counts_inclusive():
    idx = RankIndex([("a", 3.0), ("b", 1.0), ("c", 2.0)])
    assert idx.rank_of("c") == 2
    assert idx.rank_of("a") == 1
    assert idx.rank_of("b") == 3


def test_rank_of_singleton():
    idx = RankIndex([("x", -7.0)])
    assert idx.rank_of("x") == 1


def test_rank_of_ties_all_count():
    idx = RankIndex([("a", 2.0), ("b", 2.0)])
    assert idx.rank_of("a") == 2
    assert idx.rank_of("b") == 2


def test_rank_of_absent_entry():
    idx = RankIndex([("a", 1.0)])
    with pytest.raises(KeyError):
        idx.rank_of("zzz")


def test_update_position_moves_max_below_min():
    idx = RankIndex([("a", 5.0), ("b", 3.0), ("c", 4.0)])
    idx.update_position("a", 2.0)
    assert idx.kth_largest(1) == 4.0
    assert idx.kth(1) == (4.0, "c")
    assert idx.rank_of("a") == 3


def test_update_position_noop_move():
    idx = RankIndex([("a", 5.0), ("b", 3.0)])
    before = list(idx.items_descending())
    idx.update_position("a", 5.0)
    assert list(idx.items_descending()) == before


def test_update_absent_entry():
    idx = RankIndex([("a", 1.0)])
    with pytest.raises(KeyError):
        idx.update_position("nope", 2.0)


def test_duplicate_insert_rejected():
    idx = RankIndex([("a", 1.0)])
    with pytest.raises(ValueError):
        idx.insert("a", 2.0)


def _check_against_oracle(idx, entries):
    ordered = sort_oracle(entries)
    assert len(idx) == len(entries)
    for k in range(1, len(ordered) + 1):
        assert idx.kth(k) == ordered[k - 1]
    positions = sorted(entries.values(), reverse=True)
    for label, p in entries.items():
        assert idx.rank_of(label) == sum(1 for q in positions if q >= p)


def test_randomized_updates_match_sort_oracle():
    # randomized workload of ~10^3 mixed operations against a dict + sort
    rng = random.Random(20240811)
    idx = RankIndex()
    entries = {}
    next_label = 0
    for op in range(1000):
        roll = rng.random()
        if roll < 0.45 or not entries:
            label = f"p{next_label}"
            next_label += 1
            pos = rng.uniform(-100, 100) if rng.random() < 0.9 else float(rng.randint(-3, 3))
            idx.insert(label, pos)
            entries[label] = pos
        elif roll < 0.85:
            label = rng.choice(list(entries))
            pos = rng.uniform(-100, 100) if rng.random() < 0.9 else float(rng.randint(-3, 3))
            idx.update_position(label, pos)
            entries[label] = pos
        else:
            label = rng.choice(list(entries))
            idx.remove(label)
            del entries[label]
        if op % 97 == 0:
            _check_against_oracle(idx, entries)
    _check_against_oracle(idx, entries)


def test_rank_of_kth_entry_is_k_for_distinct_positions():
    rng = random.Random(99)
    positions = rng.sample(range(10000), 200)
    idx = RankIndex((f"l{i}", float(p)) for i, p in enumerate(positions))
    labels = {float(p): f"l{i}" for i, p in enumerate(positions)}
    for k in (1, 2, 50, 137, 200):
        pos, label = idx.kth(k)
        assert labels[pos] == label
        assert idx.rank_of(label) == k


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30),
                          st.floats(-50, 50, allow_nan=False)), max_size=40))
def test_property_agrees_with_sorted_list(pairs):
    idx = RankIndex()
    entries = {}
    for label_n, pos in pairs:
        label = f"h{label_n}"
        if label in entries:
            idx.update_position(label, pos)
        else:
            idx.insert(label, pos)
        entries[label] = pos
    _check_against_oracle(idx, entries)
