"""Order-statistic queries over particle positions.

A :class:`RankIndex` keeps (position, label) entries in a size-augmented
treap so that the k-th largest position and the rank of any entry can be
read in O(log n) expected time, with O(log n) expected updates. Ranks
count from the right: rank 1 is the largest position. Ties in position
are resolved by the label, giving a deterministic total order
(position, label) even at exact float collisions; the rank of an entry,
by contrast, counts every position >= its own regardless of label.

The simulation engine does not use this structure in its hot loop (it
performs one vectorised ordering pass per step instead); the index is
the reference order-statistic primitive and is oracle-tested against a
full sort.
"""

from __future__ import annotations

import random
from typing import Any, Iterable, Iterator, Optional, Tuple


class _Node:
    __slots__ = ("position", "label", "prio", "size", "left", "right")

    def __init__(self, position: float, label: Any, prio: float):
        self.position = position
        self.label = label
        self.prio = prio
        self.size = 1
        self.left: Optional[_Node] = None
        self.right: Optional[_Node] = None


def _size(node: Optional[_Node]) -> int:
    return node.size if node is not None else 0


def _pull(node: _Node) -> _Node:
    node.size = 1 + _size(node.left) + _size(node.right)
    return node


def _key(node: _Node) -> Tuple[float, Any]:
    return (node.position, node.label)


def _merge(a: Optional[_Node], b: Optional[_Node]) -> Optional[_Node]:
    # all keys in a < all keys in b
    if a is None:
        return b
    if b is None:
        return a
    if a.prio > b.prio:
        a.right = _merge(a.right, b)
        return _pull(a)
    b.left = _merge(a, b.left)
    return _pull(b)


def _split(node: Optional[_Node], key: Tuple[float, Any]):
    """Split into (keys < key, keys >= key)."""
    if node is None:
        return None, None
    if _key(node) < key:
        lo, hi = _split(node.right, key)
        node.right = lo
        return _pull(node), hi
    lo, hi = _split(node.left, key)
    node.left = hi
    return lo, _pull(node)


class RankIndex:
    """Keyed order-statistic index over (position, tiebreak-label) entries."""

    def __init__(self, entries: Iterable[Tuple[Any, float]] = (), prio_seed: int = 0x5EED):
        self._root: Optional[_Node] = None
        self._pos: dict[Any, float] = {}
        self._rand = random.Random(prio_seed)
        for label, position in entries:
            self.insert(label, position)

    def __len__(self) -> int:
        return len(self._pos)

    def __contains__(self, label: Any) -> bool:
        return label in self._pos

    @property
    def size(self) -> int:
        return len(self._pos)

    def position_of(self, label: Any) -> float:
        try:
            return self._pos[label]
        except KeyError:
            raise KeyError(f"entry {label!r} not in index") from None

    def insert(self, label: Any, position: float) -> None:
        if label in self._pos:
            raise ValueError(f"entry {label!r} already in index")
        position = float(position)
        node = _Node(position, label, self._rand.random())
        lo, hi = _split(self._root, (position, label))
        self._root = _merge(_merge(lo, node), hi)
        self._pos[label] = position

    def remove(self, label: Any) -> None:
        position = self.position_of(label)
        self._root = self._remove_key(self._root, (position, label))
        del self._pos[label]

    def _remove_key(self, node: Optional[_Node], key: Tuple[float, Any]) -> Optional[_Node]:
        if node is None:  # pragma: no cover - guarded by position_of
            raise KeyError(f"key {key!r} not in tree")
        k = _key(node)
        if k == key:
            return _merge(node.left, node.right)
        if key < k:
            node.left = self._remove_key(node.left, key)
        else:
            node.right = self._remove_key(node.right, key)
        return _pull(node)

    def update_position(self, label: Any, new_position: float) -> None:
        """Move an entry; equivalent to remove + insert."""
        self.remove(label)
        self.insert(label, new_position)

    def kth(self, k: int) -> Tuple[float, Any]:
        """The k-th entry in nonincreasing (position, label) order, 1-based."""
        n = len(self._pos)
        if not 1 <= k <= n:
            raise IndexError(f"k={k} out of range for size {n}")
        # k-th from the top is (n - k)-th from the bottom, 0-based
        idx = n - k
        node = self._root
        while True:
            left = _size(node.left)
            if idx < left:
                node = node.left
            elif idx == left:
                return (node.position, node.label)
            else:
                idx -= left + 1
                node = node.right

    def kth_largest(self, k: int) -> float:
        return self.kth(k)[0]

    def rank_of(self, label: Any) -> int:
        """Number of entries with position >= this entry's (ties inclusive)."""
        position = self.position_of(label)
        return len(self._pos) - self._count_below(position)

    def _count_below(self, position: float) -> int:
        # entries with position strictly less, label-agnostic
        count = 0
        node = self._root
        while node is not None:
            if node.position < position:
                count += _size(node.left) + 1
                node = node.right
            else:
                node = node.left
        return count

    def items_descending(self) -> Iterator[Tuple[float, Any]]:
        stack: list = []
        node = self._root
        while stack or node is not None:
            while node is not None:
                stack.append(node)
                node = node.right
            node = stack.pop()
            yield (node.position, node.label)
            node = node.left
