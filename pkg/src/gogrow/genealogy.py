"""Branching tree records and ancestral-lineage queries.

Particles carry Ulam-Harris labels: an initial particle is labelled by
its index ("7"), and when a particle branches it is retired and replaced
by two children whose labels append one digit ("7,1" and "7,2"). Being
an ancestor is then exactly being a label prefix. Alive intervals are
half-open [birth, branch): at the branch instant the parent is dead and
the children are alive.

The store keeps the tree in flat arrays indexed by integer node ids
(creation order), plus position snapshots and the xi (K-th particle)
series recorded by the engine. Lineage positions are read at the
recorded snapshot nearest to the requested time; no interpolation is
attempted between snapshots.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

_OPEN = float("inf")


class CoverageError(ValueError):
    """Snapshots do not cover the requested time window."""


@dataclass
class Snapshot:
    time: float
    node_ids: np.ndarray  # int64, ascending (creation order)
    positions: np.ndarray
    n: int
    xi: float  # K-th largest position, NaN when N < K

    def position_of(self, node: int) -> float:
        i = np.searchsorted(self.node_ids, node)
        if i >= self.node_ids.size or self.node_ids[i] != node:
            raise KeyError(f"node {node} not alive in snapshot at t={self.time}")
        return float(self.positions[i])


@dataclass
class LineageSample:
    """Positions of one particle's ancestral line at lookback times s_grid."""

    target: str
    t: float
    s_grid: np.ndarray
    y: np.ndarray       # ancestor position at time t - s
    y_hat: np.ndarray   # same, in the moving frame: y - xi(t - s)
    ancestors: list     # node id of the ancestor at each s


@dataclass
class AncestryResult:
    """Moving-frame ancestor positions of a selected group of particles."""

    s: float
    t: float
    selection_size: int
    distinct_ancestors: int
    y_hat: np.ndarray
    ancestor_nodes: np.ndarray
    hist_edges: np.ndarray
    hist_counts: np.ndarray


class GenealogyStore:
    """Ulam-Harris birth records plus position snapshots."""

    def __init__(self):
        self.parent: list[int] = []       # -1 for initial particles
        self.birth_time: list[float] = []
        self.branch_time: list[float] = []  # inf while alive
        self.child_base: list[int] = []   # id of first child, -1 if none
        self.digit: list[int] = []        # 0 for roots, else 1 or 2
        self.root_index: list[int] = []   # 1-based label of each root, parallel to roots
        self.snapshots: list[Snapshot] = []
        self._snapshot_times: list[float] = []

    # -- tree construction -------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.parent)

    def new_root(self, birth_time: float = 0.0) -> int:
        node = len(self.parent)
        self.parent.append(-1)
        self.birth_time.append(float(birth_time))
        self.branch_time.append(_OPEN)
        self.child_base.append(-1)
        self.digit.append(0)
        self.root_index.append(len(self.root_index) + 1)
        return node

    def register_birth(self, parent: int, time: float) -> tuple[int, int]:
        """Retire `parent` at `time` and create its two children."""
        if self.child_base[parent] != -1:
            raise ValueError(f"node {parent} already branched")
        c1 = len(self.parent)
        for digit in (1, 2):
            self.parent.append(parent)
            self.birth_time.append(float(time))
            self.branch_time.append(_OPEN)
            self.child_base.append(-1)
            self.digit.append(digit)
        self.branch_time[parent] = float(time)
        self.child_base[parent] = c1
        return c1, c1 + 1

    # -- labels -------------------------------------------------------------

    def label_of(self, node: int) -> str:
        digits: list[str] = []
        while self.parent[node] != -1:
            digits.append(str(self.digit[node]))
            node = self.parent[node]
        digits.append(str(self._root_label(node)))
        return ",".join(reversed(digits))

    def _root_label(self, node: int) -> int:
        # roots are created first and consecutively, so node id == root ordinal
        return node + 1

    def node_of(self, label: str) -> int:
        parts = label.split(",")
        try:
            node = int(parts[0]) - 1
        except ValueError:
            raise KeyError(f"malformed label {label!r}") from None
        if not 0 <= node < len(self.parent) or self.parent[node] != -1:
            raise KeyError(f"no initial particle {parts[0]!r}")
        for p in parts[1:]:
            if p not in ("1", "2"):
                raise KeyError(f"malformed label {label!r}")
            base = self.child_base[node]
            if base == -1:
                raise KeyError(f"label {label!r} beyond recorded branches")
            node = base + (int(p) - 1)
        return node

    def _resolve(self, label_or_node) -> int:
        if isinstance(label_or_node, str):
            return self.node_of(label_or_node)
        return int(label_or_node)

    # -- snapshots ------------------------------------------------------------

    def add_snapshot(self, time, node_ids, positions, xi) -> None:
        node_ids = np.asarray(node_ids, dtype=np.int64)
        positions = np.asarray(positions, dtype=float)
        self.snapshots.append(Snapshot(float(time), node_ids, positions, node_ids.size, float(xi)))
        self._snapshot_times.append(float(time))

    def snapshot_nearest(self, t: float) -> Snapshot:
        if not self.snapshots:
            raise CoverageError("no snapshots recorded")
        i = bisect.bisect_left(self._snapshot_times, t)
        if i == 0:
            return self.snapshots[0]
        if i == len(self.snapshots):
            return self.snapshots[-1]
        before, after = self._snapshot_times[i - 1], self._snapshot_times[i]
        return self.snapshots[i - 1] if t - before <= after - t else self.snapshots[i]

    def _require_coverage(self, lo: float, hi: float) -> None:
        eps = 1e-9
        if not self.snapshots:
            raise CoverageError("no snapshots recorded")
        t0, t1 = self._snapshot_times[0], self._snapshot_times[-1]
        if t0 > lo + eps or t1 < hi - eps:
            raise CoverageError(
                f"snapshots cover [{t0}, {t1}], need [{lo}, {hi}]"
            )

    # -- lineage queries ------------------------------------------------------

    def ancestor_at(self, label_or_node, tau: float):
        """The unique prefix of the given label alive at time tau.

        Returns a node id when given a node id, a label string when
        given a label.
        """
        node = self._resolve(label_or_node)
        anc = self._ancestor_node(node, tau)
        return self.label_of(anc) if isinstance(label_or_node, str) else anc

    def _ancestor_node(self, node: int, tau: float) -> int:
        while self.birth_time[node] > tau:
            node = self.parent[node]
            if node == -1:
                raise ValueError(f"tau={tau} is before the root's birth")
        return node

    def lineage_positions(self, label_or_node, t: float, s_grid) -> LineageSample:
        """Ancestor positions Y_{s,t} and moving-frame Y-hat over s_grid.

        For each lookback s the ancestor line is evaluated at the
        recorded snapshot nearest to t - s: the prefix alive at the
        snapshot time is looked up in that snapshot, and xi at the same
        snapshot provides the moving frame.
        """
        node = self._resolve(label_or_node)
        s_grid = np.atleast_1d(np.asarray(s_grid, dtype=float))
        if s_grid.size and (s_grid < -1e-12).any():
            raise ValueError("lookback durations must be >= 0")
        self._require_coverage(t - float(s_grid.max(initial=0.0)), t)
        y = np.empty(s_grid.size)
        y_hat = np.empty(s_grid.size)
        ancestors = []
        for i, s in enumerate(s_grid):
            snap = self.snapshot_nearest(min(t - s, t))
            anc = self._ancestor_node(node, snap.time)
            pos = snap.position_of(anc)
            y[i] = pos
            y_hat[i] = pos - snap.xi
            ancestors.append(anc)
        return LineageSample(
            target=self.label_of(node), t=t, s_grid=s_grid, y=y, y_hat=y_hat,
            ancestors=ancestors,
        )

    def ancestral_distribution(
        self,
        window: tuple[float, float],
        t: float,
        s: float,
        bin_width: float = 0.5,
    ) -> AncestryResult:
        """Moving-frame ancestor distribution of the particles in a window.

        The selection takes every particle whose moving-frame position
        z = x - xi(t) lies in `window` at the snapshot nearest to t, and
        traces each back to its ancestor at the snapshot nearest to
        t - s. Returns the histogram of Y-hat together with the number
        of distinct ancestor labels.
        """
        if s < 0:
            raise ValueError("lookback s must be >= 0")
        self._require_coverage(t - s, t)
        snap_t = self.snapshot_nearest(t)
        snap_a = self.snapshot_nearest(t - s)
        lo, hi = window
        z = snap_t.positions - snap_t.xi
        sel = np.flatnonzero((z >= lo) & (z <= hi))
        if sel.size == 0:
            empty = np.array([])
            return AncestryResult(s, t, 0, 0, empty, np.array([], dtype=np.int64),
                                  np.array([lo, hi]), np.zeros(1, dtype=int))
        # walk each selected particle up to the ancestor snapshot, memoising
        # shared prefixes (bulk selections coalesce heavily)
        tau = snap_a.time
        cache: dict[int, int] = {}
        anc_nodes = np.empty(sel.size, dtype=np.int64)
        birth = self.birth_time
        parent = self.parent
        for j, i in enumerate(sel):
            node = int(snap_t.node_ids[i])
            path = []
            while birth[node] > tau:
                hit = cache.get(node)
                if hit is not None:
                    node = hit
                    break
                path.append(node)
                node = parent[node]
            for p in path:
                cache[p] = node
            anc_nodes[j] = node
        order = np.searchsorted(snap_a.node_ids, anc_nodes)
        y_hat = snap_a.positions[order] - snap_a.xi
        distinct = int(np.unique(anc_nodes).size)
        h_lo = float(np.floor(y_hat.min() / bin_width) * bin_width)
        h_hi = float(np.ceil(y_hat.max() / bin_width) * bin_width) + bin_width
        n_bins = max(1, int(round((h_hi - h_lo) / bin_width)))
        edges = h_lo + bin_width * np.arange(n_bins + 1)
        idx = np.minimum(np.floor((y_hat - h_lo) / bin_width).astype(int), n_bins - 1)
        counts = np.bincount(idx, minlength=n_bins)
        return AncestryResult(
            s=s, t=snap_t.time, selection_size=int(sel.size), distinct_ancestors=distinct,
            y_hat=y_hat, ancestor_nodes=anc_nodes, hist_edges=edges, hist_counts=counts,
        )


# thin functional aliases matching the operation names
def ancestor_at(store: GenealogyStore, label, tau: float):
    return store.ancestor_at(label, tau)


def lineage_positions(store: GenealogyStore, label, t: float, s_grid) -> LineageSample:
    return store.lineage_positions(label, t, s_grid)


def ancestral_distribution(store: GenealogyStore, window, t, s, bin_width=0.5) -> AncestryResult:
    return store.ancestral_distribution(window, t, s, bin_width)
