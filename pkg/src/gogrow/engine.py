"""Microscopic Go-or-Grow particle system.

N particles on the line, all diffusing with coefficient sqrt(2). At each
instant the K rightmost particles ("Grow") branch at total rate K and
carry no drift; every particle of rank > K ("Go") drifts rightward at
speed chi. The rank of a particle at x counts every particle at
position >= x, ties inclusive.

Time is discretised with an Euler-Maruyama step of length dt: ranks are
frozen at the step start, every particle receives its drift and noise
increment, then Poisson(dt * min(K, N)) births are applied sequentially,
each choosing uniformly among the current top min(K, N) particles under
the (position, creation-id) total order. A branching particle is retired
and replaced by two children at its exact position. There are no deaths,
so N is nondecreasing and, once N >= K, N_t - N_s is Poisson with mean
K (t - s).

RNG stream order per run: initial-condition draws, then per step one
standard normal per particle in creation order, the Poisson birth
count, and one uniform index per birth. Identical configs therefore
reproduce identical runs bit for bit.
"""

from __future__ import annotations

import hashlib
import math
import time as _time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .config import INIT_STANDARD, SimConfig
from .genealogy import GenealogyStore

__all__ = [
    "Particle",
    "PopulationState",
    "BirthEvent",
    "RunRecord",
    "Simulation",
    "init_population",
    "drift_indicator",
    "advance_step",
    "run",
]


@dataclass(frozen=True)
class Particle:
    label: str
    position: float
    birth_time: float = 0.0


@dataclass
class PopulationState:
    """Labelled particle positions at one time point."""

    time: float
    particles: List[Particle]
    kth_position: Optional[float] = None

    @property
    def n(self) -> int:
        return len(self.particles)

    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.particles])


@dataclass(frozen=True)
class BirthEvent:
    time: float
    parent_label: str
    child_labels: Tuple[str, str]
    position: float


def _kth_largest_value(positions: np.ndarray, k: int) -> float:
    if positions.size < k:
        return float("nan")
    return float(np.partition(positions, positions.size - k)[positions.size - k])


def _drift_mask(positions: np.ndarray, K: int) -> np.ndarray:
    """Boolean mask of particles with rank > K (the Go group)."""
    n = positions.size
    if n <= K:
        return np.zeros(n, dtype=bool)
    kth = np.partition(positions, n - K)[n - K]
    mask = positions < kth
    # particles tied with the K-th value drift only if the inclusive
    # count of positions >= kth exceeds K
    n_geq = n - int(np.count_nonzero(mask))
    if n_geq > K:
        mask |= positions == kth
    return mask


def _top_candidates(positions: np.ndarray, tiebreaks: np.ndarray, K: int):
    """Top min(K, N) entries, ascending in the (position, tiebreak) order.

    Returns (cand_pos, cand_tb, cand_idx) arrays; cand_idx is the index
    into the alive arrays. Ties beyond the K-th value are trimmed so the
    result holds exactly min(K, N) entries.
    """
    n = positions.size
    if n <= K:
        sel = np.arange(n)
    else:
        kth = np.partition(positions, n - K)[n - K]
        sel = np.flatnonzero(positions >= kth)
    order = np.lexsort((tiebreaks[sel], positions[sel]))
    sel = sel[order]
    if sel.size > K:
        sel = sel[sel.size - K:]
    return positions[sel].copy(), tiebreaks[sel].astype(np.int64), sel.astype(np.int64)


class Simulation:
    """One seeded run; owns the particle arrays, RNG and genealogy."""

    def __init__(self, config: SimConfig, genealogy: Optional[GenealogyStore] = None):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.store = genealogy if genealogy is not None else GenealogyStore()
        self.step_index = 0
        self.n_births = 0
        if config.init == INIT_STANDARD:
            K = config.K
            grow = self.rng.exponential(scale=1.0 / config.chi, size=K)
            go = self.rng.uniform(-1.0 / config.chi, 0.0, size=K)
            positions = np.concatenate([grow, go])
        else:
            positions = np.asarray(config.init, dtype=float)
        self.positions = positions
        self.nodes = np.array([self.store.new_root(0.0) for _ in range(positions.size)],
                              dtype=np.int64)

    @property
    def t(self) -> float:
        return self.step_index * self.config.dt

    @property
    def n(self) -> int:
        return self.positions.size

    def xi(self) -> float:
        return _kth_largest_value(self.positions, self.config.K)

    def step(self) -> List[Tuple[int, int, int, float]]:
        """Advance one dt; returns (parent_node, child1, child2, position)
        per birth of the step."""
        cfg = self.config
        n = self.positions.size
        mask = _drift_mask(self.positions, cfg.K)
        if mask.any():
            self.positions = self.positions + (cfg.chi * cfg.dt) * mask
        if cfg.noise_enabled:
            self.positions = self.positions + math.sqrt(2.0 * cfg.dt) * self.rng.standard_normal(n)
        n_births = int(self.rng.poisson(cfg.dt * min(cfg.K, n)))
        self.step_index += 1
        if n_births == 0:
            return []
        events = self._apply_births(n_births, self.t)
        self.n_births += n_births
        return events

    def _apply_births(self, n_births: int, t_birth: float) -> List[Tuple[int, int, int, float]]:
        cfg = self.config
        cand_pos, cand_tb, cand_idx = _top_candidates(self.positions, self.nodes, cfg.K)
        n_alive = self.positions.size
        retired: list[int] = []
        new_children: dict[int, float] = {}  # node id -> position
        events: List[Tuple[int, int, int, float]] = []
        for _ in range(n_births):
            m = min(cfg.K, n_alive)
            u = int(self.rng.integers(m))
            slot = cand_pos.size - 1 - u
            pos = float(cand_pos[slot])
            node = int(cand_tb[slot])
            idx = int(cand_idx[slot])
            if idx >= 0:
                retired.append(idx)
            else:
                del new_children[node]
            c1, c2 = self.store.register_birth(node, t_birth)
            events.append((node, c1, c2, pos))
            cand_pos = np.delete(cand_pos, slot)
            cand_tb = np.delete(cand_tb, slot)
            cand_idx = np.delete(cand_idx, slot)
            # children keep the parent's exact position; fresh ids exceed
            # every existing tiebreak, so they insert after all equal
            # positions, c1 then c2
            at = int(np.searchsorted(cand_pos, pos, side="right"))
            cand_pos = np.insert(cand_pos, at, [pos, pos])
            cand_tb = np.insert(cand_tb, at, [c1, c2])
            cand_idx = np.insert(cand_idx, at, [-1, -1])
            new_children[c1] = pos
            new_children[c2] = pos
            n_alive += 1
        if retired:
            keep = np.ones(self.positions.size, dtype=bool)
            keep[retired] = False
            self.positions = self.positions[keep]
            self.nodes = self.nodes[keep]
        if new_children:
            # dict preserves insertion order, so ids stay ascending and the
            # alive arrays remain sorted by creation id
            ids = np.fromiter(new_children.keys(), dtype=np.int64, count=len(new_children))
            child_pos = np.fromiter(new_children.values(), dtype=float, count=len(new_children))
            self.positions = np.concatenate([self.positions, child_pos])
            self.nodes = np.concatenate([self.nodes, ids])
        return events

    def population_state(self) -> PopulationState:
        labels = [self.store.label_of(int(n)) for n in self.nodes]
        particles = [
            Particle(label, float(x), self.store.birth_time[int(node)])
            for label, x, node in zip(labels, self.positions, self.nodes)
        ]
        xi = self.xi()
        return PopulationState(self.t, particles, None if math.isnan(xi) else xi)


@dataclass
class RunRecord:
    """Manifest and time series of one seeded run."""

    config: SimConfig
    times: np.ndarray
    counts: np.ndarray
    xi: np.ndarray
    genealogy: GenealogyStore
    n_births: int
    wall_time: float = 0.0

    def state_at(self, t: float) -> PopulationState:
        snap = self.genealogy.snapshot_nearest(t)
        store = self.genealogy
        particles = [
            Particle(store.label_of(int(n)), float(x), store.birth_time[int(n)])
            for n, x in zip(snap.node_ids, snap.positions)
        ]
        xi = None if math.isnan(snap.xi) else snap.xi
        return PopulationState(snap.time, particles, xi)

    def content_digest(self) -> str:
        """SHA-256 over the run content; identical configs give identical digests."""
        h = hashlib.sha256()
        h.update(repr(self.config).encode())
        for arr in (self.times, self.counts, self.xi):
            h.update(np.ascontiguousarray(arr).tobytes())
        g = self.genealogy
        h.update(np.asarray(g.parent, dtype=np.int64).tobytes())
        h.update(np.asarray(g.birth_time, dtype=float).tobytes())
        h.update(np.asarray(g.branch_time, dtype=float).tobytes())
        for snap in g.snapshots:
            h.update(np.asarray([snap.time, snap.xi]).tobytes())
            h.update(np.ascontiguousarray(snap.node_ids).tobytes())
            h.update(np.ascontiguousarray(snap.positions).tobytes())
        return h.hexdigest()


def init_population(config: SimConfig) -> PopulationState:
    """Initial population: the standard 2K-particle draw or an explicit list."""
    return Simulation(config).population_state()


def drift_indicator(state: PopulationState, particle: Particle, K: int) -> int:
    """1 iff the particle's rank exceeds K (the Go group).

    Definitional O(N) count: rank(x) = #{j : x_j >= x}, ties inclusive.
    The engine's vectorised mask is tested against this.
    """
    if particle not in state.particles:
        raise ValueError(f"particle {particle.label!r} not alive in state")
    rank = sum(1 for q in state.particles if q.position >= particle.position)
    return 1 if rank > K else 0


def advance_step(
    state: PopulationState, config: SimConfig, rng: np.random.Generator
) -> Tuple[PopulationState, List[BirthEvent]]:
    """One Euler-Maruyama step on a bare population state.

    Functional counterpart of :meth:`Simulation.step` for states that do
    not belong to a running simulation; child labels extend the parent
    label by one digit. Ties in position are broken by list order
    (children append after their parent's slot is retired).
    """
    positions = np.array([p.position for p in state.particles], dtype=float)
    labels = [p.label for p in state.particles]
    births = [p.birth_time for p in state.particles]
    n = positions.size
    mask = _drift_mask(positions, config.K)
    positions = positions + (config.chi * config.dt) * mask
    if config.noise_enabled:
        positions = positions + math.sqrt(2.0 * config.dt) * rng.standard_normal(n)
    t_new = state.time + config.dt
    n_births = int(rng.poisson(config.dt * min(config.K, n)))
    events: List[BirthEvent] = []
    if n_births:
        tiebreaks = np.arange(n, dtype=np.int64)
        cand_pos, cand_tb, cand_idx = _top_candidates(positions, tiebreaks, config.K)
        next_tb = n
        retired: set[int] = set()
        new_entries: dict[int, Tuple[str, float]] = {}  # tiebreak -> (label, pos)
        for _ in range(n_births):
            m = min(config.K, n + len(events))
            u = int(rng.integers(m))
            slot = cand_pos.size - 1 - u
            pos = float(cand_pos[slot])
            tb = int(cand_tb[slot])
            idx = int(cand_idx[slot])
            if idx >= 0:
                retired.add(idx)
                parent_label = labels[idx]
            else:
                parent_label = new_entries.pop(tb)[0]
            children = (parent_label + ",1", parent_label + ",2")
            events.append(BirthEvent(t_new, parent_label, children, pos))
            cand_pos = np.delete(cand_pos, slot)
            cand_tb = np.delete(cand_tb, slot)
            cand_idx = np.delete(cand_idx, slot)
            at = int(np.searchsorted(cand_pos, pos, side="right"))
            cand_pos = np.insert(cand_pos, at, [pos, pos])
            cand_tb = np.insert(cand_tb, at, [next_tb, next_tb + 1])
            cand_idx = np.insert(cand_idx, at, [-1, -1])
            for child in children:
                new_entries[next_tb] = (child, pos)
                next_tb += 1
        keep = [i for i in range(n) if i not in retired]
        particles = [Particle(labels[i], float(positions[i]), births[i]) for i in keep]
        for label, pos in new_entries.values():
            particles.append(Particle(label, float(pos), t_new))
    else:
        particles = [
            Particle(lab, float(x), bt) for lab, x, bt in zip(labels, positions, births)
        ]
    new_positions = np.array([p.position for p in particles])
    xi = _kth_largest_value(new_positions, config.K)
    return (
        PopulationState(t_new, particles, None if math.isnan(xi) else xi),
        events,
    )


def run(config: SimConfig) -> RunRecord:
    """Advance from t=0 to t_end, recording snapshots at the configured cadence."""
    t0 = _time.perf_counter()
    sim = Simulation(config)
    every = config.snapshot_every
    times = [0.0]
    counts = [sim.n]
    xis = [sim.xi()]
    if config.record_particles:
        sim.store.add_snapshot(0.0, sim.nodes.copy(), sim.positions.copy(), sim.xi())
    n_steps = config.n_steps
    for step in range(1, n_steps + 1):
        sim.step()
        if step % every == 0 or step == n_steps:
            times.append(sim.t)
            counts.append(sim.n)
            xis.append(sim.xi())
            if config.record_particles:
                sim.store.add_snapshot(sim.t, sim.nodes.copy(), sim.positions.copy(), sim.xi())
    return RunRecord(
        config=config,
        times=np.asarray(times),
        counts=np.asarray(counts, dtype=np.int64),
        xi=np.asarray(xis),
        genealogy=sim.store,
        n_births=sim.n_births,
        wall_time=_time.perf_counter() - t0,
    )
