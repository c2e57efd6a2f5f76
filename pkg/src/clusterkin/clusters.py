"""Bogolyubov and backward clusters extracted from a collision log.

Two particles are t-neighbours if they collided during ``[0, t]``; clusters
are the connected components.  The backward cluster of a tagged particle
collects everything reachable from it along collision chains with strictly
decreasing times, scanning from ``t`` down to ``0``.  Wall events never
enter either notion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .collision import CollisionLog


class ClusterPartition:
    """Union-find over labels ``0..N-1`` fed by a time-sorted collision log.

    Union by size with path halving.  The partition only ever coarsens, so
    it can be advanced through increasing times without re-reading the log.
    """

    def __init__(self, log: CollisionLog, N: int | None = None):
        self.log = log
        self.N = log.n_particles if N is None else int(N)
        if len(log) and (log.i.min() < 0 or log.j.max() >= self.N):
            raise ValueError("log contains labels outside 0..N-1")
        self.parent = np.arange(self.N)
        self.size = np.ones(self.N, dtype=np.int64)
        self.t = 0.0
        self._cursor = 0
        self.n_components = self.N

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.n_components -= 1
        return True

    def advance(self, t: float) -> "ClusterPartition":
        """Merge every pair event with time ``<= t`` not yet processed."""
        if t < self.t:
            raise ValueError(f"cannot move back from t={self.t} to t={t}; clusters only merge")
        stop = self.log.count_until(t)
        # plain lists are much faster than numpy scalars in this loop
        parent = self.parent.tolist()
        size = self.size.tolist()
        n_comp = self.n_components
        ii = self.log.i[self._cursor:stop].tolist()
        jj = self.log.j[self._cursor:stop].tolist()
        for a, b in zip(ii, jj):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
            n_comp -= 1
        self.parent = np.array(parent)
        self.size = np.array(size, dtype=np.int64)
        self.n_components = n_comp
        self._cursor = stop
        self.t = float(t)
        return self

    def roots(self) -> np.ndarray:
        """Root label of every particle (vectorised full compression)."""
        p = self.parent
        while True:
            gp = p[p]
            if np.array_equal(gp, p):
                break
            p = gp
        self.parent = p
        return p

    def component_sizes(self) -> np.ndarray:
        r = self.roots()
        return self.size[np.unique(r)]

    def components(self) -> list[set[int]]:
        r = self.roots()
        groups: dict[int, set[int]] = {}
        for label, root in enumerate(r.tolist()):
            groups.setdefault(root, set()).add(label)
        return sorted(groups.values(), key=lambda s: (-len(s), min(s)))


def build_partition(log: CollisionLog, N: int, t: float) -> ClusterPartition:
    """Bogolyubov t-cluster partition of ``N`` particles."""
    return ClusterPartition(log, N).advance(t)


@dataclass
class ClusterSizeDistribution:
    """Histogram ``n(k)`` of cluster sizes at one time."""

    t: float
    N: int
    counts: dict[int, int]

    def __post_init__(self):
        mass = sum(k * n for k, n in self.counts.items())
        if mass != self.N:
            raise ValueError(f"cluster masses sum to {mass}, expected {self.N}")

    @property
    def sizes(self) -> np.ndarray:
        return np.array(sorted(self.counts), dtype=np.int64)

    @property
    def n_clusters(self) -> int:
        return sum(self.counts.values())

    @property
    def cluster_fraction(self) -> float:
        """``N_c / N``."""
        return self.n_clusters / self.N

    @property
    def largest(self) -> int:
        return max(self.counts)

    @property
    def largest_fraction(self) -> float:
        return self.largest / self.N

    @property
    def second_largest(self) -> int:
        ks = sorted(self.counts, reverse=True)
        if self.counts[ks[0]] > 1:
            return ks[0]
        return ks[1] if len(ks) > 1 else 0

    def susceptibility(self) -> float:
        """Mean cluster size seen by a particle, largest cluster excluded."""
        total = sum(k * k * n for k, n in self.counts.items()) - self.largest**2
        return total / self.N

    def n(self, k: int) -> int:
        return self.counts.get(k, 0)

    def f(self, k: int) -> float:
        return k * self.n(k) / self.N

    def g(self, k: int) -> float:
        return self.n(k) / self.n_clusters

    def f_array(self, kmax: int) -> np.ndarray:
        out = np.zeros(kmax)
        for k, n in self.counts.items():
            if k <= kmax:
                out[k - 1] = k * n / self.N
        return out

    def g_array(self, kmax: int) -> np.ndarray:
        out = np.zeros(kmax)
        nc = self.n_clusters
        for k, n in self.counts.items():
            if k <= kmax:
                out[k - 1] = n / nc
        return out

    def rows(self) -> Iterator[tuple]:
        """``(t, k, n, f_emp, g_emp)`` per occupied size."""
        nc = self.n_clusters
        for k in sorted(self.counts):
            n = self.counts[k]
            yield (self.t, k, n, k * n / self.N, n / nc)


def size_distribution(p: ClusterPartition) -> ClusterSizeDistribution:
    sizes = p.component_sizes()
    ks, ns = np.unique(sizes, return_counts=True)
    return ClusterSizeDistribution(p.t, p.N, {int(k): int(n) for k, n in zip(ks, ns)})


def snapshots(log: CollisionLog, N: int, times: Iterable[float]) -> list[ClusterSizeDistribution]:
    """Distributions on an increasing time grid from one pass over the log."""
    times = list(times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("time grid must be strictly increasing")
    part = ClusterPartition(log, N)
    return [size_distribution(part.advance(t)) for t in times]


CSV_COLUMNS = ("t", "k", "n", "f_emp", "g_emp")


def write_distributions_csv(dists: Iterable[ClusterSizeDistribution], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for d in dists:
            for t, k, n, f, g in d.rows():
                w.writerow([repr(float(t)), k, n, repr(f), repr(g)])


def read_distributions_csv(path, N: int) -> list[ClusterSizeDistribution]:
    by_t: dict[float, dict[int, int]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            by_t.setdefault(float(row["t"]), {})[int(row["k"])] = int(row["n"])
    return [ClusterSizeDistribution(t, N, c) for t, c in sorted(by_t.items())]


# -- backward clusters -------------------------------------------------------

@dataclass
class BackwardCluster:
    tag: int
    t: float
    members: frozenset[int]
    entry_times: dict[int, float] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.members)


def backward_cluster(log: CollisionLog, tag: int, t: float) -> BackwardCluster:
    """Scan pair events from ``t`` back to ``0`` collecting the tag's influencers.

    An event joins its outside partner when exactly one side is already a
    member; an event between two members is a recollision and is skipped.
    """
    if not 0 <= tag < log.n_particles:
        raise ValueError("tag out of range")
    stop = log.count_until(t)
    members = {tag}
    entry = {tag: float(t)}
    ii = log.i[:stop].tolist()
    jj = log.j[:stop].tolist()
    ts = log.t[:stop].tolist()
    for e in range(stop - 1, -1, -1):
        a, b = ii[e], jj[e]
        ina, inb = a in members, b in members
        if ina == inb:
            continue
        new = b if ina else a
        members.add(new)
        entry[new] = ts[e]
    return BackwardCluster(tag, float(t), frozenset(members), entry)


def backward_sizes(log: CollisionLog, N: int, t: float) -> np.ndarray:
    """Backward-cluster size of every particle at time ``t``.

    Forward formulation of the same reachability: after an event ``(a, b)``
    both particles see the union of what either saw just before it.  Sets
    are shared between particles until the next merge.
    """
    stop = log.count_until(t)
    sets: list[frozenset[int] | None] = [None] * N
    for a, b in zip(log.i[:stop].tolist(), log.j[:stop].tolist()):
        sa = sets[a] if sets[a] is not None else frozenset((a,))
        sb = sets[b] if sets[b] is not None else frozenset((b,))
        merged = sa | sb
        sets[a] = sets[b] = merged
    return np.array([1 if s is None else len(s) for s in sets], dtype=np.int64)


def backward_size_histogram(log: CollisionLog, N: int, t: float) -> dict[int, float]:
    """Fraction of particles whose backward cluster at ``t`` has each size."""
    sizes = backward_sizes(log, N, t)
    ks, ns = np.unique(sizes, return_counts=True)
    return {int(k): n / N for k, n in zip(ks, ns)}
