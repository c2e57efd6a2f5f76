"""Labelled trees, collision sequences and a brute-force cluster-mass oracle.

These are test oracles rather than production paths, so every enumerator is
capped to keep full enumeration well under a second.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy import integrate

MAX_TREE_VERTICES = 9
MAX_GAMMA_LENGTH = 10
MAX_ORACLE_SIZE = 5


@dataclass(frozen=True)
class LabelledTree:
    """A tree on vertices ``1..k`` stored as a set of unordered edges ``(i, j)``, ``i < j``."""

    k: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("a tree needs at least one vertex")
        if len(self.edges) != self.k - 1:
            raise ValueError(f"a tree on {self.k} vertices has {self.k - 1} edges, got {len(self.edges)}")
        parent = list(range(self.k + 1))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in self.edges:
            if not (1 <= i < j <= self.k):
                raise ValueError(f"bad edge {(i, j)} for k={self.k}")
            ri, rj = find(i), find(j)
            if ri == rj:
                raise ValueError("edge set contains a cycle")
            parent[ri] = rj

    @classmethod
    def from_pairs(cls, k: int, pairs) -> "LabelledTree":
        return cls(k, frozenset((min(a, b), max(a, b)) for a, b in pairs))

    def degree(self, v: int) -> int:
        return sum(v in e for e in self.edges)


def _trusted_tree(k: int, edges) -> LabelledTree:
    # decoded codes are valid by construction; skip the O(k) cycle check
    tree = object.__new__(LabelledTree)
    object.__setattr__(tree, "k", k)
    object.__setattr__(tree, "edges", frozenset(edges))
    return tree


def prufer_decode(code, k: int) -> LabelledTree:
    """Tree on ``1..k`` whose Prüfer code is ``code`` (length ``k - 2``).

    Linear-time decoding: a pointer walks upward over leaf candidates and the
    freshly created leaf is used directly when it is smaller than the pointer.
    """
    code = tuple(code)
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        if code:
            raise ValueError("the single-vertex tree has an empty code")
        return _trusted_tree(1, ())
    if len(code) != k - 2 or (code and (min(code) < 1 or max(code) > k)):
        raise ValueError(f"invalid Prüfer code {code} for k={k}")
    degree = [1] * (k + 2)
    for c in code:
        degree[c] += 1
    ptr = 1
    while degree[ptr] != 1:
        ptr += 1
    leaf = ptr
    edges = []
    for c in code:
        edges.append((leaf, c) if leaf < c else (c, leaf))
        degree[c] -= 1
        if degree[c] == 1 and c < ptr:
            leaf = c
        else:
            ptr += 1
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
    edges.append((leaf, k))
    return _trusted_tree(k, edges)


def prufer_encode(tree: LabelledTree) -> tuple[int, ...]:
    """Inverse of :func:`prufer_decode`: repeatedly strip the smallest leaf.

    Each vertex keeps the XOR of its live neighbours, so a leaf's only
    neighbour is read off directly; the pointer walk mirrors decoding.
    """
    k = tree.k
    if k <= 2:
        return ()
    degree = [0] * (k + 1)
    neighbours = [0] * (k + 1)
    for i, j in tree.edges:
        degree[i] += 1
        degree[j] += 1
        neighbours[i] ^= j
        neighbours[j] ^= i
    ptr = 1
    while degree[ptr] != 1:
        ptr += 1
    leaf = ptr
    code = []
    for _ in range(k - 2):
        nb = neighbours[leaf]
        code.append(nb)
        neighbours[nb] ^= leaf
        degree[nb] -= 1
        if degree[nb] == 1 and nb < ptr:
            leaf = nb
        else:
            ptr += 1
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
    return tuple(code)


def cayley_count(k: int) -> int:
    """Number of labelled trees on ``k`` vertices, ``k^(k-2)``, as an exact int."""
    if k < 1:
        raise ValueError("k must be positive")
    return 1 if k == 1 else k ** (k - 2)


def enumerate_trees(k: int) -> Iterator[LabelledTree]:
    """Yield every labelled tree on ``1..k`` exactly once (via Prüfer codes)."""
    if not 1 <= k <= MAX_TREE_VERTICES:
        raise ValueError(f"tree enumeration is capped at 1 <= k <= {MAX_TREE_VERTICES}")
    if k == 1:
        yield LabelledTree(1, frozenset())
        return
    for code in itertools.product(range(1, k + 1), repeat=k - 2):
        yield prufer_decode(code, k)


def enumerate_gamma(n: int) -> Iterator[tuple[int, ...]]:
    """Yield all collision sequences ``(k_1, ..., k_n)`` with ``1 <= k_r <= r``.

    Entry ``k_r`` names which of the ``r`` particles already in the backward
    cluster meets the ``(r+1)``-th particle.
    """
    if not 0 <= n <= MAX_GAMMA_LENGTH:
        raise ValueError(f"sequence enumeration is capped at 0 <= n <= {MAX_GAMMA_LENGTH}")
    yield from itertools.product(*(range(1, r + 1) for r in range(1, n + 1)))


# -- oracle for the cluster mass density ------------------------------------

@lru_cache(maxsize=None)
def _hemisphere_kernel_integral() -> float:
    """Integral of the isotropic 3-d scattering density over the sphere."""
    g = 1.0 / (2.0 * math.pi)
    val, _ = integrate.quad(lambda th: 2.0 * math.pi * math.sin(th) * g, 0.0, 0.5 * math.pi)
    return val


@lru_cache(maxsize=None)
def _single_particle_rate() -> float:
    """Free-flight rate of one particle: kernel integral times density mass.

    The density is a unit Maxwellian in three dimensions; only its total mass
    enters for velocity-independent kernels.
    """
    one_d, _ = integrate.quad(lambda v: math.exp(-0.5 * v * v) / math.sqrt(2 * math.pi), -np.inf, np.inf)
    return _hemisphere_kernel_integral() * one_d**3


def quadrature_oracle_f(k: int, t: float, order: int = 4) -> float:
    """Cluster mass density for the Maxwell gas by brute-force tree sum.

    Sums over all labelled trees on ``k`` vertices and integrates over the
    cube of collision times ``(0, t)^(k-1)`` with a tensor Gauss-Legendre rule.
    At every node the times are sorted, and the free-flight factor is built
    interval by interval from ``t`` down to ``0``, each interval weighted by
    the rate of all ``k`` particles.  Nothing is simplified symbolically.
    """
    if not 2 <= k <= MAX_ORACLE_SIZE:
        raise ValueError(f"oracle is limited to 2 <= k <= {MAX_ORACLE_SIZE}")
    if t < 0:
        raise ValueError("t must be non-negative")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes = 0.5 * t * (nodes + 1.0)
    weights = 0.5 * t * weights
    grid = np.array(list(itertools.product(nodes, repeat=k - 1)))
    w = np.prod(np.array(list(itertools.product(weights, repeat=k - 1))), axis=1)

    rate_k = k * _single_particle_rate()
    kernel = _hemisphere_kernel_integral()

    # sort each time vector decreasingly and pad with the endpoints t and 0
    ordered = -np.sort(-grid, axis=1)
    padded = np.column_stack([np.full(len(grid), t), ordered, np.zeros(len(grid))])
    flight = np.ones(len(grid))
    for r in range(k):
        flight *= np.exp(-rate_k * (padded[:, r] - padded[:, r + 1]))

    total = 0.0
    for tree in enumerate_trees(k):
        # each edge carries one collision with its own kernel integral
        edge_factor = kernel ** len(tree.edges)
        total += edge_factor * float(np.dot(w, flight))
    return total / math.factorial(k - 1)
