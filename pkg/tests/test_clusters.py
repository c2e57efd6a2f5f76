import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterkin.clusters import (
    ClusterPartition,
    ClusterSizeDistribution,
    backward_cluster,
    backward_size_histogram,
    backward_sizes,
    build_partition,
    read_distributions_csv,
    snapshots,
    size_distribution,
    write_distributions_csv,
)
from clusterkin.collision import CollisionLog


@st.composite
def logs(draw, max_n=12, max_events=40):
    n = draw(st.integers(2, max_n))
    m = draw(st.integers(0, max_events))
    pairs = draw(st.lists(
        st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1]),
        min_size=m, max_size=m,
    ))
    times = sorted(draw(st.lists(st.floats(0.0, 1.0), min_size=m, max_size=m, unique=True)))
    return CollisionLog.from_pairs(n, [(s, a, b) for s, (a, b) in zip(times, pairs)])


def naive_components(log, t):
    n = log.n_particles
    adj = {a: set() for a in range(n)}
    for s, a, b in zip(log.t, log.i, log.j):
        if s <= t:
            adj[a].add(b)
            adj[b].add(a)
    seen, comps = set(), []
    for a in range(n):
        if a in seen:
            continue
        stack, comp = [a], set()
        while stack:
            u = stack.pop()
            if u not in comp:
                comp.add(u)
                stack.extend(adj[u] - comp)
        seen |= comp
        comps.append(comp)
    return sorted(comps, key=lambda c: (-len(c), min(c)))


def test_worked_example():
    log = CollisionLog.from_pairs(5, [(0.1, 0, 1), (0.2, 2, 3), (0.4, 1, 2)])
    assert build_partition(log, 5, 0.3).components() == [{0, 1}, {2, 3}, {4}]
    assert build_partition(log, 5, 0.5).components() == [{0, 1, 2, 3}, {4}]
    # 0 last collided at 0.1, before 1 met 2, so nothing beyond 1 reaches it
    assert backward_cluster(log, 0, 0.5).members == frozenset({0, 1})
    assert backward_cluster(log, 3, 0.5).members == frozenset({2, 3})
    bc = backward_cluster(log, 2, 0.5)
    assert bc.members == frozenset({0, 1, 2, 3})
    assert bc.entry_times == {2: 0.5, 1: 0.4, 3: 0.2, 0: 0.1}


@settings(max_examples=200, deadline=None)
@given(logs(), st.floats(0.0, 1.0))
def test_partition_matches_graph_search(log, t):
    assert build_partition(log, log.n_particles, t).components() == naive_components(log, t)


@settings(max_examples=100, deadline=None)
@given(logs())
def test_partition_only_coarsens(log):
    part = ClusterPartition(log)
    previous = part.n_components
    for t in np.linspace(0, 1, 11):
        part.advance(t)
        assert part.n_components <= previous
        previous = part.n_components
    with pytest.raises(ValueError):
        part.advance(0.5)


@settings(max_examples=200, deadline=None)
@given(logs(), st.floats(0.0, 1.0))
def test_backward_cluster_inside_bogolyubov_cluster(log, t):
    comps = build_partition(log, log.n_particles, t).components()
    owner = {a: c for c in comps for a in c}
    sizes = backward_sizes(log, log.n_particles, t)
    for tag in range(log.n_particles):
        bc = backward_cluster(log, tag, t)
        assert bc.members <= owner[tag]
        assert bc.size == sizes[tag]
        assert all(s <= t for s in bc.entry_times.values())


@settings(max_examples=100, deadline=None)
@given(logs(), st.floats(0.0, 1.0), st.randoms(use_true_random=False))
def test_label_permutation_invariance(log, t, rnd):
    n = log.n_particles
    perm = list(range(n))
    rnd.shuffle(perm)
    relabelled = CollisionLog.from_pairs(n, [(s, perm[a], perm[b]) for s, a, b in zip(log.t, log.i, log.j)])
    d1 = size_distribution(build_partition(log, n, t))
    d2 = size_distribution(build_partition(relabelled, n, t))
    assert d1.counts == d2.counts
    b1 = backward_sizes(log, n, t)
    b2 = backward_sizes(relabelled, n, t)
    assert all(b1[a] == b2[perm[a]] for a in range(n))


@settings(max_examples=100, deadline=None)
@given(logs())
def test_distribution_invariants(log):
    n = log.n_particles
    for d in snapshots(log, n, [0.0, 0.3, 0.6, 1.0]):
        assert sum(k * c for k, c in d.counts.items()) == n
        assert sum(d.f(k) for k in d.counts) == pytest.approx(1.0)
        assert sum(d.g(k) for k in d.counts) == pytest.approx(1.0)
        assert d.largest_fraction <= 1 and d.second_largest <= d.largest
        assert d.susceptibility() >= 0


def test_distribution_validation_and_accessors():
    with pytest.raises(ValueError):
        ClusterSizeDistribution(0.5, 10, {1: 3, 2: 2})
    d = ClusterSizeDistribution(0.5, 10, {1: 4, 3: 2})
    assert d.n_clusters == 6 and d.largest == 3 and d.second_largest == 3
    assert d.cluster_fraction == 0.6
    assert d.f_array(3).tolist() == [0.4, 0.0, 0.6]
    assert d.g_array(2).tolist() == pytest.approx([4 / 6, 0.0])
    assert d.susceptibility() == pytest.approx((4 + 18 - 9) / 10)


def test_snapshots_reject_unsorted_grid():
    log = CollisionLog.from_pairs(3, [(0.1, 0, 1)])
    with pytest.raises(ValueError):
        snapshots(log, 3, [0.5, 0.2])


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    n = 200
    events = [(float(s), int(a), int((a + 1 + b) % n)) for s, a, b in
              zip(np.sort(rng.random(300)), rng.integers(0, n, 300), rng.integers(0, n - 1, 300))]
    log = CollisionLog.from_pairs(n, events)
    dists = snapshots(log, n, [0.25, 0.5, 1.0])
    path = tmp_path / "clusters.csv"
    write_distributions_csv(dists, path)
    assert path.read_text().splitlines()[0] == "t,k,n,f_emp,g_emp"
    back = read_distributions_csv(path, n)
    assert [(d.t, d.counts) for d in back] == [(d.t, d.counts) for d in dists]


def test_walls_never_join_clusters():
    log = CollisionLog(3, [0.1], [0], [1], wall_t=np.array([0.05, 0.2]), wall_i=np.array([2, 0]))
    assert build_partition(log, 3, 1.0).components() == [{0, 1}, {2}]
    assert backward_size_histogram(log, 3, 1.0) == {1: pytest.approx(1 / 3), 2: pytest.approx(2 / 3)}
