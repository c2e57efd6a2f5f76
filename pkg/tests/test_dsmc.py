import math

import numpy as np
import pytest
from scipy import stats

from clusterkin.clusters import snapshots
from clusterkin.dsmc import (
    ISOTROPIC,
    DsmcConfig,
    TabulatedScattering,
    isotropic_scattering,
    replica_seeds,
    run_dsmc,
    sample_scattering,
)


def test_two_particles_survive_at_rate_one():
    t = 0.7
    survived = sum(len(run_dsmc(DsmcConfig(N=2, seed=s, t_end=t))[0]) == 0 for s in range(10_000))
    p = math.exp(-t)
    assert abs(survived / 10_000 - p) <= 4 * math.sqrt(p * (1 - p) / 10_000)


def test_event_statistics():
    log, state = run_dsmc(DsmcConfig(N=20_000, seed=1, t_end=1.5))
    assert np.all(log.i < log.j) and np.all(np.diff(log.t) >= 0)
    assert log.t[-1] <= 1.5
    assert state.collisions.mean() == pytest.approx(1.5, rel=0.02)
    assert state.collisions.sum() == 2 * len(log)
    assert log.omega is None


def test_singletons_follow_exponential_law():
    log, _ = run_dsmc(DsmcConfig(N=50_000, seed=9, t_end=1.0))
    d = snapshots(log, 50_000, [0.5, 1.0])
    for snap in d:
        assert snap.f(1) == pytest.approx(math.exp(-snap.t), abs=0.01)


def test_seeded_runs_are_reproducible():
    cfg = DsmcConfig(N=1000, seed=42, t_end=1.0, track_velocities=True)
    (a, sa), (b, sb) = run_dsmc(cfg), run_dsmc(cfg)
    assert np.array_equal(a.t, b.t) and np.array_equal(a.i, b.i) and np.array_equal(a.omega, b.omega)
    assert np.array_equal(sa.velocities, sb.velocities)


def test_velocity_tracking_conserves_momentum_and_energy():
    log, state = run_dsmc(DsmcConfig(N=2000, seed=3, t_end=2.0, track_velocities=True))
    v0, v = state.initial_velocities, state.velocities
    assert len(log) > 1000
    scale = np.abs(v0).sum()
    # exact in real arithmetic; only rounding accumulates over ~2000 events
    assert np.allclose(v.sum(axis=0), v0.sum(axis=0), atol=1e-12 * scale)
    assert (v**2).sum() == pytest.approx((v0**2).sum(), rel=1e-12)
    assert np.allclose(np.linalg.norm(log.omega, axis=1), 1.0)


def test_scattering_conserves_invariants_per_event():
    rng = np.random.default_rng(0)
    for _ in range(500):
        v, v1 = rng.normal(size=3), rng.normal(size=3)
        w = sample_scattering(v - v1, ISOTROPIC, rng)
        assert np.dot(v - v1, w) > 0 and np.linalg.norm(w) == pytest.approx(1.0)
        vn = np.dot(w, v - v1)
        a, b = v - vn * w, v1 + vn * w
        assert np.allclose(a + b, v + v1, atol=1e-14)
        assert a @ a + b @ b == pytest.approx(v @ v + v1 @ v1, rel=1e-13)


def test_isotropic_angles_are_uniform_in_cosine():
    rng = np.random.default_rng(5)
    vrel = np.array([0.3, -1.0, 2.0])
    cosines = np.array([np.dot(sample_scattering(vrel, ISOTROPIC, rng), vrel) / np.linalg.norm(vrel)
                        for _ in range(5000)])
    assert cosines.mean() == pytest.approx(0.5, abs=0.015)
    assert stats.kstest(cosines, "uniform").pvalue > 1e-3


def test_tabulated_isotropic_agrees_with_direct_sampler():
    rng = np.random.default_rng(6)
    law = isotropic_scattering(3)
    vrel = np.array([0.0, 0.0, 1.0])
    cosines = np.array([sample_scattering(vrel, law, rng)[2] for _ in range(5000)])
    assert stats.kstest(cosines, "uniform").pvalue > 1e-3


def test_tabulated_forward_peaked_law():
    mu = np.linspace(0, 1, 101)
    law = TabulatedScattering(mu, mu / math.pi, dim=3)
    rng = np.random.default_rng(7)
    c = law.sample_cos(rng, 20_000)
    # density of cos(theta) is 2 mu on [0, 1]
    assert c.mean() == pytest.approx(2 / 3, abs=0.01)


def test_tabulated_law_must_be_normalised():
    mu = np.linspace(0, 1, 11)
    with pytest.raises(ValueError):
        TabulatedScattering(mu, np.ones(11), dim=3)
    with pytest.raises(ValueError):
        TabulatedScattering(mu, -np.ones(11) / (2 * math.pi), dim=3)


def test_zero_relative_velocity_has_no_hemisphere():
    with pytest.raises(ZeroDivisionError):
        sample_scattering(np.zeros(3), ISOTROPIC, np.random.default_rng(0))


def test_replica_seeds():
    a = replica_seeds(2014, 8)
    assert a == replica_seeds(2014, 8)
    assert len(set(a)) == 8
    assert replica_seeds(2014, 9)[:8] == a


def test_config_validation():
    with pytest.raises(ValueError):
        DsmcConfig(N=1)
    with pytest.raises(ValueError):
        DsmcConfig(N=10, t_end=-1)
    with pytest.raises(ValueError):
        DsmcConfig(N=10, scattering="hard-sphere")
