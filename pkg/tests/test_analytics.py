import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln, lambertw

from clusterkin.analytics import (
    SeriesError,
    SeriesPolicy,
    analytic_distribution,
    backward_cluster_law,
    direct_sum_F,
    direct_sum_Z,
    f_mass,
    fit_power_law,
    fit_power_law_counts,
    g_fraction,
    g_unnormalized,
    gamma_damping,
    giant_mass,
    log_tree_weight,
    partition_Z,
    series_tail_bound,
    solve_conjugate,
    stirling_f,
    total_mass_F,
)

IDENTITY = SeriesPolicy(mode="tree-function-identity")
DIRECT = SeriesPolicy(mode="direct-sum")
times = st.floats(min_value=0.01, max_value=5.0)


def test_small_cluster_values():
    assert f_mass(1, 1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert f_mass(2, 1.0) == pytest.approx(math.exp(-2), rel=1e-15)
    assert f_mass(3, 1.0) == pytest.approx(1.5 * math.exp(-3), rel=1e-15)
    assert g_unnormalized(4, 0.5) == pytest.approx(16 / 24 * 0.125 * math.exp(-2), rel=1e-14)


def test_time_zero_is_all_singletons():
    k = np.arange(1, 20)
    assert np.array_equal(f_mass(k, 0.0), (k == 1).astype(float))
    assert partition_Z(0.0) == 1.0
    assert total_mass_F(0.0) == 1.0


def test_log_tree_weight_matches_exact_log_gamma():
    k = np.arange(1, 400, dtype=float)
    exact = (k - 2) * np.log(k) - gammaln(k + 1)
    assert np.allclose(log_tree_weight(k), exact, rtol=1e-13, atol=1e-12)


def test_no_overflow_for_large_sizes():
    val = f_mass(10**6, 1.0)
    assert np.isfinite(val) and val > 0
    assert val == pytest.approx(stirling_f(10**6, 1.0), rel=1e-6)


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        f_mass(0, 1.0)
    with pytest.raises(ValueError):
        f_mass(1, -0.1)
    with pytest.raises(ValueError):
        partition_Z(math.nan)
    with pytest.raises(ValueError):
        solve_conjugate(0.9)
    with pytest.raises(ValueError):
        gamma_damping(0.0)
    with pytest.raises(ValueError):
        SeriesPolicy(mode="guess")


def test_partition_function_critical_value():
    assert partition_Z(1.0) == 0.5
    sv = direct_sum_Z(1.0, 10**6)
    assert 0 <= 0.5 - sv.value <= sv.tail_bound


def test_direct_sum_needs_more_terms_raises():
    policy = SeriesPolicy(mode="direct-sum", kmax=100, tail_tol=1e-12)
    with pytest.raises(SeriesError):
        partition_Z(1.0, policy)


def test_auto_falls_back_to_identity_near_critical_point():
    for t in (0.97, 1.0, 1.03):
        assert partition_Z(t) == partition_Z(t, IDENTITY)


@pytest.mark.parametrize("t", [0.1, 0.5, 0.8, 1.3, 2.0, 3.0])
def test_direct_sum_agrees_with_identity(t):
    for fn in (partition_Z, total_mass_F):
        assert fn(t, DIRECT) == pytest.approx(fn(t, IDENTITY), abs=2e-12)


def test_tree_function_against_lambert_w():
    # principal branch T(x) = -W0(-x)
    for t in (0.3, 0.7, 1.5, 2.0, 4.0):
        T = -lambertw(-t * math.exp(-t)).real
        expected = (T - T * T / 2) / t
        assert partition_Z(t, IDENTITY) == pytest.approx(expected, rel=1e-12)


def test_gelation_values():
    assert total_mass_F(2.0) == pytest.approx(0.20318787, abs=1e-8)
    assert giant_mass(2.0) == pytest.approx(0.79681213, abs=1e-8)
    assert solve_conjugate(2.0).t_star == pytest.approx(0.4063757, abs=1e-7)
    assert solve_conjugate(3.0).t_star == pytest.approx(0.1785606, abs=1e-7)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=1.0 + 1e-9, max_value=30.0))
def test_conjugate_point_properties(t):
    sol = solve_conjugate(t)
    assert 0 < sol.t_star < 1
    assert sol.residual <= 1e-12 * t * math.exp(-t)


@settings(max_examples=100, deadline=None)
@given(times)
def test_mass_never_exceeds_one_and_giant_is_complement(t):
    F = total_mass_F(t)
    assert 0 < F <= 1 + 1e-12
    assert giant_mass(t) == pytest.approx(1 - F, abs=1e-15)
    if t <= 1:
        assert F == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(times, times)
def test_partition_function_decreases(a, b):
    if abs(a - b) > 1e-6:
        lo, hi = sorted((a, b))
        assert partition_Z(hi) < partition_Z(lo)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.05, max_value=3.0))
def test_cluster_fractions_sum_to_one(t):
    k = np.arange(1, 200_001)
    total = math.fsum(g_fraction(k, t))
    # the truncated tail is bounded relative to Z
    assert 1 - total <= series_tail_bound(t, 200_000, mass=False) / partition_Z(t) + 1e-10
    assert total <= 1 + 1e-10


def test_damping_scale():
    assert gamma_damping(1.0) == math.inf
    assert gamma_damping(0.5) == pytest.approx(5.1774, abs=1e-4)
    assert gamma_damping(2.0) == pytest.approx(3.2589, abs=1e-4)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.95))
def test_damping_is_same_on_both_sides(t):
    # t and its conjugate point share x e^-x, hence the damping scale
    other = conjugate_partner(t)
    assert gamma_damping(t) == pytest.approx(gamma_damping(other), rel=1e-9)


def conjugate_partner(t):
    """The t > 1 partner of t < 1 through the lower branch of Lambert W."""
    return -lambertw(-t * math.exp(-t), k=-1).real


def test_stirling_asymptotics():
    k = np.array([100, 1000, 10000])
    rel = np.abs(stirling_f(k, 0.9) / f_mass(k, 0.9) - 1)
    assert np.all(np.diff(rel) < 0) and rel[-1] < 1e-4
    per = stirling_f(k, 1.0, per_cluster=True) / g_unnormalized(k, 1.0)
    assert np.allclose(per, 1, rtol=1e-3)


def test_backward_law_normalised():
    n = np.arange(0, 2000)
    for t in (0.2, 1.0, 3.0):
        assert math.fsum(backward_cluster_law(n, t)) == pytest.approx(1.0, abs=1e-12)
    assert backward_cluster_law(0, 1.0) == pytest.approx(math.exp(-1))
    assert backward_cluster_law(3, 0.0) == 0.0


def test_power_law_fit_recovers_synthetic_law():
    k = np.arange(1, 1000)
    p = 3.0 * k**-2.2 * np.exp(-0.01 * k)
    fit = fit_power_law(k, p, 5, 900)
    assert fit.exponent == pytest.approx(2.2, abs=1e-9)
    assert fit.damping_rate == pytest.approx(0.01, abs=1e-9)
    assert fit.gamma == pytest.approx(100.0)


def test_power_law_fit_clamps_negative_damping():
    k = np.arange(1, 500)
    fit = fit_power_law(k, k**-2.0 * np.exp(0.001 * k), 5, 400)
    assert fit.damping_rate == 0.0


def test_power_law_fit_range_validation():
    k = np.arange(1, 100)
    with pytest.raises(ValueError):
        fit_power_law(k, k**-2.0, 10, 20)
    with pytest.raises(ValueError):
        fit_power_law(k, np.zeros(99), 5, 50)


def test_count_fit_on_poisson_samples():
    rng = np.random.default_rng(1)
    k = np.arange(1, 400)
    lam = 2e5 * k**-2.5 * np.exp(-0.05 * k)
    counts = rng.poisson(lam)
    fit = fit_power_law_counts(k, counts, 3, 300)
    assert fit.exponent == pytest.approx(2.5, abs=0.1)
    assert fit.damping_rate == pytest.approx(0.05, abs=0.01)


def test_analytic_distribution_table():
    dist = analytic_distribution(1.0, kmax=50)
    assert dist.k[0] == 1 and len(dist.k) == 50
    assert dist.Z == 0.5 and dist.F == pytest.approx(1.0) and dist.F_giant == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(dist.f_mass, f_mass(dist.k, 1.0))
    assert np.allclose(dist.g_frac, g_fraction(dist.k, 1.0))
    assert dist.g_tail_bound > 0


def test_direct_sum_of_mass_bound_is_honest():
    for t in (0.5, 1.0, 2.0):
        sv = direct_sum_F(t, 5000)
        assert abs(total_mass_F(t, IDENTITY) - sv.value) <= sv.tail_bound


def test_partition_function_is_linear_before_critical_time():
    t = np.linspace(0.05, 0.99, 50)
    assert np.allclose([partition_Z(s) for s in t], 1 - t / 2, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.005, max_value=0.05))
def test_second_derivative_grows_continuously_after_critical_time(u):
    # Z = 1/2 - u/2 + (2/3) u^3 + O(u^4) above t = 1, so Z'' ~ 4u: continuous
    # at the critical time, while the third derivative jumps from 0 to 4
    h = 1e-3
    d2 = (partition_Z(1 + u + h) - 2 * partition_Z(1 + u) + partition_Z(1 + u - h)) / h**2
    assert d2 == pytest.approx(4 * u, rel=0.25)
