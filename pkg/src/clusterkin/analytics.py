"""Closed-form cluster statistics for the Maxwell-molecule gas.

With unit per-particle collision rate the mass density of clusters of size
``k`` at kinetic time ``t`` is

    f_t(k) = k^(k-2) / (k-1)! * t^(k-1) * exp(-k t)

and the per-cluster weight is ``f_t(k) / k``.  Everything below is a pure
function of its arguments.  Series terms are evaluated in log space; the
constant ``k^(k-2)`` overflows a double near ``k = 140``.

The infinite sums have a closed form through the tree function
``T(x) = sum_k k^(k-1) x^k / k!``: on the principal branch ``T(t e^-t) = t``
for ``t <= 1`` and ``T(t e^-t) = t*`` for ``t > 1``, where ``t*`` is the
conjugate point in ``(0, 1)`` with the same value of ``x e^-x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import optimize
from scipy.special import gammaln

__all__ = [
    "SeriesError",
    "SeriesPolicy",
    "SeriesValue",
    "ConjugateSolution",
    "AnalyticDistribution",
    "PowerLawFit",
    "f_mass",
    "g_unnormalized",
    "log_tree_weight",
    "direct_sum_Z",
    "direct_sum_F",
    "partition_Z",
    "g_fraction",
    "solve_conjugate",
    "total_mass_F",
    "giant_mass",
    "gamma_damping",
    "stirling_f",
    "backward_cluster_law",
    "fit_power_law",
    "fit_power_law_counts",
    "series_tail_bound",
    "analytic_distribution",
]

CRITICAL_TIME = 1.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_EPS = np.finfo(float).eps
# below this k the exact log-gamma is used, above it the Stirling series
_STIRLING_SWITCH = 30

Mode = Literal["auto", "direct-sum", "tree-function-identity"]


class SeriesError(ArithmeticError):
    """A truncated series cannot meet the requested tail tolerance."""


@dataclass(frozen=True)
class SeriesPolicy:
    """How infinite sums over cluster sizes are evaluated.

    ``mode="auto"`` sums directly away from the critical point and falls back
    to the tree-function identity when ``|t - 1| < near_critical`` or when the
    direct sum cannot reach ``tail_tol`` within ``kmax`` terms.
    """

    kmax: int = 1_000_000
    tail_tol: float = 1e-12
    mode: Mode = "auto"
    near_critical: float = 0.05

    def __post_init__(self):
        if self.kmax < 1:
            raise ValueError("kmax must be positive")
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        if self.mode not in ("auto", "direct-sum", "tree-function-identity"):
            raise ValueError(f"unknown series mode {self.mode!r}")


DEFAULT_POLICY = SeriesPolicy()


@dataclass(frozen=True)
class SeriesValue:
    """Truncated sum together with a rigorous bound on what was left out."""

    value: float
    tail_bound: float
    terms: int


@dataclass(frozen=True)
class ConjugateSolution:
    t: float
    t_star: float
    residual: float


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    damping_rate: float
    k_range: tuple[int, int]
    residual: float
    n_points: int = 0
    exponent_se: float | None = None
    damping_se: float | None = None

    @property
    def gamma(self) -> float:
        return math.inf if self.damping_rate == 0 else 1.0 / self.damping_rate


@dataclass
class AnalyticDistribution:
    t: float
    kmax: int
    f_mass: np.ndarray
    g_frac: np.ndarray
    Z: float
    F: float
    F_giant: float
    g_tail_bound: float = 0.0
    k: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.k = np.arange(1, self.kmax + 1)


def _check_time(t: float) -> float:
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise ValueError(f"kinetic time must be finite and non-negative, got {t}")
    return t


def _stirling_correction(k):
    # log Gamma(k+1) - [(k + 1/2) ln k - k + ln sqrt(2 pi)]
    r = 1.0 / k
    r2 = r * r
    return r * (1 / 12 - r2 * (1 / 360 - r2 * (1 / 1260 - r2 / 1680)))


def log_tree_weight(k):
    """``ln(k^(k-2) / k!)`` for integer ``k >= 1`` (scalar or array).

    For large ``k`` the two big logarithms are cancelled analytically through
    the Stirling series, so the result keeps full relative accuracy.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 1):
        raise ValueError("cluster size must be >= 1")
    small = k_arr < _STIRLING_SWITCH
    ks = np.where(small, k_arr, 2.0)
    kl = np.where(small, float(_STIRLING_SWITCH), k_arr)
    exact = (ks - 2.0) * np.log(ks) - gammaln(ks + 1.0)
    asym = kl - 2.5 * np.log(kl) - _LOG_SQRT_2PI - _stirling_correction(kl)
    out = np.where(small, exact, asym)
    return out[()] if out.ndim == 0 else out


def _log_terms(k, t: float):
    """``ln(k^(k-2)/k! t^(k-1) e^(-kt))``, valid for t > 0."""
    k_arr = np.asarray(k, dtype=float)
    return log_tree_weight(k_arr) + (k_arr - 1.0) * math.log(t) - k_arr * t


def g_unnormalized(k, t: float):
    """Cluster-number weight ``k^(k-2)/k! t^(k-1) e^(-kt)`` (numerator of g_t)."""
    t = _check_time(t)
    k_arr = np.asarray(k)
    if np.any(k_arr < 1):
        raise ValueError("cluster size must be >= 1")
    if t == 0.0:
        out = np.where(k_arr == 1, 1.0, 0.0)
    else:
        out = np.exp(_log_terms(k_arr, t))
    return out[()] if np.ndim(out) == 0 else out


def f_mass(k, t: float):
    """Mass fraction of particles in clusters of size ``k`` at time ``t``."""
    k_arr = np.asarray(k)
    out = k_arr * g_unnormalized(k_arr, t)
    return float(out) if np.ndim(out) == 0 else out


def _log_ratio(t: float) -> float:
    # ln(e t e^-t) = log1p(u) - u with u = t - 1, accurate near t = 1
    u = t - 1.0
    return math.log1p(u) - u


def _tail_majorant(t: float, K: int, power: float) -> float:
    """Upper bound of ``sum_{k>K} q^k / (sqrt(2 pi) t k^power)``, q = e t e^-t.

    Stirling's lower bound ``k! >= sqrt(2 pi k) (k/e)^k`` makes the summand a
    majorant of the true series term.
    """
    if t == 0.0:
        return 0.0
    log_q = _log_ratio(t)
    q_next = math.exp(log_q * (K + 1))
    bounds = [q_next / (power - 1.0) * K ** (1.0 - power)]
    if log_q < 0:
        bounds.append(q_next * (K + 1) ** (-power) / -math.expm1(log_q))
    return min(bounds) / (math.sqrt(2.0 * math.pi) * t)


def series_tail_bound(t: float, kmax: int, *, mass: bool) -> float:
    """Bound on the truncated tail beyond ``kmax`` of the mass (or cluster-count) series."""
    return _tail_majorant(_check_time(t), int(kmax), 1.5 if mass else 2.5)


def _direct_sum(t: float, kmax: int, mass: bool) -> SeriesValue:
    t = _check_time(t)
    if t == 0.0:
        return SeriesValue(1.0, 0.0, 1)
    k = np.arange(1, kmax + 1, dtype=float)
    terms = np.exp(_log_terms(k, t))
    if mass:
        terms = terms * k
    value = math.fsum(terms)
    # rounding of each exp(): relative error grows with the size of the exponent
    scale = 1.0 + k * (1.0 + abs(math.log(t)) + t)
    rounding = 8.0 * _EPS * float(np.dot(terms, scale)) + 2.0 * _EPS * value
    tail = _tail_majorant(t, kmax, 1.5 if mass else 2.5)
    return SeriesValue(value, tail + rounding, kmax)


def direct_sum_Z(t: float, kmax: int) -> SeriesValue:
    """Partition function summed term by term up to ``kmax``."""
    return _direct_sum(t, kmax, mass=False)


def direct_sum_F(t: float, kmax: int) -> SeriesValue:
    """Total cluster mass summed term by term up to ``kmax``."""
    return _direct_sum(t, kmax, mass=True)


def _terms_needed(t: float, power: float, tol: float, kmax: int) -> int | None:
    if _tail_majorant(t, kmax, power) > tol:
        return None
    lo, hi = 1, kmax
    while lo < hi:
        mid = (lo + hi) // 2
        if _tail_majorant(t, mid, power) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _series(t: float, policy: SeriesPolicy, mass: bool) -> float | None:
    """Direct-sum evaluation honouring ``policy``; ``None`` means use the identity."""
    t = _check_time(t)
    if policy.mode == "tree-function-identity":
        return None
    if policy.mode == "auto" and abs(t - CRITICAL_TIME) < policy.near_critical:
        return None
    power = 1.5 if mass else 2.5
    # leave half the budget for rounding
    K = _terms_needed(t, power, 0.5 * policy.tail_tol, policy.kmax)
    if K is None:
        if policy.mode == "auto":
            return None
        raise SeriesError(
            f"direct sum at t={t} needs more than kmax={policy.kmax} terms "
            f"for tail_tol={policy.tail_tol:g}"
        )
    sv = _direct_sum(t, K, mass)
    if sv.tail_bound > policy.tail_tol:
        if policy.mode == "auto":
            return None
        raise SeriesError(f"rounding bound {sv.tail_bound:g} exceeds tail_tol")
    return sv.value


def solve_conjugate(t: float, *, rtol: float = 1e-12, max_iter: int = 200) -> ConjugateSolution:
    """Root ``t*`` in (0, 1) of ``x e^-x = t e^-t`` for ``t > 1``.

    Newton iteration on ``y = ln x`` for ``y - e^y = ln t - t``, safeguarded
    by the bracket ``[ln t - t, 0)``; the map is strictly increasing there.
    """
    t = float(t)
    if not (t > 1.0 and math.isfinite(t)):
        raise ValueError(f"conjugate point is defined only for t > 1, got {t}")
    c = math.log(t) - t
    lo, hi = c, min(0.0, c + 1.0)

    def G(y):
        return y - math.exp(y) - c

    y = c + math.exp(c)
    if not lo < y < hi:
        y = 0.5 * (lo + hi)
    target = t * math.exp(-t)
    for _ in range(max_iter):
        g = G(y)
        if g == 0.0:
            break
        if g < 0:
            lo = y
        else:
            hi = y
        dg = 1.0 - math.exp(y)
        y_new = y - g / dg if dg > 0 else 0.5 * (lo + hi)
        if not lo < y_new < hi:
            y_new = 0.5 * (lo + hi)
        step = abs(y_new - y)
        y = y_new
        # run Newton to step convergence; the residual alone is a weak
        # criterion near t = 1 where x e^-x is flat
        if step <= 2 * _EPS * abs(y) or hi - lo <= 2 * _EPS * abs(lo):
            break
    else:
        raise ArithmeticError(f"conjugate solve did not converge for t={t}")
    x = math.exp(y)
    residual = abs(x * math.exp(-x) - target)
    if residual > rtol * target:
        raise ArithmeticError(f"conjugate solve residual {residual:g} too large at t={t}")
    return ConjugateSolution(t, x, residual)


def _tree_value(t: float) -> float:
    """Principal-branch tree function at ``x = t e^-t``."""
    return t if t <= CRITICAL_TIME else solve_conjugate(t).t_star


def partition_Z(t: float, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Fractional number of clusters ``Z_t``; ``Z_0 = 1``."""
    t = _check_time(t)
    if t == 0.0:
        return 1.0
    direct = _series(t, policy, mass=False)
    if direct is not None:
        return direct
    T = _tree_value(t)
    return (T - 0.5 * T * T) / t


def g_fraction(k, t: float, policy: SeriesPolicy = DEFAULT_POLICY):
    """Fraction of clusters having size ``k``."""
    return g_unnormalized(k, t) / partition_Z(t, policy)


def total_mass_F(t: float, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Total mass in finite clusters; 1 up to ``t = 1`` and ``t*/t`` after."""
    t = _check_time(t)
    if t == 0.0:
        return 1.0
    direct = _series(t, policy, mass=True)
    if direct is not None:
        return direct
    return _tree_value(t) / t


def giant_mass(t: float, policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """Mass fraction carried by the infinite cluster."""
    return 1.0 - total_mass_F(t, policy)


def gamma_damping(t: float) -> float:
    """Damping scale ``1/|ln(e t e^-t)|``; ``math.inf`` at ``t = 1``."""
    t = float(t)
    if not t > 0:
        raise ValueError("damping scale is undefined at t <= 0")
    lr = _log_ratio(t)
    return math.inf if lr == 0.0 else 1.0 / abs(lr)


def stirling_f(k, t: float, *, per_cluster: bool = False):
    """Large-``k`` asymptotic of ``f_t(k)``.

    With ``per_cluster=True`` returns the asymptotic of the unnormalised
    cluster weight instead, which carries the extra factor ``1/k``.
    """
    t = float(t)
    if not t > 0:
        raise ValueError("Stirling form needs t > 0")
    k_arr = np.asarray(k, dtype=float)
    power = 2.5 if per_cluster else 1.5
    out = np.exp(k_arr * _log_ratio(t) - power * np.log(k_arr) - _LOG_SQRT_2PI) / t
    return float(out) if out.ndim == 0 else out


def backward_cluster_law(n, t: float):
    """Probability that a tagged particle's backward cluster has ``n + 1`` members."""
    t = _check_time(t)
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("n must be non-negative")
    p = math.exp(-t)
    out = p * (-math.expm1(-t)) ** n_arr if t > 0 else np.where(n_arr == 0, 1.0, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _log_binned(k, p, edges):
    ks, ps = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (k >= lo) & (k < hi)
        if not np.any(sel):
            continue
        width = hi - lo
        total = p[sel].sum()
        if total > 0:
            ks.append(np.exp(np.mean(np.log(np.arange(lo, hi)))))
            ps.append(total / width)
    return np.asarray(ks), np.asarray(ps)


def fit_power_law(k, p, kmin: int, kmax: int, *, log_bins: int | None = None) -> PowerLawFit:
    """Least-squares fit of ``ln p = c - a ln k - k/gamma`` on ``[kmin, kmax]``.

    Bins with zero weight are dropped.  The damping rate ``1/gamma`` is
    constrained to be non-negative: if the free fit returns a negative rate
    the fit is redone with the rate fixed at zero.  With ``log_bins`` the
    integer sizes are first pooled into that many logarithmic bins, which
    is what sparse empirical histograms need.
    """
    if kmin < 1 or kmax < 4 * kmin:
        raise ValueError("fit range must satisfy kmin >= 1 and kmax/kmin >= 4")
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    sel = (k >= kmin) & (k <= kmax)
    k, p = k[sel], p[sel]
    if log_bins:
        edges = np.unique(np.round(np.geomspace(kmin, kmax + 1, log_bins + 1)).astype(int))
        k, p = _log_binned(k.astype(int), p, edges)
    ok = p > 0
    k, p = k[ok], p[ok]
    if k.size < 4 or k.max() < 2 * k.min():
        raise ValueError(f"insufficient support for a power-law fit on [{kmin}, {kmax}]")
    y = np.log(p)
    A = np.column_stack([np.ones_like(k), -np.log(k), -k])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    if coef[2] < 0:
        coef2, *_ = np.linalg.lstsq(A[:, :2], y, rcond=None)
        coef = np.array([coef2[0], coef2[1], 0.0])
    resid = y - A @ coef
    return PowerLawFit(
        exponent=float(coef[1]),
        damping_rate=float(coef[2]),
        k_range=(int(kmin), int(kmax)),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_points=int(k.size),
    )


MIN_FIT_CLUSTERS = 100


def fit_power_law_counts(k, counts, kmin: int, kmax: int) -> PowerLawFit:
    """Poisson maximum-likelihood fit of cluster counts ``n(k) ~ exp(c - a ln k - k/gamma)``.

    Meant for empirical histograms: every integer size in ``[kmin, kmax]``
    enters, empty ones as zero counts, so sparse tails need no binning.
    ``counts`` are totals pooled over replicas.  The damping rate is
    constrained to be non-negative.  ``residual`` is the deviance per size;
    standard errors come from the inverse Fisher information.
    """
    if kmin < 1 or kmax < 4 * kmin:
        raise ValueError("fit range must satisfy kmin >= 1 and kmax/kmin >= 4")
    k = np.asarray(k, dtype=np.int64)
    counts = np.asarray(counts, dtype=float)
    sizes = np.arange(kmin, kmax + 1)
    n = np.zeros(sizes.size)
    sel = (k >= kmin) & (k <= kmax)
    np.add.at(n, k[sel] - kmin, counts[sel])
    if np.count_nonzero(n) < 4 or n.sum() < MIN_FIT_CLUSTERS:
        raise ValueError(f"insufficient support for a power-law fit on [{kmin}, {kmax}]")
    # rescaled columns keep the Newton system well conditioned
    scale = np.array([1.0, 1.0, float(kmax)])
    features = np.column_stack([np.ones(sizes.size), -np.log(sizes / kmin), -sizes / kmax])

    def solve(cols):
        X = features[:, cols]

        def nll(p):
            eta = X @ p
            return np.exp(eta).sum() - n @ eta

        def grad(p):
            return X.T @ (np.exp(X @ p) - n)

        def hess(p):
            return (X * np.exp(X @ p)[:, None]).T @ X

        start = np.zeros(len(cols))
        start[0] = math.log(n.sum() / sizes.size)
        res = optimize.minimize(nll, start, jac=grad, hess=hess, method="trust-exact",
                                options={"gtol": 1e-10})
        # trust-exact can stop at rounding level with success=False
        if not res.success and np.abs(grad(res.x)).max() > 1e-7 * (1.0 + n.sum()):
            raise ArithmeticError(f"count fit did not converge: {res.message}")
        full = np.zeros(3)
        full[cols] = res.x
        se = np.full(3, np.nan)
        se[cols] = np.sqrt(np.diag(np.linalg.inv(hess(res.x))))
        return full, se

    params, se = solve([0, 1, 2])
    if params[2] < 0:
        params, se = solve([0, 1])
    coef = params / scale
    se = se / scale
    lam = np.exp(features @ params)
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = 2.0 * np.sum(np.where(n > 0, n * np.log(n / lam), 0.0) - (n - lam))
    return PowerLawFit(
        exponent=float(coef[1]),
        damping_rate=float(coef[2]),
        k_range=(int(kmin), int(kmax)),
        residual=float(dev / sizes.size),
        n_points=int(sizes.size),
        exponent_se=float(se[1]),
        damping_se=None if np.isnan(se[2]) else float(se[2]),
    )


def analytic_distribution(
    t: float, kmax: int = 1000, policy: SeriesPolicy = DEFAULT_POLICY
) -> AnalyticDistribution:
    """Tabulate ``f_t`` and ``g_t`` on ``k = 1..kmax`` with the scalar summaries."""
    t = _check_time(t)
    k = np.arange(1, kmax + 1)
    gu = np.atleast_1d(g_unnormalized(k, t))
    Z = partition_Z(t, policy)
    F = total_mass_F(t, policy)
    g_tail = _tail_majorant(t, kmax, 2.5) / Z if t > 0 else 0.0
    return AnalyticDistribution(
        t=t,
        kmax=kmax,
        f_mass=k * gu,
        g_frac=gu / Z,
        Z=Z,
        F=F,
        F_giant=1.0 - F,
        g_tail_bound=g_tail,
    )
