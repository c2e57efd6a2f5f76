"""Stochastic particle model of the homogeneous Maxwell-molecule gas.

Every particle collides at unit rate, independently of velocity, so pair
events arrive as a Poisson process of rate ``N/2`` and each event picks an
unordered pair uniformly.  Cluster statistics depend only on these event
times and pairs.  Velocities are optional and only feed velocity
diagnostics; when tracked they are updated with the same elastic transform
as the hard-sphere engine.

Replica seeds are derived from a master seed by
``SeedSequence(master_seed).spawn(n)``: replica ``r`` uses the first 64-bit
word of the ``r``-th child state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collision import CollisionLog

ISOTROPIC = "isotropic-hemisphere"


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere in ``dim`` dimensions."""
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


@dataclass
class TabulatedScattering:
    """Scattering density ``g(cos theta)`` tabulated on ``cos theta`` in ``[0, 1]``.

    ``g`` is interpolated linearly and must integrate to one over the
    hemisphere in ``dim`` dimensions.  Sampling inverts the marginal
    density of ``theta``, ``|S^(d-2)| g(cos theta) sin^(d-2) theta``.
    """

    mu: np.ndarray
    g: np.ndarray
    dim: int = 3
    norm_tol: float = 1e-3
    _theta: np.ndarray = field(init=False, repr=False)
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        if self.mu.shape != self.g.shape or self.mu.ndim != 1 or len(self.mu) < 2:
            raise ValueError("mu and g must be matching 1-d tables")
        if np.any(np.diff(self.mu) <= 0) or self.mu[0] < 0 or self.mu[-1] > 1:
            raise ValueError("mu must increase within [0, 1]; g vanishes for cos theta < 0")
        if np.any(self.g < 0):
            raise ValueError("g must be non-negative")
        theta = np.linspace(0.0, 0.5 * math.pi, 20001)
        dens = self.density_theta(theta)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(theta))])
        total = cdf[-1]
        if abs(total - 1.0) > self.norm_tol:
            raise ValueError(f"scattering density integrates to {total:.6f}, not 1")
        self._theta = theta
        self._cdf = cdf / total

    def density_theta(self, theta):
        gval = np.interp(np.cos(theta), self.mu, self.g, left=0.0, right=self.g[-1])
        return sphere_area(self.dim - 1) * gval * np.sin(theta) ** (self.dim - 2)

    def sample_cos(self, rng: np.random.Generator, size=None):
        u = rng.random(size)
        return np.cos(np.interp(u, self._cdf, self._theta))


def isotropic_scattering(dim: int = 3, n: int = 65) -> TabulatedScattering:
    """Constant density ``2/|S^(d-1)|`` as a table."""
    mu = np.linspace(0.0, 1.0, n)
    return TabulatedScattering(mu, np.full(n, 2.0 / sphere_area(dim)), dim)


def _unit_orthogonal(n: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    while True:
        u = rng.normal(size=n.shape)
        u -= np.dot(u, n) * n
        norm = np.linalg.norm(u)
        if norm > 1e-12:
            return u / norm


def sample_scattering(vrel, law, rng: np.random.Generator) -> np.ndarray:
    """Draw ``omega`` on the hemisphere ``vrel . omega > 0`` with density ``g(cos theta)``."""
    vrel = np.asarray(vrel, dtype=float)
    speed = np.linalg.norm(vrel)
    if speed == 0:
        raise ZeroDivisionError("zero relative velocity has no scattering hemisphere")
    n = vrel / speed
    if law == ISOTROPIC:
        while True:
            w = rng.normal(size=vrel.shape)
            norm = np.linalg.norm(w)
            dot = np.dot(w, n)
            if norm > 0 and dot != 0:
                w /= norm
                return w if dot > 0 else -w
    if not isinstance(law, TabulatedScattering):
        raise ValueError(f"unknown scattering law {law!r}")
    if law.dim != len(vrel):
        raise ValueError("scattering table dimension does not match velocities")
    c = float(law.sample_cos(rng))
    s = math.sqrt(max(0.0, 1.0 - c * c))
    return c * n + s * _unit_orthogonal(n, rng)


@dataclass
class DsmcConfig:
    N: int
    seed: int = 0
    t_end: float = 1.0
    scattering: str | TabulatedScattering = ISOTROPIC
    track_velocities: bool = False
    dim: int = 3
    temperature: float = 1.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two particles")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise ValueError("t_end must be finite and non-negative")
        if isinstance(self.scattering, str) and self.scattering != ISOTROPIC:
            raise ValueError(f"unknown scattering law {self.scattering!r}")


@dataclass
class DsmcState:
    time: float
    collisions: np.ndarray
    velocities: np.ndarray | None = None
    initial_velocities: np.ndarray | None = None


def replica_seeds(master_seed: int, n: int) -> list[int]:
    """Independent 64-bit seeds for ``n`` replicas of one experiment."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _event_times(rng: np.random.Generator, rate: float, t_end: float) -> np.ndarray:
    mean = rate * t_end
    chunk = int(mean + 10 * math.sqrt(mean) + 100)
    times = np.cumsum(rng.exponential(1.0 / rate, size=chunk))
    while times[-1] <= t_end:
        more = np.cumsum(rng.exponential(1.0 / rate, size=chunk)) + times[-1]
        times = np.concatenate([times, more])
    return times[: np.searchsorted(times, t_end, side="right")]


def run_dsmc(config: DsmcConfig) -> tuple[CollisionLog, DsmcState]:
    """Simulate pair events up to ``config.t_end``; deterministic given the seed."""
    rng = np.random.default_rng(config.seed)
    N = config.N
    times = _event_times(rng, 0.5 * N, config.t_end)
    n_ev = len(times)
    a = rng.integers(0, N, size=n_ev)
    b = rng.integers(0, N - 1, size=n_ev)
    b = b + (b >= a)

    velocities = initial = None
    omega = None
    if config.track_velocities:
        vel_rng = np.random.default_rng(rng.integers(0, 2**63))
        initial = vel_rng.normal(0.0, math.sqrt(config.temperature), size=(N, config.dim))
        velocities = initial.copy()
        omega = np.empty((n_ev, config.dim))
        for e in range(n_ev):
            p, q = int(a[e]), int(b[e])
            vrel = velocities[p] - velocities[q]
            while not np.any(vrel):
                # exact tie: redraw the pair
                p = int(vel_rng.integers(0, N))
                q = int(vel_rng.integers(0, N - 1))
                q += q >= p
                a[e], b[e] = p, q
                vrel = velocities[p] - velocities[q]
            w = sample_scattering(vrel, config.scattering, vel_rng)
            vn = float(np.dot(w, vrel))
            velocities[p] -= vn * w
            velocities[q] += vn * w
            # stored omega points from the smaller label to the larger
            omega[e] = w if p < q else -w

    i = np.minimum(a, b)
    j = np.maximum(a, b)
    log = CollisionLog(N, times, i, j, omega)
    return log, DsmcState(config.t_end, log.per_particle_counts(), velocities, initial)
