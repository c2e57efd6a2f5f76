"""Event-driven dynamics of hard disks/spheres in the reflecting unit box.

Contact happens at centre distance ``epsilon`` (the diameter); a centre is
reflected when it comes within ``epsilon/2`` of a wall.  The event loop is a
numba kernel with a binary heap of

    (time, kind, a, b, count_a, count_b)

tuples.  Kinds sort pair < wall < cell crossing at equal times.  An event is
stale once any involved particle's collision counter has moved on.
Neighbour search uses a uniform cell grid with side at least ``epsilon``;
a particle entering a cell predicts only against the newly adjacent slab.

Set ``NUMBA_DISABLE_JIT=1`` to run the kernel as plain Python.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .collision import CollisionLog

PAIR, WALL, CELL = 0, 1, 2
GRAZING_SPEED = 1e-12
OVERLAP_TOL = 1e-9
MAX_PACKING = 0.05


class MDError(RuntimeError):
    """Hard fault of the event-driven integrator."""


class PlacementError(MDError):
    """Initial configuration could not be sampled."""


def sphere_volume(radius: float, dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * radius**dim


@dataclass
class MdConfig:
    N: int
    epsilon: float
    dim: int = 2
    seed: int = 0
    t_end: float = 1.0
    temperature: float = 1.0
    max_pair_events: int | None = None
    enforce_dilute: bool = True

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.N < 1:
            raise ValueError("need at least one particle")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")

    @property
    def boltzmann_grad(self) -> float:
        """``N epsilon^(d-1)``, of order one in the kinetic regime."""
        return self.N * self.epsilon ** (self.dim - 1)

    @property
    def packing_fraction(self) -> float:
        return self.N * sphere_volume(0.5 * self.epsilon, self.dim)

    def grid_cells(self) -> int:
        """Cells per axis: about two particles per cell, side never below epsilon."""
        by_density = int((self.N / 2) ** (1.0 / self.dim))
        return max(1, min(int(1.0 / self.epsilon), by_density))


@dataclass
class ParticleState:
    id: int
    x: np.ndarray
    v: np.ndarray


@dataclass
class MdResult:
    x: np.ndarray
    v: np.ndarray
    log: CollisionLog
    wall_events: int
    t_final: float
    cell_crossings: int

    def states(self) -> list[ParticleState]:
        return [ParticleState(k, self.x[k].copy(), self.v[k].copy()) for k in range(len(self.x))]


def kinetic_energy(v: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.asarray(v) ** 2))


def sample_initial(config: MdConfig) -> tuple[np.ndarray, np.ndarray]:
    """Positions uniform without overlap (rejection sampling), Gaussian velocities.

    Deterministic given ``config.seed``.
    """
    if config.enforce_dilute and config.packing_fraction >= MAX_PACKING:
        raise PlacementError(
            f"packing fraction {config.packing_fraction:.3g} is not dilute (limit {MAX_PACKING})"
        )
    rng = np.random.default_rng(config.seed)
    N, d, eps = config.N, config.dim, config.epsilon
    lo, hi = 0.5 * eps, 1.0 - 0.5 * eps
    if hi <= lo:
        raise PlacementError("epsilon too large for the unit box")
    m = max(1, int(1.0 / eps))
    cells: dict[tuple, list[int]] = {}
    x = np.empty((N, d))
    eps2 = eps * eps
    max_attempts = 10_000
    for k in range(N):
        for _ in range(max_attempts):
            p = lo + (hi - lo) * rng.random(d)
            c = tuple(np.minimum((p * m).astype(int), m - 1))
            clash = False
            for off in np.ndindex(*(3,) * d):
                nb = tuple(ci + o - 1 for ci, o in zip(c, off))
                for q in cells.get(nb, ()):
                    if np.sum((x[q] - p) ** 2) < eps2:
                        clash = True
                        break
                if clash:
                    break
            if not clash:
                x[k] = p
                cells.setdefault(c, []).append(k)
                break
        else:
            raise PlacementError(f"could not place particle {k} after {max_attempts} attempts")
    v = rng.normal(0.0, math.sqrt(config.temperature), size=(N, d))
    return x, v


# -- kernel ------------------------------------------------------------------

@njit(cache=True)
def _pair_dt(x, v, tl, i, j, t, eps, graze):
    d = x.shape[1]
    r2 = 0.0
    b = 0.0
    v2 = 0.0
    for a in range(d):
        dx = (x[j, a] + v[j, a] * (t - tl[j])) - (x[i, a] + v[i, a] * (t - tl[i]))
        dv = v[j, a] - v[i, a]
        r2 += dx * dx
        b += dx * dv
        v2 += dv * dv
    if b >= 0.0:
        return -1.0
    disc = b * b - v2 * (r2 - eps * eps)
    if disc <= 0.0:
        return -1.0
    sq = math.sqrt(disc)
    # normal relative speed at contact is sqrt(disc)/eps
    if sq < graze * eps:
        return -1.0
    if r2 <= eps * eps:
        return 0.0
    return (r2 - eps * eps) / (sq - b)


@njit(cache=True)
def _cell_index(cell, i, m):
    idx = 0
    stride = 1
    for a in range(cell.shape[1]):
        idx += cell[i, a] * stride
        stride *= m
    return idx


@njit(cache=True)
def _cell_insert(head, nxt, prv, c, i):
    nxt[i] = head[c]
    prv[i] = -1
    if head[c] >= 0:
        prv[head[c]] = i
    head[c] = i


@njit(cache=True)
def _cell_remove(head, nxt, prv, c, i):
    if prv[i] >= 0:
        nxt[prv[i]] = nxt[i]
    else:
        head[c] = nxt[i]
    if nxt[i] >= 0:
        prv[nxt[i]] = prv[i]
    nxt[i] = -1
    prv[i] = -1


@njit(cache=True)
def _predict_pairs_in(heap, x, v, tl, cnt, cell, head, nxt, m, i, t, eps, graze, fixed_axis, fixed_off):
    # scan neighbour cells of i; with fixed_axis >= 0 only the slab at offset fixed_off on that axis
    d = x.shape[1]
    n_off = 3**d
    for code in range(n_off):
        rem = code
        ok = True
        idx = 0
        stride = 1
        for a in range(d):
            off = rem % 3 - 1
            rem //= 3
            if fixed_axis == a and off != fixed_off:
                ok = False
                break
            ca = cell[i, a] + off
            if ca < 0 or ca >= m:
                ok = False
                break
            idx += ca * stride
            stride *= m
        if not ok:
            continue
        j = head[idx]
        while j >= 0:
            if j != i:
                dt = _pair_dt(x, v, tl, i, j, t, eps, graze)
                if dt >= 0.0:
                    a_ = min(i, j)
                    b_ = max(i, j)
                    heapq.heappush(heap, (t + dt, 0, a_, b_, cnt[a_], cnt[b_]))
            j = nxt[j]


@njit(cache=True)
def _predict_wall_and_cell(heap, x, v, tl, cnt, cell, m, i, t, eps):
    d = x.shape[1]
    r = 0.5 * eps
    best = np.inf
    best_code = -1
    cbest = np.inf
    ccode = -1
    for a in range(d):
        xa = x[i, a] + v[i, a] * (t - tl[i])
        va = v[i, a]
        if va > 0.0:
            dt = max((1.0 - r - xa) / va, 0.0)
            if dt < best:
                best = dt
                best_code = 2 * a + 1
            if cell[i, a] + 1 < m:
                dc = max(((cell[i, a] + 1) / m - xa) / va, 0.0)
                if dc < cbest:
                    cbest = dc
                    ccode = 2 * a + 1
        elif va < 0.0:
            dt = max((r - xa) / va, 0.0)
            if dt < best:
                best = dt
                best_code = 2 * a
            if cell[i, a] > 0:
                dc = max((cell[i, a] / m - xa) / va, 0.0)
                if dc < cbest:
                    cbest = dc
                    ccode = 2 * a
    if best_code >= 0:
        heapq.heappush(heap, (t + best, 1, i, best_code, cnt[i], 0))
    if ccode >= 0 and cbest < best:
        heapq.heappush(heap, (t + cbest, 2, i, ccode, cnt[i], 0))


@njit(cache=True)
def _compact(heap, cnt):
    out = [heap[0]]
    out.pop()
    for ev in heap:
        if ev[1] == 0:
            if cnt[ev[2]] == ev[4] and cnt[ev[3]] == ev[5]:
                out.append(ev)
        elif cnt[ev[2]] == ev[4]:
            out.append(ev)
    heapq.heapify(out)
    return out


@njit(cache=True)
def _simulate(x, v, eps, t_end, max_pairs, m, graze, overlap_tol):
    N, d = x.shape
    tl = np.zeros(N)
    cnt = np.zeros(N, dtype=np.int64)
    cell = np.empty((N, d), dtype=np.int64)
    head = -np.ones(m**d, dtype=np.int64)
    nxt = -np.ones(N, dtype=np.int64)
    prv = -np.ones(N, dtype=np.int64)
    for i in range(N):
        for a in range(d):
            c = int(x[i, a] * m)
            cell[i, a] = min(max(c, 0), m - 1)
        _cell_insert(head, nxt, prv, _cell_index(cell, i, m), i)

    heap = [(0.0, 0, 0, 0, 0, 0)]
    heap.pop()
    for i in range(N):
        _predict_wall_and_cell(heap, x, v, tl, cnt, cell, m, i, 0.0, eps)
        _predict_pairs_in(heap, x, v, tl, cnt, cell, head, nxt, m, i, 0.0, eps, graze, -1, 0)

    pt = [0.0]
    pi = [0]
    pj = [0]
    pw = [0.0]
    wt = [0.0]
    wi = [0]
    pt.pop(); pi.pop(); pj.pop(); pw.pop(); wt.pop(); wi.pop()
    omega = np.empty(d)
    t_now = 0.0
    n_pairs = 0
    n_cross = 0
    compact_at = max(64 * N, 4096)
    status = 0

    while len(heap) > 0:
        ev = heapq.heappop(heap)
        tev, kind, a, b, ca, cb = ev
        if kind == 0:
            if cnt[a] != ca or cnt[b] != cb:
                continue
        elif cnt[a] != ca:
            continue
        if tev > t_end:
            break
        if tev < t_now:
            if t_now - tev > 1e-9 * max(1.0, t_now):
                status = 1
                break
            tev = t_now
        t_now = tev

        if kind == 0:
            dist2 = 0.0
            for q in range(d):
                x[a, q] += v[a, q] * (t_now - tl[a])
                x[b, q] += v[b, q] * (t_now - tl[b])
            tl[a] = t_now
            tl[b] = t_now
            for q in range(d):
                omega[q] = x[b, q] - x[a, q]
                dist2 += omega[q] * omega[q]
            dist = math.sqrt(dist2)
            if dist < eps - overlap_tol:
                status = 2
                break
            vn = 0.0
            for q in range(d):
                omega[q] /= dist
                vn += (v[a, q] - v[b, q]) * omega[q]
            if vn <= 0.0:
                continue
            for q in range(d):
                v[a, q] -= vn * omega[q]
                v[b, q] += vn * omega[q]
            if dist < eps:
                for q in range(d):
                    mid = 0.5 * (x[a, q] + x[b, q])
                    x[a, q] = mid - 0.5 * eps * omega[q]
                    x[b, q] = mid + 0.5 * eps * omega[q]
            cnt[a] += 1
            cnt[b] += 1
            pt.append(t_now)
            pi.append(a)
            pj.append(b)
            for q in range(d):
                pw.append(omega[q])
            n_pairs += 1
            if max_pairs >= 0 and n_pairs >= max_pairs:
                break
            for p in (a, b):
                _predict_wall_and_cell(heap, x, v, tl, cnt, cell, m, p, t_now, eps)
                _predict_pairs_in(heap, x, v, tl, cnt, cell, head, nxt, m, p, t_now, eps, graze, -1, 0)
        elif kind == 1:
            axis = b // 2
            for q in range(d):
                x[a, q] += v[a, q] * (t_now - tl[a])
            tl[a] = t_now
            if b % 2 == 1:
                x[a, axis] = 1.0 - 0.5 * eps
            else:
                x[a, axis] = 0.5 * eps
            v[a, axis] = -v[a, axis]
            cnt[a] += 1
            wt.append(t_now)
            wi.append(a)
            _predict_wall_and_cell(heap, x, v, tl, cnt, cell, m, a, t_now, eps)
            _predict_pairs_in(heap, x, v, tl, cnt, cell, head, nxt, m, a, t_now, eps, graze, -1, 0)
        else:
            axis = b // 2
            step = 1 if b % 2 == 1 else -1
            _cell_remove(head, nxt, prv, _cell_index(cell, a, m), a)
            cell[a, axis] += step
            _cell_insert(head, nxt, prv, _cell_index(cell, a, m), a)
            n_cross += 1
            _predict_wall_and_cell(heap, x, v, tl, cnt, cell, m, a, t_now, eps)
            _predict_pairs_in(heap, x, v, tl, cnt, cell, head, nxt, m, a, t_now, eps, graze, axis, step)

        if len(heap) > compact_at:
            heap = _compact(heap, cnt)
            compact_at = max(compact_at, 2 * len(heap))

    t_final = t_end if (max_pairs < 0 or n_pairs < max_pairs) else t_now
    if status != 0:
        t_final = t_now
    for i in range(N):
        for q in range(d):
            x[i, q] += v[i, q] * (t_final - tl[i])
        tl[i] = t_final
    return status, t_final, n_cross, pt, pi, pj, pw, wt, wi


def predict_pair(a: ParticleState, b: ParticleState, epsilon: float) -> float | None:
    """Time until ``a`` and ``b`` touch under free flight, or ``None``."""
    x = np.array([a.x, b.x], dtype=float)
    v = np.array([a.v, b.v], dtype=float)
    dt = _pair_dt(x, v, np.zeros(2), 0, 1, 0.0, epsilon, GRAZING_SPEED)
    return None if dt < 0 else float(dt)


def run(config: MdConfig, initial: tuple[np.ndarray, np.ndarray] | None = None) -> MdResult:
    """Advance the system to ``config.t_end`` (or ``max_pair_events`` collisions).

    ``initial`` overrides sampling with explicit ``(x, v)`` arrays.  Wall
    reflections are logged apart from pair events and never join clusters.
    """
    if initial is None:
        x, v = sample_initial(config)
    else:
        x = np.array(initial[0], dtype=float, copy=True)
        v = np.array(initial[1], dtype=float, copy=True)
        if x.shape != (config.N, config.dim) or v.shape != x.shape:
            raise ValueError("initial state does not match config")
        r = 0.5 * config.epsilon
        if np.any(x < r - OVERLAP_TOL) or np.any(x > 1 - r + OVERLAP_TOL):
            raise MDError("initial centre outside the admissible box")
    max_pairs = -1 if config.max_pair_events is None else int(config.max_pair_events)
    status, t_final, n_cross, pt, pi, pj, pw, wt, wi = _simulate(
        x, v, float(config.epsilon), float(config.t_end), max_pairs,
        config.grid_cells(), GRAZING_SPEED, OVERLAP_TOL,
    )
    if status == 1:
        raise MDError(f"event queue went backwards in time near t={t_final}")
    if status == 2:
        raise MDError(f"pair overlap beyond tolerance at t={t_final}")
    n = len(pt)
    log = CollisionLog(
        config.N,
        np.array(pt, dtype=float),
        np.array(pi, dtype=np.int64),
        np.array(pj, dtype=np.int64),
        np.array(pw, dtype=float).reshape(n, config.dim),
        np.array(wt, dtype=float),
        np.array(wi, dtype=np.int64),
    )
    return MdResult(x, v, log, len(wt), float(t_final), int(n_cross))


def measure_mean_free_time(log: CollisionLog, N: int, window: tuple[float, float]) -> float:
    """Per-particle mean free time ``N |window| / (2 * pair events in window)``."""
    lo, hi = window
    if not hi > lo:
        raise ValueError("empty window")
    n_events = int(np.searchsorted(log.t, hi, side="right") - np.searchsorted(log.t, lo, side="left"))
    if n_events < 100:
        raise ValueError(f"only {n_events} pair events in window; need at least 100")
    return N * (hi - lo) / (2.0 * n_events)


def kinetic_rate_estimate(config: MdConfig) -> float:
    """Dilute-gas collision rate per particle, used only as a sanity band.

    2-d: ``2 n eps <|v_rel|>``; 3-d: ``n pi eps^2 <|v_rel|>`` with ``n = N``.
    """
    T = config.temperature
    if config.dim == 2:
        mean_rel = math.sqrt(math.pi * T)
        return 2.0 * config.N * config.epsilon * mean_rel
    mean_rel = 4.0 * math.sqrt(T / math.pi)
    return config.N * math.pi * config.epsilon**2 * mean_rel
