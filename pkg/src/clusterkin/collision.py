"""Elastic collision transform and the collision log shared by both engines.

Particle labels are zero-based throughout (``0..N-1``), on disk included.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def resolve_collision(v, v1, omega):
    """Post-collision velocities of an incoming pair with scattering vector ``omega``.

    ``v' = v - omega [omega.(v - v1)]`` and ``v1' = v1 + omega [omega.(v - v1)]``.
    The pair must be incoming, ``(v - v1).omega >= 0``; at exactly zero the
    velocities come back unchanged.
    """
    v = np.asarray(v, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    omega = np.asarray(omega, dtype=float)
    vn = float(np.dot(omega, v - v1))
    if vn < 0:
        raise ValueError("outgoing pair: (v - v1).omega < 0")
    return v - vn * omega, v1 + vn * omega


@dataclass
class CollisionLog:
    """Time-ordered pair events, plus wall events kept apart.

    ``i < j`` for every pair.  ``omega`` is the unit vector from ``i`` to ``j``
    at contact, or ``None`` when the engine does not track positions or
    velocities.
    """

    n_particles: int
    t: np.ndarray
    i: np.ndarray
    j: np.ndarray
    omega: np.ndarray | None = None
    wall_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    wall_i: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.i = np.asarray(self.i, dtype=np.int64)
        self.j = np.asarray(self.j, dtype=np.int64)
        self.wall_t = np.asarray(self.wall_t, dtype=float)
        self.wall_i = np.asarray(self.wall_i, dtype=np.int64)
        if not (len(self.t) == len(self.i) == len(self.j)):
            raise ValueError("pair event arrays differ in length")
        if self.omega is not None:
            self.omega = np.asarray(self.omega, dtype=float)
            if len(self.omega) != len(self.t):
                raise ValueError("omega does not match the number of pair events")
        if len(self.t) and (self.i.min() < 0 or self.j.max() >= self.n_particles):
            raise ValueError("particle label out of range")
        if np.any(np.diff(self.t) < 0):
            raise ValueError("pair events are not time-sorted")

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_pairs(cls, n_particles: int, events) -> "CollisionLog":
        """Build from ``(t, a, b)`` triples in any label order; sorts by time."""
        events = sorted((float(s), min(a, b), max(a, b)) for s, a, b in events)
        if not events:
            return cls(n_particles, np.empty(0), np.empty(0, np.int64), np.empty(0, np.int64))
        t, i, j = zip(*events)
        return cls(n_particles, np.array(t), np.array(i), np.array(j))

    def count_until(self, t: float) -> int:
        """Number of pair events with time ``<= t``."""
        return int(np.searchsorted(self.t, t, side="right"))

    def per_particle_counts(self, t: float | None = None) -> np.ndarray:
        n = len(self) if t is None else self.count_until(t)
        return np.bincount(self.i[:n], minlength=self.n_particles) + np.bincount(
            self.j[:n], minlength=self.n_particles
        )

    def to_jsonl(self, path) -> None:
        """Write one JSON object per event, pair and wall events merged by time."""
        path = Path(path)
        kinds = np.concatenate([np.zeros(len(self.t), int), np.ones(len(self.wall_t), int)])
        times = np.concatenate([self.t, self.wall_t])
        order = np.lexsort((kinds, times))
        with path.open("w") as fh:
            for idx in order:
                if idx < len(self.t):
                    rec = {"t": float(self.t[idx]), "type": "pair",
                           "i": int(self.i[idx]), "j": int(self.j[idx])}
                    if self.omega is not None:
                        rec["omega"] = [float(c) for c in self.omega[idx]]
                else:
                    w = idx - len(self.t)
                    rec = {"t": float(self.wall_t[w]), "type": "wall", "i": int(self.wall_i[w])}
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def from_jsonl(cls, path, n_particles: int | None = None) -> "CollisionLog":
        """Read the JSON-lines format written by :meth:`to_jsonl`."""
        t, i, j, om, wt, wi = [], [], [], [], [], []
        with Path(path).open() as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                kind = rec["type"]
                if kind == "pair":
                    t.append(rec["t"])
                    i.append(rec["i"])
                    j.append(rec["j"])
                    if "omega" in rec:
                        om.append(rec["omega"])
                elif kind == "wall":
                    wt.append(rec["t"])
                    wi.append(rec["i"])
                else:
                    raise ValueError(f"unknown event type {kind!r}")
        if n_particles is None:
            # without an explicit count, assume the largest label seen is the last particle
            n_particles = max([*i, *j, *wi], default=-1) + 1
        if om and len(om) != len(t):
            raise ValueError("omega present on only some pair events")
        return cls(
            n_particles,
            np.array(t, dtype=float),
            np.array(i, dtype=np.int64),
            np.array(j, dtype=np.int64),
            np.array(om, dtype=float) if om else None,
            np.array(wt, dtype=float),
            np.array(wi, dtype=np.int64),
        )
