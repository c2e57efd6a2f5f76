"""Ensemble runs, aggregation and theory-vs-simulation reports.

A run directory looks like::

    manifest.json            config, seeds, package version, replica status
    replica_000/log.jsonl    collision log (optional)
    replica_000/clusters.csv t, k, n, f_emp, g_emp   (t in kinetic units)
    replica_000/summary.json per-time scalars, MD calibration
    aggregate.csv            t, k, n_mean, n_se, f_emp, f_pred, g_emp, g_pred, z
    giant.csv                largest-cluster curve against the giant-mass prediction

``analyze`` rebuilds everything it reports from the replica files, so it is
reproducible bit for bit.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (
    SeriesError,
    SeriesPolicy,
    f_mass,
    fit_power_law_counts,
    gamma_damping,
    giant_mass,
    partition_Z,
    series_tail_bound,
    total_mass_F,
)
from .clusters import (
    ClusterSizeDistribution,
    read_distributions_csv,
    snapshots,
    write_distributions_csv,
)
from .dsmc import DsmcConfig, replica_seeds, run_dsmc
from .md import MdConfig, kinetic_rate_estimate, measure_mean_free_time, run

log = logging.getLogger(__name__)

WORKERS_ENV = "CLUSTERKIN_WORKERS"
AGGREGATE_COLUMNS = ("t", "k", "n_mean", "n_se", "f_emp", "f_pred", "g_emp", "g_pred", "z")
ENGINES = ("md", "dsmc", "predict")


@dataclass
class ExperimentConfig:
    engine: str
    time_grid: list[float]
    replicas: int = 1
    master_seed: int = 0
    output_dir: str = "runs/experiment"
    md: dict = field(default_factory=dict)
    dsmc: dict = field(default_factory=dict)
    k_max: int = 200
    write_logs: bool = True
    calibration_fraction: float = 0.2
    fit_range: tuple[int, int] = (10, 300)

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        self.time_grid = [float(t) for t in self.time_grid]
        if not self.time_grid or any(b <= a for a, b in zip(self.time_grid, self.time_grid[1:])):
            raise ValueError("time_grid must be non-empty and strictly increasing")
        if self.time_grid[0] < 0:
            raise ValueError("times must be non-negative")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        self.fit_range = tuple(int(k) for k in self.fit_range)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fit_range"] = list(self.fit_range)
        return d


@dataclass
class ComparisonReport:
    engine: str
    rows: list[dict]
    fits: dict[float, dict]
    giant: list[dict]
    calibration: dict | None = None
    takeoff: dict | None = None

    def to_dict(self) -> dict:
        return {
            "engine": self.engine,
            "fits": {repr(t): v for t, v in self.fits.items()},
            "giant": self.giant,
            "calibration": self.calibration,
            "takeoff": self.takeoff,
        }


def worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


# -- predict -----------------------------------------------------------------

def _cell(fn, *args):
    try:
        return fn(*args)
    except (SeriesError, ArithmeticError, ValueError) as exc:
        return f"error: {exc}"


def cmd_predict(t_grid, k_max: int, policy: SeriesPolicy | None = None):
    """Analytic tables: ``(distribution_rows, summary_rows)`` as lists of dicts."""
    policy = policy or SeriesPolicy()
    t_grid = [float(t) for t in t_grid]
    if k_max < 1:
        raise ValueError("k_max must be positive")
    dist, summary = [], []
    for t in t_grid:
        Z = _cell(partition_Z, t, policy)
        ks = np.arange(1, k_max + 1)
        f = f_mass(ks, t)
        for k, fk in zip(ks.tolist(), np.atleast_1d(f).tolist()):
            g = fk / k / Z if isinstance(Z, float) else Z
            dist.append({"t": t, "k": k, "f": fk, "g": g})
        summary.append({
            "t": t,
            "Z": Z,
            "F": _cell(total_mass_F, t, policy),
            "F_giant": _cell(giant_mass, t, policy),
            "gamma": _cell(gamma_damping, t) if t > 0 else "error: undefined at t=0",
            "f_tail_bound": series_tail_bound(t, k_max, mass=True),
            "g_tail_bound": series_tail_bound(t, k_max, mass=False),
        })
    return dist, summary


def _write_rows(rows: list[dict], path, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in columns])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_predict_tables(t_grid, k_max: int, out_dir, policy: SeriesPolicy | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dist, summary = cmd_predict(t_grid, k_max, policy)
    _write_rows(dist, out / "predict_distribution.csv", ("t", "k", "f", "g"))
    _write_rows(summary, out / "predict_summary.csv",
                ("t", "Z", "F", "F_giant", "gamma", "f_tail_bound", "g_tail_bound"))
    return out


# -- run ---------------------------------------------------------------------

def _md_horizon(md_cfg: dict, t_grid) -> float:
    if "t_end" in md_cfg:
        return float(md_cfg["t_end"])
    probe = MdConfig(**{**md_cfg, "t_end": 1.0})
    # kinetic estimate of the mean free time, with room for calibration error
    return 1.3 * max(t_grid) / kinetic_rate_estimate(probe)


def run_replica(engine: str, engine_cfg: dict, seed: int, time_grid, out_dir,
                write_log: bool = True, calibration_fraction: float = 0.2) -> dict:
    """One independent replica; writes its own files and returns a summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary: dict = {"seed": seed, "status": "ok"}
    start = time.perf_counter()
    try:
        if engine == "dsmc":
            cfg = DsmcConfig(**{**engine_cfg, "seed": seed, "t_end": max(time_grid)})
            clog, _ = run_dsmc(cfg)
            N = cfg.N
            physical = list(time_grid)
            kinetic = list(time_grid)
        elif engine == "md":
            cfg = MdConfig(**{**engine_cfg, "seed": seed, "t_end": _md_horizon(engine_cfg, time_grid)})
            res = run(cfg)
            clog = res.log
            N = cfg.N
            tau = measure_mean_free_time(clog, N, (0.0, calibration_fraction * res.t_final))
            kinetic = [t for t in time_grid if t * tau <= res.t_final]
            physical = [t * tau for t in kinetic]
            summary.update({
                "mean_free_time": tau,
                "t_final": res.t_final,
                "boltzmann_grad": cfg.boltzmann_grad,
                "packing_fraction": cfg.packing_fraction,
                "wall_events": res.wall_events,
                "dropped_times": [t for t in time_grid if t * tau > res.t_final],
            })
        else:
            raise ValueError(f"engine {engine!r} does not run replicas")
        dists = snapshots(clog, N, physical)
        for d, tk in zip(dists, kinetic):
            d.t = tk
        write_distributions_csv(dists, out / "clusters.csv")
        if write_log:
            clog.to_jsonl(out / "log.jsonl")
        summary.update({
            "N": N,
            "pair_events": len(clog),
            "times": kinetic,
            "physical_times": physical,
            "largest_fraction": [d.largest_fraction for d in dists],
            "susceptibility": [d.susceptibility() for d in dists],
            "cluster_fraction": [d.cluster_fraction for d in dists],
        })
    except Exception as exc:  # engine faults abort only this replica
        summary.update({"status": "failed", "error": f"{type(exc).__name__}: {exc}"})
    summary["seconds"] = time.perf_counter() - start
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


def cmd_run(config: ExperimentConfig) -> Path:
    """Run all replicas (bounded process pool) and write the aggregate tables."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.engine == "predict":
        write_predict_tables(config.time_grid, config.k_max, out)
        _write_manifest(out, config, [], [])
        return out
    engine_cfg = config.md if config.engine == "md" else config.dsmc
    seeds = replica_seeds(config.master_seed, config.replicas)
    jobs = [
        (config.engine, engine_cfg, s, config.time_grid, out / f"replica_{r:03d}",
         config.write_logs, config.calibration_fraction)
        for r, s in enumerate(seeds)
    ]
    workers = min(worker_count(), config.replicas)
    if workers == 1:
        summaries = [run_replica(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_replica, *job) for job in jobs]
            summaries = [f.result() for f in futures]
    for r, s in enumerate(summaries):
        if s["status"] != "ok":
            log.warning("replica %d failed: %s", r, s.get("error"))
    _write_manifest(out, config, seeds, summaries)
    write_aggregate(out)
    return out


def _write_manifest(out: Path, config: ExperimentConfig, seeds, summaries) -> None:
    failed = [r for r, s in enumerate(summaries) if s["status"] != "ok"]
    manifest = {
        "version": __version__,
        "config": config.to_dict(),
        "seed_rule": "numpy SeedSequence(master_seed).spawn(replicas); first uint64 word per child",
        "seeds": seeds,
        "replicas": [
            {k: s.get(k) for k in ("status", "error", "seed", "mean_free_time", "seconds")}
            for s in summaries
        ],
        "failed_replicas": failed,
        "partial": bool(failed),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


# -- aggregation and analysis --------------------------------------------------

def _load_run(run_dir) -> tuple[dict, list[dict], list[list[ClusterSizeDistribution]]]:
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"{run_dir} has no manifest.json; not a completed run")
    manifest = json.loads(manifest_path.read_text())
    summaries, dists = [], []
    for r in range(len(manifest["seeds"])):
        rdir = run_dir / f"replica_{r:03d}"
        summary = json.loads((rdir / "summary.json").read_text())
        if summary["status"] != "ok":
            continue
        csv_path = rdir / "clusters.csv"
        if not csv_path.exists():
            raise FileNotFoundError(f"missing distributions for replica {r}")
        summaries.append(summary)
        dists.append(read_distributions_csv(csv_path, summary["N"]))
    if not dists:
        raise ValueError("no successful replicas to analyse")
    return manifest, summaries, dists


def _common_times(dists) -> list[float]:
    times = set(d.t for d in dists[0])
    for rep in dists[1:]:
        times &= set(d.t for d in rep)
    return sorted(times)


def aggregate(dists: list[list[ClusterSizeDistribution]]) -> list[dict]:
    """Per ``(t, k)`` replica means, standard errors and predictions."""
    R = len(dists)
    rows = []
    for t in _common_times(dists):
        snaps = [next(d for d in rep if d.t == t) for rep in dists]
        N = snaps[0].N
        ks = sorted(set().union(*(s.counts for s in snaps)))
        nc = np.array([s.n_clusters for s in snaps], dtype=float)
        Z = partition_Z(t) if t >= 0 else math.nan
        for k in ks:
            n = np.array([s.n(k) for s in snaps], dtype=float)
            n_mean = float(n.mean())
            n_se = float(n.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0
            f_emp = k * n_mean / N
            f_pred = float(f_mass(k, t))
            g_emp = float(np.mean(n / nc))
            g_pred = float(f_pred / k / Z)
            f_se = k * n_se / N
            z = (f_emp - f_pred) / f_se if f_se > 0 else ""
            rows.append({"t": t, "k": k, "n_mean": n_mean, "n_se": n_se, "f_emp": f_emp,
                         "f_pred": f_pred, "g_emp": g_emp, "g_pred": g_pred, "z": z})
    return rows


def giant_curve(summaries: list[dict], dists) -> list[dict]:
    out = []
    for t in _common_times(dists):
        idx = [s["times"].index(t) for s in summaries]
        lf = np.array([s["largest_fraction"][i] for s, i in zip(summaries, idx)])
        chi = np.array([s["susceptibility"][i] for s, i in zip(summaries, idx)])
        R = len(lf)
        out.append({
            "t": t,
            "largest_mean": float(lf.mean()),
            "largest_se": float(lf.std(ddof=1) / math.sqrt(R)) if R > 1 else 0.0,
            "giant_pred": giant_mass(t),
            "susceptibility_mean": float(chi.mean()),
        })
    return out


def write_aggregate(run_dir) -> None:
    run_dir = Path(run_dir)
    _, summaries, dists = _load_run(run_dir)
    _write_rows(aggregate(dists), run_dir / "aggregate.csv", AGGREGATE_COLUMNS)
    _write_rows(giant_curve(summaries, dists), run_dir / "giant.csv",
                ("t", "largest_mean", "largest_se", "giant_pred", "susceptibility_mean"))


def _fit_at(rows: list[dict], t: float, kmin: int, kmax: int, replicas: int) -> dict:
    sel = [r for r in rows if r["t"] == t]
    k = np.array([r["k"] for r in sel])
    # pooled counts over replicas; means of integer counts times R are integers
    counts = np.rint(np.array([r["n_mean"] for r in sel]) * replicas)
    gamma = gamma_damping(t)
    entry = {"gamma_pred": gamma, "damping_pred": 0.0 if math.isinf(gamma) else 1.0 / gamma,
             "k_range": [kmin, kmax]}
    try:
        fit = fit_power_law_counts(k, counts, kmin, kmax)
    except (ValueError, ArithmeticError) as exc:
        entry["error"] = str(exc)
        return entry
    entry.update({"exponent": fit.exponent, "exponent_se": fit.exponent_se,
                  "damping": fit.damping_rate, "damping_se": fit.damping_se,
                  "deviance_per_size": fit.residual})
    return entry


def cmd_analyze(run_dir, fit_range: tuple[int, int] | None = None) -> ComparisonReport:
    """Theory-vs-simulation report; writes ``comparison.csv`` and ``report.json``."""
    run_dir = Path(run_dir)
    manifest, summaries, dists = _load_run(run_dir)
    cfg = manifest["config"]
    kmin, kmax = fit_range or tuple(cfg.get("fit_range", (10, 300)))
    rows = aggregate(dists)
    times = _common_times(dists)
    fits = {t: _fit_at(rows, t, kmin, kmax, len(dists)) for t in times if t > 0}
    giant = giant_curve(summaries, dists)
    calibration = None
    if cfg["engine"] == "md":
        taus = [s["mean_free_time"] for s in summaries]
        calibration = {
            "mean_free_time": float(np.mean(taus)),
            "per_replica": taus,
            "window_fraction": cfg.get("calibration_fraction", 0.2),
            "boltzmann_grad": summaries[0]["boltzmann_grad"],
            "packing_fraction": summaries[0]["packing_fraction"],
        }
    takeoff = None
    if len(giant) >= 3:
        peak = max(giant, key=lambda g: g["susceptibility_mean"])
        takeoff = {"t": peak["t"], "largest_fraction": peak["largest_mean"],
                   "susceptibility": peak["susceptibility_mean"]}
    report = ComparisonReport(cfg["engine"], rows, fits, giant, calibration, takeoff)
    _write_rows(rows, run_dir / "comparison.csv", AGGREGATE_COLUMNS)
    (run_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return report
