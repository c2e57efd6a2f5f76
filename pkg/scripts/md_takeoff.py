"""Hard-disk MD ensemble: calibrated cluster statistics and the giant-cluster takeoff.

Times are in kinetic units (one unit = the measured mean free time).  The
takeoff is located at the peak of the mean susceptibility, the mean cluster
size seen by a particle with the largest cluster left out.

    python3 scripts/md_takeoff.py [--config scripts/configs/md_takeoff.json]
"""

import argparse
import math
import time
from pathlib import Path

from clusterkin.experiments import ExperimentConfig, cmd_analyze, cmd_run

HERE = Path(__file__).parent


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=HERE / "configs" / "md_takeoff.json")
    parser.add_argument("--output-dir")
    args = parser.parse_args()

    config = ExperimentConfig.from_json(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    start = time.perf_counter()
    report = cmd_analyze(cmd_run(config))
    cal = report.calibration
    print(f"N={config.md['N']} eps={config.md['epsilon']} x {config.replicas} replicas, "
          f"{time.perf_counter() - start:.1f} s")
    print(f"N eps^(d-1) = {cal['boltzmann_grad']:.3g}, packing fraction {cal['packing_fraction']:.3g}, "
          f"mean free time {cal['mean_free_time']:.4f}")

    singles = {r["t"]: r["f_emp"] for r in report.rows if r["k"] == 1}
    print("\n   t   singletons  e^-t    largest   susceptibility")
    for g in report.giant:
        t = g["t"]
        print(f"{t:5.2f}   {singles.get(t, 0.0):.4f}    {math.exp(-t):.4f}  {g['largest_mean']:.4f}"
              f"    {g['susceptibility_mean']:.2f}")
    take = report.takeoff
    fit = report.fits.get(take["t"], {})
    print(f"\ntakeoff (susceptibility peak) at t = {take['t']}, largest fraction {take['largest_fraction']:.3f}")
    if "exponent" in fit:
        print(f"g exponent there over k in {fit['k_range']}: {fit['exponent']:.3f}")


if __name__ == "__main__":
    main()
