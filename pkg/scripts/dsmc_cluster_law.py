"""DSMC ensemble against the closed-form cluster law.

Runs the configured ensemble, then prints the worst z-score per time, the
fitted power-law exponent and damping against their predictions, and the
largest-cluster curve against the giant-mass prediction.

    python3 scripts/dsmc_cluster_law.py [--config scripts/configs/dsmc_cluster_law.json]
"""

import argparse
import time
from pathlib import Path

from clusterkin.experiments import ExperimentConfig, cmd_analyze, cmd_run

HERE = Path(__file__).parent


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=HERE / "configs" / "dsmc_cluster_law.json")
    parser.add_argument("--output-dir")
    args = parser.parse_args()

    config = ExperimentConfig.from_json(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    start = time.perf_counter()
    run_dir = cmd_run(config)
    report = cmd_analyze(run_dir)
    print(f"{config.replicas} replicas of N={config.dsmc['N']} in {time.perf_counter() - start:.1f} s -> {run_dir}")

    print("\n   t   max|z|           exponent              damping   predicted")
    for t in config.time_grid:
        n_particles = config.dsmc["N"]
        zs = [abs(r["z"]) for r in report.rows
              if r["t"] == t and r["z"] != "" and n_particles * r["f_pred"] / r["k"] >= 50]
        fit = report.fits.get(t, {})
        if "exponent" in fit:
            se = fit["damping_se"]
            exponent = f"{fit['exponent']:.3f} +- {fit['exponent_se']:.3f}"
            damping = f"{fit['damping']:.4f} +- {se:.4f}" if se is not None else f"{fit['damping']:.4f} (bound)"
        else:
            exponent = damping = "-"
        print(f"{t:5.2f}   {max(zs, default=float('nan')):6.2f}   {exponent:>16}   "
              f"{damping:>18}   {fit.get('damping_pred', float('nan')):.4f}")

    print("\n   t   largest cluster      giant mass")
    for g in report.giant:
        print(f"{g['t']:5.2f}   {g['largest_mean']:.4f} +- {g['largest_se']:.4f}   {g['giant_pred']:.4f}")


if __name__ == "__main__":
    main()
