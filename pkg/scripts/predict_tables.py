"""Closed-form tables: cluster densities, Z, F, giant mass and damping scale.

    python3 scripts/predict_tables.py --t-grid 0.5 1 2 --k-max 100 --out runs/predict
"""

import argparse

from clusterkin.experiments import cmd_predict, write_predict_tables


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--t-grid", type=float, nargs="+", default=[0.5, 1.0, 1.5, 2.0, 3.0])
    parser.add_argument("--k-max", type=int, default=100)
    parser.add_argument("--out", default="runs/predict")
    args = parser.parse_args()

    out = write_predict_tables(args.t_grid, args.k_max, args.out)
    _, summary = cmd_predict(args.t_grid, args.k_max)
    print(f"tables in {out}\n")
    print("    t        Z         F        giant     gamma")
    for row in summary:
        cells = [row[c] for c in ("Z", "F", "F_giant", "gamma")]
        text = "  ".join(f"{c:8.5f}" if isinstance(c, float) else f"{c:>8}" for c in cells)
        print(f"{row['t']:5.2f}  {text}")


if __name__ == "__main__":
    main()
