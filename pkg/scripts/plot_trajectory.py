#!/usr/bin/env python3
"""Plot a trajectory.csv produced by the spinbeat CLI.

Template script: matplotlib is deliberately not a package dependency, so
install it separately before use.

    python scripts/plot_trajectory.py runs/beat/trajectory.csv
    python scripts/plot_trajectory.py runs/f4/trajectory.csv --out fig4.png
"""

import argparse

import numpy as np


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("--out", default=None, help="save instead of showing")
    args = parser.parse_args()

    import matplotlib.pyplot as plt

    data = np.loadtxt(args.csv, delimiter=",", skiprows=1)
    t = data[:, 0]
    m, e = data[:, 10], data[:, 11]
    arg_det, valid = data[:, 12], data[:, 13].astype(bool)

    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 8))
    axes[0].plot(t, m, lw=0.4)
    axes[0].set_ylabel("M")
    axes[1].plot(t, e, lw=0.8)
    axes[1].plot(t, 1 - e, lw=0.8, ls="--", label="1 - E")
    axes[1].set_ylabel("E")
    axes[1].legend(loc="upper right")
    axes[2].plot(t[valid], arg_det[valid], ".", ms=1)
    axes[2].set_ylabel("arg det C (rad)")
    axes[2].set_xlabel("t (units of 1/d)")
    fig.tight_layout()

    if args.out:
        fig.savefig(args.out, dpi=150)
        print(args.out)
    else:
        plt.show()


if __name__ == "__main__":
    main()
