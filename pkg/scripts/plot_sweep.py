"""Plot an ``objloc sweep`` CSV: success vs gamma, vs top-k, vs object count, and time vs gamma.

    objloc sweep --config configs/bench.json --out sweep.csv
    python scripts/plot_sweep.py sweep.csv --out sweep.png
"""
import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def load(path):
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def mean_by(rows, key, value, **fixed):
    acc = defaultdict(list)
    for r in rows:
        if all(r[k] == v for k, v in fixed.items()):
            acc[r[key]].append(r[value])
    xs = sorted(acc)
    return xs, [sum(acc[x]) / len(acc[x]) for x in xs]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("--gamma", type=float, default=0.8, help="gamma used for the top-k and object panels")
    ap.add_argument("--top-k", type=float, default=10)
    ap.add_argument("--out", default="sweep.png")
    args = ap.parse_args()
    rows = load(args.csv)

    fig, ax = plt.subplots(1, 4, figsize=(16, 3.6))
    for k in sorted({r["top_k"] for r in rows}):
        ax[0].plot(*mean_by(rows, "gamma", "success_rate", top_k=k), marker="o", label=f"top-{int(k)}")
    ax[0].set(xlabel="gamma", ylabel="success rate")
    ax[0].legend(fontsize=7)
    ax[1].plot(*mean_by(rows, "top_k", "success_rate", gamma=args.gamma), marker="o")
    ax[1].set(xlabel="top-k", title=f"gamma={args.gamma}")
    ax[2].plot(*mean_by(rows, "objects", "success_rate", gamma=args.gamma, top_k=args.top_k), marker="o")
    ax[2].set(xlabel="objects observed", title=f"gamma={args.gamma}, top-{int(args.top_k)}")
    xs, ys = mean_by(rows, "gamma", "mean_wall_time_s", top_k=args.top_k)
    ax[3].plot(xs, [1e3 * y for y in ys], marker="o")
    ax[3].set(xlabel="gamma", ylabel="mean wall time [ms]")
    for a in ax:
        a.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
