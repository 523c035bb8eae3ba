#!/usr/bin/env python3
"""Plot the CSV series written by `aptx figures`.

usage: plot_figures.py [DIR]   (default: $APTX_OUT_DIR or ./aptx-out)
"""
import csv
import os
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    cols = list(zip(*[[float(v) for v in r] for r in body]))
    return header, cols


def main():
    default = os.environ.get("APTX_OUT_DIR", "aptx-out")
    out = Path(sys.argv[1] if len(sys.argv) > 1 else default)
    for path in sorted(out.glob("fig*.csv")):
        header, cols = load(path)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for name, ys in zip(header[1:], cols[1:]):
            ax.plot(cols[0], ys, label=name)
        ax.axhline(0, color="grey", lw=0.5)
        ax.axvline(0, color="grey", lw=0.5)
        ax.set_xlabel("x")
        ax.legend()
        ax.set_title(path.stem)
        fig.tight_layout()
        png = path.with_suffix(".png")
        fig.savefig(png, dpi=120)
        plt.close(fig)
        print(png)


if __name__ == "__main__":
    main()
