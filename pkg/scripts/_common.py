"""Shared helpers for the experiment scripts."""

from __future__ import annotations

import csv
from pathlib import Path

from tabfp.correlation import correlated_groups
from tabfp.synthetic import make_synthetic
from tabfp.table import load_csv


def add_data_args(ap) -> None:
    ap.add_argument("--data", help="CSV to use (default: the 5,000-row synthetic table)")
    ap.add_argument("--pk", default="id")
    ap.add_argument("--tau-c", type=float, default=0.4)
    ap.add_argument("--out", type=Path, default=Path("results"))


def load_data(args):
    data = load_csv(args.data, args.pk) if args.data else make_synthetic(5000, seed=0)
    return data, correlated_groups(data, args.tau_c)


def write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path}")
