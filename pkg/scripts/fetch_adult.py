"""Fetch the Adult Census training split and write it as ``data/adult.csv``.

The raw file has no header, values padded with a leading space, ``?`` for
missing cells and no record identifier.  The output adds an ``id`` column
(1-based row number) so the table has a primary key.

Sources, tried in order: a local ``adult.data`` file, the copy bundled in the
``responsibly`` wheel (downloaded with pip), the UCI archive URL.
"""

from __future__ import annotations

import argparse
import csv
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
]
UCI_URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/adult.data"
WHEEL_MEMBER = "responsibly/dataset/adult/adult.data"


def from_wheel() -> str:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet",
             "responsibly==0.1.2", "-d", tmp],
            check=True,
        )
        wheel = next(Path(tmp).glob("responsibly-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            return zf.read(WHEEL_MEMBER).decode("utf-8")


def from_url() -> str:
    with urllib.request.urlopen(UCI_URL, timeout=60) as resp:
        return resp.read().decode("utf-8")


def convert(raw: str) -> list[list[str]]:
    rows = []
    for rec in csv.reader(io.StringIO(raw)):
        if not rec or len(rec) != len(COLUMNS):
            continue
        rows.append([str(len(rows) + 1), *[cell.strip() for cell in rec]])
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--source", type=Path, help="local adult.data file")
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data" / "adult.csv")
    args = ap.parse_args(argv)

    if args.source:
        raw = args.source.read_text()
    else:
        try:
            raw = from_wheel()
        except Exception as exc:  # noqa: BLE001 - fall back to the archive
            print(f"wheel download failed ({exc}); trying {UCI_URL}", file=sys.stderr)
            raw = from_url()
    rows = convert(raw)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *COLUMNS])
        w.writerows(rows)
    print(f"wrote {len(rows)} records to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
