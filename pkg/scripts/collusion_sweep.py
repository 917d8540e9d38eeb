"""Precision, false accusation rate and recall of Tardos accusation under data-level collusion.

Each trial embeds the colluders' codes, merges their copies with one of the
three strategies, detects the pirate copy and accuses at ``Z_x``.
"""

from __future__ import annotations

import argparse

import numpy as np

from _common import add_data_args, load_data, write_rows
from tabfp import attacks
from tabfp.codes import accuse, tardos_generate
from tabfp.fingerprint import EmbeddingConfig, apply_plan, build_plan, detect
from tabfp.metrics import collusion_outcome

STRATEGIES = ("average", "substitute", "substitute_flip")


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    add_data_args(ap)
    ap.add_argument("--recipients", type=int, default=20)
    ap.add_argument("--colluders", default="2,3,5")
    ap.add_argument("--lengths", default="128,256,512")
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--k", type=int, default=50)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--x", type=float, default=1.0)
    ap.add_argument("--flip-fraction", type=float, default=0.1)
    args = ap.parse_args(argv)

    data, groups = load_data(args)
    rows, summary = [], []
    for length in (int(x) for x in args.lengths.split(",")):
        cfg = EmbeddingConfig(gamma=args.gamma, length=length, groups=groups, k=args.k)
        for c in (int(x) for x in args.colluders.split(",")):
            got = {s: [] for s in STRATEGIES}
            for trial in range(args.trials):
                key = f"collusion-{trial}".encode()
                book = tardos_generate(key, args.recipients, length, c=c)
                plan = build_plan(data, key, cfg)
                who = sorted(np.random.default_rng(trial).choice(args.recipients, size=c, replace=False).tolist())
                copies = [apply_plan(data, plan, book.code(s)) for s in who]
                for strategy in STRATEGIES:
                    pirate = attacks.collude(copies, strategy, args.flip_fraction, seed=trial)
                    out = collusion_outcome(accuse(detect(pirate, key, cfg).template, book, args.x), who)
                    got[strategy].append(out)
                    rows.append((c, length, strategy, trial, out.precision, out.false_accusation_rate, out.recall))
            for strategy, outs in got.items():
                prec = [o.precision or 0.0 for o in outs]
                rec = [o.recall for o in outs]
                summary.append((c, length, strategy, f"{np.mean(prec):.3f}", f"{np.std(prec):.3f}",
                                f"{np.mean(rec):.3f}", f"{np.std(rec):.3f}"))
                print(f"c={c} L={length} {strategy:15s} precision {np.mean(prec):.2f}+-{np.std(prec):.2f} "
                      f"recall {np.mean(rec):.2f}+-{np.std(rec):.2f}")
    write_rows(args.out / "collusion_trials.csv",
               ["c", "L", "strategy", "trial", "precision", "far", "recall"], rows)
    write_rows(args.out / "collusion_summary.csv",
               ["c", "L", "strategy", "precision_mean", "precision_std", "recall_mean", "recall_std"], summary)


if __name__ == "__main__":
    main()
