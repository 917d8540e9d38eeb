"""Command-line driver: ``tabfp <command> [options]``.

The owner key is read from the ``FP_SECRET_KEY`` environment variable or from
``--key-file``; it is never accepted on the command line.  Exit status is 0 on
success, 1 on usage errors and 2 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import attacks
from .codes import HASH, TARDOS, Codebook, accuse, detection_confidence, hash_codebook, tardos_generate
from .correlation import DEFAULT_TAU_C, CorrelatedGroups, correlated_groups
from .errors import ConfigMismatch, FingerprintError
from .fingerprint import MIN_REDUNDANCY, DetectionResult, EmbeddingConfig, build_plan, apply_plan, detect
from .metrics import collusion_outcome, fidelity_report
from .table import Dataset, load_csv, write_csv

KEY_ENV = "FP_SECRET_KEY"
ATTACKER_KEY_ENV = "FP_ATTACKER_KEY"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        # no prefix matching, so a stray --key is rejected instead of read as --key-file
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _dump(doc, path=None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _read_key(env: str, key_file) -> bytes:
    if key_file is not None:
        key = Path(key_file).read_bytes().rstrip(b"\r\n")
    else:
        value = os.environ.get(env)
        if not value:
            raise UsageError(f"no key: set {env} or pass a key file")
        key = value.encode("utf-8")
    if not key:
        raise UsageError("the key is empty")
    return key


def parse_strengths(text: str) -> list[float]:
    """``"0.1..0.9"`` (step 0.1 unless ``a..b..step``) or a comma-separated list."""
    if ".." in text:
        parts = [float(p) for p in text.split("..")]
        if len(parts) == 2:
            parts.append(0.1)
        lo, hi, step = parts
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 10) for i in range(count)]
    return [float(p) for p in text.split(",") if p.strip()]


def _load(path, pk, hints=None) -> Dataset:
    return load_csv(path, pk, hints)


def _manifest_config(args) -> tuple[EmbeddingConfig, dict]:
    """Configuration from ``--manifest``, refusing any explicit flag that contradicts it."""
    doc = json.loads(Path(args.manifest).read_text())
    cfg = EmbeddingConfig.from_dict(doc["config"])
    if doc.get("config_hash") != cfg.digest():
        raise ConfigMismatch("manifest config hash does not match its configuration")
    overrides = {"gamma": args.gamma, "length": args.length, "k": args.k, "phi": args.phi}
    for name, value in overrides.items():
        if value is not None and value != getattr(cfg, name):
            raise ConfigMismatch(f"--{name} {value} differs from the manifest ({getattr(cfg, name)})")
    if args.groups is not None and CorrelatedGroups.load(args.groups) != cfg.groups:
        raise ConfigMismatch("--groups differs from the manifest")
    return cfg, doc


def _resolve_config(args) -> tuple[EmbeddingConfig, dict | None]:
    if args.manifest:
        return _manifest_config(args)
    missing = [f for f in ("groups", "gamma", "length") if getattr(args, f) is None]
    if missing:
        raise UsageError("need --manifest or all of " + ", ".join("--" + m for m in missing))
    groups = CorrelatedGroups.load(args.groups)
    cfg = EmbeddingConfig(gamma=args.gamma, length=args.length, groups=groups,
                          k=args.k or 50, phi=args.phi or 0.5)
    return cfg, None


def _hints(manifest: dict | None) -> dict | None:
    return None if manifest is None else manifest.get("schema")


def cmd_corrmap(args) -> int:
    data = _load(args.data, args.pk)
    groups = correlated_groups(data, args.tau_c)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    groups.save(out)
    return 0


def cmd_codegen(args) -> int:
    key = _read_key(KEY_ENV, args.key_file)
    if args.kind == HASH:
        if args.length is None:
            raise UsageError("hash codes need --length")
        book = hash_codebook(key, args.recipients, args.length)
    else:
        book = tardos_generate(key, args.recipients, args.length, args.c, args.eps)
    _dump(book.to_dict(), args.out)
    return 0


def cmd_embed(args) -> int:
    key = _read_key(KEY_ENV, args.key_file)
    book = Codebook.load(args.codebook)
    groups = CorrelatedGroups.load(args.groups)
    length = args.length if args.length is not None else book.length
    if length != book.length:
        raise ConfigMismatch(f"--length {length} differs from the codebook length {book.length}")
    if not 0 <= args.recipient < book.n:
        raise UsageError(f"recipient must lie in [0, {book.n})")
    cfg = EmbeddingConfig(gamma=args.gamma, length=length, groups=groups, k=args.k or 50, phi=args.phi or 0.5)
    data = _load(args.data, args.pk)
    plan = build_plan(data, key, cfg)
    fp = apply_plan(data, plan, book.code(args.recipient))
    expected = cfg.expected_redundancy(data.n)
    realised = plan.redundancy(usable_only=True)
    if expected < MIN_REDUNDANCY:
        print(f"warning: mean redundancy {expected:.1f} is below {MIN_REDUNDANCY}; "
              "detection may be unreliable", file=sys.stderr)
    out = Path(args.out)
    csv_path = out / f"recipient_{args.recipient}.csv"
    write_csv(fp, csv_path)
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.digest(),
        "recipient": args.recipient,
        "code_kind": book.kind,
        "code_length": book.length,
        "pk": data.pk_name,
        "schema": {a: data.attribute(a).kind for a in data.feature_names},
        "records": data.n,
        "selected": plan.selected,
        "expected_mean_redundancy": expected,
        "mean_redundancy": float(realised.mean()),
        "min_redundancy": int(realised.min()),
        "output": csv_path.name,
    }
    _dump(manifest, args.manifest or out / f"recipient_{args.recipient}.manifest.json")
    return 0


def _detect(args) -> tuple[DetectionResult, EmbeddingConfig]:
    key = _read_key(KEY_ENV, args.key_file)
    cfg, manifest = _resolve_config(args)
    data = _load(args.data, args.pk, _hints(manifest))
    return detect(data, key, cfg), cfg


def cmd_detect(args) -> int:
    result, _ = _detect(args)
    doc = result.to_dict()
    if args.codebook and args.recipient is not None:
        book = Codebook.load(args.codebook)
        doc["recipient"] = args.recipient
        doc["dc"] = detection_confidence(result.template, book.code(args.recipient))
    _dump(doc, args.out)
    return 0


def cmd_accuse(args) -> int:
    book = Codebook.load(args.codebook)
    if args.detection:
        template = DetectionResult.from_dict(json.loads(Path(args.detection).read_text())).template
    elif args.data:
        template = _detect(args)[0].template
    else:
        raise UsageError("need --detection or --data with a configuration")
    report = accuse(template, book, args.x)
    doc = report.to_dict()
    doc["dc"] = [detection_confidence(template, c) for c in book.codes]
    if args.colluders:
        truth = [int(s) for s in args.colluders.split(",")]
        doc["outcome"] = collusion_outcome(report, truth).to_dict()
    _dump(doc, args.out)
    return 0


def _attack_once(args, kind, strength, data, copies, attacker_key, guess) -> Dataset:
    spec = attacks.AttackSpec(kind, strength, args.seed, args.influence, args.flip_fraction)
    if kind.startswith("collude"):
        return attacks.run_attack(spec, copies)
    return attacks.run_attack(spec, data, attacker_key, guess)


def _attack_inputs(args):
    kind = args.kind
    copies, attacker_key, guess = None, None, None
    if kind.startswith("collude"):
        paths = [args.data, *(args.copies or [])]
        copies = [_load(p, args.pk) for p in paths]
        data = copies[0]
    else:
        data = _load(args.data, args.pk)
    if kind == attacks.CLUSTER_FLIP:
        attacker_key = _read_key(ATTACKER_KEY_ENV, args.attacker_key_file)
        if args.manifest:
            guess, _ = _manifest_config(args)
        else:
            guess, _ = _resolve_config(args)
    return data, copies, attacker_key, guess


def cmd_attack(args) -> int:
    data, copies, attacker_key, guess = _attack_inputs(args)
    if args.strengths:
        out = Path(args.out)
        for s in parse_strengths(args.strengths):
            attacked = _attack_once(args, args.kind, s, data, copies, attacker_key, guess)
            write_csv(attacked, out / f"{args.kind}_{s:g}.csv")
    else:
        strength = args.strength if args.strength is not None else 0.0
        attacked = _attack_once(args, args.kind, strength, data, copies, attacker_key, guess)
        write_csv(attacked, args.out)
    return 0


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    orig = _load(args.original, args.pk)
    fp = _load(args.data, args.pk, {a: orig.attribute(a).kind for a in orig.feature_names})
    fidelity_report(orig, fp).save(out)
    if args.kind:
        if not (args.codebook and args.recipient is not None and args.strengths):
            raise UsageError("a robustness sweep needs --codebook, --recipient and --strengths")
        key = _read_key(KEY_ENV, args.key_file)
        cfg, _ = _resolve_config(args)
        code = Codebook.load(args.codebook).code(args.recipient)
        attacker_key = guess = None
        if args.kind == attacks.CLUSTER_FLIP:
            attacker_key = _read_key(ATTACKER_KEY_ENV, args.attacker_key_file)
            guess = cfg
        rows = []
        for s in parse_strengths(args.strengths):
            for seed in range(args.seeds):
                spec = attacks.AttackSpec(args.kind, s, seed, args.influence)
                attacked = attacks.run_attack(spec, fp, attacker_key, guess)
                dc = detection_confidence(detect(attacked, key, cfg).template, code)
                rows.append((s, seed, dc))
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["strength", "seed", "dc"])
            w.writerows((f"{s:g}", seed, f"{dc:.6f}") for s, seed, dc in rows)
    return 0


def _common(p, data=True, pk=True):
    if data:
        p.add_argument("--data", required=True, help="input CSV")
    if pk:
        p.add_argument("--pk", default="id", help="primary-key column (default: id)")


def _config_flags(p, required=False):
    p.add_argument("--groups", required=required, help="correlated-groups JSON")
    p.add_argument("--gamma", type=float, required=required, help="embedding ratio is 1/gamma")
    p.add_argument("--length", type=int, help="fingerprint length in bits")
    p.add_argument("--k", type=int, help="minimum neighbourhood size (default 50)")
    p.add_argument("--phi", type=float, help="density split percentile (default 0.5)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tabfp", description="Neighbourhood-based fingerprinting for tabular data.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("corrmap", help="compute correlated attribute groups")
    _common(p)
    p.add_argument("--tau-c", type=float, default=DEFAULT_TAU_C)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corrmap)

    p = sub.add_parser("codegen", help="generate a recipient codebook")
    p.add_argument("--kind", choices=[HASH, TARDOS], default=TARDOS)
    p.add_argument("--recipients", type=int, required=True)
    p.add_argument("--length", type=int)
    p.add_argument("--c", type=int, default=2, help="Tardos collusion size")
    p.add_argument("--eps", type=float, default=0.01, help="Tardos error bound")
    p.add_argument("--key-file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_codegen)

    p = sub.add_parser("embed", help="write a fingerprinted copy for one recipient")
    _common(p)
    _config_flags(p, required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--recipient", type=int, required=True)
    p.add_argument("--key-file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--manifest", help="manifest path (default: next to the CSV)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("detect", help="extract a fingerprint template from a suspect copy")
    _common(p)
    _config_flags(p)
    p.add_argument("--manifest")
    p.add_argument("--codebook")
    p.add_argument("--recipient", type=int)
    p.add_argument("--key-file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("accuse", help="score recipients against a detected template")
    p.add_argument("--data")
    p.add_argument("--pk", default="id")
    _config_flags(p)
    p.add_argument("--manifest")
    p.add_argument("--detection", help="detection JSON from the detect command")
    p.add_argument("--codebook", required=True)
    p.add_argument("--x", type=float, default=1.0, help="threshold multiplier")
    p.add_argument("--colluders", help="comma-separated true colluders, to report precision/recall")
    p.add_argument("--key-file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_accuse)

    p = sub.add_parser("attack", help="apply an attack to a copy")
    _common(p)
    _config_flags(p)
    p.add_argument("--kind", choices=attacks.KINDS, required=True)
    p.add_argument("--strength", type=float)
    p.add_argument("--strengths", help="sweep, e.g. 0.1..0.9 or 0.1,0.5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--influence", type=float, default=0.1, help="cluster_flip: fraction of influential records")
    p.add_argument("--flip-fraction", type=float, default=0.1, help="collude_substitute_flip: share of agreeing cells")
    p.add_argument("--copies", nargs="+", help="further copies for collusion")
    p.add_argument("--manifest", help="cluster_flip: guessed configuration")
    p.add_argument("--attacker-key-file")
    p.add_argument("--out", required=True, help="output CSV, or directory for sweeps")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("evaluate", help="fidelity report and optional robustness sweep")
    p.add_argument("--original", required=True)
    _common(p)
    _config_flags(p)
    p.add_argument("--manifest")
    p.add_argument("--kind", choices=[attacks.HORIZONTAL, attacks.VERTICAL, attacks.FLIP, attacks.CLUSTER_FLIP])
    p.add_argument("--strengths")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--influence", type=float, default=0.1)
    p.add_argument("--codebook")
    p.add_argument("--recipient", type=int)
    p.add_argument("--key-file")
    p.add_argument("--attacker-key-file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"tabfp: error: {exc}", file=sys.stderr)
        return 1
    except (FingerprintError, OSError, ValueError, KeyError) as exc:
        print(f"tabfp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
