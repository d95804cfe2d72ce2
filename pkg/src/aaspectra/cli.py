"""Command-line front end: descriptors, encode, train, predict, evaluate."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .aaindex import load_aaindex
from .encoding import (RESIDUE_POLICIES, dataset_padded_length, encode_batch, write_feature_binary,
                       write_feature_csv)
from .ensemble import ensemble_predict, load_bundle, save_bundle
from .evaluation import CLASSIFICATION_METRICS, REGRESSION_METRICS, compute_metrics
from .pipeline import load_dataset
from .propgroups import DescriptorTable, build_descriptors
from .workflow import TrainConfig, prediction_label, train_ensemble

log = logging.getLogger("aaspectra")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _descriptor_table(args) -> DescriptorTable:
    if getattr(args, "descriptors", None):
        return DescriptorTable.load(args.descriptors)
    return build_descriptors(load_aaindex(args.aaindex), alpha=args.alpha)


def descriptor_summary(table: DescriptorTable) -> str:
    lines = [f"{'group':6s}  {'keyword':24s}  {'size':>5s}  {'explained':>9s}"]
    by_id = {d.group_id: d for d in table}
    for gid, size in table.group_sizes.items():
        d = by_id.get(gid)
        ev = f"{100 * d.explained_variance:8.2f}%" if d else "   (empty)"
        kw = d.keyword if d else ""
        lines.append(f"{gid:6s}  {kw:24s}  {size:5d}  {ev}")
    lines.append(f"{'total':6s}  {'':24s}  {sum(table.group_sizes.values()):5d}")
    return "\n".join(lines) + "\n"


def cmd_descriptors(args) -> int:
    table = build_descriptors(load_aaindex(args.aaindex), alpha=args.alpha)
    for gid in table.empty_groups:
        log.warning("group %s has fewer than two properties and no descriptor", gid)
    _emit(json.dumps(table.to_dict(), indent=1) + "\n", args.out)
    sys.stderr.write(descriptor_summary(table))
    return 0


def read_sequences(path, seq_col: str) -> list[str]:
    """Sequences from a CSV with ``seq_col`` or from a plain one-per-line list."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if lines and seq_col in next(csv.reader([lines[0]])):
        df = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
        return [s.strip() for s in df[seq_col]]
    return [ln.strip() for ln in lines if ln.strip()]


def cmd_encode(args) -> int:
    table = _descriptor_table(args)
    seqs = read_sequences(args.dataset, args.seq_col)
    if not seqs:
        raise ValueError(f"{args.dataset}: no sequences")
    padded = args.padded_length or dataset_padded_length(seqs)
    mats, errors = encode_batch(seqs, list(table), padded, args.residue_policy)
    for i, e in enumerate(errors):
        if e is not None:
            log.warning("row %d: %s", i, e)
    if args.out and args.out.endswith(".bin"):
        write_feature_binary(args.out, mats, padded)
    else:
        write_feature_csv(args.out or sys.stdout, mats, ids=[str(i) for i in range(len(seqs))])
    sys.stderr.write(f"encoded {len(seqs)} sequences, padded length {padded}, "
                     f"{sum(e is not None for e in errors)} failed\n")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.dataset, args.seq_col, args.target_col, args.task)
    table = _descriptor_table(args)
    cfg = TrainConfig(seed=args.seed, k_folds=args.k_folds, test_fraction=args.test_fraction,
                      residue_policy=args.residue_policy, primary_metric=args.primary_metric,
                      max_models=args.max_models, jobs=args.jobs, calibrate=not args.no_calibration)
    result = train_ensemble(ds, table, cfg)
    save_bundle(result.ensemble, args.out)
    report_path = args.report or str(Path(args.out).with_suffix(".report.json"))
    Path(report_path).write_text(json.dumps(result.report, indent=1) + "\n")
    sys.stderr.write(training_summary(result.report))
    return 0


def training_summary(report: dict) -> str:
    lines = [f"selected {len(report['selected'])} models (primary metric {report['primary_metric']}):"]
    for s, w in zip(report["selected"], report["weights"]):
        lines.append(f"  {s['group_id']}  w={w:.3f}  cv={s['validation_score']:.4f}  {s['model']}")
    if "member_test_metrics" in report:
        key = "accuracy" if report["task"] == "classification" else "pearson"
        lines.append(f"held-out {key}:")
        for m in report["member_test_metrics"]:
            lines.append(f"  member {m['group_id']} {m['model'][:60]}: {m['test_metrics'].get(key, float('nan')):.4f}")
        tm = report["test_metrics"]
        if report["task"] == "classification":
            lines.append(f"  ensemble: {tm[key]:.4f}")
        else:
            lines.append(f"  ensemble (raw): {tm['pre_calibration'][key]:.4f}   "
                         f"r_score raw/calibrated: {tm['pre_calibration']['r_score']:.4f}/"
                         f"{tm['post_calibration']['r_score']:.4f}")
    return "\n".join(lines) + "\n"


def cmd_predict(args) -> int:
    ens = load_bundle(args.bundle)
    seqs = read_sequences(args.dataset, args.seq_col)
    header = ["row", "sequence", "prediction"]
    names = ens.class_names or [str(c) for c in range(ens.n_classes or 0)]
    if ens.task == "classification":
        header += [f"score_{n}" for n in names]
    else:
        header += ["raw_prediction"]
    header.append("error")
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    if seqs:
        pred = ensemble_predict(ens, seqs, jobs=args.jobs)
        for i, s in enumerate(seqs):
            label = prediction_label(ens, pred.values[i])
            row = [i, s, "" if label is None else (repr(label) if isinstance(label, float) else label)]
            if ens.task == "classification":
                row += ["" if pred.errors[i] else repr(float(v)) for v in pred.scores[i]]
            else:
                row += ["" if pred.errors[i] else repr(float(pred.raw[i]))]
            row.append(pred.errors[i] or "")
            w.writerow(row)
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_evaluate(args) -> int:
    ens = load_bundle(args.bundle)
    ds = load_dataset(args.dataset, args.seq_col, args.target_col, ens.task)
    pred = ensemble_predict(ens, ds.sequences, jobs=args.jobs)
    ok = np.array([e is None for e in pred.errors])
    y = ds.targets
    if ens.task == "classification":
        # map the dataset's labels onto the bundle's class ids
        names = ens.class_names or [str(c) for c in range(ens.n_classes)]
        lookup = {n: i for i, n in enumerate(names)}
        unknown = sorted({n for n in ds.class_names if n not in lookup})
        if unknown:
            raise ValueError(f"labels not seen in training: {unknown}")
        y = np.array([lookup[ds.class_names[t]] for t in y])
        metrics = compute_metrics("classification", y[ok], pred.values[ok], ens.n_classes).values
    else:
        metrics = {"post_calibration": compute_metrics("regression", y[ok], pred.values[ok]).values,
                   "pre_calibration": compute_metrics("regression", y[ok], pred.raw[ok]).values}
    doc = {"task": ens.task, "n_rows": len(ds), "n_failed": int((~ok).sum()), "metrics": metrics}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aaspectra", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def descriptor_source(sp):
        sp.add_argument("--aaindex", help="AAIndex1 flat file (default: bundled release)")
        sp.add_argument("--alpha", type=float, default=0.05, help="KS normality filter level")
        sp.add_argument("--descriptors", help="precomputed descriptor JSON (overrides --aaindex)")

    d = sub.add_parser("descriptors", help="build the eight property-group descriptors")
    d.add_argument("--aaindex", help="AAIndex1 flat file (default: bundled release)")
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--out", help="descriptor JSON path (default: stdout)")
    d.set_defaults(func=cmd_descriptors)

    e = sub.add_parser("encode", help="write spectral feature matrices")
    descriptor_source(e)
    e.add_argument("--dataset", required=True, help="CSV with a sequence column, or one sequence per line")
    e.add_argument("--seq-col", default="sequence")
    e.add_argument("--residue-policy", choices=RESIDUE_POLICIES, default="error")
    e.add_argument("--padded-length", type=int, help="power of two (default: from the longest sequence)")
    e.add_argument("--out", help="feature file; .bin gives the binary format, anything else CSV")
    e.set_defaults(func=cmd_encode)

    t = sub.add_parser("train", help="explore the model grid and assemble an ensemble")
    descriptor_source(t)
    t.add_argument("--dataset", required=True)
    t.add_argument("--task", choices=("classification", "regression"), required=True)
    t.add_argument("--seq-col", default="sequence")
    t.add_argument("--target-col", default="target")
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--k-folds", type=int, default=5)
    t.add_argument("--test-fraction", type=float, default=0.2)
    t.add_argument("--residue-policy", choices=RESIDUE_POLICIES, default="error")
    t.add_argument("--primary-metric", choices=CLASSIFICATION_METRICS + REGRESSION_METRICS)
    t.add_argument("--jobs", type=int, default=1)
    t.add_argument("--max-models", type=int, help="total cap on explored (group, model) pairs")
    t.add_argument("--no-calibration", action="store_true")
    t.add_argument("--out", required=True, help="bundle JSON path")
    t.add_argument("--report", help="report JSON path (default: <out>.report.json)")
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="predict sequences with a bundle")
    pr.add_argument("--bundle", required=True)
    pr.add_argument("--dataset", required=True, help="CSV with a sequence column, or one sequence per line")
    pr.add_argument("--seq-col", default="sequence")
    pr.add_argument("--jobs", type=int, default=1)
    pr.add_argument("--out", help="predictions CSV (default: stdout)")
    pr.set_defaults(func=cmd_predict)

    ev = sub.add_parser("evaluate", help="score a bundle on a labelled dataset")
    ev.add_argument("--bundle", required=True)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--seq-col", default="sequence")
    ev.add_argument("--target-col", default="target")
    ev.add_argument("--jobs", type=int, default=1)
    ev.add_argument("--out", help="metrics JSON (default: stdout)")
    ev.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "test_fraction", None) is not None and not 0 < args.test_fraction < 1:
        sys.stderr.write("error: --test-fraction must lie in (0, 1)\n")
        return 2
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
