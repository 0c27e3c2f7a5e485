"""``guide-guard`` command line.

Exit codes: 0 success, 1 unexpected failure, 2 usage error, 3 input/config
error, 4 model file error, 5 gate rejection (``screen --gate``).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .config import RunConfig, load_config
from .dataset import assign_classes, generate_synthetic, load_records, write_records
from .errors import GuideGuardError, InputError, ModelError
from .evaluation import REFERENCE, benchmark_latency, cross_validate
from .nn import load_model, save_model, train
from .seqcore import Mode, Role, encode_pair, encode_pairs, parse_sequence

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT, EXIT_MODEL, EXIT_REJECT = 0, 1, 2, 3, 4, 5

log = logging.getLogger("guide_guard")

BENCH_SCHEMA = {
    "type": "object",
    "required": ["n_calls", "total_seconds", "mean_seconds", "throughput", "host"],
    "properties": {
        "n_calls": {"type": "integer", "minimum": 100},
        "total_seconds": {"type": "number", "minimum": 0},
        "mean_seconds": {"type": "number", "minimum": 0},
        "throughput": {"type": "number", "minimum": 0},
        "reference_mean_seconds": {"type": "number"},
        "host": {"type": "object"},
    },
}


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg.synth.seed = cfg.train.seed = cfg.eval.seed = args.seed
    if getattr(args, "jobs", None) is not None:
        cfg.eval.jobs = args.jobs
    if getattr(args, "strict", False):
        cfg.dataset.strict = True
    if getattr(args, "weights", None) is not None:
        cfg.encoding.bases = args.weights
    if getattr(args, "positions", None) is not None:
        cfg.encoding.positions = args.positions
    if getattr(args, "mode", None) is not None:
        cfg.encoding.mode = args.mode
    if getattr(args, "per_gene", False):
        cfg.dataset.per_gene = True
    if getattr(args, "invert_efficacy", False):
        cfg.dataset.invert_efficacy = True
    return cfg


def _labeled(cfg: RunConfig, path: str):
    records, stats = load_records(path, strict=cfg.dataset.strict, length=cfg.dataset.length)
    if stats.n_rejected:
        log.warning("%d row(s) rejected from %s", stats.n_rejected, path)
    labeled, bounds = assign_classes(
        records, cfg.dataset.n_classes, cfg.dataset.invert_efficacy, cfg.dataset.per_gene
    )
    return labeled, bounds, stats


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _save(model, path: str) -> str:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return save_model(model, path)


def cmd_synth(cfg: RunConfig, args) -> int:
    s = cfg.synth
    if args.n_targets is not None:
        s.n_targets = args.n_targets
    if args.guides_per_target is not None:
        s.guides_per_target = args.guides_per_target
    if args.noise is not None:
        s.noise_sd = args.noise
    if args.tile_singles:
        s.tile_singles = True
    scfg = s.synthetic_config()
    records = generate_synthetic(scfg)
    buf = io.StringIO()
    write_records(records, buf)
    _write(Path(args.out), buf.getvalue())
    perfect = sum(r.is_perfect_match for r in records)
    print(f"wrote {len(records)} records ({perfect} perfect matches) to {args.out}")
    print(f"targets {scfg.n_targets}, mutated guides per target {scfg.guides_per_target}, "
          f"tiled singles {scfg.tile_singles}, noise sd {scfg.noise_sd}, seed {scfg.seed}")
    top = sorted(range(scfg.length), key=lambda i: -scfg.position_effect[i])[:3]
    print("strongest planted positions: " + ", ".join(
        f"{i + 1} ({scfg.position_effect[i]:.3f})" for i in top))
    print("planted base effects: " + ", ".join(f"{b}={v}" for b, v in scfg.base_effect.items()))
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, args) -> int:
    records, stats = load_records(args.data, strict=cfg.dataset.strict, length=cfg.dataset.length)
    out = Path(args.out_dir or cfg.paths.out_dir)
    results = analysis.run_all(records, cfg.analysis.aggregator, cfg.analysis.side)
    for name, res in results.items():
        _write(out / f"{name}.tsv", res.to_tsv())
    _write(out / "long.tsv", analysis.long_format(results))
    _write(out / "ingest.json", json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n")
    lines = ["ingestion", stats.summary(), "", "analyses (matched records / empty bins)"]
    for name, res in results.items():
        if isinstance(res, analysis.PairHeatmap):
            cell = res.argmin() if res.n_matched else None
            lines.append(f"{name:<20}{res.n_matched:>7}   lowest-mean cell {cell}")
        else:
            empty = sum(b.empty for b in res.bins)
            lo = None
            if res.n_matched:
                lo = min((b.mean, b.position) for b in res.bins if not b.empty)[1]
            lines.append(f"{name:<20}{res.n_matched:>7}{empty:>5} empty   lowest-mean position {lo}")
    summary = "\n".join(lines) + "\n"
    _write(out / "summary.txt", summary)
    print(summary, end="")
    return EXIT_OK


def cmd_train(cfg: RunConfig, args) -> int:
    labeled, bounds, stats = _labeled(cfg, args.data)
    weights = cfg.encoding_weights()
    tcfg = cfg.train.train_config()
    if args.epochs is not None:
        tcfg = dataclasses.replace(tcfg, epochs=args.epochs)
    model, history = train(labeled, weights, tcfg)
    digest = _save(model, args.model)
    hist = ["epoch\tloss\taccuracy"] + [f"{h.epoch}\t{h.loss!r}\t{h.accuracy!r}" for h in history]
    hist_path = Path(args.history or f"{args.model}.history.tsv")
    _write(hist_path, "\n".join(hist) + "\n")
    if args.labeled_out:
        buf = io.StringIO()
        write_records(labeled, buf)
        _write(Path(args.labeled_out), buf.getvalue())
    print(f"trained on {len(labeled)} records, {tcfg.epochs} epochs requested, {len(history)} run")
    print(f"final loss {history[-1].loss:.4f}  final train accuracy {history[-1].accuracy:.4f}")
    print(f"class boundaries: " + "; ".join(
        f"{k}: " + ", ".join(f"{b:.4g}" for b in v) for k, v in bounds.items()))
    print(f"encoding fingerprint {weights.fingerprint()}")
    print(f"model {args.model} sha256 {digest}")
    return EXIT_OK


ABLATIONS = {
    "flat": dict(positions="flat", bases="none"),
    "positions": dict(positions="default", bases="none"),
    "u-boost": dict(positions="default", bases="u-boost"),
    "gc-boost": dict(positions="default", bases="gc-boost"),
    "concat": dict(positions="default", bases=None, mode="concat"),
}


def cmd_evaluate(cfg: RunConfig, args) -> int:
    labeled, _, _ = _labeled(cfg, args.data)
    out = Path(args.out_dir or cfg.paths.out_dir)
    k = args.k or cfg.eval.k
    weights = cfg.encoding_weights()
    tcfg = cfg.train.train_config()
    report = cross_validate(labeled, weights, tcfg, k, cfg.eval.seed, cfg.eval.jobs)
    _write(out / "report.json", report.to_json())
    _write(out / "report.txt", report.table(reference=args.reference))
    _write(out / "roc.tsv", report.roc.to_tsv())
    folds = ["fold\tn_train\tn_test\taccuracy_8class\taccuracy_binary"] + [
        f"{f.fold}\t{f.n_train}\t{f.n_test}\t{f.accuracy!r}\t{f.binary_accuracy!r}"
        for f in report.folds
    ]
    _write(out / "folds.tsv", "\n".join(folds) + "\n")
    if args.json:
        print(report.to_json(), end="")
    else:
        print(report.table(reference=args.reference), end="")

    if args.ablation:
        rows = ["variant\taccuracy_binary\taccuracy_8class\tauc"]
        for name, spec in ABLATIONS.items():
            enc = dataclasses.replace(cfg.encoding, positions=spec["positions"],
                                      bases=spec["bases"] or cfg.encoding.bases,
                                      mode=spec.get("mode", "zip"))
            r = cross_validate(labeled, enc.weights(cfg.dataset.length), tcfg, k,
                               cfg.eval.seed, cfg.eval.jobs)
            rows.append(f"{name}\t{r.binary_accuracy!r}\t{r.accuracy!r}\t{r.roc.auc!r}")
            print(f"ablation {name:<10} binary {r.binary_accuracy:.4f}  "
                  f"8-class {r.accuracy:.4f}  AUC {r.roc.auc:.4f}", file=sys.stderr)
        _write(out / "ablation.tsv", "\n".join(rows) + "\n")

    if args.final_model:
        model, _ = train(labeled, weights, tcfg)
        digest = _save(model, args.final_model)
        print(f"final model trained on all {len(labeled)} records: {args.final_model} sha256 {digest}",
              file=sys.stderr)
    return EXIT_OK


def _read_pairs(path: str, length: int):
    with open(path, newline="") as fh:
        text = fh.read()
    header = text.split("\n", 1)[0]
    reader = csv.DictReader(io.StringIO(text), delimiter="\t" if "\t" in header else ",")
    reader.fieldnames = [f.strip() for f in reader.fieldnames or []]
    for col in ("guide", "target"):
        if col not in reader.fieldnames:
            raise InputError(f"{path}: required column {col!r} not found in header")
    pairs = []
    for line_no, row in enumerate(reader, start=2):
        try:
            pairs.append((parse_sequence(row["guide"] or "", Role.GUIDE, length),
                          parse_sequence(row["target"] or "", Role.TARGET, length)))
        except InputError as exc:
            raise InputError(f"{path} line {line_no}: {exc}") from exc
    return pairs


def _load_for_inference(path: str):
    model = load_model(path)
    if model.encoding is None:
        raise ModelError(f"{path} carries no encoding configuration")
    return model


def cmd_screen(cfg: RunConfig, args) -> int:
    model = _load_for_inference(args.model)
    length = model.encoding.length
    if args.input:
        pairs = _read_pairs(args.input, length)
    elif args.guide and args.target:
        pairs = [(parse_sequence(args.guide, Role.GUIDE, length),
                  parse_sequence(args.target, Role.TARGET, length))]
    else:
        raise InputError("screen needs --input FILE or both --guide and --target")
    start = time.perf_counter()
    X = encode_pairs(pairs, model.encoding)
    probs = np.concatenate([model.predict_proba(X[i:i + 1024]) for i in range(0, len(X), 1024)]) \
        if len(X) else np.zeros((0, model.n_classes))
    elapsed = time.perf_counter() - start
    top = model.n_classes - 1
    classes = probs.argmax(axis=1)
    n_reject = int(np.sum(classes != top))
    if args.json:
        rows = [
            {"index": i, "guide": g.bases, "target": t.bases, "class_id": int(c),
             "probabilities": [float(x) for x in p], "verdict": "ACCEPT" if c == top else "REJECT"}
            for i, ((g, t), p, c) in enumerate(zip(pairs, probs, classes))
        ]
        print(json.dumps(rows, indent=2))
    else:
        cols = ["index", "guide", "target", "class_id"] + [f"p{c}" for c in range(model.n_classes)] + ["verdict"]
        print("\t".join(cols))
        for i, ((g, t), p, c) in enumerate(zip(pairs, probs, classes)):
            verdict = "ACCEPT" if c == top else "REJECT"
            print("\t".join([str(i), g.bases, t.bases, str(int(c))] + [f"{x:.6f}" for x in p] + [verdict]))
    print(f"screened {len(pairs)} input(s) in {elapsed:.4f} s; {len(pairs) - n_reject} ACCEPT, "
          f"{n_reject} REJECT", file=sys.stderr)
    if args.gate and n_reject:
        return EXIT_REJECT
    return EXIT_OK


def cmd_bench(cfg: RunConfig, args) -> int:
    model = _load_for_inference(args.model)
    s = dataclasses.replace(cfg.synth, n_targets=max(1, args.n // 8 + 1), guides_per_target=7,
                            position_effect=None, base_effect=None)
    records = generate_synthetic(s.synthetic_config())[: args.n]
    X = np.stack([encode_pair(r.guide, r.target, model.encoding) for r in records])
    rep = benchmark_latency(model, X, args.reps)
    doc = {**rep.to_dict(), "reference_mean_seconds": REFERENCE["latency_seconds"]}
    if args.json:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"calls            {rep.n_calls}")
        print(f"total            {rep.total_seconds:.4f} s")
        print(f"mean per input   {rep.mean_seconds:.6f} s  (reference {REFERENCE['latency_seconds']} s)")
        print(f"throughput       {rep.throughput:.1f} inputs/s")
        print(f"10,000 inputs    {10000 * rep.mean_seconds:.2f} s")
        for k, v in rep.host.items():
            print(f"host {k:<11} {v}")
    return EXIT_OK


def cmd_summary(cfg: RunConfig, args) -> int:
    model = load_model(args.model)
    print(model.summary())
    if model.encoding is not None:
        print(f"encoding mode {model.encoding.mode.value}, fingerprint {model.encoding.fingerprint()}")
    return EXIT_OK


def cmd_config(cfg: RunConfig, args) -> int:
    print(cfg.to_yaml(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run config (default: $GG_CONFIG, then built-ins)")
    common.add_argument("--seed", type=int, help="override every seed in the config")
    common.add_argument("--jobs", type=int, help="parallel folds for cross-validation")
    common.add_argument("--strict", action="store_true", help="fail on the first malformed row")
    common.add_argument("--weights", choices=["none", "u-boost", "gc-boost"], help="base-weight preset")
    common.add_argument("--positions", choices=["default", "flat"], help="position-weight preset")
    common.add_argument("--mode", choices=[m.value for m in Mode], help="pair layout")
    common.add_argument("--per-gene", action="store_true", help="bin classes within each gene")
    common.add_argument("--invert-efficacy", action="store_true", help="treat lower efficacy as better")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="guide-guard", description="Train, evaluate and apply a CNN screen for Cas13 guide RNAs.",
                                epilog="exit codes: 0 ok, 1 failure, 2 usage, 3 input/config, 4 model file, 5 gate reject")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a planted synthetic screen")
    s.add_argument("out")
    s.add_argument("--n-targets", type=int)
    s.add_argument("--guides-per-target", type=int)
    s.add_argument("--noise", type=float)
    s.add_argument("--tile-singles", action="store_true")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("analyze", parents=[common], help="mismatch position / base statistics")
    s.add_argument("data")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("train", parents=[common], help="label, train and save a model")
    s.add_argument("data")
    s.add_argument("--model", required=True)
    s.add_argument("--history")
    s.add_argument("--labeled-out")
    s.add_argument("--epochs", type=int)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="k-fold cross-validation report")
    s.add_argument("data")
    s.add_argument("--out-dir")
    s.add_argument("--k", type=int)
    s.add_argument("--ablation", action="store_true", help="also cross-validate encoding variants")
    s.add_argument("--reference", action="store_true", help="print reference figures for the Cas13 screen")
    s.add_argument("--final-model", help="retrain on all records and save here")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("screen", parents=[common], help="ACCEPT/REJECT guide-target pairs")
    s.add_argument("model")
    s.add_argument("--input")
    s.add_argument("--guide")
    s.add_argument("--target")
    s.add_argument("--gate", action="store_true", help="exit 5 if any input is rejected")
    s.set_defaults(func=cmd_screen)

    s = sub.add_parser("bench", parents=[common], help="single-input latency")
    s.add_argument("model")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--reps", type=int, default=1)
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("summary", parents=[common], help="print a model's architecture")
    s.add_argument("model")
    s.set_defaults(func=cmd_summary)

    s = sub.add_parser("config", parents=[common], help="print the effective configuration")
    s.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return args.func(cfg, args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except GuideGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
