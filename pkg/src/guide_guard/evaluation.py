"""Metrics, ROC/AUC, k-fold cross-validation and latency measurement.

Binary metrics collapse the octile classes: the top class is positive,
everything else negative. The ROC score is the softmax probability of the
top class.
"""

from __future__ import annotations

import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence as Seq

import numpy as np

from .dataset import LabeledRecord, kfold_split
from .errors import EmptyInput, SingleClassInput
from .nn import Model, TrainConfig, encode_records, predict_batch, train
from .seqcore import EncodingWeights

# Reference figures for the full three-gene Cas13 screen, 20-fold CV.
REFERENCE = {
    "overall_accuracy": 0.84,
    "auc": 0.839,
    "perfect": {"accuracy": 0.8551, "tpr": 0.9887, "tnr": 0.7948},
    "mismatch": {"accuracy": 0.7750, "tpr": 0.9844, "tnr": 0.6692},
    "latency_seconds": 0.00055,
}


def _ratio(num: int, den: int) -> float:
    return num / den if den else math.nan


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.n)

    @property
    def tpr(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def tnr(self) -> float:
        return _ratio(self.tn, self.tn + self.fp)

    def to_dict(self) -> dict:
        return {**asdict(self), "accuracy": self.accuracy, "tpr": self.tpr, "tnr": self.tnr}


def confusion(pairs: Iterable[tuple[bool, bool]]) -> ConfusionCounts:
    """Count (predicted_positive, truly_positive) pairs."""
    tp = fp = tn = fn = 0
    for pred, true in pairs:
        if pred and true:
            tp += 1
        elif pred:
            fp += 1
        elif true:
            fn += 1
        else:
            tn += 1
    if tp + fp + tn + fn == 0:
        raise EmptyInput("confusion counts need at least one prediction")
    return ConfusionCounts(tp, fp, tn, fn)


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]
    auc: float

    def to_tsv(self) -> str:
        lines = ["fpr\ttpr\tthreshold"]
        for (x, y), t in zip(self.points, self.thresholds):
            lines.append(f"{x!r}\t{y!r}\t{t!r}")
        return "\n".join(lines) + "\n"


def roc_auc(scores: Seq[float], labels: Seq[bool]) -> RocCurve:
    """ROC over every distinct score threshold, with trapezoidal area.

    Tied scores move the curve diagonally, which is what counts tied
    positive/negative pairs as one half. The area is accumulated in integer
    pair counts and divided once.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-D sequences")
    P, N = int(y.sum()), int((~y).sum())
    if P == 0 or N == 0:
        raise SingleClassInput("ROC needs both positive and negative labels")
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tps = np.cumsum(y)[ends]
    fps = (ends + 1) - tps
    tp_prev = np.r_[0, tps[:-1]]
    fp_prev = np.r_[0, fps[:-1]]
    twice_area = int(np.sum((fps - fp_prev) * (tps + tp_prev)))
    points = [(0.0, 0.0)] + [(int(f) / N, int(t) / P) for f, t in zip(fps, tps)]
    thresholds = [math.inf] + [float(v) for v in s[ends]]
    return RocCurve(tuple(points), tuple(thresholds), twice_area / (2 * P * N))


@dataclass
class SubsetMetrics:
    name: str
    n: int
    accuracy: float
    binary_accuracy: float
    confusion: ConfusionCounts
    empty: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["confusion"] = self.confusion.to_dict()
        return d


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    accuracy: float
    binary_accuracy: float


@dataclass
class LatencyReport:
    n_calls: int
    total_seconds: float
    mean_seconds: float
    throughput: float
    host: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EvalReport:
    n_records: int
    n_classes: int
    k: int
    seed: int
    accuracy: float
    binary_accuracy: float
    confusion: ConfusionCounts
    roc: RocCurve
    folds: list[FoldResult]
    subsets: dict[str, SubsetMetrics]
    true_class: np.ndarray
    pred_class: np.ndarray
    scores: np.ndarray
    latency: LatencyReport | None = None

    @property
    def fold_accuracy_mean(self) -> float:
        return float(np.mean([f.binary_accuracy for f in self.folds]))

    @property
    def fold_accuracy_std(self) -> float:
        return float(np.std([f.binary_accuracy for f in self.folds]))

    def to_dict(self) -> dict:
        """Machine-readable report; wall-clock latency is kept out so reruns compare equal."""
        return {
            "n_records": self.n_records,
            "n_classes": self.n_classes,
            "k": self.k,
            "seed": self.seed,
            "accuracy_8class": self.accuracy,
            "accuracy_binary": self.binary_accuracy,
            "auc": self.roc.auc,
            "confusion": self.confusion.to_dict(),
            "subsets": {k: v.to_dict() for k, v in self.subsets.items()},
            "folds": [asdict(f) for f in self.folds],
            "fold_binary_accuracy_mean": self.fold_accuracy_mean,
            "fold_binary_accuracy_std": self.fold_accuracy_std,
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def table(self, reference: bool = False) -> str:
        """Plain-text table with perfect-match / mismatch / overall columns."""
        cols = [self.subsets.get("perfect"), self.subsets.get("mismatch")]

        def cell(m: SubsetMetrics | None, value: float) -> str:
            if m is None or m.empty or math.isnan(value):
                return "n/a"
            return f"{100 * value:.2f}%"

        rows = [
            ("Accuracy (binary)", lambda m: m.binary_accuracy, self.binary_accuracy),
            ("Accuracy (8-class)", lambda m: m.accuracy, self.accuracy),
            ("True Positive Rate", lambda m: m.confusion.tpr, self.confusion.tpr),
            ("True Negative Rate", lambda m: m.confusion.tnr, self.confusion.tnr),
        ]
        out = [f"{'':<22}{'Perfect Matches':>17}{'Mismatch':>12}{'Overall':>12}", "-" * 63]
        for name, get, overall in rows:
            vals = [cell(m, get(m)) if m else "n/a" for m in cols]
            out.append(f"{name:<22}{vals[0]:>17}{vals[1]:>12}{100 * overall:>11.2f}%")
        counts = [str(m.n) if m else "0" for m in cols]
        out.append(f"{'Records':<22}{counts[0]:>17}{counts[1]:>12}{self.n_records:>12}")
        out.append("-" * 63)
        out.append(f"AUC {self.roc.auc:.4f}   {self.k}-fold CV   "
                   f"fold binary accuracy {100 * self.fold_accuracy_mean:.2f}% "
                   f"+/- {100 * self.fold_accuracy_std:.2f}")
        if reference:
            r = REFERENCE
            out.append(
                f"reference: accuracy {100 * r['overall_accuracy']:.0f}%  AUC {r['auc']}  "
                f"perfect {100 * r['perfect']['accuracy']:.2f}%  "
                f"mismatch {100 * r['mismatch']['accuracy']:.2f}%"
            )
        return "\n".join(out) + "\n"


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _subset(name: str, idx: np.ndarray, true_c, pred_c, top: int) -> SubsetMetrics:
    if len(idx) == 0:
        return SubsetMetrics(name, 0, math.nan, math.nan, ConfusionCounts(), empty=True)
    t, p = true_c[idx], pred_c[idx]
    cc = confusion(zip(p == top, t == top))
    return SubsetMetrics(name, len(idx), float(np.mean(t == p)), cc.accuracy, cc)


def split_report(report: EvalReport, records: Seq[LabeledRecord]) -> dict[str, SubsetMetrics]:
    """Metrics over the perfect-match and mismatch subsets; empty subsets are flagged."""
    if len(records) != len(report.true_class):
        raise ValueError("records are not aligned with the report's predictions")
    perfect = np.array([r.record.is_perfect_match for r in records], dtype=bool)
    top = report.n_classes - 1
    return {
        "perfect": _subset("perfect", np.flatnonzero(perfect), report.true_class, report.pred_class, top),
        "mismatch": _subset("mismatch", np.flatnonzero(~perfect), report.true_class, report.pred_class, top),
    }


def _run_fold(args):
    fold, train_recs, test_recs, weights, cfg = args
    model, _ = train(train_recs, weights, cfg)
    X, _ = encode_records(test_recs, weights)
    return fold, predict_batch(model, X)


def cross_validate(
    records: Seq[LabeledRecord],
    weights: EncodingWeights,
    cfg: TrainConfig = TrainConfig(),
    k: int = 20,
    seed: int = 0,
    jobs: int = 1,
) -> EvalReport:
    """k-fold CV with pooled out-of-fold predictions.

    Fold ``f`` trains with seed ``cfg.seed + f``. Results are reduced in fold
    order, so ``jobs`` never changes the output.
    """
    records = list(records)
    folds = kfold_split(len(records), k, seed)
    n_classes = records[0].n_classes
    tasks = []
    for f in range(k):
        tr = [records[i] for i in folds.train_indices(f)]
        te = [records[i] for i in folds.test_indices(f)]
        tasks.append((f, tr, te, weights, replace(cfg, seed=cfg.seed + f)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_fold, tasks))
    else:
        results = [_run_fold(t) for t in tasks]

    true_c = np.array([r.class_id for r in records], dtype=int)
    probs = np.zeros((len(records), n_classes))
    fold_results = []
    top = n_classes - 1
    for (f, p), task in zip(results, tasks):
        idx = np.array(folds.test_indices(f), dtype=int)
        probs[idx] = p
        pc = p.argmax(axis=1)
        fold_results.append(FoldResult(
            f, len(task[1]), len(idx),
            float(np.mean(pc == true_c[idx])),
            float(np.mean((pc == top) == (true_c[idx] == top))),
        ))
    pred_c = probs.argmax(axis=1)
    scores = probs[:, top]
    cc = confusion(zip(pred_c == top, true_c == top))
    report = EvalReport(
        n_records=len(records),
        n_classes=n_classes,
        k=k,
        seed=seed,
        accuracy=float(np.mean(pred_c == true_c)),
        binary_accuracy=cc.accuracy,
        confusion=cc,
        roc=roc_auc(scores, true_c == top),
        folds=fold_results,
        subsets={},
        true_class=true_c,
        pred_class=pred_c,
        scores=scores,
    )
    report.subsets = split_report(report, records)
    return report


def host_info() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor() or "unknown",
        "cpu_count": os.cpu_count(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def benchmark_latency(model: Model, inputs: np.ndarray, repetitions: int = 1,
                      warmup: int = 10) -> LatencyReport:
    """Mean wall-clock time of single-input ``model.predict`` calls."""
    inputs = np.asarray(inputs, dtype=np.float64)
    n_calls = len(inputs) * repetitions
    if n_calls < 100:
        raise ValueError(f"need at least 100 timed evaluations, got {n_calls}")
    for x in inputs[:warmup]:
        model.predict(x)
    start = time.perf_counter()
    for _ in range(repetitions):
        for x in inputs:
            model.predict(x)
    total = time.perf_counter() - start
    mean = total / n_calls
    return LatencyReport(n_calls, total, mean, 1.0 / mean if mean > 0 else math.inf, host_info())
