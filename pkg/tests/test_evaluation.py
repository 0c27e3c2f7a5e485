import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from guide_guard.dataset import SyntheticConfig, assign_classes, generate_synthetic
from guide_guard.errors import EmptyInput, SingleClassInput
from guide_guard.evaluation import (
    ConfusionCounts,
    benchmark_latency,
    confusion,
    cross_validate,
    roc_auc,
)
from guide_guard.nn import ArchConfig, Model, TrainConfig, default_architecture
from guide_guard.seqcore import EncodingWeights


def pairwise_auc(scores, labels):
    """Independent oracle: fraction of (pos, neg) pairs ordered correctly, ties counting 1/2."""
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def test_auc_hand_case():
    assert roc_auc([0.9, 0.8, 0.7, 0.1], [1, 0, 1, 0]).auc == 0.75


def test_auc_all_tied_is_half():
    assert roc_auc([0.3] * 6, [1, 0, 1, 0, 0, 1]).auc == 0.5


def test_auc_perfect_and_inverted():
    assert roc_auc([3, 2, 1, 0], [1, 1, 0, 0]).auc == 1.0
    assert roc_auc([0, 1, 2, 3], [1, 1, 0, 0]).auc == 0.0


def test_roc_curve_endpoints_monotone():
    rng = np.random.default_rng(0)
    curve = roc_auc(rng.random(40), rng.random(40) < 0.4)
    xs, ys = zip(*curve.points)
    assert curve.points[0] == (0.0, 0.0) and curve.points[-1] == (1.0, 1.0)
    assert list(xs) == sorted(xs) and list(ys) == sorted(ys)
    assert curve.to_tsv().startswith("fpr\ttpr\tthreshold\n")


def test_auc_single_class_raises():
    with pytest.raises(SingleClassInput):
        roc_auc([0.1, 0.2], [1, 1])


@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=50))
def test_auc_matches_pairwise(pairs):
    scores = [s / 5 for s, _ in pairs]
    labels = [l for _, l in pairs]
    if all(labels) or not any(labels):
        return
    assert abs(roc_auc(scores, labels).auc - pairwise_auc(scores, labels)) <= 1e-12


def test_confusion_counts():
    cc = confusion([(True, True), (True, False), (False, False), (False, True), (False, False)])
    assert (cc.tp, cc.fp, cc.tn, cc.fn) == (1, 1, 2, 1)
    assert cc.accuracy == pytest.approx(3 / 5)
    assert cc.tpr == 0.5 and cc.tnr == pytest.approx(2 / 3)
    with pytest.raises(EmptyInput):
        confusion([])


def test_undefined_rates_are_nan():
    cc = ConfusionCounts(tp=0, fp=0, tn=3, fn=0)
    assert math.isnan(cc.tpr) and cc.tnr == 1.0


@pytest.fixture(scope="module")
def tiny_cv():
    recs = generate_synthetic(SyntheticConfig(n_targets=16, guides_per_target=7, noise_sd=0.0, seed=2))
    labeled, _ = assign_classes(recs)
    cfg = TrainConfig(epochs=2, arch=ArchConfig(conv_filters=(4,), dense_units=(16,)))
    return labeled, cfg


def test_cross_validate_report(tiny_cv):
    labeled, cfg = tiny_cv
    rep = cross_validate(labeled, EncodingWeights(), cfg, k=4, seed=0)
    assert rep.n_records == len(labeled) and len(rep.folds) == 4
    assert sum(f.n_test for f in rep.folds) == len(labeled)
    assert rep.subsets["perfect"].n == 16 and rep.subsets["mismatch"].n == 16 * 7
    assert rep.confusion.tp + rep.confusion.fn == sum(l.is_positive for l in labeled)
    d = json.loads(rep.to_json())
    assert d["auc"] == rep.roc.auc and "latency" not in d
    assert "Perfect Matches" in rep.table(reference=True)


def test_cross_validate_jobs_invariant(tiny_cv):
    labeled, cfg = tiny_cv
    a = cross_validate(labeled, EncodingWeights(), cfg, k=3, seed=1, jobs=1)
    b = cross_validate(labeled, EncodingWeights(), cfg, k=3, seed=1, jobs=2)
    assert a.to_json() == b.to_json()


def test_benchmark_latency_requires_100_calls():
    m = Model(default_architecture()).init(np.random.default_rng(0))
    with pytest.raises(ValueError):
        benchmark_latency(m, np.zeros((10, 46, 4)))
    rep = benchmark_latency(m, np.zeros((50, 46, 4)), repetitions=2)
    assert rep.n_calls == 100 and rep.mean_seconds > 0
    assert rep.host["cpu_count"] >= 1
