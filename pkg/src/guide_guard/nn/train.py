"""Mini-batch training loop and batch inference."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence as Seq

import numpy as np

from ..dataset import LabeledRecord
from ..errors import DegenerateDataset, InputError
from ..seqcore import EncodingWeights, encode_pairs
from . import functional as F
from .model import ArchConfig, Model
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    init: str = "he-uniform"
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int | None = None
    arch: ArchConfig = field(default_factory=ArchConfig)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InputError("epochs and batch_size must be >= 1")
        if not self.lr > 0:
            raise InputError("lr must be positive")
        if self.patience is not None and self.patience < 1:
            raise InputError("patience must be >= 1 when set")


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


def encode_records(records: Seq[LabeledRecord], weights: EncodingWeights) -> tuple[np.ndarray, np.ndarray]:
    X = encode_pairs(((r.record.guide, r.record.target) for r in records), weights)
    y = np.array([r.class_id for r in records], dtype=int)
    return X, y


def fit(model: Model, X: np.ndarray, y: np.ndarray, cfg: TrainConfig,
        rng: np.random.Generator) -> list[EpochStats]:
    """Train ``model`` in place on encoded arrays."""
    state = AdamState.for_params(
        model.parameters(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps
    )
    history: list[EpochStats] = []
    best, stale = np.inf, 0
    n = len(y)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total_loss, correct = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits = model.forward(X[idx])
            loss, grad = F.softmax_cross_entropy(logits, y[idx])
            model.backward(grad)
            adam_step(model.parameters(), model.gradients(), state)
            total_loss += loss * len(idx)
            correct += int((logits.argmax(axis=1) == y[idx]).sum())
        stats = EpochStats(epoch, total_loss / n, correct / n)
        history.append(stats)
        log.debug("epoch %d loss %.4f acc %.4f", epoch, stats.loss, stats.accuracy)
        if cfg.patience is not None:
            if stats.loss < best - 1e-6:
                best, stale = stats.loss, 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    return history


def train(
    records: Seq[LabeledRecord], weights: EncodingWeights, cfg: TrainConfig = TrainConfig()
) -> tuple[Model, list[EpochStats]]:
    """Build the configured network and fit it to labelled records.

    Everything random (initialisation, batch order) draws from one generator
    seeded with ``cfg.seed``, so identical inputs give identical weights.
    """
    if not records:
        raise DegenerateDataset("no training records")
    n_classes = records[0].n_classes
    X, y = encode_records(records, weights)
    if len(np.unique(y)) < 2:
        raise DegenerateDataset("training data contains a single class")
    rng = np.random.default_rng(cfg.seed)
    model = Model(cfg.arch.layers(n_classes), X.shape[1:], encoding=weights).init(rng, cfg.init)
    history = fit(model, X, y, cfg, rng)
    return model, history


def predict_batch(model: Model, X: np.ndarray, batch_size: int = 1024) -> np.ndarray:
    """Probabilities for many encoded inputs, evaluated in chunks."""
    if len(X) == 0:
        return np.zeros((0, model.n_classes))
    return np.concatenate(
        [model.predict_proba(X[i:i + batch_size]) for i in range(0, len(X), batch_size)]
    )
