"""Sequential model over the layer set in :mod:`guide_guard.nn.layers`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence as Seq

import numpy as np

from ..errors import ShapeMismatch
from ..seqcore import EncodingWeights
from . import functional as F
from .layers import (
    Conv1DSpec,
    DenseSpec,
    FlattenSpec,
    Layer,
    LayerSpec,
    MaxPool1DSpec,
    build_layer,
)

INPUT_SHAPE = (46, 4)


@dataclass(frozen=True)
class ArchConfig:
    conv_filters: tuple[int, ...] = (64, 32)
    kernel: int = 3
    stride: int = 1
    padding: int = 0
    pool_window: int = 2
    pool_stride: int = 2
    dense_units: tuple[int, ...] = (400, 200, 100, 50, 25)

    def layers(self, n_classes: int = 8) -> list[LayerSpec]:
        specs: list[LayerSpec] = [
            Conv1DSpec(f, self.kernel, self.stride, self.padding) for f in self.conv_filters
        ]
        specs += [MaxPool1DSpec(self.pool_window, self.pool_stride), FlattenSpec()]
        specs += [DenseSpec(u) for u in self.dense_units]
        specs.append(DenseSpec(n_classes, activation="softmax"))
        return specs


def default_architecture(n_classes: int = 8) -> list[LayerSpec]:
    """conv(64,k3) -> conv(32,k3) -> maxpool(2) -> flatten -> 400-200-100-50-25 -> n_classes."""
    return ArchConfig().layers(n_classes)


@dataclass
class Prediction:
    probabilities: np.ndarray
    class_id: int
    is_positive: bool


class Model:
    """Ordered layers with shape chaining checked at construction.

    ``forward`` returns logits; the final softmax is applied by
    :meth:`predict_proba` and fused into the training loss.
    """

    def __init__(
        self,
        specs: Seq[LayerSpec],
        input_shape: tuple[int, ...] = INPUT_SHAPE,
        encoding: EncodingWeights | None = None,
    ):
        self.specs = list(specs)
        self.input_shape = tuple(input_shape)
        self.encoding = encoding
        if not self.specs:
            raise ShapeMismatch("model needs at least one layer")
        last = self.specs[-1]
        if not isinstance(last, DenseSpec) or last.activation != "softmax":
            raise ShapeMismatch("final layer must be a dense softmax layer")
        for s in self.specs[:-1]:
            if getattr(s, "activation", "relu") != "relu":
                raise ShapeMismatch(f"hidden layer {s} must use relu")
        self.layers: list[Layer] = []
        shape = self.input_shape
        for s in self.specs:
            layer = build_layer(s, shape)
            self.layers.append(layer)
            shape = layer.out_shape
        self.n_classes = last.units

    def init(self, rng: np.random.Generator, scheme: str = "he-uniform") -> Model:
        for layer in self.layers:
            layer.init(rng, scheme)
        return self

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1:] != self.input_shape:
            raise ShapeMismatch(f"model expects inputs of shape {self.input_shape}, got {x.shape[1:]}")
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad_logits: np.ndarray) -> np.ndarray:
        g = grad_logits
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for _, p in sorted(layer.params.items())]

    def gradients(self) -> list[np.ndarray]:
        return [layer.grads[k] for layer in self.layers for k in sorted(layer.params)]

    def set_parameters(self, values: Seq[np.ndarray]) -> None:
        values = list(values)
        for layer in self.layers:
            for k in sorted(layer.params):
                v = values.pop(0)
                if v.shape != layer.params[k].shape:
                    raise ShapeMismatch(f"parameter {k}: expected {layer.params[k].shape}, got {v.shape}")
                layer.params[k] = np.array(v, dtype=np.float64)
        if values:
            raise ShapeMismatch(f"{len(values)} surplus parameter arrays")

    def n_params(self) -> int:
        return sum(layer.n_params() for layer in self.layers)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Softmax probabilities for a batch (N, L, C) or a single (L, C) input."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 2
        p = F.softmax(self.forward(x[None] if single else x))
        return p[0] if single else p

    def predict(self, x: np.ndarray) -> Prediction:
        p = self.predict_proba(x)
        c = int(np.argmax(p))
        return Prediction(p, c, c == self.n_classes - 1)

    def summary(self) -> str:
        rows = [f"{'layer':<28}{'output shape':<16}{'params':>10}", "-" * 54]
        rows.append(f"{'input':<28}{str(self.input_shape):<16}{0:>10}")
        for layer in self.layers:
            s = layer.spec
            if isinstance(s, Conv1DSpec):
                name = f"conv1d(f={s.filters},k={s.kernel},s={s.stride},p={s.padding})"
            elif isinstance(s, MaxPool1DSpec):
                name = f"maxpool1d(w={s.window},s={s.stride})"
            elif isinstance(s, DenseSpec):
                name = f"dense({s.units},{s.activation})"
            else:
                name = "flatten"
            rows.append(f"{name:<28}{str(layer.out_shape):<16}{layer.n_params():>10}")
        rows += ["-" * 54, f"{'total':<44}{self.n_params():>10}"]
        return "\n".join(rows)
