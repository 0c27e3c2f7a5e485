"""Layer specs and their trainable counterparts."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import ClassVar, Union

import numpy as np

from ..errors import ShapeMismatch
from . import functional as F

ACTIVATIONS = ("relu", "linear", "softmax")


@dataclass(frozen=True)
class Conv1DSpec:
    filters: int
    kernel: int = 3
    stride: int = 1
    padding: int = 0
    activation: str = "relu"
    kind: ClassVar[str] = "conv1d"


@dataclass(frozen=True)
class MaxPool1DSpec:
    window: int = 2
    stride: int = 2
    kind: ClassVar[str] = "maxpool1d"


@dataclass(frozen=True)
class FlattenSpec:
    kind: ClassVar[str] = "flatten"


@dataclass(frozen=True)
class DenseSpec:
    units: int
    activation: str = "relu"
    kind: ClassVar[str] = "dense"


LayerSpec = Union[Conv1DSpec, MaxPool1DSpec, FlattenSpec, DenseSpec]
_SPEC_TYPES = {c.kind: c for c in (Conv1DSpec, MaxPool1DSpec, FlattenSpec, DenseSpec)}


def spec_to_dict(spec: LayerSpec) -> dict:
    return {"kind": spec.kind, **asdict(spec)}


def spec_from_dict(d: dict) -> LayerSpec:
    d = dict(d)
    kind = d.pop("kind")
    try:
        return _SPEC_TYPES[kind](**d)
    except (KeyError, TypeError) as exc:
        raise ShapeMismatch(f"bad layer descriptor {kind!r}: {exc}") from exc


class Layer:
    """Base layer: caches what backward needs during forward."""

    params: dict[str, np.ndarray]
    grads: dict[str, np.ndarray]

    def __init__(self, spec: LayerSpec, in_shape: tuple[int, ...]):
        self.spec = spec
        self.in_shape = in_shape
        self.params = {}
        self.grads = {}
        self._cache = None

    out_shape: tuple[int, ...]

    def init(self, rng: np.random.Generator, scheme: str) -> None:
        pass

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, g: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return F.relu(z) if activation == "relu" else z


def _uniform(rng, fan_in: int, shape, scheme: str, output: bool) -> np.ndarray:
    if output:
        limit = 0.1 / np.sqrt(fan_in)
    elif scheme == "he-uniform":
        limit = np.sqrt(6.0 / fan_in)
    elif scheme == "zeros":
        return np.zeros(shape)
    else:
        raise ValueError(f"unknown init scheme {scheme!r}")
    return rng.uniform(-limit, limit, size=shape)


class Conv1D(Layer):
    def __init__(self, spec: Conv1DSpec, in_shape):
        super().__init__(spec, in_shape)
        if len(in_shape) != 2:
            raise ShapeMismatch(f"conv1d needs (L, C) input, got {in_shape}")
        L, C = in_shape
        Lo = F.conv_output_length(L, spec.kernel, spec.stride, spec.padding)
        if Lo < 1 or spec.filters < 1 or spec.stride < 1 or spec.padding < 0:
            raise ShapeMismatch(f"conv1d {spec} does not fit input {in_shape}")
        self.out_shape = (Lo, spec.filters)
        self.params = {
            "kernel": np.zeros((spec.kernel, C, spec.filters)),
            "bias": np.zeros(spec.filters),
        }

    def init(self, rng, scheme):
        k = self.params["kernel"]
        fan_in = k.shape[0] * k.shape[1]
        self.params["kernel"] = _uniform(rng, fan_in, k.shape, scheme, self.spec.activation != "relu")
        self.params["bias"] = np.zeros_like(self.params["bias"])

    def forward(self, x):
        s = self.spec
        z = F.conv1d_forward(x, self.params["kernel"], self.params["bias"], s.stride, s.padding)
        self._cache = (x, z)
        return _activate(z, s.activation)

    def backward(self, g):
        x, z = self._cache
        if self.spec.activation == "relu":
            g = F.relu_backward(g, z)
        s = self.spec
        gi, gk, gb = F.conv1d_backward(g, x, self.params["kernel"], s.stride, s.padding)
        self.grads = {"kernel": gk, "bias": gb}
        return gi


class MaxPool1D(Layer):
    def __init__(self, spec: MaxPool1DSpec, in_shape):
        super().__init__(spec, in_shape)
        if len(in_shape) != 2 or spec.window > in_shape[0] or spec.window < 1 or spec.stride < 1:
            raise ShapeMismatch(f"maxpool1d {spec} does not fit input {in_shape}")
        Lo = (in_shape[0] - spec.window) // spec.stride + 1
        self.out_shape = (Lo, in_shape[1])

    def forward(self, x):
        out, idx = F.maxpool1d_forward(x, self.spec.window, self.spec.stride)
        self._cache = idx
        return out

    def backward(self, g):
        return F.maxpool1d_backward(g, self._cache, self.in_shape[0])


class Flatten(Layer):
    def __init__(self, spec: FlattenSpec, in_shape):
        super().__init__(spec, in_shape)
        self.out_shape = (int(np.prod(in_shape)),)

    def forward(self, x):
        return x.reshape(x.shape[0], -1)

    def backward(self, g):
        return g.reshape((g.shape[0], *self.in_shape))


class Dense(Layer):
    def __init__(self, spec: DenseSpec, in_shape):
        super().__init__(spec, in_shape)
        if len(in_shape) != 1:
            raise ShapeMismatch(f"dense needs a flat input, got {in_shape}; add a flatten layer")
        if spec.units < 1 or spec.activation not in ACTIVATIONS:
            raise ShapeMismatch(f"bad dense layer {spec}")
        self.out_shape = (spec.units,)
        self.params = {"W": np.zeros((spec.units, in_shape[0])), "b": np.zeros(spec.units)}

    def init(self, rng, scheme):
        W = self.params["W"]
        self.params["W"] = _uniform(rng, W.shape[1], W.shape, scheme, self.spec.activation != "relu")
        self.params["b"] = np.zeros_like(self.params["b"])

    def forward(self, x):
        z = F.dense_forward(x, self.params["W"], self.params["b"])
        self._cache = (x, z)
        return _activate(z, self.spec.activation)

    def backward(self, g):
        x, z = self._cache
        if self.spec.activation == "relu":
            g = F.relu_backward(g, z)
        gi, gW, gb = F.dense_backward(g, x, self.params["W"])
        self.grads = {"W": gW, "b": gb}
        return gi


_LAYER_TYPES = {"conv1d": Conv1D, "maxpool1d": MaxPool1D, "flatten": Flatten, "dense": Dense}


def build_layer(spec: LayerSpec, in_shape: tuple[int, ...]) -> Layer:
    return _LAYER_TYPES[spec.kind](spec, in_shape)
