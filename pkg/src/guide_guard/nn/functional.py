"""Stateless forward/backward kernels.

Sequence tensors are (N, L, C); a 2-D (L, C) input is treated as a batch of
one and returned unbatched. Kernels are (K, C, F), dense weights (out, in).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatch


def _batched(x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim != 3:
        raise ShapeMismatch(f"expected (L, C) or (N, L, C) input, got shape {x.shape}")
    return x, False


def conv_output_length(length: int, kernel: int, stride: int, padding: int) -> int:
    return (length + 2 * padding - kernel) // stride + 1


def _conv_columns(x: np.ndarray, K: int, stride: int, padding: int) -> np.ndarray:
    """(N, L', K, C) view of the receptive fields, zero-padded on both ends."""
    if padding:
        x = np.pad(x, ((0, 0), (padding, padding), (0, 0)))
    win = sliding_window_view(x, K, axis=1)[:, ::stride]  # (N, L', C, K)
    return win.transpose(0, 1, 3, 2)


def _check_conv(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int, padding: int):
    if kernel.ndim != 3 or kernel.shape[1] != x.shape[2]:
        raise ShapeMismatch(f"kernel {kernel.shape} does not fit input channels {x.shape[2]}")
    if bias.shape != (kernel.shape[2],):
        raise ShapeMismatch(f"bias {bias.shape} does not match {kernel.shape[2]} filters")
    if stride < 1 or padding < 0:
        raise ShapeMismatch("stride must be >= 1 and padding >= 0")
    if kernel.shape[0] > x.shape[1] + 2 * padding:
        raise ShapeMismatch(f"kernel width {kernel.shape[0]} exceeds padded length")


def conv1d_forward(x, kernel, bias, stride: int = 1, padding: int = 0) -> np.ndarray:
    """out[i, f] = bias[f] + sum_{k,c} x[i*stride + k - padding, c] * kernel[k, c, f]."""
    x, single = _batched(x)
    kernel = np.asarray(kernel, dtype=np.float64)
    bias = np.asarray(bias, dtype=np.float64)
    _check_conv(x, kernel, bias, stride, padding)
    K, C, F = kernel.shape
    cols = _conv_columns(x, K, stride, padding)
    N, Lo = cols.shape[:2]
    out = cols.reshape(N * Lo, K * C) @ kernel.reshape(K * C, F) + bias
    out = out.reshape(N, Lo, F)
    return out[0] if single else out


def conv1d_backward(grad_out, x, kernel, stride: int = 1, padding: int = 0):
    """Gradients of :func:`conv1d_forward` w.r.t. input, kernel and bias."""
    x, single = _batched(x)
    g = np.asarray(grad_out, dtype=np.float64)
    if single:
        g = g[None]
    kernel = np.asarray(kernel, dtype=np.float64)
    K, C, F = kernel.shape
    cols = _conv_columns(x, K, stride, padding)
    N, Lo = cols.shape[:2]
    if g.shape != (N, Lo, F):
        raise ShapeMismatch(f"grad_out {g.shape} does not match forward output {(N, Lo, F)}")
    g2 = g.reshape(N * Lo, F)
    grad_kernel = (cols.reshape(N * Lo, K * C).T @ g2).reshape(K, C, F)
    grad_bias = g2.sum(axis=0)
    dcols = (g2 @ kernel.reshape(K * C, F).T).reshape(N, Lo, K, C)
    gpad = np.zeros((N, x.shape[1] + 2 * padding, C))
    span = stride * (Lo - 1) + 1
    for k in range(K):
        gpad[:, k:k + span:stride] += dcols[:, :, k]
    grad_input = gpad[:, padding:padding + x.shape[1]]
    if single:
        grad_input = grad_input[0]
    return grad_input, grad_kernel, grad_bias


def maxpool1d_forward(x, window: int = 2, stride: int | None = None):
    """Per-channel window maximum. Returns (output, argmax row indices).

    Ties resolve to the first maximum in the window.
    """
    x, single = _batched(x)
    stride = window if stride is None else stride
    if window < 1 or stride < 1 or window > x.shape[1]:
        raise ShapeMismatch(f"pool window {window} invalid for length {x.shape[1]}")
    win = sliding_window_view(x, window, axis=1)[:, ::stride]  # (N, L', C, w)
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    idx = arg + (np.arange(win.shape[1]) * stride)[None, :, None]
    if single:
        return out[0], idx[0]
    return out, idx


def maxpool1d_backward(grad_out, argmax, input_length: int) -> np.ndarray:
    g = np.asarray(grad_out, dtype=np.float64)
    single = g.ndim == 2
    if single:
        g, argmax = g[None], argmax[None]
    if g.shape != argmax.shape:
        raise ShapeMismatch(f"grad_out {g.shape} does not match argmax {argmax.shape}")
    N, _, C = g.shape
    grad = np.zeros((N, input_length, C))
    n = np.arange(N)[:, None, None]
    c = np.arange(C)[None, None, :]
    np.add.at(grad, (np.broadcast_to(n, g.shape), argmax, np.broadcast_to(c, g.shape)), g)
    return grad[0] if single else grad


def dense_forward(x, W, b) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if x.shape[-1] != W.shape[1] or np.shape(b) != (W.shape[0],):
        raise ShapeMismatch(f"dense: input {x.shape}, W {W.shape}, b {np.shape(b)}")
    return x @ W.T + b


def dense_backward(grad_out, x, W):
    """Returns (grad_input, grad_W, grad_b); inputs may be 1-D or (N, in)."""
    g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if g.shape[0] != x2.shape[0] or g.shape[1] != W.shape[0]:
        raise ShapeMismatch(f"dense backward: grad {g.shape}, input {x2.shape}, W {W.shape}")
    grad_input = g @ W
    if np.ndim(x) == 1:
        grad_input = grad_input[0]
    return grad_input, g.T @ x2, g.sum(axis=0)


def relu(x):
    return np.maximum(x, 0.0)


def relu_backward(grad_out, x):
    return grad_out * (x > 0)


def log_softmax(z, axis: int = -1):
    z = np.asarray(z, dtype=np.float64)
    m = z.max(axis=axis, keepdims=True)
    return z - m - np.log(np.exp(z - m).sum(axis=axis, keepdims=True))


def softmax(z, axis: int = -1):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def cross_entropy(p, class_id) -> float:
    """-log p[class_id] for a probability vector (clipped away from log 0)."""
    return float(-np.log(max(float(np.asarray(p)[class_id]), np.finfo(float).tiny)))


def softmax_cross_entropy(logits, labels):
    """Mean categorical cross-entropy of softmax(logits) and its logit gradient.

    Computed through log-sum-exp so large logits do not overflow.
    """
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    if y.shape[0] != z.shape[0]:
        raise ShapeMismatch(f"{z.shape[0]} logit rows but {y.shape[0]} labels")
    n = z.shape[0]
    logp = log_softmax(z)
    loss = float(-logp[np.arange(n), y].mean())
    grad = np.exp(logp)
    grad[np.arange(n), y] -= 1.0
    grad /= n
    if np.ndim(logits) == 1:
        grad = grad[0]
    return loss, grad
