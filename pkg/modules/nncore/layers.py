"""
Layers cho CVAE: conv3d, convtranspose3d, linear, relu/sigmoid.

Tensors are numpy arrays laid out row-major as (C, D, H, W) or batched
(N, C, D, H, W). Convolutions use cross-correlation semantics with an
optional symmetric zero padding; convtranspose3d is the exact adjoint of
conv3d for the same weight, stride and padding.
"""
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from modules.errors import RejectedInputError, ShapeError
from modules.nncore.tape import Tensorish, make_op, reshape, value_of


class LayerKind(str, Enum):
    """Supported layer kinds"""
    CONV3D = "conv3d"
    CONVTRANSPOSE3D = "convtranspose3d"
    LINEAR = "linear"


@dataclass
class LayerParams:
    """
    Weight + bias của một layer.

    conv3d:          weight (C_out, C_in, k, k, k), bias (C_out,)
    convtranspose3d: weight (C_in, C_out, k, k, k), bias (C_out,)
    linear:          weight (M, N), bias (M,)

    weight/bias may be Vars when gradients are wanted.
    """
    kind: LayerKind
    weight: Tensorish
    bias: Tensorish
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        self.kind = LayerKind(self.kind)
        w, b = value_of(self.weight), value_of(self.bias)
        if self.kind is LayerKind.LINEAR:
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"linear params need weight (M, N) and bias (M,), got {w.shape} and {b.shape}")
            return
        if w.ndim != 5 or not (w.shape[2] == w.shape[3] == w.shape[4]):
            raise ShapeError(f"{self.kind.value} weight must be (a, b, k, k, k), got {w.shape}")
        if b.shape != (self.out_channels,):
            raise ShapeError(f"{self.kind.value} bias must be ({self.out_channels},), got {b.shape}")
        if self.stride < 1 or self.padding < 0:
            raise ShapeError(f"invalid stride {self.stride} / padding {self.padding}")

    @property
    def kernel_size(self) -> int:
        w = value_of(self.weight)
        return 1 if self.kind is LayerKind.LINEAR else w.shape[2]

    @property
    def in_channels(self) -> int:
        w = value_of(self.weight)
        if self.kind is LayerKind.CONV3D:
            return w.shape[1]
        if self.kind is LayerKind.CONVTRANSPOSE3D:
            return w.shape[0]
        return w.shape[1]

    @property
    def out_channels(self) -> int:
        w = value_of(self.weight)
        if self.kind is LayerKind.CONVTRANSPOSE3D:
            return w.shape[1]
        return w.shape[0]


def conv_output_size(n: int, kernel: int, stride: int, padding: int) -> int:
    return (n + 2 * padding - kernel) // stride + 1


def convtranspose_output_size(n: int, kernel: int, stride: int, padding: int) -> int:
    return (n - 1) * stride + kernel - 2 * padding


# ---------------------------------------------------------------------------
# Raw numpy kernels (batched, 5-D)
# ---------------------------------------------------------------------------

def _pad(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p), (p, p)))


def _crop(x: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return x
    return x[:, :, p:-p, p:-p, p:-p]


def _windows(xp: np.ndarray, k: int, s: int) -> np.ndarray:
    win = sliding_window_view(xp, (k, k, k), axis=(2, 3, 4))
    return win[:, :, ::s, ::s, ::s]


def _correlate(xp: np.ndarray, w: np.ndarray, s: int) -> np.ndarray:
    """(N, C, ...) * (O, C, k, k, k) -> (N, O, ...)"""
    return np.einsum('ncdhwijk,ocijk->nodhw', _windows(xp, w.shape[2], s), w, optimize=True)


def _correlate_weight_grad(xp: np.ndarray, g: np.ndarray, k: int, s: int) -> np.ndarray:
    """Gradient of _correlate w.r.t. its weight: (O, C, k, k, k)"""
    return np.einsum('ncdhwijk,nodhw->ocijk', _windows(xp, k, s), g, optimize=True)


def _scatter(g: np.ndarray, w: np.ndarray, out_spatial: Tuple[int, int, int], s: int) -> np.ndarray:
    """Adjoint of _correlate w.r.t. its input: (N, O, ...) through (O, C, k, k, k) -> (N, C, *out_spatial)"""
    k = w.shape[2]
    dtype = np.result_type(g, w)
    out = np.zeros((g.shape[0], w.shape[1]) + tuple(out_spatial), dtype=dtype)
    d, h, wd = g.shape[2:]
    for i, j, l in itertools.product(range(k), repeat=3):
        out[:, :, i:i + s * d:s, j:j + s * h:s, l:l + s * wd:s] += np.einsum(
            'nodhw,oc->ncdhw', g, w[:, :, i, j, l], optimize=True)
    return out


# ---------------------------------------------------------------------------
# Public ops
# ---------------------------------------------------------------------------

def _as_batched(x: Tensorish, op: str) -> Tuple[Tensorish, bool]:
    xv = value_of(x)
    if xv.ndim == 4:
        return reshape(x, (1,) + xv.shape), True
    if xv.ndim != 5:
        raise ShapeError(f"{op}: input must be (C, D, H, W) or (N, C, D, H, W), got {xv.shape}")
    return x, False


def _unbatch(out: Tensorish, was_single: bool) -> Tensorish:
    if not was_single:
        return out
    return reshape(out, value_of(out).shape[1:])


def conv3d(input: Tensorish, params: LayerParams) -> Tensorish:
    """
    Cross-correlation 3D, output D' = floor((D + 2p - k) / s) + 1 mỗi trục.
    Raises:
        ShapeError: kênh không khớp hoặc kernel lớn hơn input (sau padding)
    """
    if params.kind is not LayerKind.CONV3D:
        raise ShapeError(f"conv3d got {params.kind.value} params")
    x, single = _as_batched(input, 'conv3d')
    xv = value_of(x)
    w, b = value_of(params.weight), value_of(params.bias)
    k, s, p = params.kernel_size, params.stride, params.padding
    if xv.shape[1] != params.in_channels or min(xv.shape[2:]) + 2 * p < k:
        raise ShapeError(f"conv3d: input shape {value_of(input).shape} incompatible with weight shape {w.shape} "
                         f"(stride={s}, padding={p})")

    xp = _pad(xv, p)
    out = _correlate(xp, w, s) + b[None, :, None, None, None]

    def backward(g):
        dx = _crop(_scatter(g, w, xp.shape[2:], s), p)
        dw = _correlate_weight_grad(xp, g, k, s)
        db = g.sum(axis=(0, 2, 3, 4))
        return dx, dw, db

    return _unbatch(make_op(out, (x, params.weight, params.bias), backward), single)


def convtranspose3d(input: Tensorish, params: LayerParams) -> Tensorish:
    """
    Transposed convolution: adjoint của conv3d với cùng weight/stride/padding,
    output D' = (D - 1) * s + k - 2p mỗi trục.
    """
    if params.kind is not LayerKind.CONVTRANSPOSE3D:
        raise ShapeError(f"convtranspose3d got {params.kind.value} params")
    x, single = _as_batched(input, 'convtranspose3d')
    xv = value_of(x)
    w, b = value_of(params.weight), value_of(params.bias)
    k, s, p = params.kernel_size, params.stride, params.padding
    full = tuple((n - 1) * s + k for n in xv.shape[2:])
    if xv.shape[1] != params.in_channels or min(full) - 2 * p < 1:
        raise ShapeError(f"convtranspose3d: input shape {value_of(input).shape} incompatible with weight shape "
                         f"{w.shape} (stride={s}, padding={p})")

    out = _crop(_scatter(xv, w, full, s), p) + b[None, :, None, None, None]

    def backward(g):
        gp = _pad(g, p)
        dx = _correlate(gp, w, s)
        dw = _correlate_weight_grad(gp, xv, k, s)
        db = g.sum(axis=(0, 2, 3, 4))
        return dx, dw, db

    return _unbatch(make_op(out, (x, params.weight, params.bias), backward), single)


def linear(input: Tensorish, params: LayerParams) -> Tensorish:
    """output = W . input + b; input (N,) or batched (B, N)"""
    if params.kind is not LayerKind.LINEAR:
        raise ShapeError(f"linear got {params.kind.value} params")
    xv = value_of(input)
    w, b = value_of(params.weight), value_of(params.bias)
    if xv.ndim not in (1, 2) or xv.shape[-1] != w.shape[1]:
        raise ShapeError(f"linear: input shape {xv.shape} incompatible with weight shape {w.shape}")

    if xv.ndim == 1:
        out = w @ xv + b

        def backward(g):
            return w.T @ g, np.outer(g, xv), g
    else:
        out = xv @ w.T + b

        def backward(g):
            return g @ w, g.T @ xv, g.sum(axis=0)

    return make_op(out, (input, params.weight, params.bias), backward)


def relu(input: Tensorish) -> Tensorish:
    xv = value_of(input)
    mask = xv > 0
    return make_op(np.where(mask, xv, 0).astype(xv.dtype), (input,), lambda g: (g * mask,))


def sigmoid(input: Tensorish) -> Tensorish:
    """Sigmoid, clamped so that the output stays strictly inside (0, 1)"""
    xv = value_of(input)
    dtype = xv.dtype if np.issubdtype(xv.dtype, np.floating) else np.float64
    tiny = np.finfo(dtype).eps / 2
    out = np.clip(expit(xv.astype(dtype)), tiny, 1.0 - tiny)
    return make_op(out, (input,), lambda g: (g * out * (1.0 - out),))


ACTIVATIONS = {
    'relu': relu,
    'sigmoid': sigmoid,
}


def activation(input: Tensorish, kind: str) -> Tensorish:
    fn = ACTIVATIONS.get(kind)
    if fn is None:
        raise RejectedInputError(f"Unknown activation '{kind}', expected one of {sorted(ACTIVATIONS)}")
    return fn(input)


def apply_layer(input: Tensorish, params: LayerParams) -> Tensorish:
    if params.kind is LayerKind.CONV3D:
        return conv3d(input, params)
    if params.kind is LayerKind.CONVTRANSPOSE3D:
        return convtranspose3d(input, params)
    return linear(input, params)


def init_layer(kind: LayerKind, shape: Tuple[int, ...], rng: np.random.Generator,
               stride: int = 1, padding: int = 0, dtype=np.float64,
               gain: float = 2.0, zero: bool = False) -> LayerParams:
    """
    He-normal initialisation, zero bias.
    Args:
        shape: weight shape theo quy ước của LayerParams
        zero: tất cả weight bằng 0 (chỉ bias đi qua)
    """
    kind = LayerKind(kind)
    if kind is LayerKind.LINEAR:
        fan_in, out_dim = shape[1], shape[0]
    elif kind is LayerKind.CONV3D:
        fan_in, out_dim = shape[1] * shape[2] ** 3, shape[0]
    else:
        fan_in, out_dim = shape[0] * shape[2] ** 3 // max(stride, 1) ** 3, shape[1]
    if zero:
        weight = np.zeros(shape, dtype=dtype)
    else:
        weight = (rng.standard_normal(shape) * np.sqrt(gain / max(fan_in, 1))).astype(dtype)
    return LayerParams(kind, weight, np.zeros(out_dim, dtype=dtype), stride, padding)


__all__ = [
    'LayerKind', 'LayerParams', 'conv3d', 'convtranspose3d', 'linear', 'relu', 'sigmoid',
    'activation', 'apply_layer', 'init_layer', 'conv_output_size', 'convtranspose_output_size',
    'ACTIVATIONS',
]
