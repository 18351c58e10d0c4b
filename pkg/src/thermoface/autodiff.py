"""Minimal dense-tensor engine: forward ops plus reverse-mode gradients.

Everything is float64 and pure: ops never mutate their inputs, and identical
inputs give bitwise-identical outputs. Differentiable computations run on an
explicit GradTape; replaying the tape in reverse creation order yields the
gradients, so no graph search is needed.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DimensionError

Array = np.ndarray


class Tensor:
    """A dense float64 array, optionally tracked on a GradTape."""

    __slots__ = ("data", "tape", "tid")

    def __init__(self, data, tape: "GradTape | None" = None, tid: int | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self.tid = tid

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, tracked={self.tape is not None})"


class GradTape:
    """Ordered record of operations with their local backward rules."""

    def __init__(self):
        self._entries: list[tuple[int, tuple[int | None, ...], Callable]] = []
        self._next_tid = 0

    def watch(self, data) -> Tensor:
        """Create a leaf tensor whose gradient will be reported."""
        self._next_tid += 1
        return Tensor(data, tape=self, tid=self._next_tid)

    def record(self, out_data: Array, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
        """Append one operation; `backward(grad_out)` must return per-input grads."""
        self._next_tid += 1
        out = Tensor(out_data, tape=self, tid=self._next_tid)
        self._entries.append((out.tid, tuple(t.tid for t in inputs), backward))
        return out

    def __len__(self) -> int:
        return len(self._entries)

    def gradients(self, loss: Tensor) -> dict[int, Array]:
        """Gradients of a scalar loss for every tracked tensor on a path to it.

        Keys are tensor ids; tensors not connected to the loss are absent.
        The gradient of the loss with respect to itself is 1.
        """
        if loss.tape is not self or loss.tid is None:
            raise ContractError("loss tensor was not produced on this tape")
        if loss.data.size != 1:
            raise ContractError(f"loss must be scalar, got shape {loss.data.shape}")
        grads: dict[int, Array] = {loss.tid: np.ones_like(loss.data)}
        for out_tid, in_tids, backward in reversed(self._entries):
            grad_out = grads.get(out_tid)
            if grad_out is None:
                continue  # not on any path to the loss
            for tid, contrib in zip(in_tids, backward(grad_out)):
                if tid is None or contrib is None:
                    continue
                prev = grads.get(tid)
                # `prev + contrib` (never +=) so stored arrays are not mutated
                grads[tid] = contrib if prev is None else prev + contrib
        return grads


def _tape_of(*tensors: Tensor) -> GradTape | None:
    tape = None
    for t in tensors:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif tape is not t.tape:
            raise ContractError("operands were recorded on different tapes")
    return tape


def _emit(out_data: Array, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    tape = _tape_of(*inputs)
    if tape is None:
        return Tensor(out_data)
    return tape.record(out_data, inputs, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two same-shape tensors."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"add: shapes {a.data.shape} and {b.data.shape} differ")
    return _emit(a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise difference of two same-shape tensors."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"sub: shapes {a.data.shape} and {b.data.shape} differ")
    return _emit(a.data - b.data, (a, b), lambda g: (g, -g))


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply every element by the constant c."""
    return _emit(x.data * c, (x,), lambda g: (g * c,))


def const_minus(c: float, x: Tensor) -> Tensor:
    """Compute c - x elementwise for a constant c."""
    return _emit(c - x.data, (x,), lambda g: (-g,))


def square(x: Tensor) -> Tensor:
    """Elementwise square."""
    xd = x.data
    return _emit(xd * xd, (x,), lambda g: (2.0 * xd * g,))


def sqrt(x: Tensor) -> Tensor:
    """Elementwise square root; inputs must be non-negative."""
    xd = x.data
    if np.any(xd < 0.0):
        raise ContractError("sqrt: negative input")
    out = np.sqrt(xd)

    def backward(g):
        # derivative 1/(2*sqrt(x)); at x == 0 use subgradient 0 to stay finite
        factor = np.zeros_like(out)
        nz = out > 0.0
        factor[nz] = 0.5 / out[nz]
        return (g * factor,)

    return _emit(out, (x,), backward)


def total(x: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    xd = x.data
    out = np.asarray(xd.sum())
    return _emit(out, (x,), lambda g: (np.broadcast_to(g, xd.shape),))


def relu(x: Tensor) -> Tensor:
    """Elementwise max(0, x)."""
    xd = x.data
    return _emit(np.maximum(xd, 0.0), (x,), lambda g: (g * (xd > 0.0),))


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    """View the same elements under a new shape."""
    xd = x.data
    try:
        out = xd.reshape(shape)
    except ValueError as e:
        raise DimensionError(f"reshape: {e}") from None
    return _emit(out, (x,), lambda g: (g.reshape(xd.shape),))


def conv2d(x: Tensor, kernels: Tensor, bias: Tensor, stride: int = 1) -> Tensor:
    """Valid (unpadded) 2-D convolution.

    x is C_in x H x W, kernels are C_out x C_in x k x k, bias has length C_out.
    Output is C_out x H' x W' with H' = (H - k)//stride + 1 and likewise W'.
    """
    xd, kd, bd = x.data, kernels.data, bias.data
    if xd.ndim != 3:
        raise DimensionError(f"conv2d: input must be C x H x W, got shape {xd.shape}")
    if kd.ndim != 4:
        raise DimensionError(f"conv2d: kernels must be C_out x C_in x k x k, got shape {kd.shape}")
    c_in, h, w = xd.shape
    c_out, kc_in, kh, kw = kd.shape
    if kc_in != c_in:
        raise DimensionError(f"conv2d: kernels expect {kc_in} input channels, input has {c_in}")
    if kh != kw:
        raise DimensionError(f"conv2d: kernels must be square, got {kh}x{kw}")
    k = kh
    if k > h or k > w:
        raise DimensionError(f"conv2d: kernel size {k} exceeds input {h}x{w}")
    if bd.shape != (c_out,):
        raise DimensionError(f"conv2d: bias shape {bd.shape} does not match {c_out} output channels")
    if stride < 1:
        raise ContractError("conv2d: stride must be positive")

    h_out = (h - k) // stride + 1
    w_out = (w - k) // stride + 1
    sc, sh, sw = xd.strides
    windows = np.lib.stride_tricks.as_strided(
        xd, shape=(c_in, h_out, w_out, k, k),
        strides=(sc, sh * stride, sw * stride, sh, sw))
    out = np.tensordot(kd, windows, axes=([1, 2, 3], [0, 3, 4])) + bd[:, None, None]

    need_x = x.tape is not None
    need_k = kernels.tape is not None
    need_b = bias.tape is not None

    def backward(g):
        gx = gk = gb = None
        if need_b:
            gb = g.sum(axis=(1, 2))
        if need_k:
            gk = np.tensordot(g, windows, axes=([1, 2], [1, 2]))
        if need_x:
            gx = np.zeros_like(xd)
            for i in range(k):
                for j in range(k):
                    # output (oh, ow) read input (oh*stride + i, ow*stride + j)
                    gx[:, i:i + stride * h_out:stride, j:j + stride * w_out:stride] += \
                        np.tensordot(kd[:, :, i, j], g, axes=([0], [0]))
        return gx, gk, gb

    return _emit(out, (x, kernels, bias), backward)


def max_pool2d(x: Tensor, k: int) -> Tensor:
    """Non-overlapping k x k max pooling; H and W must be divisible by k.

    The backward pass routes each gradient to the first maximal cell of its
    window in row-major order.
    """
    xd = x.data
    if xd.ndim != 3:
        raise DimensionError(f"max_pool2d: input must be C x H x W, got shape {xd.shape}")
    if k < 1:
        raise ContractError("max_pool2d: pool size must be positive")
    c, h, w = xd.shape
    if h % k or w % k:
        raise DimensionError(f"max_pool2d: spatial size {h}x{w} not divisible by {k}")
    h_out, w_out = h // k, w // k
    # window elements laid out row-major so argmax uses the required tie-break
    windows = xd.reshape(c, h_out, k, w_out, k).transpose(0, 1, 3, 2, 4).reshape(c, h_out, w_out, k * k)
    idx = windows.argmax(axis=3)
    out = np.take_along_axis(windows, idx[..., None], axis=3)[..., 0]

    def backward(g):
        gw = np.zeros((c, h_out, w_out, k * k))
        np.put_along_axis(gw, idx[..., None], g[..., None], axis=3)
        gx = gw.reshape(c, h_out, w_out, k, k).transpose(0, 1, 3, 2, 4).reshape(c, h, w)
        return (gx,)

    return _emit(out, (x,), backward)


def dense(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """Affine map W @ x + b for a vector x."""
    xd, wd, bd = x.data, weights.data, bias.data
    if xd.ndim != 1 or wd.ndim != 2:
        raise DimensionError(f"dense: expected vector and matrix, got {xd.shape} and {wd.shape}")
    m, n = wd.shape
    if xd.shape != (n,):
        raise DimensionError(f"dense: weights {m}x{n} cannot act on input of length {xd.shape[0]}")
    if bd.shape != (m,):
        raise DimensionError(f"dense: bias length {bd.shape} does not match {m} outputs")
    out = wd @ xd + bd

    need_x = x.tape is not None
    need_w = weights.tape is not None
    need_b = bias.tape is not None

    def backward(g):
        gx = g @ wd if need_x else None
        gw = np.outer(g, xd) if need_w else None
        gb = g if need_b else None
        return gx, gw, gb

    return _emit(out, (x, weights, bias), backward)


def grad_check(f: Callable[[Tensor], Tensor], x, eps: float) -> float:
    """Max relative error between analytic and central-difference gradients.

    f must map a tensor to a scalar tensor and work both with and without a
    tape. The error per element is |analytic - numeric| divided by
    max(|analytic|, |numeric|, 1e-8).
    """
    if eps <= 0:
        raise ContractError("grad_check: eps must be positive")
    xd = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=np.float64)

    tape = GradTape()
    xt = tape.watch(xd)
    loss = f(xt)
    if loss.data.size != 1:
        raise ContractError("grad_check: f must return a scalar")
    analytic = tape.gradients(loss).get(xt.tid)
    if analytic is None:
        analytic = np.zeros_like(xd)

    def eval_at(values: Array) -> float:
        out = f(Tensor(values))
        return float(out.data.reshape(()))

    numeric = np.zeros(xd.size)
    flat = xd.ravel()
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] = flat[i] + eps
        up = eval_at(bumped.reshape(xd.shape))
        bumped[i] = flat[i] - eps
        down = eval_at(bumped.reshape(xd.shape))
        numeric[i] = (up - down) / (2.0 * eps)
    numeric = numeric.reshape(xd.shape)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    if xd.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / denom))
