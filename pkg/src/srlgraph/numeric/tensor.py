"""A small reverse-mode differentiation engine over float64 numpy arrays.

Operations record themselves on the active :class:`Tape` when at least one
input requires a gradient. Without an active tape the same functions just
compute values, which is what inference uses.
"""

from __future__ import annotations

import threading
from typing import Callable, Optional, Sequence

import numpy as np

DTYPE = np.float64

# forward outputs are checked for NaN/Inf unless this is switched off
CHECK_FINITE = True


class TapeError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_tape")
    # make ndarray <op> Tensor dispatch to the reflected Tensor methods
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._tape = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None):
        return tsum(self, axis)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)


class TapeNode:
    __slots__ = ("op", "inputs", "out", "backward")

    def __init__(self, op: str, inputs: Sequence[Tensor], out: Tensor, backward: Callable):
        self.op = op
        self.inputs = inputs
        self.out = out
        self.backward = backward


_local = threading.local()


def _stack() -> list:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def current_tape() -> Optional["Tape"]:
    stack = _stack()
    return stack[-1] if stack else None


class Tape:
    """Records operations in execution order, which is a topological order."""

    def __init__(self):
        self.nodes: list[TapeNode] = []
        self._consumed = False

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _stack().remove(self)

    def reset(self) -> None:
        for node in self.nodes:
            node.out.grad = None
        self.nodes = []
        self._consumed = False

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into ``.grad`` of every leaf requiring grad."""
        if loss._tape is not self:
            raise TapeError("backward called on a tensor not produced on this tape")
        if loss.data.size != 1:
            raise TapeError("backward needs a scalar loss")
        if self._consumed:
            raise TapeError("backward already ran on this tape; call reset() first")
        self._consumed = True
        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            g = node.out.grad
            if g is None:
                continue
            grads = node.backward(g)
            for x, gx in zip(node.inputs, grads):
                if gx is None or not x.requires_grad:
                    continue
                if x.grad is None:
                    x.grad = np.array(gx, dtype=DTYPE, copy=True)
                else:
                    x.grad = x.grad + gx
            if node.out._tape is self:
                node.out.grad = None  # intermediates are released once used


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _check(op: str, data: np.ndarray) -> None:
    if CHECK_FINITE and not np.all(np.isfinite(data)):
        raise FloatingPointError(f"non-finite value produced by {op}")


def _make(op: str, data, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    data = np.asarray(data, dtype=DTYPE)
    _check(op, data)
    out = Tensor(data)
    tape = current_tape()
    if tape is not None and any(x.requires_grad for x in inputs):
        out.requires_grad = True
        out._tape = tape
        tape.nodes.append(TapeNode(op, inputs, out, backward))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# elementwise arithmetic


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        "add",
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        "sub",
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(
        "mul",
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = _stable_sigmoid(x.data)
    return _make("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))


def log_sigmoid(x) -> Tensor:
    x = as_tensor(x)
    y = np.minimum(x.data, 0.0) - np.log1p(np.exp(-np.abs(x.data)))
    return _make("log_sigmoid", y, (x,), lambda g: (g * _stable_sigmoid(-x.data),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _make("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def leaky_relu(x, slope: float = 0.1) -> Tensor:
    x = as_tensor(x)
    pos = x.data > 0
    y = np.where(pos, x.data, slope * x.data)
    return _make("leaky_relu", y, (x,), lambda g: (g * np.where(pos, 1.0, slope),))


def relu(x) -> Tensor:
    return leaky_relu(x, 0.0)


def exp(x) -> Tensor:
    x = as_tensor(x)
    y = np.exp(x.data)
    return _make("exp", y, (x,), lambda g: (g * y,))


def log(x) -> Tensor:
    x = as_tensor(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(x.data)  # non-finite results are reported by _make
    return _make("log", y, (x,), lambda g: (g / x.data,))


def clip(x, lo: float, hi: float) -> Tensor:
    x = as_tensor(x)
    inside = (x.data >= lo) & (x.data <= hi)
    return _make("clip", np.clip(x.data, lo, hi), (x,), lambda g: (g * inside,))


# reductions and normalisation


def tsum(x, axis=None) -> Tensor:
    x = as_tensor(x)
    y = x.data.sum(axis=axis)

    def back(g):
        if axis is None:
            return (np.broadcast_to(g, x.shape),)
        axes = (axis,) if isinstance(axis, int) else axis
        axes = tuple(a % x.ndim for a in axes)
        return (np.broadcast_to(np.expand_dims(g, axes), x.shape),)

    return _make("sum", y, (x,), back)


def _masked(x: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return x
    return np.where(mask, x, -np.inf)


def softmax(x, mask=None) -> Tensor:
    """Softmax over the last axis; entries where ``mask`` is False get exactly 0."""
    x = as_tensor(x)
    z = _masked(x.data, mask)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _make("softmax", y, (x,), back)


def logsumexp(x, mask=None) -> Tensor:
    """log-sum-exp over the last axis restricted to ``mask``."""
    x = as_tensor(x)
    z = _masked(x.data, mask)
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    s = e.sum(axis=-1, keepdims=True)
    y = (np.log(s) + m)[..., 0]
    p = e / s
    return _make("logsumexp", y, (x,), lambda g: (g[..., None] * p,))


# shape manipulation


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    return _make("reshape", x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x, axes=None) -> Tensor:
    x = as_tensor(x)
    axes = tuple(axes) if axes is not None else tuple(reversed(range(x.ndim)))
    inv = tuple(np.argsort(axes))
    return _make("transpose", x.data.transpose(axes), (x,), lambda g: (g.transpose(inv),))


def getitem(x, index) -> Tensor:
    """Basic or advanced indexing; gradients scatter-add back."""
    x = as_tensor(x)

    def back(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, index, g)
        return (gx,)

    return _make("getitem", x.data[index], (x,), back)


def concat(xs: Sequence, axis: int = -1) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    y = np.concatenate([x.data for x in xs], axis=axis)
    ax = axis % y.ndim
    bounds = np.cumsum([x.shape[ax] for x in xs])[:-1]

    def back(g):
        return tuple(np.split(g, bounds, axis=ax))

    return _make("concat", y, tuple(xs), back)


def stack(xs: Sequence, axis: int = 0) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    y = np.stack([x.data for x in xs], axis=axis)

    def back(g):
        return tuple(np.moveaxis(g, axis, 0))

    return _make("stack", y, tuple(xs), back)


def augment(x) -> Tensor:
    """Append a constant 1 to the last axis (bias augmentation)."""
    x = as_tensor(x)
    ones = Tensor(np.ones(x.shape[:-1] + (1,)))
    return concat([x, ones], axis=-1)


# linear algebra


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)

    def back(g):
        if a.ndim == 1 or b.ndim == 1:
            return _vector_matmul_back(a.data, b.data, g)
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make("matmul", a.data @ b.data, (a, b), back)


def _vector_matmul_back(a, b, g):
    if a.ndim == 1 and b.ndim == 1:
        return g * b, g * a
    if a.ndim == 1:
        # (k,) @ (..., k, j) -> (..., j)
        ga = (g[..., None, :] * b).sum(axis=-1).reshape(-1, a.shape[0]).sum(axis=0)
        gb = a[:, None] * g[..., None, :]
        return ga, gb
    # (..., i, k) @ (k,) -> (..., i)
    ga = g[..., None] * b
    gb = (g[..., None] * a).reshape(-1, b.shape[0]).sum(axis=0)
    return ga, gb


def einsum(spec: str, *operands) -> Tensor:
    """Explicit-output einsum (``'ab,bc->ac'``) without repeated indices per operand."""
    ops = [as_tensor(x) for x in operands]
    lhs, out_spec = spec.replace(" ", "").split("->")
    in_specs = lhs.split(",")
    if len(in_specs) != len(ops):
        raise ValueError(f"einsum spec {spec!r} expects {len(in_specs)} operands")
    for s, x in zip(in_specs, ops):
        if len(s) != x.ndim:
            raise ValueError(f"einsum operand {s!r} has {x.ndim} dims")
    datas = [x.data for x in ops]
    y = np.einsum(spec, *datas, optimize=True)

    def back(g):
        grads = []
        for k, (sk, xk) in enumerate(zip(in_specs, ops)):
            if not xk.requires_grad:
                grads.append(None)
                continue
            others = [s for j, s in enumerate(in_specs) if j != k]
            avail = set(out_spec).union(*others) if others else set(out_spec)
            kept = "".join(c for c in sk if c in avail)
            sub_spec = ",".join([out_spec] + others) + "->" + kept
            other_data = [d for j, d in enumerate(datas) if j != k]
            gk = np.einsum(sub_spec, g, *other_data, optimize=True)
            if kept != sk:
                for ax, c in enumerate(sk):
                    if c not in avail:
                        gk = np.expand_dims(gk, ax)
                gk = np.broadcast_to(gk, xk.shape)
            grads.append(gk)
        return grads

    return _make("einsum", y, tuple(ops), back)


def _swap_last(x) -> Tensor:
    perm = list(range(x.ndim))
    perm[-1], perm[-2] = perm[-2], perm[-1]
    return transpose(x, perm)


def bilinear(v_left, w, v_right, augment_left: bool = True, augment_right: bool = False) -> Tensor:
    """Biaffine score ``[v_left; 1]^T W v_right`` over all (right i, left j) pairs.

    ``v_left`` is (..., n, d_l) and ``v_right`` (..., n, d_r); the result is
    (..., n_right, n_left) indexed [i, j]. With a leading label axis on ``w``
    the result gains a trailing label axis. Written as batched matmuls so
    the contractions run through BLAS.
    """
    vl = augment(v_left) if augment_left else as_tensor(v_left)
    vr = augment(v_right) if augment_right else as_tensor(v_right)
    w = as_tensor(w)
    if w.ndim == 2:
        # (..., j, y) @ (..., y, i) -> (..., j, i)
        return _swap_last((vl @ w) @ _swap_last(vr))
    lead = vl.ndim - 2
    vl = reshape(vl, vl.shape[:-2] + (1,) + vl.shape[-2:])
    vr = reshape(vr, vr.shape[:-2] + (1,) + vr.shape[-2:])
    s = (vl @ w) @ _swap_last(vr)  # (..., l, j, i)
    axes = tuple(range(lead)) + (lead + 2, lead + 1, lead)
    return transpose(s, axes)


def trilinear(v1, w, v2, v3) -> Tensor:
    """TriAffine score ``[v3; 1]^T v1^T W [v2; 1]`` for all index triples.

    ``W`` has shape (d+1, d, d+1) indexed [a, b, c] with v1 on b, v3 on a
    and v2 on c. Inputs are (..., n, d); the output is (..., n1, n2, n3)
    indexed by the positions of v1, v2, v3.
    """
    w, v1 = as_tensor(w), as_tensor(v1)
    a, d, c = w.shape
    lead = v1.ndim - 2
    wt = reshape(transpose(w, (1, 0, 2)), (d, a * c))
    v1w = reshape(v1 @ wt, v1.shape[:-1] + (a, c))  # (..., i, a, c)
    a2 = augment(v2)
    a3 = augment(v3)
    u = v1w @ reshape(_swap_last(a2), a2.shape[:-2] + (1, c, a2.shape[-2]))  # (..., i, a, j)
    out = reshape(a3, a3.shape[:-2] + (1,) + a3.shape[-2:]) @ u  # (..., i, k, j)
    return transpose(out, tuple(range(lead)) + (lead, lead + 2, lead + 1))


# regularisation


def dropout(x, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    x = as_tensor(x)
    if rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, keep)


# recurrence


def lstm_scan(xw, w_hh) -> Tensor:
    """Run an LSTM over time with precomputed input projections.

    ``xw`` is (D, B, T, 4h): input projection plus bias for each direction D,
    sequence B and step T; ``w_hh`` is (D, h, 4h). Gates are ordered
    input, forget, cell, output. Returns hidden states (D, B, T, h) with zero
    initial state. Backward runs truncation-free BPTT.
    """
    xw, w_hh = as_tensor(xw), as_tensor(w_hh)
    D, Bn, T, G = xw.shape
    h = G // 4
    W = w_hh.data
    hs = np.zeros((D, Bn, T, h))
    cache = []
    h_t = np.zeros((D, Bn, h))
    c_t = np.zeros((D, Bn, h))
    for t in range(T):
        a = xw.data[:, :, t] + h_t @ W
        i = _stable_sigmoid(a[..., :h])
        f = _stable_sigmoid(a[..., h : 2 * h])
        g = np.tanh(a[..., 2 * h : 3 * h])
        o = _stable_sigmoid(a[..., 3 * h :])
        c_new = f * c_t + i * g
        tc = np.tanh(c_new)
        cache.append((i, f, g, o, c_t, tc, h_t))
        c_t = c_new
        h_t = o * tc
        hs[:, :, t] = h_t

    def back(dH):
        dxw = np.zeros_like(xw.data)
        dW = np.zeros_like(W)
        dh_next = np.zeros((D, Bn, h))
        dc_next = np.zeros((D, Bn, h))
        Wt = np.swapaxes(W, -1, -2)
        for t in reversed(range(T)):
            i, f, g, o, c_prev, tc, h_prev = cache[t]
            dh = dH[:, :, t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            da = np.concatenate(
                [
                    dc * g * i * (1.0 - i),
                    dc * c_prev * f * (1.0 - f),
                    dc * i * (1.0 - g * g),
                    dh * tc * o * (1.0 - o),
                ],
                axis=-1,
            )
            dxw[:, :, t] = da
            dW += np.swapaxes(h_prev, -1, -2) @ da
            dh_next = da @ Wt
            dc_next = dc * f
        return dxw, dW

    return _make("lstm_scan", hs, (xw, w_hh), back)
