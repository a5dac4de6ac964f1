"""Central finite-difference checking of tape gradients."""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from .tensor import Tape, Tensor


def analytic_grads(f: Callable[[], Tensor], params: Iterable[Tensor]) -> list[np.ndarray]:
    params = list(params)
    for p in params:
        p.grad = None
    with Tape() as tape:
        loss = f()
    tape.backward(loss)
    return [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]


def finite_diff_grads(f: Callable[[], Tensor], params: Iterable[Tensor], eps: float = 1e-5) -> list[np.ndarray]:
    out = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            f_plus = f().item()
            flat[idx] = orig - eps
            f_minus = f().item()
            flat[idx] = orig
            gflat[idx] = (f_plus - f_minus) / (2.0 * eps)
        out.append(g)
    return out


def finite_diff_check(f: Callable[[], Tensor], params: Iterable[Tensor], eps: float = 1e-5) -> float:
    """Max over all components of |analytic - numeric| / (|analytic| + 1e-8).

    ``f`` re-evaluates the scalar loss from the current parameter values;
    parameters are perturbed in place and restored.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    params = [p for p in params]
    analytic = analytic_grads(f, params)
    numeric = finite_diff_grads(f, params, eps)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - n) / (np.abs(a) + 1e-8))))
    return worst
