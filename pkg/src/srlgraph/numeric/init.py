"""Seeded parameter initialisers."""

import numpy as np


def glorot_uniform(rng: np.random.Generator, shape, fan_in=None, fan_out=None) -> np.ndarray:
    fan_in = fan_in if fan_in is not None else shape[-2] if len(shape) > 1 else shape[0]
    fan_out = fan_out if fan_out is not None else shape[-1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def orthogonal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols else q.T


def orthogonal_recurrent(rng: np.random.Generator, hidden: int, gates: int = 4) -> np.ndarray:
    """(hidden, gates*hidden) recurrent matrix, one orthogonal block per gate."""
    return np.concatenate([orthogonal(rng, hidden, hidden) for _ in range(gates)], axis=1)
