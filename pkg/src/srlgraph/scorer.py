"""First-order edge/label scorers and second-order TriAffine scorers.

Score tensors are indexed [..., head i, modifier j] (and [..., i, j, k] for
second-order parts), over positions 0..n where 0 is Root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numeric as nm
from .core import LabelInventory
from .numeric.init import glorot_uniform

SLOPE = 0.1


@dataclass
class ScorerConfig:
    edge_mlp: int = 300
    label_mlp: int = 300
    second_mlp: int = 100


def _mlp_params(rng, prefix: str, d_in: int, d_out: int) -> dict:
    return {f"{prefix}.w": glorot_uniform(rng, (d_in, d_out)), f"{prefix}.b": np.zeros(d_out)}


def init_first_order(cfg: ScorerConfig, d_in: int, n_labels: int, rng) -> dict:
    p = {}
    for name, d in (("edge", cfg.edge_mlp), ("label", cfg.label_mlp)):
        p.update(_mlp_params(rng, f"{name}.mlp_h", d_in, d))
        p.update(_mlp_params(rng, f"{name}.mlp_m", d_in, d))
    d = cfg.edge_mlp
    p["edge.w"] = glorot_uniform(rng, (d + 1, d))
    d = cfg.label_mlp
    p["label.w"] = glorot_uniform(rng, (n_labels, d + 1, d + 1), fan_in=d + 1, fan_out=d + 1)
    return p


def init_second_order(cfg: ScorerConfig, d_in: int, rng) -> dict:
    p = {}
    for role in ("h", "m", "g"):
        p.update(_mlp_params(rng, f"so.mlp_{role}", d_in, cfg.second_mlp))
    d = cfg.second_mlp
    for part in ("sib", "cop", "grd"):
        p[f"so.{part}"] = glorot_uniform(rng, (d + 1, d, d + 1), fan_in=d * (d + 1), fan_out=d + 1)
    return p


def mlp(h, params: dict, prefix: str):
    return nm.leaky_relu(h @ params[f"{prefix}.w"] + params[f"{prefix}.b"], SLOPE)


def edge_scores(h, params: dict):
    """s(i, j) = [r_j^m; 1]^T W r_i^h."""
    rh = mlp(h, params, "edge.mlp_h")
    rm = mlp(h, params, "edge.mlp_m")
    return nm.bilinear(rm, params["edge.w"], rh, augment_left=True, augment_right=False)


def score_edges(h, params: dict):
    """Edge scores and their sigmoid probabilities, both as numpy arrays."""
    s = edge_scores(h, params)
    return s.data, nm.sigmoid(s).data


def head_kind_mask(inventory: LabelInventory, width: int) -> np.ndarray:
    """(width, 1, L) mask: row 0 permits Root labels, other rows the rest."""
    root = np.array(inventory.root_mask())
    mask = np.tile(~root, (width, 1))
    mask[0] = root
    return mask[:, None, :]


def label_scores(h, params: dict):
    """s(i, j, l) = [r_j^m'; 1]^T W_l [r_i^h'; 1], shape (..., N, N, L)."""
    rh = mlp(h, params, "label.mlp_h")
    rm = mlp(h, params, "label.mlp_m")
    return nm.bilinear(rm, params["label.w"], rh, augment_left=True, augment_right=True)


def score_labels(h, params: dict, mask: np.ndarray):
    """Label scores and p(l | i, j) after a softmax restricted to ``mask``."""
    s = label_scores(h, params)
    return s.data, nm.softmax(s, mask).data


def _symmetric(s, axis_a: int, axis_b: int):
    """Keep entries with index_a <= index_b and mirror them onto the rest."""
    n = s.shape[-1]
    upper = np.triu(np.ones((n, n)))
    strict = np.triu(np.ones((n, n)), 1)
    shape = [1] * 3
    shape[axis_a] = shape[axis_b] = n
    ax = [s.ndim - 3 + a for a in (axis_a, axis_b)]
    perm = list(range(s.ndim))
    perm[ax[0]], perm[ax[1]] = perm[ax[1]], perm[ax[0]]
    return s * upper.reshape(shape) + nm.transpose(s * strict.reshape(shape), perm)


def second_order_scores(h, params: dict):
    """(sib, cop, grd) tensors of shape (..., N, N, N) indexed [i, j, k].

    sib(i,j,k) = TriAFF(r_i^h'', r_j^m'', r_k^m''), symmetric in (j, k);
    cop(i,j,k) = TriAFF(r_i^h'', r_j^m'', r_k^h''), symmetric in (i, k);
    grd(i,j,k) = TriAFF(r_i^h'', r_j^m'', r_k^g).
    """
    rh = mlp(h, params, "so.mlp_h")
    rm = mlp(h, params, "so.mlp_m")
    rg = mlp(h, params, "so.mlp_g")
    sib = _symmetric(nm.trilinear(rh, params["so.sib"], rm, rm), 1, 2)
    cop = _symmetric(nm.trilinear(rh, params["so.cop"], rm, rh), 0, 2)
    grd = nm.trilinear(rh, params["so.grd"], rm, rg)
    return sib, cop, grd


def score_second_order(h, params: dict):
    return tuple(t.data for t in second_order_scores(h, params))
