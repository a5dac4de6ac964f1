"""Parameter container and forward pass for the O1/O2 graph parsers."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import numeric as nm
from .core import DEP_MODE, SPAN_MODE, LabelInventory, Sentence, SrlError
from .encoder import EncoderConfig, Vocab, encode_batch, init_encoder_params, make_batch
from .inference import O1, O2, ORDERS, Decoded, TransitionMatrix, candidate_mask, decode_probabilities, mfvi_logits
from .numeric import serialize
from .scorer import (
    ScorerConfig,
    edge_scores,
    head_kind_mask,
    init_first_order,
    init_second_order,
    label_scores,
    second_order_scores,
)

FORMAT = "srlgraph-model"
# decode budget in padded cells; small batches keep the cubic second-order tensors cheap
DECODE_TOKENS = 1000


@dataclass
class ModelConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    order: str = O2
    T: int = 3
    max_len: int = 120

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(EncoderConfig(**d["encoder"]), ScorerConfig(**d["scorer"]), d["order"], d["T"], d["max_len"])


class Scores(NamedTuple):
    edge: nm.Tensor  # first-order s(i, j), (B, N, N)
    logits: nm.Tensor  # edge logits after MFVI (== edge for O1)
    label: nm.Tensor  # (B, N, N, L)
    cand: np.ndarray  # (B, N, N) candidate mask
    label_mask: np.ndarray  # (N, 1, L) head-kind mask
    second: Optional[tuple]  # (sib, cop, grd) or None


class Model:
    def __init__(self, cfg: ModelConfig, vocab: Vocab, inventory: LabelInventory, params: dict):
        self.cfg = cfg
        self.vocab = vocab
        self.inventory = inventory
        self.params = {k: v if isinstance(v, nm.Tensor) else nm.Tensor(v, True, k) for k, v in params.items()}
        self._transitions = TransitionMatrix(inventory.roles) if inventory.mode == SPAN_MODE else None

    @classmethod
    def create(cls, cfg: ModelConfig, vocab: Vocab, inventory: LabelInventory, seed: int = 1) -> "Model":
        rng = np.random.default_rng(seed)
        params = init_encoder_params(cfg.encoder, vocab, rng)
        d = cfg.encoder.output_dim
        params.update(init_first_order(cfg.scorer, d, len(inventory), rng))
        # second-order parameters draw last so O1 and O2 share first-order init
        if cfg.order == O2:
            params.update(init_second_order(cfg.scorer, d, rng))
        return cls(cfg, vocab, inventory, params)

    @property
    def order(self) -> str:
        return self.cfg.order

    @property
    def mode(self) -> str:
        return self.inventory.mode

    def parameters(self) -> list[nm.Tensor]:
        return list(self.params.values())

    def second_order_names(self) -> list[str]:
        return [k for k in self.params if k.startswith("so.")]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def batch(self, sentences: Sequence[Sentence], rng=None, unk_rate: float = 0.0):
        too_long = [s.n for s in sentences if s.n > self.cfg.max_len]
        if too_long:
            raise SrlError(f"sentence of length {max(too_long)} exceeds cap {self.cfg.max_len}")
        return make_batch(sentences, self.vocab, rng, unk_rate)

    def forward(self, batch, order: Optional[str] = None, rng=None) -> Scores:
        order = order or self.order
        if order == O2 and self.order != O2:
            raise SrlError("second-order decoding needs a second-order model")
        h = encode_batch(batch, self.params, self.cfg.encoder, rng)
        cand = candidate_mask(batch.lengths, batch.width)
        s = edge_scores(h, self.params)
        lab = label_scores(h, self.params)
        mask = head_kind_mask(self.inventory, batch.width)
        second = None
        logits = s
        if order == O2:
            second = second_order_scores(h, self.params)
            logits, _ = mfvi_logits(s, *second, cand, self.cfg.T)
        return Scores(s, logits, lab, cand, mask, second)

    def probabilities(self, batch, order: Optional[str] = None):
        """(p_edge, p_label) numpy arrays; p_edge is Q^(T) for O2."""
        sc = self.forward(batch, order)
        p_edge = nm.sigmoid(sc.logits).data * sc.cand
        p_label = nm.softmax(sc.label, sc.label_mask).data
        return p_edge, p_label

    def decode_batch(self, sentences: Sequence[Sentence], order: Optional[str] = None) -> list[Decoded]:
        p_edge, p_label = self.probabilities(self.batch(sentences), order)
        return [
            decode_probabilities(s, p_edge[b], p_label[b], self.inventory, self._transitions)
            for b, s in enumerate(sentences)
        ]

    def decode(self, sentences: Sequence[Sentence], order: Optional[str] = None, batch_tokens: int = DECODE_TOKENS,
               workers: int = 1) -> list:
        """Parse sentences into SRL structures, preserving input order."""
        sentences = [s.sentence if hasattr(s, "frames") else s for s in sentences]
        if workers > 1 and len(sentences) > 1:
            from .parallel import parallel_decode

            return parallel_decode(self, sentences, order, batch_tokens, workers)
        out: list = [None] * len(sentences)
        order_idx = sorted(range(len(sentences)), key=lambda i: sentences[i].n)
        for group in token_batches(order_idx, [sentences[i].n for i in order_idx], batch_tokens, padded=True):
            decoded = self.decode_batch([sentences[i] for i in group], order)
            for i, d in zip(group, decoded):
                out[i] = d.structure
        return out

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def save(self, path) -> None:
        meta = {
            "format": FORMAT,
            "config": self.cfg.to_dict(),
            "vocab": self.vocab.to_dict(),
            "inventory": self.inventory.to_dict(),
        }
        serialize.save(path, self.state(), meta)

    @classmethod
    def load(cls, path) -> "Model":
        tensors, meta = serialize.load(path)
        if meta.get("format") != FORMAT:
            raise serialize.FormatError(f"{path} is not a model file")
        return cls(
            ModelConfig.from_dict(meta["config"]),
            Vocab.from_dict(meta["vocab"]),
            LabelInventory.from_dict(meta["inventory"]),
            tensors,
        )


def token_batches(items: Sequence, lengths: Sequence[int], budget: int, padded: bool = False) -> list[list]:
    """Greedy consecutive groups whose token count stays within ``budget``.

    With ``padded`` the count is group size times the longest length, i.e.
    the cells the batch really occupies. A single item longer than the
    budget still forms its own group.
    """
    groups, cur, used, widest = [], [], 0, 0
    for item, n in zip(items, lengths):
        w = max(widest, n)
        cost = (len(cur) + 1) * w if padded else used + n
        if cur and cost > budget:
            groups.append(cur)
            cur, used, w = [], 0, n
        cur.append(item)
        used += n
        widest = w
    if cur:
        groups.append(cur)
    return groups

__all__ = ["Model", "ModelConfig", "Scores", "token_batches", "O1", "O2", "DEP_MODE", "SPAN_MODE"]
