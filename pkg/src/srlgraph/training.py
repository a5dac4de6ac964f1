"""Losses, the optimization loop and the labeled F1 metric."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import numeric as nm
from .core import DEP_MODE, MODES, SPAN_MODE, SrlError, SrlStructure, inventory_from_corpus
from .encoder import EncoderConfig, Vocab
from .inference import ORDERS, O2
from .model import Model, ModelConfig, token_batches
from .scorer import ScorerConfig
from .transform import dep_srl_to_graph, srl_to_graph

log = logging.getLogger(__name__)

CLAMP = 1e-12


@dataclass
class TrainConfig:
    lam: float = 0.06
    T: int = 3
    epochs: int = 100
    batch_tokens: int = 5000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.9
    clip: float = 5.0
    seed: int = 1
    order: str = O2
    mode: str = SPAN_MODE
    unk_rate: float = 0.2
    min_freq: int = 1
    max_len: int = 120
    # model sizes
    word_dim: int = 100
    lemma_dim: int = 50
    char_dim: int = 100
    char_emb_dim: int = 50
    hidden: int = 200
    layers: int = 3
    dropout: float = 0.0
    edge_mlp: int = 300
    label_mlp: int = 300
    second_mlp: int = 100
    # stop once training F1 reaches this value (checked every eval_every epochs); 0 disables
    target_train_f1: float = 0.0
    eval_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lam must lie strictly between 0 and 1")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.T < 0 or self.epochs < 0 or self.batch_tokens < 1:
            raise ValueError("T, epochs and batch_tokens must be non-negative (batch_tokens positive)")

    def model_config(self) -> ModelConfig:
        enc = EncoderConfig(self.word_dim, self.lemma_dim, self.char_dim, self.char_emb_dim, self.hidden,
                            self.layers, self.dropout)
        return ModelConfig(enc, ScorerConfig(self.edge_mlp, self.label_mlp, self.second_mlp), self.order, self.T,
                           self.max_len)

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainConfig":
        """Build from string or typed values keyed by field name."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(raw, types[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)


def _coerce(raw, type_name):
    if not isinstance(raw, str):
        return raw
    kind = type_name if isinstance(type_name, str) else type_name.__name__
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def read_config(path) -> dict:
    """Flat ``key = value`` text; '#' starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (x.strip() for x in line.split("=", 1))
            out[key] = value
    return out


# losses


def edge_loss(p, gold, cand):
    """-sum log p' over gold edges - sum log(1 - p') over other candidates.

    Probabilities are clamped 1e-12 away from 0 and 1. Works on arrays or
    tensors; ``gold`` and ``cand`` are 0/1 masks of the same shape.
    """
    gold = np.asarray(gold, dtype=np.float64)
    cand = np.asarray(cand, dtype=np.float64)
    if np.any(gold * (1.0 - cand)):
        raise SrlError("gold edge outside the candidate set")
    p = nm.clip(p, CLAMP, 1.0 - CLAMP)
    ll = nm.log(p) * gold + nm.log(1.0 - p) * ((1.0 - gold) * cand)
    return -nm.tsum(ll)


def edge_loss_logits(z, gold, cand):
    """The same loss written on logits z with p' = sigmoid(z), without clamping."""
    gold = np.asarray(gold, dtype=np.float64)
    cand = np.asarray(cand, dtype=np.float64)
    ll = nm.log_sigmoid(z) * gold + nm.log_sigmoid(-z) * ((1.0 - gold) * cand)
    return -nm.tsum(ll)


def label_loss(p_label, gold_labels):
    """-sum over gold edges of log p(gold label | i, j).

    ``gold_labels`` holds a label index per (i, j) and -1 where there is no
    gold edge. A gold label with zero probability (masked out) is a data
    error.
    """
    gold_labels = np.asarray(gold_labels)
    idx = np.nonzero(gold_labels >= 0)
    p = nm.as_tensor(p_label)[idx + (gold_labels[idx],)]
    if np.any(p.data <= 0.0):
        raise SrlError("gold label excluded by the head-kind mask")
    return -nm.tsum(nm.log(p))


def label_loss_scores(scores, gold_labels, mask):
    """``label_loss`` of softmax(scores restricted to mask), via log-sum-exp."""
    gold_labels = np.asarray(gold_labels)
    mask = np.broadcast_to(mask, scores.shape)
    idx = np.nonzero(gold_labels >= 0)
    lab = gold_labels[idx]
    if not np.all(mask[idx + (lab,)]):
        raise SrlError("gold label excluded by the head-kind mask")
    picked = nm.as_tensor(scores)[idx + (lab,)]
    lse = nm.logsumexp(scores, mask)[idx]
    return nm.tsum(lse - picked)


def total_loss(l_label, l_edge, lam: float):
    return lam * l_label + (1.0 - lam) * l_edge


class Gold(NamedTuple):
    edges: np.ndarray  # (B, N, N) 0/1
    labels: np.ndarray  # (B, N, N) label index or -1


def gold_tensors(structures: Sequence[SrlStructure], inventory, width: int) -> Gold:
    edges = np.zeros((len(structures), width, width))
    labels = np.full((len(structures), width, width), -1, dtype=np.int64)
    to_graph = dep_srl_to_graph if inventory.mode == DEP_MODE else srl_to_graph
    for b, s in enumerate(structures):
        for e in to_graph(s).edges:
            edges[b, e.head, e.modifier] = 1.0
            labels[b, e.head, e.modifier] = inventory.index(e.label)
    return Gold(edges, labels)


class LossParts(NamedTuple):
    total: nm.Tensor
    label: nm.Tensor
    edge: nm.Tensor


def batch_loss(model: Model, structures: Sequence[SrlStructure], lam: float, rng=None, unk_rate: float = 0.0,
               order: Optional[str] = None) -> LossParts:
    """Interpolated loss averaged over the sentences of one batch."""
    batch = model.batch([s.sentence for s in structures], rng, unk_rate)
    sc = model.forward(batch, order, rng)
    gold = gold_tensors(structures, model.inventory, batch.width)
    size = float(len(structures))
    ll = label_loss_scores(sc.label, gold.labels, sc.label_mask[None]) * (1.0 / size)
    le = edge_loss_logits(sc.logits, gold.edges, sc.cand) * (1.0 / size)
    return LossParts(total_loss(ll, le, lam), ll, le)


# optimization


class Adam:
    def __init__(self, params: dict, lr: float = 1e-3, betas=(0.9, 0.9), eps: float = 1e-12, clip: float = 5.0):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.clip = clip
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def grad_norm(self, frozen: Iterable[str] = ()) -> float:
        frozen = set(frozen)
        total = sum(
            float(np.sum(p.grad * p.grad))
            for k, p in self.params.items()
            if p.grad is not None and k not in frozen
        )
        return float(np.sqrt(total))

    def step(self, frozen: Iterable[str] = ()) -> float:
        """One update with global-norm clipping; returns the pre-clip norm."""
        frozen = set(frozen)
        norm = self.grad_norm(frozen)
        scale = self.clip / norm if self.clip > 0 and norm > self.clip else 1.0
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for k, p in self.params.items():
            if p.grad is None or k in frozen:
                continue
            g = p.grad * scale
            self.m[k] = self.b1 * self.m[k] + (1.0 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1.0 - self.b2) * g * g
            p.data -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
        return norm


# metric


class Prf(NamedTuple):
    p: float
    r: float
    f1: float
    correct: int = 0
    predicted: int = 0
    gold: int = 0

    def percent(self) -> str:
        return f"P {100 * self.p:.2f} R {100 * self.r:.2f} F1 {100 * self.f1:.2f}"


def structure_tuples(structures: Sequence[SrlStructure], with_sense: bool = False) -> set[tuple]:
    out = set()
    for sid, s in enumerate(structures):
        for f in s.frames:
            out.add(("prd", sid, f.predicate) + ((f.sense,) if with_sense else ()))
            for a in f.arguments:
                out.add(("arg", sid, f.predicate, a.begin, a.end, a.role))
    return out


def prf(correct: int, predicted: int, gold: int) -> Prf:
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return Prf(p, r, f, correct, predicted, gold)


def evaluate_f1(predicted: Sequence[SrlStructure], gold: Sequence[SrlStructure], with_sense: bool = False) -> Prf:
    """Micro P/R/F1 over predicate and argument tuples (fractions in [0, 1])."""
    if len(predicted) != len(gold):
        raise SrlError(f"misaligned lists: {len(predicted)} predicted vs {len(gold)} gold")
    for sid, (p, g) in enumerate(zip(predicted, gold)):
        if p.n != g.n:
            raise SrlError(f"sentence {sid}: {p.n} predicted tokens vs {g.n} gold")
    pt = structure_tuples(predicted, with_sense)
    gt = structure_tuples(gold, with_sense)
    return prf(len(pt & gt), len(pt), len(gt))


# loop


@dataclass
class TrainResult:
    model: Model
    history: list
    best_dev: Optional[float] = None
    best_epoch: Optional[int] = None


def build_model(corpus: Sequence[SrlStructure], cfg: TrainConfig) -> Model:
    if not corpus:
        raise SrlError("training corpus is empty")
    vocab = Vocab.build((s.sentence for s in corpus), cfg.min_freq)
    inventory = inventory_from_corpus(corpus, cfg.mode)
    return Model.create(cfg.model_config(), vocab, inventory, cfg.seed)


def train(corpus: Sequence[SrlStructure], cfg: TrainConfig, dev: Optional[Sequence[SrlStructure]] = None,
          model: Optional[Model] = None, on_epoch: Optional[Callable[[dict], None]] = None,
          checkpoint: Optional[str] = None, frozen: Sequence[str] = ()) -> TrainResult:
    """Seeded training; keeps the parameters with the best dev F1.

    ``frozen`` names parameters that never move (used to pin second-order
    weights at zero). Without a dev set the final parameters are kept.
    """
    corpus = list(corpus)
    model = model or build_model(corpus, cfg)
    with_sense = model.mode == DEP_MODE
    rng = np.random.default_rng(cfg.seed + 1)
    opt = Adam(model.params, cfg.lr, (cfg.beta1, cfg.beta2), clip=cfg.clip)
    history, best, best_epoch, best_state = [], None, None, None
    for epoch in range(1, cfg.epochs + 1):
        start = time.perf_counter()
        perm = rng.permutation(len(corpus))
        groups = token_batches(list(perm), [corpus[i].n for i in perm], cfg.batch_tokens)
        total = 0.0
        for group in groups:
            structures = [corpus[i] for i in group]
            model.zero_grad()
            with nm.Tape() as tape:
                parts = batch_loss(model, structures, cfg.lam, rng, cfg.unk_rate)
            value = parts.total.item()
            if not np.isfinite(value):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}")
            tape.backward(parts.total)
            opt.step(frozen)
            total += value * len(structures)
        record = {"epoch": epoch, "loss": total / len(corpus), "seconds": round(time.perf_counter() - start, 4)}
        if cfg.eval_every and epoch % cfg.eval_every == 0:
            if cfg.target_train_f1 > 0:
                tr = evaluate_f1(model.decode(corpus, batch_tokens=cfg.batch_tokens), corpus, with_sense)
                record["train_f1"] = tr.f1
            if dev:
                d = evaluate_f1(model.decode(dev, batch_tokens=cfg.batch_tokens), dev, with_sense)
                record.update(dev_p=d.p, dev_r=d.r, dev_f1=d.f1)
                if best is None or d.f1 > best:
                    best, best_epoch = d.f1, epoch
                    best_state = {k: v.copy() for k, v in model.state().items()}
                    if checkpoint:
                        model.save(checkpoint)
        history.append(record)
        log.info(json.dumps(record))
        if on_epoch:
            on_epoch(record)
        if cfg.target_train_f1 > 0 and record.get("train_f1", 0.0) >= cfg.target_train_f1:
            break
    if best_state is not None:
        for k, v in best_state.items():
            model.params[k].data = v
    elif checkpoint:
        model.save(checkpoint)
    return TrainResult(model, history, best, best_epoch)
