"""Token representations and the sentence-level BiLSTM encoder.

Each word is embedded as word ⊕ lemma ⊕ char-BiLSTM vectors. Root is a
learned vector prepended at position 0 before the stacked BiLSTM runs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import numeric as nm
from .core import Sentence, Token
from .numeric.init import glorot_uniform, orthogonal_recurrent

PAD = 0
UNK = 1
PAD_STR = "<pad>"
UNK_STR = "<unk>"


class Table:
    """String-to-index table; 0 is padding, 1 is unknown."""

    def __init__(self, items: Sequence[str] = ()):
        self.itos = [PAD_STR, UNK_STR] + [s for s in items if s not in (PAD_STR, UNK_STR)]
        self.stoi = {s: i for i, s in enumerate(self.itos)}

    def __len__(self) -> int:
        return len(self.itos)

    def __getitem__(self, s: str) -> int:
        return self.stoi.get(s, UNK)

    def __contains__(self, s: str) -> bool:
        return s in self.stoi


class Vocab:
    def __init__(self, words: Sequence[str], lemmas: Sequence[str], chars: Sequence[str],
                 singletons: Iterable[str] = (), min_freq: int = 1):
        self.words = Table(words)
        self.lemmas = Table(lemmas)
        self.chars = Table(chars)
        self.min_freq = min_freq
        self.singletons = frozenset(self.words[w] for w in singletons if w in self.words)

    @classmethod
    def build(cls, sentences: Iterable[Sentence], min_freq: int = 1) -> "Vocab":
        wc, lc, cc = Counter(), Counter(), Counter()
        for s in sentences:
            for t in s.tokens:
                wc[t.form] += 1
                lc[t.lemma] += 1
                cc.update(t.form)
        words = sorted(w for w, c in wc.items() if c >= min_freq)
        lemmas = sorted(l for l, c in lc.items() if c >= min_freq)
        chars = sorted(cc)
        singletons = [w for w, c in wc.items() if c == 1]
        return cls(words, lemmas, chars, singletons, min_freq)

    def to_dict(self) -> dict:
        return {
            "words": self.words.itos[2:],
            "lemmas": self.lemmas.itos[2:],
            "chars": self.chars.itos[2:],
            "singletons": sorted(self.words.itos[i] for i in self.singletons),
            "min_freq": self.min_freq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocab":
        return cls(d["words"], d["lemmas"], d["chars"], d.get("singletons", ()), d.get("min_freq", 1))


@dataclass
class EncoderConfig:
    word_dim: int = 100
    lemma_dim: int = 50
    char_dim: int = 100  # output size: forward and backward halves
    char_emb_dim: int = 50
    hidden: int = 200  # per direction
    layers: int = 3
    dropout: float = 0.0

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.lemma_dim + self.char_dim

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden


def _lstm_params(rng, prefix: str, d_in: int, h: int) -> dict:
    return {
        f"{prefix}.w_ih": np.stack([glorot_uniform(rng, (d_in, 4 * h)) for _ in range(2)]),
        f"{prefix}.w_hh": np.stack([orthogonal_recurrent(rng, h) for _ in range(2)]),
        f"{prefix}.b": np.zeros((2, 4 * h)),
    }


def init_encoder_params(cfg: EncoderConfig, vocab: Vocab, rng: np.random.Generator) -> dict:
    if cfg.char_dim % 2:
        raise ValueError("char_dim must be even (forward and backward halves)")
    if cfg.layers < 1:
        raise ValueError("need at least one recurrent layer")
    p = {
        "word_emb": glorot_uniform(rng, (len(vocab.words), cfg.word_dim)),
        "lemma_emb": glorot_uniform(rng, (len(vocab.lemmas), cfg.lemma_dim)),
        "char_emb": glorot_uniform(rng, (len(vocab.chars), cfg.char_emb_dim)),
        "root": glorot_uniform(rng, (cfg.input_dim,), fan_in=1, fan_out=cfg.input_dim),
    }
    for table in ("word_emb", "lemma_emb", "char_emb"):
        p[table][PAD] = 0.0
    p.update(_lstm_params(rng, "char_lstm", cfg.char_emb_dim, cfg.char_dim // 2))
    d_in = cfg.input_dim
    for layer in range(cfg.layers):
        p.update(_lstm_params(rng, f"lstm.{layer}", d_in, cfg.hidden))
        d_in = 2 * cfg.hidden
    return p


def load_pretrained(path, vocab: Vocab, dim: int, emb: np.ndarray) -> int:
    """Overwrite rows of ``emb`` from a text vector file; returns rows filled."""
    filled = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip().split()
            if len(parts) != dim + 1:
                continue
            word = parts[0]
            if word in vocab.words:
                emb[vocab.words[word]] = np.asarray(parts[1:], dtype=np.float64)
                filled += 1
    return filled


@dataclass
class Batch:
    """Padded index arrays for B sentences; position 0 of each row is Root."""

    sentences: list
    words: np.ndarray  # (B, N)
    lemmas: np.ndarray  # (B, N)
    lengths: np.ndarray  # (B,) = n + 1
    chars: np.ndarray  # (M, C) one row per real token
    char_lengths: np.ndarray  # (M,)
    char_slot: np.ndarray  # (B, N) row of ``chars`` or M for Root/padding

    @property
    def size(self) -> int:
        return len(self.sentences)

    @property
    def width(self) -> int:
        return self.words.shape[1]


def make_batch(sentences: Sequence[Sentence], vocab: Vocab, rng: Optional[np.random.Generator] = None,
               unk_rate: float = 0.0) -> Batch:
    Bn = len(sentences)
    N = max(s.n for s in sentences) + 1
    words = np.zeros((Bn, N), dtype=np.int64)
    lemmas = np.zeros((Bn, N), dtype=np.int64)
    lengths = np.array([s.n + 1 for s in sentences])
    tokens: list[Token] = [t for s in sentences for t in s.tokens]
    M = len(tokens)
    C = max(len(t.form) for t in tokens)
    chars = np.zeros((M, C), dtype=np.int64)
    char_lengths = np.array([len(t.form) for t in tokens])
    char_slot = np.full((Bn, N), M, dtype=np.int64)
    m = 0
    for b, s in enumerate(sentences):
        for i, t in enumerate(s.tokens, start=1):
            w = vocab.words[t.form]
            if unk_rate > 0 and rng is not None and w in vocab.singletons and rng.random() < unk_rate:
                w = UNK
            words[b, i] = w
            lemmas[b, i] = vocab.lemmas[t.lemma]
            chars[m, : len(t.form)] = [vocab.chars[c] for c in t.form]
            char_slot[b, i] = m
            m += 1
    return Batch(list(sentences), words, lemmas, lengths, chars, char_lengths, char_slot)


def _reverse_index(lengths: np.ndarray, T: int) -> np.ndarray:
    """Per-row permutation reversing the first ``len`` steps; padding stays put."""
    t = np.arange(T)[None, :]
    L = lengths[:, None]
    return np.where(t < L, L - 1 - t, t)


def bilstm(x, params: dict, prefix: str, lengths: np.ndarray):
    """One bidirectional layer over (B, T, d) inputs -> (2, B, T, h) raw states.

    The backward direction runs the forward recurrence over each sequence
    reversed within its own length, so right-padding never leaks into real
    positions. Its states are returned in reversed time order.
    """
    Bn, T = x.shape[0], x.shape[1]
    rev = _reverse_index(lengths, T)
    rows = np.arange(Bn)[:, None]
    both = nm.stack([x, x[rows, rev]], axis=0)
    b = params[f"{prefix}.b"]
    w = params[f"{prefix}.w_ih"]
    xw = both @ nm.reshape(w, (2, 1) + w.shape[1:]) + nm.reshape(b, (2, 1, 1, b.shape[-1]))
    return nm.lstm_scan(xw, params[f"{prefix}.w_hh"]), rev


def char_features(batch: Batch, params: dict):
    """Concatenated final forward/backward char-LSTM states, one row per token."""
    x = params["char_emb"][batch.chars]
    states, _ = bilstm(x, params, "char_lstm", batch.char_lengths)
    M = batch.chars.shape[0]
    last = batch.char_lengths - 1
    final = states[np.array([0, 1])[:, None], np.arange(M)[None, :], last[None, :]]
    return nm.reshape(nm.transpose(final, (1, 0, 2)), (M, -1))


def embed(batch: Batch, params: dict, cfg: EncoderConfig):
    """x_i = e_word ⊕ e_lemma ⊕ e_char, with the learned Root vector at 0."""
    chars = char_features(batch, params)
    chars = nm.concat([chars, np.zeros((1, cfg.char_dim))], axis=0)[batch.char_slot]
    x = nm.concat([params["word_emb"][batch.words], params["lemma_emb"][batch.lemmas], chars], axis=-1)
    is_root = np.zeros(batch.words.shape + (1,))
    is_root[:, 0] = 1.0
    return x * (1.0 - is_root) + nm.mul(params["root"], is_root)


def embed_token(token: Token, vocab: Vocab, params: dict, cfg: EncoderConfig):
    """Input vector for a single token, shape (word+lemma+char,)."""
    batch = make_batch([Sentence((token,))], vocab)
    return embed(batch, params, cfg)[0, 1]


def encode_batch(batch: Batch, params: dict, cfg: EncoderConfig, rng: Optional[np.random.Generator] = None):
    """Contextual vectors h_0..h_n for every sentence: (B, N, 2*hidden)."""
    h = nm.dropout(embed(batch, params, cfg), cfg.dropout, rng)
    rows = np.arange(batch.size)[:, None]
    for layer in range(cfg.layers):
        states, rev = bilstm(h, params, f"lstm.{layer}", batch.lengths)
        h = nm.concat([states[0], states[1][rows, rev]], axis=-1)
        h = nm.dropout(h, cfg.dropout, rng)
    return h


def encode(sentence: Sentence, vocab: Vocab, params: dict, cfg: EncoderConfig):
    """h_0..h_n for one sentence: (n+1, 2*hidden), Root first."""
    return encode_batch(make_batch([sentence], vocab), params, cfg)[0]
