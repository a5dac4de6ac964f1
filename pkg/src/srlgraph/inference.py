"""Posterior inference, graph decoding and constrained Viterbi repair."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numeric as nm
from .core import (
    B,
    DEP_MODE,
    E,
    I,
    O,
    ROOT,
    Argument,
    CompositeLabel,
    Edge,
    LabelInventory,
    PredicateFrame,
    SemGraph,
    SrlStructure,
)
from .transform import graph_to_dep_srl, graph_to_srl

O1 = "O1"
O2 = "O2"
ORDERS = (O1, O2)


def candidate_mask(lengths: Sequence[int], width: int) -> np.ndarray:
    """(B, N, N) mask of scorable edges: head 0..n, modifier 1..n, no self loops."""
    lengths = np.asarray(lengths)
    pos = np.arange(width)
    valid = pos[None, :] < lengths[:, None]
    mask = valid[:, :, None] & valid[:, None, :]
    mask[:, :, 0] = False
    mask[:, pos, pos] = False
    return mask


def _third_order_mask(width: int) -> np.ndarray:
    """[i, j, k] is 1 iff k differs from both i and j."""
    idx = np.arange(width)
    k = idx[None, None, :]
    return ((k != idx[:, None, None]) & (k != idx[None, :, None])).astype(np.float64)


def mfvi_logits(s_edge, sib, cop, grd, cand: np.ndarray, T: int = 3):
    """Unrolled mean-field updates on the tape.

    Returns (logits, history): logits are s + M^(T-1) (just s when T=0) so
    that Q^(T) = sigmoid(logits); history holds Q^(0..T) as tensors.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    width = cand.shape[-1]
    km = _third_order_mask(width)
    sib, cop, grd = sib * km, cop * km, grd * km
    z = nm.as_tensor(s_edge)
    q = nm.sigmoid(z) * cand
    history = [q]
    for _ in range(T):
        # sibling partner shares head i, co-parent shares modifier j,
        # grandchild k hangs off j
        m = (
            nm.einsum("bik,bijk->bij", q, sib)
            + nm.einsum("bkj,bijk->bij", q, cop)
            + nm.einsum("bjk,bijk->bij", q, grd)
        )
        z = s_edge + m
        q = nm.sigmoid(z) * cand
        history.append(q)
    return z, history


@dataclass
class PosteriorQ:
    history: list  # Q^(0..T), each (n+1, n+1); column 0 and the diagonal are 0

    @property
    def final(self) -> np.ndarray:
        return self.history[-1]

    @property
    def T(self) -> int:
        return len(self.history) - 1


def mfvi(s_edge, s_sib, s_cop, s_grd, T: int = 3) -> PosteriorQ:
    """Mean-field posterior for one sentence.

    ``s_edge`` is (n+1, n+1) indexed [head, modifier] (column 0 ignored);
    second-order tensors are (n+1, n+1, n+1) indexed [i, j, k].
    """
    s_edge = np.asarray(s_edge, dtype=np.float64)
    width = s_edge.shape[0]
    cand = candidate_mask([width], width)
    _, hist = mfvi_logits(
        s_edge[None], np.asarray(s_sib)[None], np.asarray(s_cop)[None], np.asarray(s_grd)[None], cand, T
    )
    return PosteriorQ([q.data[0] for q in hist])


def threshold_edges(q: np.ndarray, cand: Optional[np.ndarray] = None) -> set[tuple[int, int]]:
    """Edges (i, j) with probability strictly above 0.5."""
    q = np.asarray(q)
    keep = q > 0.5
    if cand is not None:
        keep &= cand
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(keep))}


def assign_labels(edges, p_label: np.ndarray, inventory: LabelInventory, n: int) -> SemGraph:
    """Label each kept edge with its argmax label; ties go to the earliest label."""
    out = []
    for i, j in sorted(edges):
        out.append(Edge(i, j, inventory.labels[int(np.argmax(p_label[i, j]))]))
    return SemGraph(n, frozenset(out))


class TransitionMatrix:
    """Legal transitions over the role-expanded alphabet.

    States are ordered B-r/E-r pairs by role, then O, then one I_r per role.
    Collapsing roles gives the forbidden cells E→E, E→I, O→E, O→I, I→B, I→O.
    Role refinement only lets B-r and I_r continue into I_r or E-r of the
    same role r.
    """

    def __init__(self, roles: Sequence[str]):
        self.roles = tuple(roles)
        states = []
        for r in self.roles:
            states += [CompositeLabel(B, r), CompositeLabel(E, r)]
        states.append(CompositeLabel(O))
        states += [CompositeLabel(I, r) for r in self.roles]
        self.states = tuple(states)
        n = len(states)
        allowed = np.zeros((n, n), dtype=bool)
        for a, x in enumerate(states):
            for b, y in enumerate(states):
                allowed[a, b] = self._allowed(x, y)
        self.allowed = allowed
        self.start = np.array([s.kind in (B, O) for s in states])
        self.end = np.array([s.kind in (B, E, O) for s in states])

    @staticmethod
    def _allowed(x: CompositeLabel, y: CompositeLabel) -> bool:
        if (x.kind, y.kind) in {(E, E), (E, I), (O, E), (O, I), (I, B), (I, O)}:
            return False
        if y.kind in (E, I):
            # only B-r / I_r may continue an open argument, same role only
            return x.kind in (B, I) and x.value == y.value
        return True

    def collapsed(self) -> dict[tuple[str, str], bool]:
        """Wildcard view: a cell is allowed if any role-refined pair is."""
        out = {}
        kinds = [B, E, I, O]
        for a in kinds:
            for b in kinds:
                out[(a, b)] = any(
                    self.allowed[i, j]
                    for i, x in enumerate(self.states)
                    for j, y in enumerate(self.states)
                    if x.kind == a and y.kind == b
                )
        return out

    def __len__(self) -> int:
        return len(self.states)


def repair_emissions(p_edge_row: np.ndarray, p_label_rows: np.ndarray, inventory: LabelInventory,
                     transitions: TransitionMatrix) -> np.ndarray:
    """(n, S) emission probabilities p'' for words 1..n of one predicate.

    p''(B-r|k,j) = p(k,j) p(B-r|k,j), likewise for E-r; every O and I_r state
    gets 1 - p(k,j).
    """
    n = len(p_edge_row)
    em = np.empty((n, len(transitions)))
    for s, state in enumerate(transitions.states):
        if state.kind in (O, I):
            em[:, s] = 1.0 - p_edge_row
        else:
            em[:, s] = p_edge_row * p_label_rows[:, inventory.index(state)]
    return em


def viterbi(log_em: np.ndarray, transitions: TransitionMatrix) -> tuple[list[int], float]:
    """Best legal state path under ``log_em`` (n, S); ties prefer earlier states."""
    n, S = log_em.shape
    trans = np.where(transitions.allowed, 0.0, -np.inf)
    delta = np.where(transitions.start, log_em[0], -np.inf)
    back = np.zeros((n, S), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + trans
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(S)] + log_em[t]
    final = np.where(transitions.end, delta, -np.inf)
    last = int(np.argmax(final))
    path = [last]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path, float(final[last])


def path_to_arguments(labels: Sequence[CompositeLabel]) -> list[Argument]:
    """Decode a legal B/I/E/O sequence over words 1..n into arguments."""
    args, open_at = [], None
    for pos, lab in enumerate(labels, start=1):
        if lab.kind == B:
            if open_at is not None:
                args.append(Argument.of(open_at[0], open_at[0], open_at[1]))
            open_at = (pos, lab.value)
        elif lab.kind == I:
            continue
        elif lab.kind == E:
            args.append(Argument.of(open_at[0], pos, lab.value))
            open_at = None
        else:
            if open_at is not None:
                args.append(Argument.of(open_at[0], open_at[0], open_at[1]))
            open_at = None
    if open_at is not None:
        args.append(Argument.of(open_at[0], open_at[0], open_at[1]))
    return args


def viterbi_repair(k: int, p_edge_row: np.ndarray, p_label_rows: np.ndarray, inventory: LabelInventory,
                   transitions: Optional[TransitionMatrix] = None):
    """Relabel every word for predicate ``k``.

    ``p_edge_row[j-1]`` is p(k, j) and ``p_label_rows[j-1]`` is p(.|k, j) for
    words j = 1..n. The predicate's own position has no edge and is treated
    as p = 0. Returns (label sequence, arguments).
    """
    transitions = transitions or TransitionMatrix(inventory.roles)
    p_edge_row = np.array(p_edge_row, dtype=np.float64)
    if 1 <= k <= len(p_edge_row):
        p_edge_row[k - 1] = 0.0
    em = repair_emissions(p_edge_row, np.asarray(p_label_rows), inventory, transitions)
    with np.errstate(divide="ignore"):
        log_em = np.log(em)
    path, _ = viterbi(log_em, transitions)
    labels = [transitions.states[s] for s in path]
    return labels, path_to_arguments(labels)


def collapse(label: CompositeLabel) -> str:
    return label.kind if label.kind in (O, I) else str(label)


@dataclass
class Decoded:
    structure: SrlStructure
    graph: SemGraph
    repaired: list = field(default_factory=list)


def decode_probabilities(sentence, p_edge: np.ndarray, p_label: np.ndarray, inventory: LabelInventory,
                         transitions: Optional[TransitionMatrix] = None) -> Decoded:
    """Threshold, label, recover, and repair one sentence from its probabilities.

    ``p_edge`` is (N, N) and ``p_label`` is (N, N, L) with N >= n + 1.
    """
    n = sentence.n
    width = n + 1
    p_edge = p_edge[:width, :width]
    p_label = p_label[:width, :width]
    cand = candidate_mask([width], width)[0]
    graph = assign_labels(threshold_edges(p_edge, cand), p_label, inventory, n)
    if inventory.mode == DEP_MODE:
        return Decoded(graph_to_dep_srl(graph, sentence), graph)
    structure, reports = graph_to_srl(graph, sentence)
    if not reports:
        return Decoded(structure, graph)
    transitions = transitions or TransitionMatrix(inventory.roles)
    frames = {f.predicate: f for f in structure.frames}
    for report in reports:
        k = report.predicate
        _, args = viterbi_repair(k, p_edge[k, 1:], p_label[k, 1:], inventory, transitions)
        frames[k] = PredicateFrame(k, tuple(args), frames[k].sense)
    return Decoded(SrlStructure(sentence, tuple(frames.values())), graph, [r.predicate for r in reports])


def decode_sentence(sentence, model, order: str = O2) -> SrlStructure:
    return model.decode([sentence], order=order)[0]
