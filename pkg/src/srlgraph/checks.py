"""Property suite behind ``srlgraph check``: round trips, conflicts, Viterbi legality."""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import B, DEP_MODE, E, I, O, SPAN_MODE, CompositeLabel, LabelInventory
from .inference import TransitionMatrix, mfvi, viterbi_repair
from .io import read_corpus, write_corpus
from .synth import random_dep_structure, random_structure
from .transform import dep_srl_to_graph, detect_conflicts, graph_to_dep_srl, graph_to_srl, srl_to_graph

# collapsed transitions that may never appear in a repaired sequence
FORBIDDEN = {(E, E), (E, I), (O, E), (O, I), (I, B), (I, O)}


@dataclass
class CheckResult:
    name: str
    cases: int
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "ok" if self.ok else f"FAIL ({len(self.failures)}): {self.failures[0]}"
        return f"{self.name}: {self.cases} cases {status}"


def sequence_violations(labels: Sequence[CompositeLabel]) -> list[str]:
    """Reasons a B/I/E/O sequence is not a well-formed argument labeling."""
    out = []
    open_role = None
    for pos, lab in enumerate(labels, start=1):
        if pos > 1 and (labels[pos - 2].kind, lab.kind) in FORBIDDEN:
            out.append(f"forbidden {labels[pos - 2].kind}->{lab.kind} at {pos}")
        if pos == 1 and lab.kind in (I, E):
            out.append(f"sequence starts with {lab.kind}")
        if lab.kind == B:
            open_role = lab.value
        elif lab.kind in (I, E):
            if open_role is None:
                out.append(f"unmatched {lab.kind} at {pos}")
            elif lab.value is not None and lab.value != open_role:
                out.append(f"role mismatch at {pos}")
            if lab.kind == E:
                open_role = None
        else:
            open_role = None
    if labels and labels[-1].kind == I:
        out.append("sequence ends with I")
    return out


def _label_text(seq) -> str:
    return " ".join(f"{lab.kind}-{lab.value}" for _, lab in seq)


_CONFLICT_FREE = re.compile(r"^(?:B-(\S+)(?: E-\1)?(?: |$))*$")


def _conflict_free_by_grammar(seq) -> bool:
    """Every E immediately follows a B of the same role that it closes."""
    return bool(_CONFLICT_FREE.match(_label_text(seq)))


def check_span_roundtrip(rng, cases: int) -> CheckResult:
    bad = []
    for _ in range(cases):
        s = random_structure(rng)
        back, reports = graph_to_srl(srl_to_graph(s), s.sentence)
        if back != s or reports:
            bad.append(f"{s}")
    return CheckResult("span round trip", cases, bad)


def check_dep_roundtrip(rng, cases: int) -> CheckResult:
    bad = []
    for _ in range(cases):
        s = random_dep_structure(rng)
        if graph_to_dep_srl(dep_srl_to_graph(s), s.sentence) != s:
            bad.append(f"{s}")
    return CheckResult("dependency round trip", cases, bad)


def check_conflict_grammar(rng, cases: int, roles=("A0", "A1")) -> CheckResult:
    bad = []
    for _ in range(cases):
        m = int(rng.integers(0, 7))
        seq = [
            (p, CompositeLabel(B if rng.random() < 0.55 else E, roles[int(rng.integers(len(roles)))]))
            for p in range(1, m + 1)
        ]
        if (not detect_conflicts(seq)) != _conflict_free_by_grammar(seq):
            bad.append(_label_text(seq))
    return CheckResult("conflict detection matches grammar", cases, bad)


def check_viterbi_legal(rng, cases: int, roles=("A0", "A1", "A2")) -> CheckResult:
    bad = []
    inv = LabelInventory(roles)
    tm = TransitionMatrix(roles)
    for _ in range(cases):
        n = int(rng.integers(1, 13))
        k = int(rng.integers(1, n + 1))
        p_edge = rng.random(n)
        p_label = rng.dirichlet(np.ones(len(inv)), size=n)
        labels, _ = viterbi_repair(k, p_edge, p_label, inv, tm)
        problems = sequence_violations(labels)
        if problems:
            bad.append(problems[0])
    return CheckResult("viterbi output legal", cases, bad)


def check_mfvi_first_order(rng, cases: int) -> CheckResult:
    bad = []
    for _ in range(cases):
        n = int(rng.integers(1, 7))
        w = n + 1
        s = rng.normal(size=(w, w))
        z = np.zeros((w, w, w))
        q = mfvi(s, z, z, z, T=3).final
        cand = np.ones((w, w), dtype=bool)
        cand[:, 0] = False
        np.fill_diagonal(cand, False)
        ref = np.where(cand, 1.0 / (1.0 + np.exp(-s)), 0.0)
        if not np.allclose(q, ref, rtol=0, atol=1e-15):
            bad.append(f"n={n}")
    return CheckResult("mfvi without second order is sigmoid", cases, bad)


def check_column_roundtrip(rng, cases: int) -> CheckResult:
    bad = []
    with tempfile.TemporaryDirectory() as tmp:
        for mode, gen in ((SPAN_MODE, random_structure), (DEP_MODE, random_dep_structure)):
            corpus = [gen(rng) for _ in range(cases)]
            path = os.path.join(tmp, f"{mode}.txt")
            write_corpus(corpus, path, mode)
            diag = []
            back = read_corpus(path, mode, diagnostics=diag)
            if back != corpus or diag:
                bad.append(f"{mode}: {diag[:1] or 'structures differ'}")
    return CheckResult("column format round trip", 2 * cases, bad)


SUITE: list[tuple[Callable, float]] = [
    (check_span_roundtrip, 1.0),
    (check_dep_roundtrip, 1.0),
    (check_conflict_grammar, 1.0),
    (check_viterbi_legal, 0.1),
    (check_mfvi_first_order, 0.05),
    (check_column_roundtrip, 0.1),
]


def run_checks(fuzz: int = 1000, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [check(rng, max(1, int(fuzz * share))) for check, share in SUITE]
