"""Conversion between SRL structures and word-level semantic graphs.

Span mode uses the BE schema: Root -PRD-> predicate, predicate -B-r-> first
word of each argument and, for arguments wider than one word,
predicate -E-r-> last word. Dependency mode links Root to predicates with
sense labels and predicates to argument words with role labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import (
    B,
    E,
    NO_SENSE,
    PRD,
    ROLE,
    ROOT,
    SENSE,
    Argument,
    CompositeLabel,
    Edge,
    PredicateFrame,
    SemGraph,
    Sentence,
    SrlError,
    SrlStructure,
    validate_srl,
)

UNMATCHED_E = "unmatched-E"
CONSECUTIVE_E = "consecutive-E"
CROSSING = "unclosed-B-crossing"
ROLE_MISMATCH = "role-mismatched-pair"


@dataclass
class ConflictReport:
    predicate: int
    conflicts: list[tuple[int, str]] = field(default_factory=list)

    @property
    def kinds(self) -> set[str]:
        return {kind for _, kind in self.conflicts}

    def __bool__(self) -> bool:
        return bool(self.conflicts)


def srl_to_graph(s: SrlStructure) -> SemGraph:
    report = validate_srl(s)
    if not report.ok:
        raise SrlError("; ".join(report.violations))
    edges = []
    for frame in s.frames:
        k = frame.predicate
        edges.append(Edge(ROOT, k, CompositeLabel(PRD)))
        for arg in frame.arguments:
            edges.append(Edge(k, arg.begin, CompositeLabel(B, arg.role)))
            if arg.end > arg.begin:
                edges.append(Edge(k, arg.end, CompositeLabel(E, arg.role)))
    return SemGraph(s.n, frozenset(edges))


def _scan(seq):
    """Left-to-right pass shared by conflict detection and recovery.

    An E-r closes the most recent pending B when that B has role r; every B
    opened before it is then final as a one-word argument. Returns the
    recovered arguments and the list of (position, conflict kind).
    """
    pending: list[tuple[int, str]] = []
    args: list[Argument] = []
    conflicts: list[tuple[int, str]] = []
    for pos, label in seq:
        if label.kind == B:
            pending.append((pos, label.value))
            continue
        if label.kind != E:
            raise SrlError(f"unexpected label {label} in argument sequence")
        if not pending:
            conflicts.append((pos, UNMATCHED_E))
        elif pending[-1][1] == label.value:
            begin, role = pending.pop()
            args.extend(Argument.of(i, i, r) for i, r in pending)
            args.append(Argument.of(begin, pos, role))
            pending = []
        elif any(r == label.value for _, r in pending):
            # closing the earlier B would swallow the later pending B(s)
            conflicts.append((pos, CROSSING))
            pending = []
        else:
            conflicts.append((pos, ROLE_MISMATCH))
            pending = []
    args.extend(Argument.of(i, i, r) for i, r in pending)
    return args, conflicts


def detect_conflicts(seq) -> list[tuple[int, str]]:
    """Conflicts in one predicate's ordered (position, B/E label) sequence."""
    positions = [p for p, _ in seq]
    if any(a >= b for a, b in zip(positions, positions[1:])):
        raise SrlError("positions must be strictly increasing")
    return _scan(seq)[1]


def predicate_sequence(g: SemGraph, k: int) -> list[tuple[int, CompositeLabel]]:
    return [(e.modifier, e.label) for e in g.children(k) if e.label.kind in (B, E)]


def graph_to_srl(g: SemGraph, sentence: Sentence | None = None):
    """Recover an SRL structure; conflicted predicates come back without arguments."""
    sentence = sentence if sentence is not None else _placeholder_sentence(g.n)
    frames, reports = [], []
    for root_edge in g.children(ROOT):
        k = root_edge.modifier
        seq = predicate_sequence(g, k)
        args, conflicts = _scan(seq)
        for (_, a), (pos, b) in zip(seq, seq[1:]):
            if a.kind == E and b.kind == E:
                conflicts.append((pos, CONSECUTIVE_E))
        if conflicts:
            reports.append(ConflictReport(k, sorted(conflicts)))
            args = []
        frames.append(PredicateFrame(k, tuple(args)))
    return SrlStructure(sentence, tuple(frames)), reports


def dep_srl_to_graph(s: SrlStructure) -> SemGraph:
    report = validate_srl(s)
    if not report.ok:
        raise SrlError("; ".join(report.violations))
    edges = []
    for frame in s.frames:
        k = frame.predicate
        sense = frame.sense if frame.sense is not None else NO_SENSE
        edges.append(Edge(ROOT, k, CompositeLabel(SENSE, sense)))
        for arg in frame.arguments:
            if arg.end != arg.begin:
                raise SrlError(
                    f"dependency mode needs one-word arguments, got [{arg.begin},{arg.end}]"
                )
            edges.append(Edge(k, arg.begin, CompositeLabel(ROLE, arg.role)))
    return SemGraph(s.n, frozenset(edges))


def graph_to_dep_srl(g: SemGraph, sentence: Sentence | None = None) -> SrlStructure:
    sentence = sentence if sentence is not None else _placeholder_sentence(g.n)
    frames = []
    for root_edge in g.children(ROOT):
        k = root_edge.modifier
        sense = root_edge.label.value
        args = tuple(
            Argument.of(e.modifier, e.modifier, e.label.value)
            for e in g.children(k)
            if e.label.kind == ROLE
        )
        frames.append(PredicateFrame(k, args, None if sense == NO_SENSE else sense))
    return SrlStructure(sentence, tuple(frames))


def _placeholder_sentence(n: int) -> Sentence:
    return Sentence.from_words(f"w{i}" for i in range(1, n + 1))
