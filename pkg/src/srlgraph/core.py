"""Domain types: sentences, SRL structures, semantic graphs and label inventories.

Word indices on the SRL side are 1-based. On the graph side the pseudo Root
node sits at index 0, so a head of 0 always means Root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

ROOT = 0

PRD = "PRD"
B = "B"
E = "E"
O = "O"
I = "I"
SENSE = "SENSE"
ROLE = "ROLE"

SPAN_MODE = "span"
DEP_MODE = "dependency"
MODES = (SPAN_MODE, DEP_MODE)


class SrlError(ValueError):
    """Raised for structurally invalid inputs."""


@dataclass(frozen=True)
class Token:
    form: str
    lemma: str = ""

    def __post_init__(self):
        if not self.form:
            raise SrlError("token surface form must be nonempty")
        if not self.lemma:
            object.__setattr__(self, "lemma", self.form.lower())


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise SrlError("a sentence needs at least one token")

    @classmethod
    def from_words(cls, words: Iterable[str], lemmas: Optional[Iterable[str]] = None) -> "Sentence":
        words = list(words)
        lemmas = list(lemmas) if lemmas is not None else [""] * len(words)
        return cls(tuple(Token(w, l) for w, l in zip(words, lemmas)))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.form for t in self.tokens]


@dataclass(frozen=True, order=True)
class Span:
    begin: int
    end: int

    @property
    def width(self) -> int:
        return self.end - self.begin + 1

    def overlaps(self, other: "Span") -> bool:
        return self.begin <= other.end and other.begin <= self.end


@dataclass(frozen=True, order=True)
class Argument:
    span: Span
    role: str

    @classmethod
    def of(cls, begin: int, end: int, role: str) -> "Argument":
        return cls(Span(begin, end), role)

    @property
    def begin(self) -> int:
        return self.span.begin

    @property
    def end(self) -> int:
        return self.span.end


@dataclass(frozen=True)
class PredicateFrame:
    predicate: int
    arguments: tuple[Argument, ...] = ()
    sense: Optional[str] = None

    def __post_init__(self):
        # canonical order keeps equality independent of listing order
        object.__setattr__(self, "arguments", tuple(sorted(self.arguments)))


@dataclass(frozen=True)
class SrlStructure:
    sentence: Sentence
    frames: tuple[PredicateFrame, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(sorted(self.frames, key=lambda f: f.predicate)))

    @property
    def n(self) -> int:
        return self.sentence.n

    def frame(self, predicate: int) -> Optional[PredicateFrame]:
        for f in self.frames:
            if f.predicate == predicate:
                return f
        return None

    def roles(self) -> set[str]:
        return {a.role for f in self.frames for a in f.arguments}

    def senses(self) -> set[str]:
        return {f.sense for f in self.frames if f.sense is not None}


@dataclass(frozen=True)
class CompositeLabel:
    """A graph or Viterbi label.

    ``kind`` is one of PRD, B, E, O, I (span mode) or SENSE, ROLE
    (dependency mode). ``value`` carries the role (B/E/I/ROLE) or the
    predicate sense (SENSE).
    """

    kind: str
    value: Optional[str] = None

    def __str__(self) -> str:
        if self.kind in (PRD, O) or (self.kind == I and self.value is None):
            return self.kind
        if self.kind in (SENSE, ROLE):
            return str(self.value)
        return f"{self.kind}-{self.value}"

    @property
    def role(self) -> Optional[str]:
        return self.value if self.kind in (B, E, I, ROLE) else None

    @property
    def is_root_label(self) -> bool:
        return self.kind in (PRD, SENSE)


def parse_label(text: str) -> CompositeLabel:
    """Inverse of ``str(CompositeLabel)`` for span-mode labels."""
    if text in (PRD, O, I):
        return CompositeLabel(text)
    if text[:2] in ("B-", "E-", "I-"):
        return CompositeLabel(text[0], text[2:])
    raise SrlError(f"not a span-mode label: {text!r}")


@dataclass(frozen=True)
class Edge:
    head: int
    modifier: int
    label: CompositeLabel


@dataclass(frozen=True)
class SemGraph:
    """Word-level labeled graph; node 0 is Root, words are 1..n."""

    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        edges = frozenset(self.edges)
        object.__setattr__(self, "edges", edges)
        seen = set()
        for e in edges:
            if not (0 <= e.head <= self.n and 1 <= e.modifier <= self.n):
                raise SrlError(f"edge {e.head}->{e.modifier} out of range for n={self.n}")
            if e.head == e.modifier:
                raise SrlError(f"self loop at {e.head}")
            if (e.head, e.modifier) in seen:
                raise SrlError(f"duplicate edge {e.head}->{e.modifier}")
            seen.add((e.head, e.modifier))
            if (e.head == ROOT) != e.label.is_root_label:
                raise SrlError(f"label {e.label} not allowed on edge {e.head}->{e.modifier}")

    def triples(self) -> set[tuple[int, int, str]]:
        return {(e.head, e.modifier, str(e.label)) for e in self.edges}

    def children(self, head: int) -> list[Edge]:
        return sorted((e for e in self.edges if e.head == head), key=lambda e: e.modifier)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_frame(frame: PredicateFrame, n: int, roles: Optional[set[str]] = None) -> list[str]:
    problems = []
    k = frame.predicate
    if not 1 <= k <= n:
        problems.append(f"predicate {k} out of bounds (n={n})")
    args = frame.arguments
    for a in args:
        if not 1 <= a.begin <= a.end <= n:
            problems.append(f"predicate {k}: span [{a.begin},{a.end}] out of bounds (n={n})")
        if k in (a.begin, a.end):
            # the boundary edge would be a self loop on the predicate
            problems.append(f"predicate {k}: span [{a.begin},{a.end}] starts or ends at the predicate")
        if roles is not None and a.role not in roles:
            problems.append(f"predicate {k}: unknown role {a.role!r}")
    for x, y in zip(args, args[1:]):
        # arguments are sorted by begin, so checking neighbours is enough
        if x.span.overlaps(y.span):
            problems.append(
                f"predicate {k}: overlapping arguments [{x.begin},{x.end}] and [{y.begin},{y.end}]"
            )
    return problems


def validate_srl(s: SrlStructure, roles: Optional[set[str]] = None) -> ValidationReport:
    report = ValidationReport()
    seen = set()
    for frame in s.frames:
        if frame.predicate in seen:
            report.violations.append(f"duplicate predicate {frame.predicate}")
        seen.add(frame.predicate)
        report.violations.extend(validate_frame(frame, s.n, roles))
    return report


class LabelInventory:
    """Frozen, ordered label sets for one role (and sense) vocabulary.

    Graph labels come first in index order; ``viterbi`` is the alphabet used
    for repair. Ordering is lexicographic by role with B before E, so two
    inventories built from the same role set are identical.
    """

    def __init__(self, roles: Iterable[str], mode: str = SPAN_MODE, senses: Iterable[str] = ()):
        if mode not in MODES:
            raise SrlError(f"unknown mode {mode!r}")
        self.mode = mode
        self.roles = tuple(sorted(set(roles)))
        self.senses = tuple(sorted(set(senses)))
        if not self.roles:
            raise SrlError("role inventory must be nonempty")
        if mode == SPAN_MODE:
            labels = [CompositeLabel(PRD)]
            for r in self.roles:
                labels += [CompositeLabel(B, r), CompositeLabel(E, r)]
            self.viterbi = tuple(labels[1:] + [CompositeLabel(O), CompositeLabel(I)])
        else:
            if not self.senses:
                raise SrlError("dependency mode needs a nonempty sense inventory")
            labels = [CompositeLabel(SENSE, s) for s in self.senses]
            labels += [CompositeLabel(ROLE, r) for r in self.roles]
            self.viterbi = ()
        self.labels = tuple(labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabelInventory)
            and self.mode == other.mode
            and self.roles == other.roles
            and self.senses == other.senses
        )

    def index(self, label: CompositeLabel) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise SrlError(f"label {label} not in inventory") from None

    def root_mask(self) -> list[bool]:
        """Which labels may sit on a Root-headed edge."""
        return [lab.is_root_label for lab in self.labels]

    def to_dict(self) -> dict:
        return {"mode": self.mode, "roles": list(self.roles), "senses": list(self.senses)}

    @classmethod
    def from_dict(cls, d: dict) -> "LabelInventory":
        return cls(d["roles"], d.get("mode", SPAN_MODE), d.get("senses", ()))

    def __repr__(self) -> str:
        return f"LabelInventory({[str(l) for l in self.labels]})"


def build_label_inventory(roles: Iterable[str], mode: str = SPAN_MODE, senses: Iterable[str] = ()) -> LabelInventory:
    return LabelInventory(roles, mode, senses)


def inventory_from_corpus(corpus: Iterable[SrlStructure], mode: str = SPAN_MODE) -> LabelInventory:
    roles, senses = set(), set()
    for s in corpus:
        roles |= s.roles()
        senses |= {f.sense if f.sense is not None else NO_SENSE for f in s.frames}
    return LabelInventory(roles, mode, senses if mode == DEP_MODE else ())


NO_SENSE = "_"
