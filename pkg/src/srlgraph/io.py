"""Corpus reading and prediction writing (column and JSON-lines formats).

Column format, one token per line, tab separated, blank line between
sentences::

    index  form  lemma  pred  arg_1 ... arg_F

``pred`` is ``-`` for non-predicates, ``V`` for a predicate without a sense
and the sense string otherwise. Argument column f belongs to the f-th
predicate in sentence order. Span mode writes bracket notation (``(A0*``,
``*``, ``*)``, ``(A0*)``); dependency mode writes the role or ``_``.
"""

from __future__ import annotations

import json
import logging
import re
from typing import Iterable, Optional, Sequence

from .core import DEP_MODE, MODES, SPAN_MODE, Argument, PredicateFrame, Sentence, SrlError, SrlStructure, Token, validate_srl

log = logging.getLogger(__name__)

NOT_PRED = "-"
NO_SENSE_MARK = "V"
EMPTY_ROLE = "_"
FORMATS = ("columns", "json")

_CELL = re.compile(r"^((?:\([^()*\s]+)*)\*(\)*)$")


class CorpusError(SrlError):
    pass


def _blocks(lines: Iterable[str]):
    """Yield (first line number, list of (lineno, fields)) per sentence block."""
    block, start = [], None
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block:
                yield start, block
            block, start = [], None
            continue
        if line.startswith("#") and not block:
            continue
        if start is None:
            start = lineno
        block.append((lineno, line.split("\t") if "\t" in line else line.split()))
    if block:
        yield start, block


def _parse_span_column(cells, lines) -> list[Argument]:
    args, open_at = [], None
    for pos, (cell, lineno) in enumerate(zip(cells, lines), start=1):
        m = _CELL.match(cell)
        if not m:
            raise CorpusError(f"line {lineno}: malformed span cell {cell!r}")
        opens = [r for r in m.group(1).split("(") if r]
        closes = len(m.group(2))
        if len(opens) > 1 or closes > 1:
            raise CorpusError(f"line {lineno}: nested spans are not supported ({cell!r})")
        if opens:
            if open_at is not None:
                raise CorpusError(f"line {lineno}: span opened inside another span")
            open_at = (pos, opens[0])
        if closes:
            if open_at is None:
                raise CorpusError(f"line {lineno}: span closed without being opened")
            begin, role = open_at
            if role != NO_SENSE_MARK:  # the predicate's own (V*) marker is not an argument
                args.append(Argument.of(begin, pos, role))
            open_at = None
    if open_at is not None:
        raise CorpusError(f"line {lines[-1]}: span opened at word {open_at[0]} never closed")
    return args


def _parse_dep_column(cells) -> list[Argument]:
    return [Argument.of(i, i, c) for i, c in enumerate(cells, start=1) if c != EMPTY_ROLE]


def parse_block(block, mode: str) -> SrlStructure:
    width = len(block[0][1])
    for lineno, cols in block:
        if len(cols) != width:
            raise CorpusError(f"line {lineno}: expected {width} columns, found {len(cols)}")
    if width < 4:
        raise CorpusError(f"line {block[0][0]}: need at least index, form, lemma and predicate columns")
    tokens, preds = [], []
    for pos, (lineno, cols) in enumerate(block, start=1):
        if cols[0] != str(pos):
            raise CorpusError(f"line {lineno}: expected index {pos}, found {cols[0]!r}")
        tokens.append(Token(cols[1], cols[2]))
        if cols[3] != NOT_PRED:
            preds.append((pos, None if cols[3] == NO_SENSE_MARK else cols[3]))
    n_frames = width - 4
    if n_frames != len(preds):
        raise CorpusError(f"line {block[0][0]}: {len(preds)} predicates but {n_frames} argument columns")
    lines = [lineno for lineno, _ in block]
    frames = []
    for f, (k, sense) in enumerate(preds):
        cells = [cols[4 + f] for _, cols in block]
        args = _parse_span_column(cells, lines) if mode == SPAN_MODE else _parse_dep_column(cells)
        frames.append(PredicateFrame(k, tuple(args), sense))
    return SrlStructure(Sentence(tuple(tokens)), tuple(frames))


def read_corpus(path, mode: str = SPAN_MODE, strict: bool = False,
                diagnostics: Optional[list] = None) -> list[SrlStructure]:
    """Parse a column-format file.

    Malformed blocks are skipped with a diagnostic naming their line; frames
    that fail validation (overlaps, bad bounds) are dropped with a
    diagnostic. ``strict`` turns either case into a CorpusError.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    diagnostics = diagnostics if diagnostics is not None else []

    def report(msg):
        if strict:
            raise CorpusError(msg)
        diagnostics.append(msg)
        log.warning(msg)

    out = []
    with open(path, encoding="utf-8", newline=None) as fh:
        for start, block in _blocks(fh):
            try:
                s = parse_block(block, mode)
            except SrlError as exc:
                report(f"{path}: block at line {start} skipped: {exc}")
                continue
            keep = []
            for frame in s.frames:
                problems = validate_srl(SrlStructure(s.sentence, (frame,))).violations
                if mode == DEP_MODE and any(a.begin != a.end for a in frame.arguments):
                    problems.append("multi-word argument in dependency mode")
                if problems:
                    report(f"{path}: block at line {start}: frame dropped: {'; '.join(problems)}")
                else:
                    keep.append(frame)
            out.append(SrlStructure(s.sentence, tuple(keep)))
    return out


def _span_cells(frame: PredicateFrame, n: int) -> list[str]:
    cells = ["*"] * n
    for a in frame.arguments:
        if a.begin == a.end:
            cells[a.begin - 1] = f"({a.role}*)"
        else:
            cells[a.begin - 1] = f"({a.role}*"
            cells[a.end - 1] = "*)"
    return cells


def _dep_cells(frame: PredicateFrame, n: int) -> list[str]:
    cells = [EMPTY_ROLE] * n
    for a in frame.arguments:
        cells[a.begin - 1] = a.role
    return cells


def format_columns(s: SrlStructure, mode: str = SPAN_MODE) -> str:
    report = validate_srl(s)
    if not report.ok:
        raise SrlError("; ".join(report.violations))
    pred = {f.predicate: f for f in s.frames}
    cols = [_span_cells(f, s.n) if mode == SPAN_MODE else _dep_cells(f, s.n) for f in s.frames]
    lines = []
    for i, t in enumerate(s.sentence.tokens, start=1):
        if i in pred:
            mark = pred[i].sense if pred[i].sense is not None else NO_SENSE_MARK
        else:
            mark = NOT_PRED
        lines.append("\t".join([str(i), t.form, t.lemma, mark] + [c[i - 1] for c in cols]))
    return "\n".join(lines) + "\n"


def write_corpus(structures: Sequence[SrlStructure], path, mode: str = SPAN_MODE) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(format_columns(s, mode) for s in structures))


def to_json(s: SrlStructure) -> dict:
    obj = {"tokens": s.sentence.words}
    if any(t.lemma != t.form.lower() for t in s.sentence.tokens):
        obj["lemmas"] = [t.lemma for t in s.sentence.tokens]
    frames = []
    for f in s.frames:
        fo = {"predicate": f.predicate}
        if f.sense is not None:
            fo["sense"] = f.sense
        fo["arguments"] = [{"begin": a.begin, "end": a.end, "role": a.role} for a in f.arguments]
        frames.append(fo)
    obj["frames"] = frames
    return obj


def from_json(obj: dict) -> SrlStructure:
    try:
        sentence = Sentence.from_words(obj["tokens"], obj.get("lemmas"))
        frames = tuple(
            PredicateFrame(
                int(f["predicate"]),
                tuple(Argument.of(int(a["begin"]), int(a["end"]), a["role"]) for a in f["arguments"]),
                f.get("sense"),
            )
            for f in obj["frames"]
        )
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"bad JSON record: {exc}") from None
    s = SrlStructure(sentence, frames)
    report = validate_srl(s)
    if not report.ok:
        raise CorpusError("; ".join(report.violations))
    return s


def read_json(path) -> list[SrlStructure]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(from_json(json.loads(line)))
            except (json.JSONDecodeError, SrlError) as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
    return out


def write_predictions(structures: Sequence[SrlStructure], path, format: str = "columns",
                      mode: str = SPAN_MODE) -> None:
    if format == "columns":
        write_corpus(structures, path, mode)
    elif format == "json":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for s in structures:
                fh.write(json.dumps(to_json(s), ensure_ascii=False) + "\n")
    else:
        raise ValueError(f"format must be one of {FORMATS}")


def read_sentences(path) -> list[Sentence]:
    """Raw input for parsing: column files (first three columns) or one sentence per line."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = [l for l in text.splitlines() if l.strip()]
    if lines and all(_looks_columnar(l) for l in lines[:5]):
        out = []
        for _, block in _blocks(text.splitlines()):
            out.append(Sentence(tuple(Token(cols[1], cols[2] if len(cols) > 2 else "") for _, cols in block)))
        return out
    return [Sentence.from_words(l.split()) for l in lines]


def _looks_columnar(line: str) -> bool:
    cols = line.split("\t")
    return len(cols) >= 2 and cols[0].isdigit()
