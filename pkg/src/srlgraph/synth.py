"""Synthetic corpora: a small template grammar and random-structure fuzzers."""

from __future__ import annotations

import numpy as np

from .core import Argument, PredicateFrame, Sentence, SrlStructure, Token

NAMES = ["John", "Mary", "Alice", "Bob", "Tom", "Sara", "Peter", "Emma"]
DETS = ["the", "a"]
ADJS = ["old", "young", "red", "small", "big", "quiet", "happy"]
NOUNS = ["farmer", "teacher", "dog", "book", "apple", "car", "letter", "house", "boat", "cake"]
TRANSITIVE = [("sold", "sell"), ("bought", "buy"), ("saw", "see"), ("found", "find"), ("wrote", "write"),
              ("painted", "paint"), ("cleaned", "clean"), ("carried", "carry")]
DITRANSITIVE = [("gave", "give"), ("sent", "send"), ("showed", "show")]
CONTROL = [("wants", "want"), ("tried", "try"), ("hopes", "hope")]
PLACES = [["in", "the", "garden"], ["near", "the", "river"], ["at", "the", "market"], ["in", "town"]]
TIMES = [["yesterday"], ["today"], ["on", "Monday"], ["last", "week"]]


class _Builder:
    def __init__(self):
        self.tokens: list[Token] = []

    def add(self, words, lemmas=None) -> tuple[int, int]:
        """Append words; return their 1-based (begin, end)."""
        lemmas = lemmas or [w.lower() for w in words]
        begin = len(self.tokens) + 1
        self.tokens += [Token(w, l) for w, l in zip(words, lemmas)]
        return begin, len(self.tokens)


def _pick(rng, items):
    return items[int(rng.integers(len(items)))]


def _noun_phrase(rng) -> list[str]:
    if rng.random() < 0.35:
        return [_pick(rng, NAMES)]
    words = [_pick(rng, DETS)]
    if rng.random() < 0.5:
        words.append(_pick(rng, ADJS))
    return words + [_pick(rng, NOUNS)]


def toy_sentence(rng: np.random.Generator) -> SrlStructure:
    """One sentence from the template grammar with gold frames."""
    b = _Builder()
    frames = []
    template = int(rng.integers(6))
    if template == 3:
        # time adjunct in front: "Yesterday , NP V NP ."
        t = _pick(rng, TIMES)
        tm = b.add([t[0].capitalize()] + t[1:], [w.lower() for w in t])
        b.add([","])
    a0 = b.add(_noun_phrase(rng))
    if template == 4:
        # control verb with a shared subject: "NP wants to V NP ."
        cv, cl = _pick(rng, CONTROL)
        k1 = b.add([cv], [cl])[0]
        to = b.add(["to"])[0]
        v, l = _pick(rng, TRANSITIVE)
        k2 = b.add([l], [l])[0]
        a1 = b.add(_noun_phrase(rng))
        frames.append(PredicateFrame(k1, (Argument.of(*a0, "A0"), Argument.of(to, a1[1], "A1"))))
        frames.append(PredicateFrame(k2, (Argument.of(*a0, "A0"), Argument.of(*a1, "A1"))))
    elif template == 5:
        # coordination sharing A0: "NP V NP and V NP ."
        v, l = _pick(rng, TRANSITIVE)
        k1 = b.add([v], [l])[0]
        a1 = b.add(_noun_phrase(rng))
        b.add(["and"])
        v2, l2 = _pick(rng, TRANSITIVE)
        k2 = b.add([v2], [l2])[0]
        a1b = b.add(_noun_phrase(rng))
        frames.append(PredicateFrame(k1, (Argument.of(*a0, "A0"), Argument.of(*a1, "A1"))))
        frames.append(PredicateFrame(k2, (Argument.of(*a0, "A0"), Argument.of(*a1b, "A1"))))
    elif template == 1:
        v, l = _pick(rng, DITRANSITIVE)
        k = b.add([v], [l])[0]
        a2 = b.add(_noun_phrase(rng))
        a1 = b.add(_noun_phrase(rng))
        frames.append(PredicateFrame(k, (Argument.of(*a0, "A0"), Argument.of(*a2, "A2"), Argument.of(*a1, "A1"))))
    else:
        v, l = _pick(rng, TRANSITIVE)
        k = b.add([v], [l])[0]
        a1 = b.add(_noun_phrase(rng))
        args = [Argument.of(*a0, "A0"), Argument.of(*a1, "A1")]
        if template == 2:
            args.append(Argument.of(*b.add(_pick(rng, PLACES)), "AM-LOC"))
        if template == 3:
            args.append(Argument.of(*tm, "AM-TMP"))
        frames.append(PredicateFrame(k, tuple(args)))
    b.add(["."])
    return SrlStructure(Sentence(tuple(b.tokens)), tuple(frames))


def toy_corpus(size: int, seed: int = 0) -> list[SrlStructure]:
    rng = np.random.default_rng(seed)
    return [toy_sentence(rng) for _ in range(size)]


def random_frame_arguments(rng, n: int, k: int, roles, max_args: int, max_width: int, single_word: bool = False):
    """Non-overlapping arguments whose boundaries avoid the predicate k."""
    args, taken = [], set()
    for _ in range(int(rng.integers(max_args + 1))):
        width = 1 if single_word else int(rng.integers(1, max_width + 1))
        begin = int(rng.integers(1, n + 1))
        end = min(n, begin + width - 1)
        span = set(range(begin, end + 1))
        if span & taken or k in (begin, end):
            continue
        taken |= span
        args.append(Argument.of(begin, end, _pick(rng, roles)))
    return tuple(args)


def random_structure(rng: np.random.Generator, max_n: int = 20, roles=("A0", "A1", "A2", "AM-TMP"),
                     max_frames: int = 4, max_args: int = 4, max_width: int = 5) -> SrlStructure:
    """A valid span-mode structure with no senses."""
    n = int(rng.integers(1, max_n + 1))
    sentence = Sentence.from_words(f"w{i}" for i in range(1, n + 1))
    preds = rng.choice(np.arange(1, n + 1), size=min(n, int(rng.integers(max_frames + 1))), replace=False)
    frames = tuple(
        PredicateFrame(int(k), random_frame_arguments(rng, n, int(k), roles, max_args, max_width)) for k in preds
    )
    return SrlStructure(sentence, frames)


def random_dep_structure(rng: np.random.Generator, max_n: int = 20, roles=("A0", "A1", "A2", "AM-TMP"),
                         senses=("01", "02", None), max_frames: int = 4, max_args: int = 4) -> SrlStructure:
    """A valid dependency-mode structure: one-word arguments, optional senses."""
    n = int(rng.integers(1, max_n + 1))
    sentence = Sentence.from_words(f"w{i}" for i in range(1, n + 1))
    preds = rng.choice(np.arange(1, n + 1), size=min(n, int(rng.integers(max_frames + 1))), replace=False)
    frames = tuple(
        PredicateFrame(int(k), random_frame_arguments(rng, n, int(k), roles, max_args, 1, True), _pick(rng, senses))
        for k in preds
    )
    return SrlStructure(sentence, frames)
