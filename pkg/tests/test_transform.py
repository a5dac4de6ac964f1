import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srlgraph.core import B, E, Argument, CompositeLabel, Edge, PredicateFrame, SemGraph, Sentence, SrlError, SrlStructure
from srlgraph.synth import random_dep_structure, random_structure
from srlgraph.transform import (
    CONSECUTIVE_E,
    CROSSING,
    ROLE_MISMATCH,
    UNMATCHED_E,
    dep_srl_to_graph,
    detect_conflicts,
    graph_to_dep_srl,
    graph_to_srl,
    srl_to_graph,
)

from conftest import FIG2_TRIPLES, fig1_structure


def lab(text):
    kind, role = text.split("-", 1)
    return CompositeLabel(kind, role)


def seq(*items):
    return [(p, lab(t)) for p, t in items]


class TestForward:
    def test_fig1_to_fig2(self):
        assert srl_to_graph(fig1_structure()).triples() == FIG2_TRIPLES

    def test_one_word_argument_has_only_b_edge(self):
        s = SrlStructure(Sentence.from_words("a b".split()), (PredicateFrame(1, (Argument.of(2, 2, "A1"),)),))
        assert srl_to_graph(s).triples() == {(0, 1, "PRD"), (1, 2, "B-A1")}

    def test_no_frames_gives_empty_graph(self):
        s = SrlStructure(Sentence.from_words("a b c".split()))
        assert len(srl_to_graph(s)) == 0

    def test_invalid_structure_rejected(self):
        s = Sentence.from_words("a b c d".split())
        bad = SrlStructure(s, (PredicateFrame(1, (Argument.of(2, 3, "A0"), Argument.of(3, 4, "A1"))),))
        with pytest.raises(SrlError):
            srl_to_graph(bad)

    def test_edge_count(self):
        g = srl_to_graph(fig1_structure())
        # one PRD per frame, one B per argument, one E per wide argument
        assert len(g) == 2 + 4 + 1


class TestRecovery:
    def test_fig2_to_fig1(self):
        s = fig1_structure()
        back, reports = graph_to_srl(srl_to_graph(s), s.sentence)
        assert back == s
        assert reports == []

    def test_reentrancy_survives(self):
        g = srl_to_graph(fig1_structure())
        heads_of_they = {e.head for e in g.edges if e.modifier == 1}
        assert heads_of_they == {2, 4}

    def test_placeholder_sentence(self):
        back, _ = graph_to_srl(srl_to_graph(fig1_structure()))
        assert back.n == 6
        assert back.frames == fig1_structure().frames

    def test_conflicted_predicate_reported_without_arguments(self):
        g = SemGraph(
            4,
            frozenset(
                {
                    Edge(0, 1, CompositeLabel("PRD")),
                    Edge(1, 2, lab("E-A0")),
                    Edge(1, 3, lab("E-A0")),
                    Edge(0, 4, CompositeLabel("PRD")),
                    Edge(4, 2, lab("B-A1")),
                }
            ),
        )
        s, reports = graph_to_srl(g)
        assert [r.predicate for r in reports] == [1]
        assert reports[0].kinds == {UNMATCHED_E, CONSECUTIVE_E}
        assert s.frame(1).arguments == ()
        assert s.frame(4).arguments == (Argument.of(2, 2, "A1"),)


class TestConflicts:
    def test_clean_sequences(self):
        assert detect_conflicts([]) == []
        assert detect_conflicts(seq((1, "B-A0"), (3, "E-A0"), (4, "B-A1"))) == []
        assert detect_conflicts(seq((1, "B-A0"), (2, "B-A1"), (5, "E-A1"))) == []

    def test_unmatched_e(self):
        assert detect_conflicts(seq((2, "E-A0"))) == [(2, UNMATCHED_E)]

    def test_consecutive_e_leaves_second_unmatched(self):
        assert detect_conflicts(seq((1, "B-A0"), (2, "E-A0"), (3, "E-A0"))) == [(3, UNMATCHED_E)]

    def test_role_mismatch(self):
        assert detect_conflicts(seq((1, "B-A0"), (3, "E-A1"))) == [(3, ROLE_MISMATCH)]

    def test_crossing(self):
        # closing the A0 span would swallow the pending B-A1
        assert detect_conflicts(seq((1, "B-A0"), (2, "B-A1"), (4, "E-A0"))) == [(4, CROSSING)]

    def test_repeated_role_is_not_a_conflict(self):
        # two A0 arguments of one predicate (one-word, then wide) are legal
        assert detect_conflicts(seq((1, "B-A0"), (3, "B-A0"), (5, "E-A0"))) == []

    def test_positions_must_increase(self):
        with pytest.raises(SrlError):
            detect_conflicts(seq((3, "B-A0"), (2, "E-A0")))

    def test_fig4a_conflicts(self):
        # Some students want to do more . : want = 3
        found = detect_conflicts(seq((1, "E-A0"), (2, "E-A0"), (6, "E-A1")))
        assert [p for p, _ in found] == [1, 2, 6]
        assert {k for _, k in found} == {UNMATCHED_E}


class TestDependencyMode:
    def test_round_trip_with_senses(self):
        s = SrlStructure(
            Sentence.from_words("they want to do more".split()),
            (PredicateFrame(2, (Argument.of(1, 1, "A0"), Argument.of(4, 4, "A1")), "01"), PredicateFrame(4, (), None)),
        )
        g = dep_srl_to_graph(s)
        assert g.triples() == {(0, 2, "01"), (2, 1, "A0"), (2, 4, "A1"), (0, 4, "_")}
        assert graph_to_dep_srl(g, s.sentence) == s

    def test_wide_argument_rejected(self):
        s = SrlStructure(Sentence.from_words("a b c".split()), (PredicateFrame(1, (Argument.of(2, 3, "A0"),)),))
        with pytest.raises(SrlError):
            dep_srl_to_graph(s)


class TestRoundTripProperties:
    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_span_round_trip(self, seed):
        s = random_structure(np.random.default_rng(seed))
        back, reports = graph_to_srl(srl_to_graph(s), s.sentence)
        assert reports == []
        assert back == s

    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_dependency_round_trip(self, seed):
        s = random_dep_structure(np.random.default_rng(seed))
        assert graph_to_dep_srl(dep_srl_to_graph(s), s.sentence) == s

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from([B, E]), st.sampled_from(["A0", "A1"])), max_size=7))
    def test_conflict_free_iff_every_e_closes_the_previous_b(self, labels):
        items = [(p, CompositeLabel(k, r)) for p, (k, r) in enumerate(labels, 1)]
        ok = True
        prev_open = None
        for _, l in items:
            if l.kind == B:
                prev_open = l.value
            else:
                ok &= prev_open == l.value
                prev_open = None
        assert (detect_conflicts(items) == []) == ok
