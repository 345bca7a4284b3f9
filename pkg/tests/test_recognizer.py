"""Concept recognition: oracle equivalence, span selection, masking, display."""

from __future__ import annotations

import random

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from knowted.ontology import ConceptType, ValidationError, build_lexicon, make_concept
from knowted.recognizer import (
    MIXED_DISPLAY,
    Automaton,
    DisambiguationError,
    RecognitionSpan,
    build_automaton,
    default_stoplist,
    disambiguate,
    display_class,
    leftmost_longest,
    load_stoplist,
    rescan_ranges,
    scan,
    tokenize,
)

# --- independent oracle ------------------------------------------------------
#
# Window enumeration: try every token window, rebuild the window's matching
# key (casefolded tokens joined by " " when the gap has whitespace, else by
# the literal gap), and keep windows whose key is a known surface form. Then
# reduce to the leftmost-longest non-overlapping set by repeated selection.


def _oracle_tokens(text):
    out = []
    run_start = None
    for i, ch in enumerate(text):
        if ch.isalnum():
            if run_start is None:
                run_start = i
        else:
            if run_start is not None:
                out.append((run_start, i))
                run_start = None
    if run_start is not None:
        out.append((run_start, len(text)))
    return out


def _window_key(text, tokens, i, j):
    parts = [text[tokens[i][0] : tokens[i][1]].casefold()]
    for k in range(i + 1, j + 1):
        gap = text[tokens[k - 1][1] : tokens[k][0]]
        sep = " " if any(c.isspace() for c in gap) else gap
        parts.append(sep)
        parts.append(text[tokens[k][0] : tokens[k][1]].casefold())
    return "".join(parts)


def oracle_matches(text, forms, max_tokens):
    tokens = _oracle_tokens(text)
    found = []
    for i in range(len(tokens)):
        for j in range(i, min(i + max_tokens, len(tokens))):
            key = _window_key(text, tokens, i, j)
            if key in forms:
                found.append((tokens[i][0], tokens[j][1], key))
    return found


def oracle_leftmost_longest(matches):
    remaining = set(matches)
    chosen = []
    while remaining:
        best = min(remaining, key=lambda m: (m[0], -m[1]))
        chosen.append(best)
        remaining = {m for m in remaining if m[0] >= best[1]}
    return sorted(chosen)


def oracle_scan(text, automaton):
    forms = automaton.forms
    max_tokens = max(len(tokenize(f)) for f in forms)
    return oracle_leftmost_longest(oracle_matches(text, forms, max_tokens))


def _words_from_lexicon(lexicon):
    words = set()
    for form in lexicon.surface_index:
        words.update(form.split())
    return sorted(words)


def synthetic_note(rng, lexicon, n_words=60):
    """Random prose mixing lexicon words, full forms, filler and punctuation."""
    vocab = _words_from_lexicon(lexicon)
    forms = sorted(lexicon.surface_index)
    filler = ["the", "patient", "was", "seen", "today", "stable", "plan", "follow"]
    parts = []
    for _ in range(n_words):
        roll = rng.random()
        if roll < 0.35:
            parts.append(rng.choice(forms))
        elif roll < 0.6:
            parts.append(rng.choice(vocab))
        else:
            parts.append(rng.choice(filler))
        if rng.random() < 0.15:
            parts.append(rng.choice([",", ".", ";", ":", "-", "("]))
    return " ".join(parts)


class TestOracleEquivalence:
    def test_random_notes_match_oracle_tiny(self, tiny_lexicon, tiny_automaton):
        rng = random.Random(42)
        for _ in range(50):
            text = synthetic_note(rng, tiny_lexicon)
            got = [(s.start, s.end) for s in scan(tiny_automaton, text)]
            want = [(m[0], m[1]) for m in oracle_scan(text, tiny_automaton)]
            assert got == want, text

    def test_random_notes_match_oracle_shipped(self, shipped_lexicon, shipped_automaton):
        rng = random.Random(7)
        for _ in range(25):
            text = synthetic_note(rng, shipped_lexicon, n_words=80)
            got = [(s.start, s.end) for s in scan(shipped_automaton, text)]
            want = [(m[0], m[1]) for m in oracle_scan(text, shipped_automaton)]
            assert got == want, text

    @settings(
        max_examples=60,
        deadline=None,
        suppress_health_check=[HealthCheck.function_scoped_fixture],
    )
    @given(st.text(alphabet="potasium chlrde-,.K ()", max_size=60))
    def test_arbitrary_text_matches_oracle(self, tiny_lexicon, tiny_automaton, text):
        got = [(s.start, s.end) for s in scan(tiny_automaton, text)]
        want = [(m[0], m[1]) for m in oracle_scan(text, tiny_automaton)]
        assert got == want


class TestMatchingRules:
    def test_token_boundary_no_substring_hits(self, tiny_automaton):
        # "pt" must not fire inside a longer token
        assert scan(tiny_automaton, "ptt was checked, copts noted") == []

    def test_case_insensitive(self, tiny_automaton):
        spans = scan(tiny_automaton, "FEVER and Fever and fEvEr")
        assert [s.surface for s in spans] == ["FEVER", "Fever", "fEvEr"]

    def test_leftmost_longest_prefers_multiword(self, tiny_automaton):
        spans = scan(tiny_automaton, "started potassium chloride today")
        assert len(spans) == 1
        assert spans[0].surface == "potassium chloride"
        assert spans[0].candidates == ("kcl",)

    def test_punctuation_with_space_matches_multiword(self, tiny_automaton):
        # whitespace-bearing gaps behave like a single space
        spans = scan(tiny_automaton, "potassium ,  chloride")
        assert [s.candidates for s in spans] == [("kcl",)]

    def test_tight_punctuation_blocks_multiword(self, tiny_automaton):
        spans = scan(tiny_automaton, "potassium,chloride")
        # falls back to the single-token lab match
        assert [s.surface for s in spans] == ["potassium"]

    def test_ambiguous_pt_span(self, tiny_automaton):
        spans = scan(tiny_automaton, "pt walked")
        assert len(spans) == 1
        span = spans[0]
        assert span.candidates == ("patient-term", "physical-therapy", "prothrombin-time")
        assert span.resolved is None

    def test_single_candidate_auto_resolves(self, tiny_automaton):
        (span,) = scan(tiny_automaton, "fever")
        assert span.resolved == "fever"

    def test_masked_ranges_skipped(self, tiny_automaton):
        text = "fever and fever"
        spans = scan(tiny_automaton, text, masked=[(0, 5)])
        assert [(s.start, s.end) for s in spans] == [(10, 15)]

    def test_mask_partial_overlap_also_skips(self, tiny_automaton):
        spans = scan(tiny_automaton, "fever", masked=[(3, 4)])
        assert spans == []

    def test_empty_text(self, tiny_automaton):
        assert scan(tiny_automaton, "") == []


class TestLeftmostLongest:
    def test_order_independence(self):
        matches = [(0, 5, "a"), (0, 9, "b"), (6, 9, "c"), (10, 12, "d")]
        expected = [(0, 9, "b"), (10, 12, "d")]
        assert leftmost_longest(matches) == expected
        assert leftmost_longest(reversed(matches)) == expected

    @given(
        st.lists(
            st.tuples(st.integers(0, 30), st.integers(1, 8)).map(
                lambda p: (p[0], p[0] + p[1], "f")
            ),
            max_size=12,
        )
    )
    def test_result_is_non_overlapping_and_sorted(self, matches):
        chosen = leftmost_longest(matches)
        for a, b in zip(chosen, chosen[1:]):
            assert a[1] <= b[0]


class TestDisambiguation:
    def test_resolve_to_candidate(self, tiny_automaton):
        (span,) = scan(tiny_automaton, "pt")
        resolved = disambiguate(span, "prothrombin-time")
        assert resolved.resolved == "prothrombin-time"

    def test_non_candidate_rejected(self, tiny_automaton):
        (span,) = scan(tiny_automaton, "pt")
        with pytest.raises(DisambiguationError):
            disambiguate(span, "fever")


class TestDisplayClass:
    def test_resolved_span_uses_concept_type(self, tiny_lexicon, tiny_automaton):
        (span,) = scan(tiny_automaton, "fever")
        assert display_class(span, tiny_lexicon) == "symptom"

    def test_mixed_candidates_gray(self, tiny_lexicon, tiny_automaton):
        (span,) = scan(tiny_automaton, "pt")
        assert display_class(span, tiny_lexicon) == MIXED_DISPLAY

    def test_agreeing_candidates_share_type(self):
        lexicon = build_lexicon(
            [
                make_concept("a", ConceptType.LAB, "Alpha", synonyms=("xx",)),
                make_concept("b", ConceptType.LAB, "Beta", synonyms=("xx",)),
            ]
        )
        (span,) = scan(build_automaton(lexicon), "xx")
        assert span.resolved is None
        assert display_class(span, lexicon) == "lab"


class TestStoplist:
    def test_default_stoplist_drops_common_collisions(self):
        lexicon = build_lexicon(
            [make_concept("aortic-stenosis", ConceptType.CONDITION, "Aortic Stenosis", synonyms=("AS",))]
        )
        stop = default_stoplist(lexicon)
        assert stop == {"as"}
        automaton = build_automaton(lexicon, stop)
        assert scan(automaton, "as noted") == []
        assert [s.surface for s in scan(automaton, "aortic stenosis")] == ["aortic stenosis"]

    def test_stoplist_must_reference_lexicon_forms(self, tiny_lexicon):
        with pytest.raises(ValidationError):
            build_automaton(tiny_lexicon, frozenset({"not-a-form"}))

    def test_load_stoplist_validates(self, tmp_path, tiny_lexicon):
        path = tmp_path / "stop.txt"
        path.write_text("# comment\nFEVER\n\n", encoding="utf-8")
        assert load_stoplist(path, tiny_lexicon) == {"fever"}
        path.write_text("ghost\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            load_stoplist(path, tiny_lexicon)

    def test_shipped_as_is_stoplisted(self, shipped_automaton):
        assert scan(shipped_automaton, "patient described as stable") == []


class TestRescanRanges:
    def test_insertion_bounds(self):
        old = "denies fever today"
        new = "denies high fever today"
        lo, hi = rescan_ranges(old, new)
        assert "high" in new[lo:hi]
        assert old[:lo] == new[:lo]
        assert old[len(old) - (len(new) - hi):] == new[hi:]

    def test_identical_texts(self):
        lo, hi = rescan_ranges("same", "same")
        assert lo == hi == 4  # empty affected range

    @given(
        st.text(max_size=30),
        st.integers(0, 30),
        st.integers(0, 8),
        st.text(max_size=8),
    )
    def test_splice_always_covered(self, base, at, dellen, insert):
        at = min(at, len(base))
        new = base[:at] + insert + base[min(at + dellen, len(base)):]
        lo, hi = rescan_ranges(base, new)
        suffix = len(new) - hi
        assert 0 <= lo <= hi <= len(new)
        assert lo + suffix <= min(len(base), len(new))
        assert base[:lo] == new[:lo]
        # splicing the affected range of new into old reconstructs new
        assert base[:lo] + new[lo:hi] + base[len(base) - suffix:] == new


class TestSpanModel:
    def test_empty_span_rejected(self):
        with pytest.raises(ValueError):
            RecognitionSpan(start=3, end=3, surface="", candidates=("a",))

    def test_resolved_must_be_candidate(self):
        with pytest.raises(ValueError):
            RecognitionSpan(start=0, end=1, surface="x", candidates=("a",), resolved="b")

    def test_empty_automaton_rejected(self):
        with pytest.raises(ValidationError):
            Automaton({})
