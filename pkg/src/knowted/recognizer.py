"""Multi-pattern recognition of lexicon terms in note text.

Matching runs an Aho-Corasick automaton over a token stream rather than raw
characters, so matches always start and end on token boundaries ("as" never
fires inside "aspirin"). Each symbol in the stream is either a case-folded
token (a maximal alphanumeric run) or the separator between two adjacent
tokens. Separators collapse to a single space when the gap contains any
whitespace and stay verbatim otherwise, which makes the stream agree exactly
with ``ontology.normalize`` applied to the covered substring: "Chest,  Pain"
matches the surface form "chest pain", while "x-ray" only matches a
hyphenated form.

The automaton is the classic construction: a goto trie over symbol
sequences, failure links computed breadth-first (longest proper suffix that
is also a pattern prefix), and output sets propagated along failure links.
Scanning is a single pass; overlapping raw matches are then reduced to the
leftmost-longest non-overlapping set, after dropping anything that touches a
masked range (existing chips).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .ontology import ConceptType, Lexicon, ValidationError, normalize

MIXED_DISPLAY = "mixed-gray"

#: Common English words seeding the default stoplist; only the ones that
#: collide with an actual surface form are excluded from recognition.
COMMON_WORDS = frozenset("""
the of and a to in is was he for it with as his on be at by i this had not
are but from or have an they which one you were her all she there would
their we him been has when who will more no if out so said what up its
about into than them can only other new some could time these two may then
do first any my now such like our over man me even most made after also
did many before must through back years where much your way well down
should because each just those people mr how too little state good very
make world still own see men work long get here between both life being
under never day same another know while last might us great old year off
come since against go came right used take three
""".split())


@dataclass(frozen=True)
class Modifier:
    """A qualifier token attached as a prefix to a recognized concept."""

    term: str
    cls: str


@dataclass(frozen=True)
class RecognitionSpan:
    """A recognized concept occurrence in section text.

    ``candidates`` holds every concept sharing the matched surface form;
    ``resolved`` is pre-filled when there is exactly one. ``negated`` and
    ``modifiers`` are filled in by the negation/modifier pass.
    """

    start: int
    end: int
    surface: str
    candidates: tuple[str, ...]
    resolved: str | None = None
    negated: bool = False
    modifiers: tuple[Modifier, ...] = ()

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"empty span [{self.start}, {self.end})")
        if not self.candidates:
            raise ValueError("span with no candidates")
        if self.resolved is not None and self.resolved not in self.candidates:
            raise ValueError(f"resolved id {self.resolved!r} not a candidate")


class DisambiguationError(Exception):
    """The chosen concept is not one of the span's candidates."""


@dataclass(frozen=True)
class Token:
    start: int
    end: int
    text: str


def tokenize(text: str) -> list[Token]:
    """Maximal alphanumeric runs with character offsets."""
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isalnum():
            j = i + 1
            while j < n and text[j].isalnum():
                j += 1
            tokens.append(Token(i, j, text[i:j]))
            i = j
        else:
            i += 1
    return tokens


def _separator(gap: str) -> str:
    return " " if any(ch.isspace() for ch in gap) else gap


def _pattern_symbols(form: str) -> tuple[str, ...] | None:
    """Split a normalized surface form into its token/separator symbols."""
    tokens = tokenize(form)
    if not tokens:
        return None
    if tokens[0].start != 0 or tokens[-1].end != len(form):
        # Normalized forms always start and end on alphanumerics.
        return None
    symbols = [tokens[0].text]
    for prev, cur in zip(tokens, tokens[1:]):
        symbols.append(_separator(form[prev.end:cur.start]))
        symbols.append(cur.text)
    return tuple(symbols)


@dataclass
class _Node:
    children: dict[str, _Node] = field(default_factory=dict)
    fail: _Node | None = None
    # (surface form, symbol count) pairs ending at this node
    outputs: list[tuple[str, int]] = field(default_factory=list)


class Automaton:
    """Compiled multi-pattern matcher over the lexicon's surface forms.

    Immutable after build; safe to share across concurrent scans.
    """

    def __init__(self, form_candidates: dict[str, frozenset[str]]):
        if not form_candidates:
            raise ValidationError("cannot build automaton over an empty form set")
        self._form_candidates = form_candidates
        self._root = _Node()
        for form in form_candidates:
            symbols = _pattern_symbols(form)
            if symbols is None:
                continue
            node = self._root
            for symbol in symbols:
                node = node.children.setdefault(symbol, _Node())
            node.outputs.append((form, len(symbols)))
        self._build_failure_links()

    def _build_failure_links(self) -> None:
        root = self._root
        root.fail = root
        queue: deque[_Node] = deque()
        for child in root.children.values():
            child.fail = root
            queue.append(child)
        while queue:
            current = queue.popleft()
            for symbol, child in current.children.items():
                fallback = current.fail
                while fallback is not root and symbol not in fallback.children:
                    fallback = fallback.fail
                candidate = fallback.children.get(symbol)
                child.fail = candidate if candidate is not None and candidate is not child else root
                child.outputs.extend(child.fail.outputs)
                queue.append(child)

    @property
    def forms(self) -> frozenset[str]:
        return frozenset(self._form_candidates)

    def candidates_for(self, form: str) -> frozenset[str]:
        return self._form_candidates[form]

    def raw_matches(self, text: str) -> list[tuple[int, int, str]]:
        """Every surface-form occurrence as (start, end, form), unfiltered."""
        tokens = tokenize(text)
        if not tokens:
            return []
        symbols: list[tuple[str, int, int]] = [(tokens[0].text.casefold(), tokens[0].start, tokens[0].end)]
        for prev, cur in zip(tokens, tokens[1:]):
            gap = text[prev.end:cur.start]
            symbols.append((_separator(gap), prev.end, cur.start))
            symbols.append((cur.text.casefold(), cur.start, cur.end))

        matches = []
        root = self._root
        node = root
        for index, (symbol, _, sym_end) in enumerate(symbols):
            while node is not root and symbol not in node.children:
                node = node.fail
            node = node.children.get(symbol, root)
            for form, length in node.outputs:
                start = symbols[index - length + 1][1]
                matches.append((start, sym_end, form))
        return matches


def build_automaton(lexicon: Lexicon, stoplist: frozenset[str] = frozenset()) -> Automaton:
    """Compile the lexicon's surface forms into a matcher, minus the stoplist.

    Stoplist entries must be normalized forms that exist in the surface
    index; unknown entries are a validation error.
    """
    unknown = stoplist - set(lexicon.surface_index)
    if unknown:
        raise ValidationError(
            f"stoplist entries not in lexicon: {sorted(unknown)[:5]!r}"
        )
    form_candidates = {
        form: ids
        for form, ids in lexicon.surface_index.items()
        if form not in stoplist
    }
    if not form_candidates:
        raise ValidationError("all surface forms are stoplisted")
    return Automaton(form_candidates)


def default_stoplist(lexicon: Lexicon) -> frozenset[str]:
    """Common English words that collide with a lexicon surface form."""
    return frozenset(COMMON_WORDS & set(lexicon.surface_index))


def load_stoplist(path: str | Path, lexicon: Lexicon | None = None) -> frozenset[str]:
    """Read a stoplist file (one normalized form per line)."""
    entries = set()
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.strip()
            if line and not line.startswith("#"):
                entries.add(normalize(line))
    if lexicon is not None:
        unknown = entries - set(lexicon.surface_index)
        if unknown:
            raise ValidationError(
                f"stoplist entries not in lexicon: {sorted(unknown)[:5]!r}"
            )
    return frozenset(entries)


def _intersects(start: int, end: int, ranges: Sequence[tuple[int, int]]) -> bool:
    return any(start < r_end and r_start < end for r_start, r_end in ranges)


def leftmost_longest(matches: Iterable[tuple[int, int, str]]) -> list[tuple[int, int, str]]:
    """Reduce overlapping matches to the leftmost-longest non-overlapping set."""
    chosen: list[tuple[int, int, str]] = []
    last_end = -1
    for start, end, form in sorted(matches, key=lambda m: (m[0], -m[1])):
        if start >= last_end:
            chosen.append((start, end, form))
            last_end = end
    return chosen


def scan(
    automaton: Automaton,
    text: str,
    masked: Sequence[tuple[int, int]] = (),
) -> list[RecognitionSpan]:
    """Recognize lexicon terms in section text.

    Returns leftmost-longest non-overlapping spans on token boundaries,
    skipping anything that intersects a masked range. Spans with a single
    candidate come back already resolved.
    """
    if not text:
        return []
    raw = [
        m for m in automaton.raw_matches(text)
        if not _intersects(m[0], m[1], masked)
    ]
    spans = []
    for start, end, form in leftmost_longest(raw):
        candidates = tuple(sorted(automaton.candidates_for(form)))
        spans.append(
            RecognitionSpan(
                start=start,
                end=end,
                surface=text[start:end],
                candidates=candidates,
                resolved=candidates[0] if len(candidates) == 1 else None,
            )
        )
    return spans


def disambiguate(span: RecognitionSpan, choice: str) -> RecognitionSpan:
    """Resolve an ambiguous span to one of its candidate concepts."""
    if choice not in span.candidates:
        raise DisambiguationError(
            f"{choice!r} is not a candidate for {span.surface!r}"
        )
    return replace(span, resolved=choice)


def display_class(span: RecognitionSpan, lexicon: Lexicon) -> str:
    """Highlight class for a span: a concept-type name, or mixed-gray.

    Resolved spans take their concept's type; unresolved spans take the
    shared type when all candidates agree and mixed-gray otherwise.
    """
    if span.resolved is not None:
        return lexicon.concept(span.resolved).concept_type.value
    types = {lexicon.concept(cid).concept_type for cid in span.candidates}
    if len(types) == 1:
        return next(iter(types)).value
    return MIXED_DISPLAY


def rescan_ranges(old_text: str, new_text: str) -> tuple[int, int]:
    """Char range of ``new_text`` that an edit could have affected.

    Longest common prefix/suffix bound; callers re-scan only spans
    intersecting the returned range.
    """
    prefix = 0
    limit = min(len(old_text), len(new_text))
    while prefix < limit and old_text[prefix] == new_text[prefix]:
        prefix += 1
    suffix = 0
    while (
        suffix < limit - prefix
        and old_text[len(old_text) - 1 - suffix] == new_text[len(new_text) - 1 - suffix]
    ):
        suffix += 1
    return prefix, len(new_text) - suffix
