"""Negation detection and modifier attachment for recognized spans.

Negation follows the classic trigger/scope design: a pre-trigger phrase
("no", "denies", "without") negates concepts appearing within a token
window after it, a post-trigger ("is ruled out") negates concepts within a
window before it, and terminators ("but", "however", sentence punctuation)
cut the scope short. Conjunction tokens ("," / "or" / "and") re-arm the
window instead of consuming it, so "no A, B, or C" negates all three items
without a per-item trigger.

Modifier attachment is a greedy walk left from each span: consume tokens
while they belong to the modifier vocabulary and only whitespace separates
them, so "left lower abdominal pain" keeps its laterality/location prefix
but "severe, left pain" stops at the comma.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .ontology import Lexicon, normalize
from .recognizer import Modifier, RecognitionSpan

# Word tokens plus single punctuation marks; negation scoping needs to see
# commas and sentence-ending punctuation, which the recognizer tokenizer
# skips over.
_LEX_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

CONJUNCTIONS = frozenset({",", "or", "and"})

DEFAULT_PRE_TRIGGERS = frozenset({
    "no",
    "not",
    "without",
    "denies",
    "denied",
    "deny",
    "negative for",
    "no evidence of",
    "no signs of",
    "no history of",
    "no complaints of",
    "free of",
    "absence of",
    "rules out",
    "ruled out",
})

DEFAULT_POST_TRIGGERS = frozenset({
    "is ruled out",
    "was ruled out",
    "are ruled out",
    "were ruled out",
    "has been ruled out",
    "have been ruled out",
    "is absent",
    "was absent",
    "not present",
    "not seen",
})

DEFAULT_TERMINATORS = frozenset({"but", "however", "although", ".", ";", ":"})


@dataclass(frozen=True)
class NegationRules:
    """Trigger phrases and scope settings for negation detection."""

    pre_triggers: frozenset[str] = DEFAULT_PRE_TRIGGERS
    post_triggers: frozenset[str] = DEFAULT_POST_TRIGGERS
    terminators: frozenset[str] = DEFAULT_TERMINATORS
    scope_window: int = 6

    def __post_init__(self) -> None:
        if self.scope_window < 1:
            raise ValueError("scope_window must be >= 1")
        overlap = (self.pre_triggers | self.post_triggers) & self.terminators
        if overlap:
            raise ValueError(f"trigger phrases also listed as terminators: {sorted(overlap)}")


def load_negation_rules(path: str | Path, scope_window: int = 6) -> NegationRules:
    """Read a rules file with lines ``kind<TAB>phrase`` (kind: pre/post/terminator)."""
    kinds: dict[str, set[str]] = {"pre": set(), "post": set(), "terminator": set()}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                kind, phrase = line.split("\t")
            except ValueError:
                raise ValueError(f"{path}:{line_no}: expected 'kind<TAB>phrase'") from None
            kind = kind.strip().casefold()
            if kind not in kinds:
                raise ValueError(f"{path}:{line_no}: unknown kind {kind!r}")
            kinds[kind].add(phrase.strip().casefold())
    return NegationRules(
        pre_triggers=frozenset(kinds["pre"]),
        post_triggers=frozenset(kinds["post"]),
        terminators=frozenset(kinds["terminator"]),
        scope_window=scope_window,
    )


@dataclass(frozen=True)
class _Tok:
    start: int
    end: int
    text: str  # casefolded
    is_word: bool


def _lex(text: str) -> list[_Tok]:
    toks = []
    for match in _LEX_RE.finditer(text):
        raw = match.group()
        toks.append(_Tok(match.start(), match.end(), raw.casefold(), raw[0].isalnum() or raw[0] == "_"))
    return toks


def _phrase_words(phrases: frozenset[str]) -> dict[int, frozenset[tuple[str, ...]]]:
    """Group trigger phrases by word count for window matching."""
    grouped: dict[int, set[tuple[str, ...]]] = {}
    for phrase in phrases:
        words = tuple(phrase.casefold().split())
        if words:
            grouped.setdefault(len(words), set()).add(words)
    return {n: frozenset(s) for n, s in grouped.items()}


def _trigger_ending_at(
    toks: Sequence[_Tok], index: int, grouped: Mapping[int, frozenset[tuple[str, ...]]]
) -> bool:
    """Does any trigger phrase end exactly at word token ``index``?"""
    for length, phrases in grouped.items():
        if index - length + 1 < 0:
            continue
        window = toks[index - length + 1 : index + 1]
        if all(t.is_word for t in window):
            if tuple(t.text for t in window) in phrases:
                return True
    return False


def _trigger_starting_at(
    toks: Sequence[_Tok], index: int, grouped: Mapping[int, frozenset[tuple[str, ...]]]
) -> bool:
    for length, phrases in grouped.items():
        window = toks[index : index + length]
        if len(window) == length and all(t.is_word for t in window):
            if tuple(t.text for t in window) in phrases:
                return True
    return False


def detect_negations(
    text: str,
    spans: Sequence[RecognitionSpan],
    rules: NegationRules | None = None,
) -> list[RecognitionSpan]:
    """Mark each span as negated or not, based on the surrounding text."""
    rules = rules or NegationRules()
    toks = _lex(text)
    pre = _phrase_words(rules.pre_triggers)
    post = _phrase_words(rules.post_triggers)
    annotated = []
    for span in spans:
        negated = _negated_by_pre(toks, span, rules, pre) or _negated_by_post(
            toks, span, rules, post
        )
        annotated.append(replace(span, negated=negated))
    return annotated


def _negated_by_pre(
    toks: Sequence[_Tok],
    span: RecognitionSpan,
    rules: NegationRules,
    grouped: Mapping[int, frozenset[tuple[str, ...]]],
) -> bool:
    # Walk backward from the token before the span. Word tokens consume the
    # window; conjunctions re-arm it; terminators (and window exhaustion)
    # stop the search.
    index = _first_token_index(toks, span) - 1
    distance = 0
    while index >= 0:
        tok = toks[index]
        if tok.text in rules.terminators:
            return False
        if tok.text in CONJUNCTIONS:
            distance = 0
            index -= 1
            continue
        if not tok.is_word:
            index -= 1
            continue
        if _trigger_ending_at(toks, index, grouped):
            return True
        distance += 1
        if distance >= rules.scope_window:
            return False
        index -= 1
    return False


def _negated_by_post(
    toks: Sequence[_Tok],
    span: RecognitionSpan,
    rules: NegationRules,
    grouped: Mapping[int, frozenset[tuple[str, ...]]],
) -> bool:
    index = _last_token_index(toks, span) + 1
    distance = 0
    while index < len(toks):
        tok = toks[index]
        if tok.text in rules.terminators:
            return False
        if tok.text in CONJUNCTIONS:
            distance = 0
            index += 1
            continue
        if not tok.is_word:
            index += 1
            continue
        if _trigger_starting_at(toks, index, grouped):
            return True
        distance += 1
        if distance >= rules.scope_window:
            return False
        index += 1
    return False


def _first_token_index(toks: Sequence[_Tok], span: RecognitionSpan) -> int:
    for i, tok in enumerate(toks):
        if tok.start >= span.start:
            return i
    return len(toks)


def _last_token_index(toks: Sequence[_Tok], span: RecognitionSpan) -> int:
    last = -1
    for i, tok in enumerate(toks):
        if tok.end <= span.end:
            last = i
        else:
            break
    return last


def attach_modifiers(
    text: str,
    spans: Sequence[RecognitionSpan],
    lexicon: Lexicon,
) -> list[RecognitionSpan]:
    """Greedily attach vocabulary tokens immediately left of each span.

    The walk stops at the first token outside the modifier vocabulary, at
    any intervening punctuation, or when the next token belongs to another
    span. Consumed tokens keep their original order.
    """
    vocab: dict[str, str] = {}
    for cls, terms in lexicon.modifier_vocab.items():
        for term in terms:
            vocab[term] = cls
    span_ranges = [(s.start, s.end) for s in spans]
    toks = [t for t in _lex(text) if t.is_word]
    annotated = []
    for span in spans:
        collected: list[Modifier] = []
        boundary = span.start
        for tok in reversed(toks):
            if tok.end > boundary:
                continue
            gap = text[tok.end:boundary]
            if gap.strip():
                break  # punctuation between modifier and span
            if any(tok.start < r_end and r_start < tok.end for r_start, r_end in span_ranges):
                break
            term = normalize(tok.text)
            cls = vocab.get(term)
            if cls is None:
                break
            collected.append(Modifier(term=term, cls=cls))
            boundary = tok.start
        collected.reverse()
        annotated.append(replace(span, modifiers=tuple(collected)))
    return annotated


def annotate(
    text: str,
    spans: Sequence[RecognitionSpan],
    lexicon: Lexicon,
    rules: NegationRules | None = None,
) -> list[RecognitionSpan]:
    """Run negation detection then modifier attachment over raw spans."""
    return attach_modifiers(text, detect_negations(text, spans, rules), lexicon)


def render_negated(span: RecognitionSpan, lexicon: Lexicon) -> str:
    """Plain-text rendering of a resolved span with its annotations.

    Negated concepts come back prefixed with "no"; modifiers keep their
    captured order ahead of the canonical name.
    """
    if span.resolved is None:
        raise ValueError(f"cannot render unresolved span {span.surface!r}")
    words = [m.term for m in span.modifiers]
    words.append(lexicon.concept(span.resolved).canonical_name)
    phrase = " ".join(words)
    return f"no {phrase}" if span.negated else phrase
