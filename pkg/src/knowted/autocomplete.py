"""Completion triggering, ranking, and lab-value insertion strings.

Three concerns live here. A pluggable context scorer decides *when* the
dropdown should open (the default is rule-based: cue phrases like
"presents with", an explicit slash, or a typed prefix that matches the
lexicon). A ranking pass turns a prefix plus optional type filter into at
most ten scored suggestions. And for lab concepts, a small time-framed
tree of aggregates and statistics supports inserting record values as
text, e.g. ``Glucose (90 - 110) 100``.
"""

from __future__ import annotations

import re
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .ontology import ConceptType, Lexicon, ValidationError, _TYPE_ALIASES, normalize
from .records import (
    PatientRecord,
    decimal_places,
    in_record,
    labs_for,
    result_count,
)

MAX_SUGGESTIONS = 10
IN_RECORD_BONUS = 0.2  # added on top of the [0, 1] base score
CUE_WEIGHT = 0.7  # prior mass on the cued type; remainder split evenly

# Base match quality: an exact surface form beats a canonical-name prefix
# beats a synonym-only prefix.
EXACT_QUALITY = 1.0
CANONICAL_QUALITY = 0.8
SYNONYM_QUALITY = 0.6

UNIFORM_PRIOR: Mapping[ConceptType, float] = {
    t: 1.0 / len(ConceptType) for t in ConceptType
}

_TRAILING_RUN = re.compile(r"\S+$")

_SLASH_FILTERS = {
    "/l": ConceptType.LAB,
    "/labs": ConceptType.LAB,
    "/m": ConceptType.MEDICATION,
    "/meds": ConceptType.MEDICATION,
    "/c": ConceptType.CONDITION,
    "/s": ConceptType.SYMPTOM,
    "/p": ConceptType.PROCEDURE,
    "/v": ConceptType.VITAL_SIGN,
}

DEFAULT_CUE_PHRASES: Mapping[str, ConceptType | None] = {
    "presents with": ConceptType.SYMPTOM,
    "complains of": ConceptType.SYMPTOM,
    "complaining of": ConceptType.SYMPTOM,
    "reports": ConceptType.SYMPTOM,
    "endorses": ConceptType.SYMPTOM,
    "history of": ConceptType.CONDITION,
    "diagnosed with": ConceptType.CONDITION,
    "hx of": ConceptType.CONDITION,
    "assessment": ConceptType.CONDITION,
    "takes": ConceptType.MEDICATION,
    "taking": ConceptType.MEDICATION,
    "prescribed": ConceptType.MEDICATION,
    "started on": ConceptType.MEDICATION,
    "allergic to": ConceptType.MEDICATION,
    "underwent": ConceptType.PROCEDURE,
    "scheduled for": ConceptType.PROCEDURE,
    "status post": ConceptType.PROCEDURE,
    "labs show": ConceptType.LAB,
    "labs notable for": ConceptType.LAB,
    "vitals show": ConceptType.VITAL_SIGN,
}


@dataclass(frozen=True)
class AutocompleteQuery:
    """What the caret sees: preceding text, partial token, optional filter."""

    text_before_caret: str
    prefix: str
    filter: ConceptType | None = None
    patient: str | None = None

    def __post_init__(self) -> None:
        if any(ch.isspace() for ch in self.prefix):
            raise ValueError(f"prefix contains whitespace: {self.prefix!r}")


@dataclass(frozen=True)
class Suggestion:
    concept: str
    display: str
    detail: str
    score: float
    in_record: bool


class ContextScorer(Protocol):
    """Pluggable trigger policy: text before the caret in, decision out.

    Implementations must be stateless per call and return nonnegative type
    weights summing to at most 1.
    """

    def assess(self, text_before_caret: str) -> tuple[bool, Mapping[ConceptType, float]]:
        ...


def parse_slash_filter(token: str) -> tuple[bool, ConceptType | None]:
    """Interpret a typed token as a slash command.

    Returns ``(True, concept_type)`` for a type filter such as "/m" or
    "/labs", ``(True, None)`` for a bare "/" (forced trigger, no filter),
    and ``(False, None)`` when the token is not a slash command at all.
    """
    token = token.strip().casefold()
    if token == "/":
        return True, None
    concept_type = _SLASH_FILTERS.get(token)
    if concept_type is None:
        return False, None
    return True, concept_type


def load_cue_phrases(path: str | Path) -> dict[str, ConceptType | None]:
    """Read cue phrases from a ``phrase<TAB>concept_type`` file.

    The type column accepts the six concept types or "any" for a cue that
    triggers without boosting a particular type.
    """
    cues: dict[str, ConceptType | None] = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                phrase, type_name = line.split("\t")
            except ValueError:
                raise ValidationError(
                    f"{path}:{line_no}: expected 'phrase<TAB>concept_type'"
                ) from None
            type_name = type_name.strip().casefold()
            if type_name == "any":
                cued: ConceptType | None = None
            else:
                cued = _TYPE_ALIASES.get(type_name)
                if cued is None:
                    raise ValidationError(f"{path}:{line_no}: unknown concept type {type_name!r}")
            cues[normalize(phrase)] = cued
    return cues


@dataclass(frozen=True)
class RuleBasedScorer:
    """Default trigger policy: cue phrases, explicit slash, or a live prefix."""

    lexicon: Lexicon
    cue_phrases: Mapping[str, ConceptType | None] = field(
        default_factory=lambda: dict(DEFAULT_CUE_PHRASES)
    )
    min_prefix: int = 3

    def assess(self, text_before_caret: str) -> tuple[bool, Mapping[ConceptType, float]]:
        trailing_match = _TRAILING_RUN.search(text_before_caret)
        trailing = trailing_match.group() if trailing_match else ""
        if trailing.startswith("/"):
            return True, UNIFORM_PRIOR

        base = text_before_caret[: trailing_match.start()] if trailing_match else text_before_caret
        cued = self._cue_at_end(base)
        if cued is not None:
            found, concept_type = cued
            if found:
                return True, cued_prior(concept_type)

        prefix = normalize(trailing)
        if len(prefix) >= self.min_prefix and prefix_matches_lexicon(self.lexicon, prefix):
            return True, UNIFORM_PRIOR
        return False, UNIFORM_PRIOR

    def _cue_at_end(self, base: str) -> tuple[bool, ConceptType | None] | None:
        words = [w.casefold() for w in re.findall(r"[^\W_]+", base)]
        if not words:
            return None
        for phrase, concept_type in self.cue_phrases.items():
            phrase_words = phrase.split()
            if len(phrase_words) <= len(words) and words[-len(phrase_words):] == phrase_words:
                return True, concept_type
        return None


def cued_prior(concept_type: ConceptType | None) -> Mapping[ConceptType, float]:
    """Prior that boosts one type; uniform when no type is cued."""
    if concept_type is None:
        return UNIFORM_PRIOR
    rest = (1.0 - CUE_WEIGHT) / (len(ConceptType) - 1)
    return {t: (CUE_WEIGHT if t is concept_type else rest) for t in ConceptType}


def should_trigger(
    scorer: ContextScorer, text_before_caret: str
) -> tuple[bool, Mapping[ConceptType, float]]:
    """Ask the scorer whether to open the dropdown; enforce the prior contract."""
    trigger, prior = scorer.assess(text_before_caret)
    total = 0.0
    for weight in prior.values():
        if weight < 0:
            raise ValidationError(f"negative type weight in prior: {dict(prior)!r}")
        total += weight
    if total > 1.0 + 1e-9:
        raise ValidationError(f"type prior weights sum to {total}, above 1")
    return trigger, prior


def prefix_matches_lexicon(lexicon: Lexicon, prefix_norm: str) -> bool:
    forms = lexicon.sorted_forms
    i = bisect_left(forms, prefix_norm)
    return i < len(forms) and forms[i].startswith(prefix_norm)


def candidate_concepts(
    lexicon: Lexicon, prefix: str, concept_type: ConceptType | None = None
) -> dict[str, bool]:
    """Concept ids whose surface forms extend the prefix.

    Maps each candidate id to whether the prefix is an *exact* surface form
    of that concept. The empty prefix matches everything.
    """
    p = normalize(prefix)
    hits: dict[str, bool] = {}
    if p:
        forms = lexicon.sorted_forms
        i = bisect_left(forms, p)
        while i < len(forms) and forms[i].startswith(p):
            exact = forms[i] == p
            for cid in lexicon.surface_index[forms[i]]:
                hits[cid] = hits.get(cid, False) or exact
            i += 1
    else:
        hits = {cid: False for cid in lexicon.concepts}
    if concept_type is not None:
        hits = {
            cid: exact
            for cid, exact in hits.items()
            if lexicon.concepts[cid].concept_type is concept_type
        }
    return hits


def match_quality(lexicon: Lexicon, concept_id: str, prefix_norm: str, exact: bool) -> float:
    if exact:
        return EXACT_QUALITY
    if normalize(lexicon.concepts[concept_id].canonical_name).startswith(prefix_norm):
        return CANONICAL_QUALITY
    return SYNONYM_QUALITY


def suggestion_detail(
    lexicon: Lexicon, concept_id: str, record: PatientRecord | None, present: bool
) -> str:
    """Dropdown detail text: disambiguators, result counts, record presence."""
    concept = lexicon.concepts[concept_id]
    if concept.concept_type in (ConceptType.LAB, ConceptType.VITAL_SIGN):
        parts = [concept.detail] if concept.detail else []
        if record is not None:
            count = result_count(record, concept_id)
            if count:
                parts.append(f"{count} result" + ("s" if count != 1 else ""))
        return ", ".join(parts)
    if concept.concept_type in (
        ConceptType.MEDICATION,
        ConceptType.PROCEDURE,
        ConceptType.CONDITION,
    ):
        if present:
            return "in patient medical record"
    return concept.detail


def suggest(
    query: AutocompleteQuery,
    lexicon: Lexicon,
    record: PatientRecord | None = None,
    prior: Mapping[ConceptType, float] | None = None,
) -> list[Suggestion]:
    """Rank completions for a prefix under an optional type filter.

    Score = prior weight for the concept's type x prefix-match quality,
    plus a flat bonus when the concept already appears in the patient's
    record. Ties break lexicographically by display text. At most
    MAX_SUGGESTIONS results.
    """
    prior = prior or UNIFORM_PRIOR
    p = normalize(query.prefix)
    scored = []
    for cid, exact in candidate_concepts(lexicon, p, query.filter).items():
        concept = lexicon.concepts[cid]
        present = record is not None and in_record(record, cid)
        quality = match_quality(lexicon, cid, p, exact)
        score = prior.get(concept.concept_type, 0.0) * quality
        if present:
            score += IN_RECORD_BONUS
        scored.append(
            Suggestion(
                concept=cid,
                display=concept.canonical_name,
                detail=suggestion_detail(lexicon, cid, record, present),
                score=score,
                in_record=present,
            )
        )
    scored.sort(key=lambda s: (-s.score, s.display, s.concept))
    return scored[:MAX_SUGGESTIONS]


@dataclass(frozen=True)
class CaretContext:
    """Where a completion would land: text to consume, prefix, active filter.

    ``replace_start`` is the offset of the first character a completion
    replaces; it reaches back over an immediately preceding slash-filter
    token so accepting a suggestion consumes "/m pota", not just "pota".
    """

    replace_start: int
    prefix: str
    filter: ConceptType | None


def caret_context(text: str, caret: int) -> CaretContext:
    """Parse the token(s) at the caret into a CaretContext."""
    before = text[:caret]
    match = _TRAILING_RUN.search(before)
    if match is None:
        return CaretContext(replace_start=caret, prefix="", filter=None)
    token = match.group()
    start = match.start()
    if token.startswith("/"):
        recognized, concept_type = parse_slash_filter(token)
        if recognized:
            return CaretContext(replace_start=start, prefix="", filter=concept_type)
        return CaretContext(replace_start=start, prefix=token, filter=None)
    # A slash command directly before the prefix extends the replace range.
    preceding = _TRAILING_RUN.search(before[:start].rstrip())
    if preceding is not None and preceding.group().startswith("/"):
        recognized, concept_type = parse_slash_filter(preceding.group())
        if recognized:
            return CaretContext(
                replace_start=preceding.start(), prefix=token, filter=concept_type
            )
    return CaretContext(replace_start=start, prefix=token, filter=None)


# --- Lab trees and insertion strings ----------------------------------------

TIME_FRAMES: tuple[tuple[str, timedelta | None], ...] = (
    ("1 month", timedelta(days=30)),
    ("1 year", timedelta(days=365)),
    ("all time", None),
)


@dataclass(frozen=True)
class LabStat:
    name: str
    value: float
    decimals: int
    timestamp: datetime


@dataclass(frozen=True)
class LabFrame:
    """Aggregate and named statistics for one time frame of one lab."""

    name: str
    minimum: float
    maximum: float
    average: float
    decimals: int  # max native precision among the frame's raw values
    result_ids: tuple[str, ...]
    stats: tuple[LabStat, ...]

    def __post_init__(self) -> None:
        if not (self.minimum <= self.average <= self.maximum):
            raise ValidationError(
                f"frame {self.name!r}: average outside [min, max]"
            )

    def stat(self, name: str) -> LabStat:
        for stat in self.stats:
            if stat.name == name:
                return stat
        raise KeyError(f"frame {self.name!r} has no stat {name!r}")


@dataclass(frozen=True)
class LabTree:
    concept: str
    label: str
    frames: tuple[LabFrame, ...]

    def frame(self, name: str) -> LabFrame:
        for frame in self.frames:
            if frame.name == name:
                return frame
        raise KeyError(f"no populated {name!r} frame for {self.label}")


def _exact_mean(values: Sequence[float]) -> float:
    # Exact rational mean, rounded once; keeps min <= avg <= max strictly.
    total = Fraction(0)
    for value in values:
        total += Fraction(value)
    return float(total / len(values))


def lab_tree(
    concept_id: str,
    record: PatientRecord,
    lexicon: Lexicon,
    as_of: datetime | None = None,
) -> LabTree:
    """Time-framed aggregates for a lab concept; empty frames are omitted."""
    concept = lexicon.concept(concept_id)
    if concept.concept_type not in (ConceptType.LAB, ConceptType.VITAL_SIGN):
        raise ValidationError(
            f"lab tree requested for {concept.concept_type.value} concept {concept_id!r}"
        )
    frames = []
    for name, delta in TIME_FRAMES:
        subset = labs_for(record, concept_id, window=delta, as_of=as_of)
        if not subset:
            continue
        values = [r.value for r in subset]
        decimals = max(decimal_places(r.raw) for r in subset)
        last = subset[-1]
        low = min(subset, key=lambda r: r.value)
        high = max(subset, key=lambda r: r.value)
        average = _exact_mean(values)
        stats = (
            LabStat("last", last.value, decimal_places(last.raw), last.timestamp),
            LabStat("min", low.value, decimal_places(low.raw), low.timestamp),
            LabStat("max", high.value, decimal_places(high.raw), high.timestamp),
            LabStat("avg", average, decimals, last.timestamp),
        )
        frames.append(
            LabFrame(
                name=name,
                minimum=low.value,
                maximum=high.value,
                average=average,
                decimals=decimals,
                result_ids=tuple(r.id for r in subset),
                stats=stats,
            )
        )
    return LabTree(concept=concept_id, label=concept.canonical_name, frames=tuple(frames))


@dataclass(frozen=True)
class LabSelection:
    """A node picked from the lab tree: the name, a frame, or one stat."""

    tree: LabTree
    frame: str | None = None
    stat: str | None = None

    def __post_init__(self) -> None:
        if self.stat is not None and self.frame is None:
            raise ValidationError("stat selection requires a frame")


def format_value(value: float, decimals: int) -> str:
    return f"{value:.{decimals}f}"


def format_lab_insertion(selection: LabSelection) -> str:
    """Insertion text for a lab-tree selection.

    Aggregates render as ``NAME (MIN - MAX) AVG`` and single statistics as
    ``NAME STATNAME VALUE``, using the record's native precision. A
    name-only selection inserts just the lab name.
    """
    tree = selection.tree
    if selection.frame is None:
        return tree.label
    try:
        frame = tree.frame(selection.frame)
    except KeyError:
        raise ValidationError(
            f"no values in frame {selection.frame!r} for {tree.label}"
        ) from None
    if selection.stat is None:
        low = format_value(frame.minimum, frame.decimals)
        high = format_value(frame.maximum, frame.decimals)
        avg = format_value(frame.average, frame.decimals)
        return f"{tree.label} ({low} - {high}) {avg}"
    try:
        stat = frame.stat(selection.stat)
    except KeyError:
        raise ValidationError(
            f"frame {selection.frame!r} has no stat {selection.stat!r}"
        ) from None
    return f"{tree.label} {stat.name} {format_value(stat.value, stat.decimals)}"
