"""Clinical lexicon loading, validation, and indexing.

The lexicon is the vocabulary every other layer works from: concepts with
their synonyms and abbreviations, the modifier vocabulary used for prefix
attachment, the symptom-to-body-system map used by review-of-systems
autofill, and curated links between concepts (e.g. which labs belong on a
condition's card).

Fixture format is line-oriented UTF-8, tab-separated:

    concepts.tsv       id <TAB> type <TAB> canonical <TAB> syn1|syn2|... <TAB> detail
    modifiers.tsv      class <TAB> term
    body_systems.tsv   concept_id <TAB> system
    links.tsv          src_id <TAB> role <TAB> dst_id

Blank lines and lines starting with '#' are skipped. A loaded Lexicon is
immutable; reloading builds a fresh structure that can be swapped in
atomically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator


class ConceptType(str, Enum):
    """The six kinds of clinical concept the engine recognizes."""

    CONDITION = "condition"
    LAB = "lab"
    MEDICATION = "medication"
    SYMPTOM = "symptom"
    PROCEDURE = "procedure"
    VITAL_SIGN = "vital_sign"


_TYPE_ALIASES = {
    "condition": ConceptType.CONDITION,
    "lab": ConceptType.LAB,
    "medication": ConceptType.MEDICATION,
    "symptom": ConceptType.SYMPTOM,
    "procedure": ConceptType.PROCEDURE,
    "vital_sign": ConceptType.VITAL_SIGN,
    "vital-sign": ConceptType.VITAL_SIGN,
    "vitalsign": ConceptType.VITAL_SIGN,
}


class LinkRole(str, Enum):
    """Curated relationships between concepts, used to assemble cards."""

    RELEVANT_MEDICATION = "relevant-medication"
    RELEVANT_LAB = "relevant-lab"
    CONTEXTUAL_LAB = "contextual-lab"
    RELATED_PROCEDURE = "related-procedure"


#: The ten review-of-systems body systems, in display order.
BODY_SYSTEMS = (
    "Constitutional",
    "Eyes",
    "ENT",
    "Cardiovascular",
    "Respiratory",
    "Gastrointestinal",
    "Genitourinary",
    "Musculoskeletal",
    "Skin",
    "Neurological",
)

MODIFIER_CLASSES = ("laterality", "location", "severity", "temporality")


class LexiconError(Exception):
    """Base class for lexicon load failures."""


class ParseError(LexiconError):
    """A record line did not match the expected shape."""

    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class ValidationError(LexiconError):
    """Parsed records violate a lexicon invariant (duplicate id, dangling link, ...)."""


def normalize(form: str) -> str:
    """Normalize a surface form for matching.

    Case-folds, collapses whitespace runs to single spaces, and trims
    non-alphanumeric characters from the edges of each whitespace-separated
    chunk. Punctuation *inside* a chunk is preserved, so hyphenated terms
    like "x-ray" stay distinct from "x ray". Idempotent.
    """
    out = []
    for chunk in form.casefold().split():
        trimmed = _trim_non_alnum(chunk)
        if trimmed:
            out.append(trimmed)
    return " ".join(out)


def _trim_non_alnum(chunk: str) -> str:
    start = 0
    end = len(chunk)
    while start < end and not chunk[start].isalnum():
        start += 1
    while end > start and not chunk[end - 1].isalnum():
        end -= 1
    return chunk[start:end]


@dataclass(frozen=True)
class Concept:
    """One lexicon entry: a clinical term with its synonyms and abbreviations."""

    id: str
    canonical_name: str
    concept_type: ConceptType
    surface_forms: frozenset[str]  # normalized
    detail: str = ""

    def __post_init__(self) -> None:
        if not self.surface_forms:
            raise ValidationError(f"concept {self.id!r} has no surface forms")
        if normalize(self.canonical_name) not in self.surface_forms:
            raise ValidationError(
                f"concept {self.id!r}: canonical name missing from surface forms"
            )


@dataclass(frozen=True)
class Link:
    role: LinkRole
    target: str


@dataclass(frozen=True)
class Lexicon:
    """Immutable, indexed view of the full clinical vocabulary."""

    concepts: dict[str, Concept]
    modifier_vocab: dict[str, frozenset[str]] = field(default_factory=dict)
    body_system_map: dict[str, str] = field(default_factory=dict)
    concept_links: dict[str, tuple[Link, ...]] = field(default_factory=dict)
    surface_index: dict[str, frozenset[str]] = field(init=False)
    sorted_forms: tuple[str, ...] = field(init=False)

    def __post_init__(self) -> None:
        index: dict[str, set[str]] = {}
        for concept in self.concepts.values():
            for form in concept.surface_forms:
                index.setdefault(form, set()).add(concept.id)
        frozen = {form: frozenset(ids) for form, ids in index.items()}
        object.__setattr__(self, "surface_index", frozen)
        object.__setattr__(self, "sorted_forms", tuple(sorted(frozen)))
        self._validate()

    def _validate(self) -> None:
        for src, links in self.concept_links.items():
            if src not in self.concepts:
                raise ValidationError(f"link source {src!r} not in lexicon")
            for link in links:
                if link.target not in self.concepts:
                    raise ValidationError(
                        f"link {src!r} -> {link.target!r}: dangling target"
                    )
        for concept_id, system in self.body_system_map.items():
            concept = self.concepts.get(concept_id)
            if concept is None:
                raise ValidationError(f"body system entry for unknown id {concept_id!r}")
            if concept.concept_type is not ConceptType.SYMPTOM:
                raise ValidationError(
                    f"body system entry for non-symptom concept {concept_id!r}"
                )
            if system not in BODY_SYSTEMS:
                raise ValidationError(f"unknown body system {system!r}")
        for cls in self.modifier_vocab:
            if cls not in MODIFIER_CLASSES:
                raise ValidationError(f"unknown modifier class {cls!r}")

    def lookup(self, form: str) -> set[Concept]:
        """Concepts whose normalized surface forms equal ``normalize(form)``."""
        ids = self.surface_index.get(normalize(form), frozenset())
        return {self.concepts[i] for i in ids}

    def concept(self, concept_id: str) -> Concept:
        try:
            return self.concepts[concept_id]
        except KeyError:
            raise KeyError(f"unknown concept id {concept_id!r}") from None

    def links_for(self, concept_id: str, role: LinkRole | None = None) -> tuple[Link, ...]:
        links = self.concept_links.get(concept_id, ())
        if role is None:
            return links
        return tuple(link for link in links if link.role is role)

    def modifier_terms(self) -> frozenset[str]:
        terms: set[str] = set()
        for group in self.modifier_vocab.values():
            terms |= group
        return frozenset(terms)

    def modifier_class_of(self, term: str) -> str | None:
        normalized = normalize(term)
        for cls, group in self.modifier_vocab.items():
            if normalized in group:
                return cls
        return None


def load_lexicon(directory: str | Path) -> Lexicon:
    """Load and validate a lexicon fixture directory.

    ``concepts.tsv`` is required; ``modifiers.tsv``, ``body_systems.tsv``
    and ``links.tsv`` are optional. Raises ParseError with a line number for
    malformed records and ValidationError for invariant violations.
    """
    directory = Path(directory)
    concepts = _load_concepts(directory / "concepts.tsv")
    modifiers = _load_modifiers(directory / "modifiers.tsv")
    body_systems = _load_body_systems(directory / "body_systems.tsv")
    links = _load_links(directory / "links.tsv")
    return Lexicon(
        concepts=concepts,
        modifier_vocab=modifiers,
        body_system_map=body_systems,
        concept_links=links,
    )


def _records(path: Path, n_fields: int) -> Iterator[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != n_fields:
                raise ParseError(
                    str(path), line_no,
                    f"expected {n_fields} tab-separated fields, got {len(fields)}",
                )
            yield line_no, fields


def _load_concepts(path: Path) -> dict[str, Concept]:
    concepts: dict[str, Concept] = {}
    for line_no, (cid, type_name, canonical, synonyms, detail) in _records(path, 5):
        concept_type = _TYPE_ALIASES.get(type_name.strip().casefold())
        if concept_type is None:
            raise ParseError(str(path), line_no, f"unknown concept type {type_name!r}")
        if not cid.strip():
            raise ParseError(str(path), line_no, "empty concept id")
        if cid in concepts:
            raise ValidationError(f"{path}:{line_no}: duplicate concept id {cid!r}")
        forms = {normalize(canonical)}
        for synonym in synonyms.split("|"):
            if synonym.strip():
                forms.add(normalize(synonym))
        forms.discard("")
        if not forms:
            raise ParseError(str(path), line_no, "no usable surface forms")
        concepts[cid] = Concept(
            id=cid,
            canonical_name=canonical.strip(),
            concept_type=concept_type,
            surface_forms=frozenset(forms),
            detail=detail.strip(),
        )
    if not concepts:
        raise ValidationError(f"{path}: lexicon contains no concepts")
    return concepts


def _load_modifiers(path: Path) -> dict[str, frozenset[str]]:
    if not path.exists():
        return {}
    grouped: dict[str, set[str]] = {}
    for line_no, (cls, term) in _records(path, 2):
        cls = cls.strip().casefold()
        if cls not in MODIFIER_CLASSES:
            raise ParseError(str(path), line_no, f"unknown modifier class {cls!r}")
        normalized = normalize(term)
        if not normalized:
            raise ParseError(str(path), line_no, f"unusable modifier term {term!r}")
        grouped.setdefault(cls, set()).add(normalized)
    return {cls: frozenset(terms) for cls, terms in grouped.items()}


def _load_body_systems(path: Path) -> dict[str, str]:
    if not path.exists():
        return {}
    mapping: dict[str, str] = {}
    for line_no, (concept_id, system) in _records(path, 2):
        if concept_id in mapping:
            raise ValidationError(
                f"{path}:{line_no}: duplicate body system entry for {concept_id!r}"
            )
        mapping[concept_id.strip()] = system.strip()
    return mapping


def _load_links(path: Path) -> dict[str, tuple[Link, ...]]:
    if not path.exists():
        return {}
    links: dict[str, list[Link]] = {}
    for line_no, (src, role_name, dst) in _records(path, 3):
        try:
            role = LinkRole(role_name.strip())
        except ValueError:
            raise ParseError(str(path), line_no, f"unknown link role {role_name!r}") from None
        links.setdefault(src.strip(), []).append(Link(role=role, target=dst.strip()))
    return {src: tuple(entries) for src, entries in links.items()}


def compile_index(directory: str | Path, out_path: str | Path) -> Lexicon:
    """Validate a fixture directory and write a serialized index file."""
    lexicon = load_lexicon(directory)
    payload = {
        "v": 1,
        "concepts": [
            {
                "id": c.id,
                "type": c.concept_type.value,
                "canonical": c.canonical_name,
                "surface_forms": sorted(c.surface_forms),
                "detail": c.detail,
            }
            for c in sorted(lexicon.concepts.values(), key=lambda c: c.id)
        ],
        "modifiers": {
            cls: sorted(terms) for cls, terms in sorted(lexicon.modifier_vocab.items())
        },
        "body_systems": dict(sorted(lexicon.body_system_map.items())),
        "links": {
            src: [{"role": link.role.value, "target": link.target} for link in links]
            for src, links in sorted(lexicon.concept_links.items())
        },
    }
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return lexicon


def load_index(path: str | Path) -> Lexicon:
    """Load a lexicon from a compiled index file."""
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("v") != 1:
        raise ValidationError(f"{path}: unsupported index version {payload.get('v')!r}")
    concepts = {}
    for entry in payload["concepts"]:
        concepts[entry["id"]] = Concept(
            id=entry["id"],
            canonical_name=entry["canonical"],
            concept_type=ConceptType(entry["type"]),
            surface_forms=frozenset(entry["surface_forms"]),
            detail=entry.get("detail", ""),
        )
    if not concepts:
        raise ValidationError(f"{path}: index contains no concepts")
    return Lexicon(
        concepts=concepts,
        modifier_vocab={
            cls: frozenset(terms) for cls, terms in payload.get("modifiers", {}).items()
        },
        body_system_map=dict(payload.get("body_systems", {})),
        concept_links={
            src: tuple(Link(role=LinkRole(e["role"]), target=e["target"]) for e in entries)
            for src, entries in payload.get("links", {}).items()
        },
    )


def build_lexicon(
    concepts: Iterable[Concept],
    modifier_vocab: dict[str, frozenset[str]] | None = None,
    body_system_map: dict[str, str] | None = None,
    concept_links: dict[str, tuple[Link, ...]] | None = None,
) -> Lexicon:
    """Assemble a Lexicon from in-memory parts (test and tooling helper)."""
    by_id: dict[str, Concept] = {}
    for concept in concepts:
        if concept.id in by_id:
            raise ValidationError(f"duplicate concept id {concept.id!r}")
        by_id[concept.id] = concept
    if not by_id:
        raise ValidationError("lexicon contains no concepts")
    return Lexicon(
        concepts=by_id,
        modifier_vocab=modifier_vocab or {},
        body_system_map=body_system_map or {},
        concept_links=concept_links or {},
    )


def make_concept(
    cid: str,
    concept_type: ConceptType,
    canonical: str,
    synonyms: Iterable[str] = (),
    detail: str = "",
) -> Concept:
    """Concept constructor that applies normalization to all surface forms."""
    forms = {normalize(canonical)}
    forms.update(normalize(s) for s in synonyms)
    forms.discard("")
    return Concept(
        id=cid,
        canonical_name=canonical,
        concept_type=concept_type,
        surface_forms=frozenset(forms),
        detail=detail,
    )
