"""Concept-oriented card assembly from the patient record.

A card packs everything on file about one concept into an ordered list of
blocks: lab tables (optionally with contextual companion columns, e.g.
creatinine beside potassium), value series, aggregates, linked medication
and procedure lists, and chronological note snippets. Default block
recipes depend on the concept type; a curated override file can replace
the recipe for specific concepts (the cardiac card). Every datum in a
block payload carries the id of the record item it came from.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from .autocomplete import lab_tree
from .ontology import (
    ConceptType,
    Lexicon,
    LinkRole,
    ParseError,
    ValidationError,
    normalize,
)
from .records import (
    PatientRecord,
    Snippet,
    format_timestamp,
    labs_for,
    snippets_in_note,
)
from .recognizer import Automaton

SNIPPET_CAP = 10


class BlockKind(str, Enum):
    LAB_TABLE = "lab-table"
    LAB_SERIES = "lab-series"
    LAB_AGGREGATE = "lab-aggregate"
    MEDICATION_LIST = "medication-list"
    VITALS_LIST = "vitals-list"
    PROCEDURE_LIST = "procedure-list"
    NOTE_SNIPPETS = "note-snippets"
    REPORT_SNIPPETS = "report-snippets"


# Sources a recipe block can draw concepts from: the card's own concept,
# one link role, or the concept plus everything it links to.
_SOURCES = frozenset(
    {"self", "all-links"} | {role.value for role in LinkRole}
)


class UnsupportedConceptError(ValidationError):
    """Cards are not assembled for this concept type (symptoms)."""


@dataclass(frozen=True)
class CardBlock:
    kind: BlockKind
    payload: dict[str, Any]


@dataclass(frozen=True)
class Card:
    concept: str
    title: str
    synonyms: tuple[str, ...]
    body: tuple[CardBlock, ...]


@dataclass(frozen=True)
class CardOverride:
    """Explicit block recipe replacing the per-type default for its triggers."""

    triggers: frozenset[str]
    recipe: tuple[tuple[BlockKind, str], ...]  # (kind, source)


def load_overrides(path: str | Path, lexicon: Lexicon) -> tuple[CardOverride, ...]:
    """Read ``overrides.tsv``: ``trigger,trigger,...<TAB>kind:source,kind:source,...``."""
    path = Path(path)
    if not path.exists():
        return ()
    overrides = []
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(str(path), line_no, "expected 2 tab-separated fields")
            triggers = frozenset(t.strip() for t in fields[0].split(",") if t.strip())
            for trigger in triggers:
                if trigger not in lexicon.concepts:
                    raise ValidationError(
                        f"{path}:{line_no}: override trigger {trigger!r} not in lexicon"
                    )
            recipe = []
            for spec in fields[1].split(","):
                spec = spec.strip()
                kind_name, _, source = spec.partition(":")
                source = source or "self"
                try:
                    kind = BlockKind(kind_name)
                except ValueError:
                    raise ParseError(str(path), line_no, f"unknown block kind {kind_name!r}") from None
                if source not in _SOURCES:
                    raise ParseError(str(path), line_no, f"unknown block source {source!r}")
                recipe.append((kind, source))
            if not recipe:
                raise ParseError(str(path), line_no, "override with empty recipe")
            overrides.append(CardOverride(triggers=triggers, recipe=tuple(recipe)))
    return tuple(overrides)


def contextual_columns(concept_id: str, lexicon: Lexicon) -> list[str]:
    """Companion labs to show beside this one, in curated order."""
    return [link.target for link in lexicon.links_for(concept_id, LinkRole.CONTEXTUAL_LAB)]


def _source_ids(concept_id: str, source: str, lexicon: Lexicon) -> list[str]:
    if source == "self":
        return [concept_id]
    if source == "all-links":
        ids = [concept_id]
        ids.extend(link.target for link in lexicon.links_for(concept_id))
        return ids
    role = LinkRole(source)
    return [link.target for link in lexicon.links_for(concept_id, role)]


def _lab_table_block(
    column_ids: Sequence[str], record: PatientRecord, lexicon: Lexicon
) -> CardBlock | None:
    columns = []
    results_by_column = {}
    for cid in column_ids:
        results = labs_for(record, cid)
        if results:
            columns.append(cid)
            results_by_column[cid] = results
    if not columns:
        return None
    stamps = sorted(
        {r.timestamp for results in results_by_column.values() for r in results}
    )
    rows = []
    for stamp in stamps:
        values = {}
        for cid in columns:
            for result in results_by_column[cid]:
                if result.timestamp == stamp:
                    values[cid] = {
                        "id": result.id,
                        "raw": result.raw,
                        "value": result.value,
                        "unit": result.unit,
                        "abnormal": result.abnormal,
                    }
                    break
        rows.append({"timestamp": format_timestamp(stamp), "values": values})
    payload = {
        "columns": [
            {"concept": cid, "display": lexicon.concept(cid).canonical_name}
            for cid in columns
        ],
        "rows": rows,
    }
    return CardBlock(kind=BlockKind.LAB_TABLE, payload=payload)


def _lab_series_block(concept_id: str, record: PatientRecord) -> CardBlock | None:
    results = labs_for(record, concept_id)
    if not results:
        return None
    points = [
        {
            "id": r.id,
            "timestamp": format_timestamp(r.timestamp),
            "value": r.value,
            "raw": r.raw,
            "abnormal": r.abnormal,
        }
        for r in results
    ]
    return CardBlock(
        kind=BlockKind.LAB_SERIES, payload={"concept": concept_id, "points": points}
    )


def _lab_aggregate_block(
    concept_id: str, record: PatientRecord, lexicon: Lexicon
) -> CardBlock | None:
    tree = lab_tree(concept_id, record, lexicon)
    if not tree.frames:
        return None
    frames = [
        {
            "name": frame.name,
            "min": frame.minimum,
            "max": frame.maximum,
            "avg": frame.average,
            "decimals": frame.decimals,
            "result_ids": list(frame.result_ids),
        }
        for frame in tree.frames
    ]
    return CardBlock(
        kind=BlockKind.LAB_AGGREGATE,
        payload={"concept": concept_id, "label": tree.label, "frames": frames},
    )


def _entry_list_block(
    kind: BlockKind,
    target_ids: Iterable[str],
    record: PatientRecord,
    lexicon: Lexicon,
) -> CardBlock | None:
    targets = set(target_ids)
    items = [
        {
            "entry_id": entry.id,
            "concept": entry.concept,
            "display": lexicon.concept(entry.concept).canonical_name,
            "timestamp": format_timestamp(entry.timestamp),
            "source_note": entry.source_note,
        }
        for entry in sorted(record.entries, key=lambda e: e.timestamp)
        if entry.concept in targets
    ]
    if not items:
        return None
    return CardBlock(kind=kind, payload={"items": items})


def _vitals_block(
    target_ids: Iterable[str], record: PatientRecord, lexicon: Lexicon
) -> CardBlock | None:
    items = []
    for cid in target_ids:
        if lexicon.concept(cid).concept_type is not ConceptType.VITAL_SIGN:
            continue
        results = labs_for(record, cid)
        if not results:
            continue
        latest = results[-1]
        items.append(
            {
                "result_id": latest.id,
                "concept": cid,
                "display": lexicon.concept(cid).canonical_name,
                "timestamp": format_timestamp(latest.timestamp),
                "raw": latest.raw,
                "value": latest.value,
                "unit": latest.unit,
                "abnormal": latest.abnormal,
            }
        )
    if not items:
        return None
    return CardBlock(kind=BlockKind.VITALS_LIST, payload={"items": items})


def _snippet_block(
    kind: BlockKind,
    target_ids: Iterable[str],
    record: PatientRecord,
    automaton: Automaton,
) -> CardBlock | None:
    targets = set(target_ids)
    collected: list[tuple[Snippet, str]] = []
    for note in sorted(record.notes, key=lambda n: (n.timestamp, n.id)):
        if not targets.intersection(note.concepts):
            continue
        for snippet in snippets_in_note(note, targets, automaton):
            collected.append((snippet, format_timestamp(note.timestamp)))
    if not collected:
        return None
    kept = collected[-SNIPPET_CAP:]  # most recent, still oldest-first
    snippets = [
        {
            "note_id": snippet.note_id,
            "timestamp": stamp,
            "text": snippet.text,
            "window": [snippet.start, snippet.end],
            "highlight": [snippet.mention_start, snippet.mention_end],
            "concept": snippet.concept,
        }
        for snippet, stamp in kept
    ]
    return CardBlock(
        kind=kind,
        payload={"snippets": snippets, "more_available": len(collected) - len(kept)},
    )


def _build_block(
    kind: BlockKind,
    source: str,
    concept_id: str,
    record: PatientRecord,
    lexicon: Lexicon,
    automaton: Automaton,
) -> CardBlock | None:
    ids = _source_ids(concept_id, source, lexicon)
    if kind is BlockKind.LAB_TABLE:
        return _lab_table_block(ids, record, lexicon)
    if kind is BlockKind.LAB_SERIES:
        return _lab_series_block(concept_id, record)
    if kind is BlockKind.LAB_AGGREGATE:
        return _lab_aggregate_block(concept_id, record, lexicon)
    if kind in (BlockKind.MEDICATION_LIST, BlockKind.PROCEDURE_LIST):
        return _entry_list_block(kind, ids, record, lexicon)
    if kind is BlockKind.VITALS_LIST:
        return _vitals_block(ids, record, lexicon)
    if kind in (BlockKind.NOTE_SNIPPETS, BlockKind.REPORT_SNIPPETS):
        return _snippet_block(kind, ids, record, automaton)
    raise ValidationError(f"unhandled block kind {kind!r}")


# Default recipes per concept type, in card display order.
_DEFAULT_RECIPES: dict[ConceptType, tuple[tuple[BlockKind, str], ...]] = {
    ConceptType.CONDITION: (
        (BlockKind.MEDICATION_LIST, LinkRole.RELEVANT_MEDICATION.value),
        (BlockKind.VITALS_LIST, LinkRole.RELEVANT_LAB.value),
        (BlockKind.PROCEDURE_LIST, LinkRole.RELATED_PROCEDURE.value),
        (BlockKind.NOTE_SNIPPETS, "all-links"),
    ),
    ConceptType.LAB: (
        (BlockKind.LAB_TABLE, LinkRole.CONTEXTUAL_LAB.value),
        (BlockKind.LAB_SERIES, "self"),
        (BlockKind.LAB_AGGREGATE, "self"),
    ),
    ConceptType.VITAL_SIGN: (
        (BlockKind.LAB_TABLE, LinkRole.CONTEXTUAL_LAB.value),
        (BlockKind.LAB_SERIES, "self"),
        (BlockKind.LAB_AGGREGATE, "self"),
    ),
    ConceptType.MEDICATION: ((BlockKind.NOTE_SNIPPETS, "all-links"),),
    ConceptType.PROCEDURE: ((BlockKind.NOTE_SNIPPETS, "all-links"),),
}


def assemble_card(
    concept_id: str,
    record: PatientRecord,
    lexicon: Lexicon,
    automaton: Automaton,
    overrides: Sequence[CardOverride] = (),
) -> Card:
    """Build the card for a concept; overrides win over per-type defaults."""
    concept = lexicon.concept(concept_id)
    if concept.concept_type is ConceptType.SYMPTOM:
        raise UnsupportedConceptError(f"no card for symptom concept {concept_id!r}")
    recipe = None
    for override in overrides:
        if concept_id in override.triggers:
            recipe = override.recipe
            break
    if recipe is None:
        recipe = _DEFAULT_RECIPES[concept.concept_type]

    blocks = []
    for kind, source in recipe:
        if kind is BlockKind.LAB_TABLE and source == LinkRole.CONTEXTUAL_LAB.value:
            # The lab's own column comes first; contextual links add columns.
            column_ids = [concept_id, *contextual_columns(concept_id, lexicon)]
            block = _lab_table_block(column_ids, record, lexicon)
        else:
            block = _build_block(kind, source, concept_id, record, lexicon, automaton)
        if block is not None:
            blocks.append(block)

    canonical_norm = normalize(concept.canonical_name)
    synonyms = tuple(sorted(form for form in concept.surface_forms if form != canonical_norm))
    return Card(
        concept=concept_id,
        title=concept.canonical_name,
        synonyms=synonyms,
        body=tuple(blocks),
    )


def expand_snippet(
    block: CardBlock, index: int, record: PatientRecord
) -> dict[str, Any]:
    """Full source note for one snippet in a block, with its highlight span."""
    if block.kind not in (BlockKind.NOTE_SNIPPETS, BlockKind.REPORT_SNIPPETS):
        raise ValidationError(f"cannot expand snippets in a {block.kind.value} block")
    snippets = block.payload.get("snippets", [])
    if not 0 <= index < len(snippets):
        raise ValidationError(f"snippet index {index} out of range")
    entry = snippets[index]
    try:
        note = record.note(entry["note_id"])
    except KeyError:
        raise ValidationError(f"snippet references unknown note {entry['note_id']!r}") from None
    return {
        "note_id": note.id,
        "timestamp": format_timestamp(note.timestamp),
        "author_role": note.author_role,
        "text": note.text,
        "highlight": list(entry["highlight"]),
    }
