"""Versioned JSON payloads for the HTTP/WebSocket API and the store.

Every top-level payload carries ``"v": 1``. These codecs are the single
source of truth for the wire schema; golden-file fixtures in the test
suite pin the byte shape so accidental schema drift fails loudly.
"""

from __future__ import annotations

from typing import Any

from .cards import Card, CardBlock, BlockKind
from .notes import Chip, ChipOrigin, Note, Section, SectionDoc
from .records import PatientRecord, format_timestamp, parse_timestamp
from .recognizer import Modifier
from .sessions import SidebarState, UsageEvent, UsageKind
from .autocomplete import LabFrame, LabStat, LabTree, Suggestion

WIRE_VERSION = 1


def chip_to_dict(chip: Chip) -> dict[str, Any]:
    return {
        "id": chip.id,
        "origin": chip.origin.value,
        "start": chip.start,
        "end": chip.end,
        "surface": chip.surface,
        "candidates": list(chip.candidates),
        "resolved": chip.resolved,
        "negated": chip.negated,
        "modifiers": [{"term": m.term, "class": m.cls} for m in chip.modifiers],
        "in_record": chip.in_record,
    }


def chip_from_dict(data: dict[str, Any]) -> Chip:
    return Chip(
        id=data["id"],
        origin=ChipOrigin(data["origin"]),
        start=data["start"],
        end=data["end"],
        surface=data["surface"],
        candidates=tuple(data["candidates"]),
        resolved=data.get("resolved"),
        negated=data.get("negated", False),
        modifiers=tuple(
            Modifier(term=m["term"], cls=m["class"]) for m in data.get("modifiers", ())
        ),
        in_record=data.get("in_record", False),
    )


def note_to_dict(note: Note) -> dict[str, Any]:
    return {
        "v": WIRE_VERSION,
        "id": note.id,
        "patient_id": note.patient_id,
        "version": note.version,
        "sections": {
            section.value: {
                "text": doc.text,
                "chips": [chip_to_dict(chip) for chip in doc.chips],
            }
            for section, doc in note.sections.items()
        },
    }


def note_from_dict(data: dict[str, Any]) -> Note:
    sections = {}
    for name, doc in data["sections"].items():
        sections[Section(name)] = SectionDoc(
            text=doc["text"],
            chips=tuple(chip_from_dict(c) for c in doc["chips"]),
        )
    return Note(
        id=data["id"],
        patient_id=data["patient_id"],
        sections=sections,
        version=data["version"],
    )


def suggestion_to_dict(suggestion: Suggestion) -> dict[str, Any]:
    return {
        "concept": suggestion.concept,
        "display": suggestion.display,
        "detail": suggestion.detail,
        "score": suggestion.score,
        "in_record": suggestion.in_record,
    }


def lab_stat_to_dict(stat: LabStat) -> dict[str, Any]:
    return {
        "name": stat.name,
        "value": stat.value,
        "decimals": stat.decimals,
        "timestamp": format_timestamp(stat.timestamp),
    }


def lab_frame_to_dict(frame: LabFrame) -> dict[str, Any]:
    return {
        "name": frame.name,
        "min": frame.minimum,
        "max": frame.maximum,
        "avg": frame.average,
        "decimals": frame.decimals,
        "result_ids": list(frame.result_ids),
        "stats": [lab_stat_to_dict(s) for s in frame.stats],
    }


def lab_tree_to_dict(tree: LabTree) -> dict[str, Any]:
    return {
        "concept": tree.concept,
        "label": tree.label,
        "frames": [lab_frame_to_dict(f) for f in tree.frames],
    }


def card_to_dict(card: Card) -> dict[str, Any]:
    return {
        "v": WIRE_VERSION,
        "concept": card.concept,
        "title": card.title,
        "synonyms": list(card.synonyms),
        "body": [{"kind": block.kind.value, "payload": block.payload} for block in card.body],
    }


def card_from_dict(data: dict[str, Any]) -> Card:
    return Card(
        concept=data["concept"],
        title=data["title"],
        synonyms=tuple(data["synonyms"]),
        body=tuple(
            CardBlock(kind=BlockKind(b["kind"]), payload=b["payload"])
            for b in data["body"]
        ),
    )


def event_to_dict(event: UsageEvent) -> dict[str, Any]:
    return {
        "timestamp": format_timestamp(event.timestamp),
        "user": event.user,
        "kind": event.kind.value,
        "note_id": event.note_id,
        "concept": event.concept,
    }


def event_from_dict(data: dict[str, Any]) -> UsageEvent:
    return UsageEvent(
        timestamp=parse_timestamp(data["timestamp"]),
        user=data["user"],
        kind=UsageKind(data["kind"]),
        note_id=data["note_id"],
        concept=data.get("concept"),
    )


def sidebar_to_dict(state: SidebarState) -> dict[str, Any]:
    return {
        "preview": state.preview,
        "pins": list(state.pins),
        "pin_version": state.pin_version,
        "can_back": state.can_back,
        "can_forward": state.can_forward,
    }


def record_to_dict(record: PatientRecord) -> dict[str, Any]:
    return {
        "v": WIRE_VERSION,
        "patient_id": record.patient_id,
        "labs": [
            {
                "id": lab.id,
                "concept": lab.concept,
                "value": lab.value,
                "raw": lab.raw,
                "unit": lab.unit,
                "timestamp": format_timestamp(lab.timestamp),
                "reference_range": list(lab.reference_range) if lab.reference_range else None,
                "abnormal": lab.abnormal,
            }
            for lab in record.labs
        ],
        "notes": [
            {
                "id": note.id,
                "timestamp": format_timestamp(note.timestamp),
                "author_role": note.author_role,
                "text": note.text,
                "concepts": sorted(note.concepts),
            }
            for note in record.notes
        ],
        "entries": [
            {
                "id": entry.id,
                "concept": entry.concept,
                "timestamp": format_timestamp(entry.timestamp),
                "source_note": entry.source_note,
            }
            for entry in record.entries
        ],
    }
