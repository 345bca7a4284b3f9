"""Synthetic patient histories and the queries that feed cards.

A patient record is a bundle of timestamped lab results, prior free-text
notes, and medication/procedure/condition entries. Fixtures are JSON
documents (one patient per file) with ``labs[]``, ``notes[]``, and
``entries[]`` arrays and ISO-8601 UTC timestamps. At ingest every prior
note is run through the recognizer to build a concept index; that index is
a cache over the text, never a source of truth.

Raw numeric strings are kept alongside parsed values so downstream
formatting can reproduce the record's native precision ("90" stays "90",
"90.50" keeps two decimals).
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from .ontology import Concept, ConceptType, Lexicon, ValidationError
from .recognizer import Automaton, scan

_LAB_TYPES = frozenset({ConceptType.LAB, ConceptType.VITAL_SIGN})
_ENTRY_TYPES = frozenset({ConceptType.MEDICATION, ConceptType.PROCEDURE, ConceptType.CONDITION})

# Optional reference-range declaration inside a lab concept's detail text,
# e.g. "serum, ref 3.5-5.2 mmol/L".
_REF_RE = re.compile(r"ref\s+(-?\d+(?:\.\d+)?)\s*-\s*(-?\d+(?:\.\d+)?)")


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ValidationError(f"unparseable timestamp {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def format_timestamp(stamp: datetime) -> str:
    return stamp.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def decimal_places(raw: str) -> int:
    """Digits after the decimal point in a raw numeric string."""
    _, _, frac = raw.partition(".")
    return len(frac)


def reference_range_for(lexicon: Lexicon, concept_id: str) -> tuple[float, float] | None:
    """Reference range declared in the concept's detail text, if any."""
    match = _REF_RE.search(lexicon.concept(concept_id).detail)
    if match is None:
        return None
    return float(match.group(1)), float(match.group(2))


@dataclass(frozen=True)
class LabResult:
    id: str
    concept: str
    value: float
    raw: str  # fixture's numeric string, kept for native precision
    unit: str
    timestamp: datetime
    reference_range: tuple[float, float] | None
    abnormal: bool


@dataclass(frozen=True)
class PriorNote:
    id: str
    timestamp: datetime
    author_role: str
    text: str
    concepts: frozenset[str]  # recognizer index over text, cache only


@dataclass(frozen=True)
class RecordEntry:
    id: str
    concept: str
    timestamp: datetime
    source_note: str | None = None


@dataclass(frozen=True)
class Snippet:
    """A mention with surrounding context, anchored into its source note."""

    note_id: str
    start: int
    end: int
    text: str
    mention_start: int
    mention_end: int
    concept: str


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    labs: tuple[LabResult, ...] = ()
    notes: tuple[PriorNote, ...] = ()
    entries: tuple[RecordEntry, ...] = ()

    def note(self, note_id: str) -> PriorNote:
        for note in self.notes:
            if note.id == note_id:
                return note
        raise KeyError(f"unknown note id {note_id!r}")


def ingest(
    source: str | Path | dict[str, Any],
    lexicon: Lexicon,
    automaton: Automaton,
) -> PatientRecord:
    """Load and validate one patient fixture (path or already-parsed dict)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            doc = json.load(handle)
    else:
        doc = source
    patient_id = doc.get("patient_id")
    if not patient_id:
        raise ValidationError("patient fixture missing patient_id")

    labs = []
    for item in doc.get("labs", ()):
        concept = _require_concept(lexicon, item, "lab")
        if concept.concept_type not in _LAB_TYPES:
            raise ValidationError(
                f"lab result {item.get('id')!r} references non-lab concept {concept.id!r}"
            )
        raw = str(item["value"])
        value = float(raw)
        ref = item.get("reference_range")
        if ref is not None:
            ref = (float(ref[0]), float(ref[1]))
        else:
            ref = reference_range_for(lexicon, concept.id)
        abnormal = ref is not None and not (ref[0] <= value <= ref[1])
        labs.append(
            LabResult(
                id=_require_id(item, "lab"),
                concept=concept.id,
                value=value,
                raw=raw,
                unit=str(item.get("unit", "")),
                timestamp=parse_timestamp(item["timestamp"]),
                reference_range=ref,
                abnormal=abnormal,
            )
        )

    notes = []
    for item in doc.get("notes", ()):
        text = str(item.get("text", ""))
        mentioned: set[str] = set()
        for span in scan(automaton, text):
            mentioned.update(span.candidates)
        notes.append(
            PriorNote(
                id=_require_id(item, "note"),
                timestamp=parse_timestamp(item["timestamp"]),
                author_role=str(item.get("author_role", "clinician")),
                text=text,
                concepts=frozenset(mentioned),
            )
        )
    note_ids = {note.id for note in notes}

    entries = []
    for item in doc.get("entries", ()):
        concept = _require_concept(lexicon, item, "entry")
        if concept.concept_type not in _ENTRY_TYPES:
            raise ValidationError(
                f"entry {item.get('id')!r} references {concept.concept_type.value} "
                f"concept {concept.id!r}; entries must be medications, procedures, "
                "or conditions"
            )
        source_note = item.get("source_note")
        if source_note is not None and source_note not in note_ids:
            raise ValidationError(
                f"entry {item.get('id')!r} cites unknown note {source_note!r}"
            )
        entries.append(
            RecordEntry(
                id=_require_id(item, "entry"),
                concept=concept.id,
                timestamp=parse_timestamp(item["timestamp"]),
                source_note=source_note,
            )
        )

    return PatientRecord(
        patient_id=str(patient_id),
        labs=tuple(labs),
        notes=tuple(notes),
        entries=tuple(entries),
    )


def _require_id(item: dict[str, Any], kind: str) -> str:
    item_id = item.get("id")
    if not item_id:
        raise ValidationError(f"{kind} item missing id: {item!r}")
    return str(item_id)


def _require_concept(lexicon: Lexicon, item: dict[str, Any], kind: str) -> Concept:
    concept_id = item.get("concept")
    if concept_id not in lexicon.concepts:
        raise ValidationError(f"{kind} item {item.get('id')!r}: unknown concept {concept_id!r}")
    return lexicon.concepts[concept_id]


def record_clock(record: PatientRecord) -> datetime | None:
    """Reference 'now' for time-window queries: the latest timestamp on file."""
    stamps = [lab.timestamp for lab in record.labs]
    stamps += [note.timestamp for note in record.notes]
    stamps += [entry.timestamp for entry in record.entries]
    return max(stamps) if stamps else None


def labs_for(
    record: PatientRecord,
    concept_id: str,
    window: timedelta | None = None,
    as_of: datetime | None = None,
) -> list[LabResult]:
    """Results for one lab concept, oldest first; stable for equal timestamps.

    ``window`` keeps only results within that span ending at ``as_of``
    (default: the record's latest timestamp).
    """
    results = [lab for lab in record.labs if lab.concept == concept_id]
    if window is not None:
        clock = as_of or record_clock(record)
        if clock is None:
            return []
        cutoff = clock - window
        results = [lab for lab in results if cutoff <= lab.timestamp <= clock]
    return sorted(results, key=lambda lab: lab.timestamp)


def in_record(record: PatientRecord, concept_id: str) -> bool:
    """True when the concept appears in labs, entries, or any note's index."""
    if any(lab.concept == concept_id for lab in record.labs):
        return True
    if any(entry.concept == concept_id for entry in record.entries):
        return True
    return any(concept_id in note.concepts for note in record.notes)


def result_count(record: PatientRecord, concept_id: str) -> int:
    return sum(1 for lab in record.labs if lab.concept == concept_id)


def _snippet_window(text: str, start: int, end: int, context: int) -> tuple[int, int]:
    """Expand a mention by ``context`` chars each side, out to word boundaries."""
    lo = max(0, start - context)
    while lo > 0 and text[lo - 1].isalnum():
        lo -= 1
    hi = min(len(text), end + context)
    while hi < len(text) and text[hi].isalnum():
        hi += 1
    return lo, hi


def snippets_in_note(
    note: PriorNote,
    concept_ids: Iterable[str],
    automaton: Automaton,
    context: int = 100,
) -> tuple[Snippet, ...]:
    """Context snippets for every mention of the given concepts in one note."""
    wanted = set(concept_ids)
    found = []
    for span in scan(automaton, note.text):
        hit = wanted.intersection(span.candidates)
        if not hit:
            continue
        lo, hi = _snippet_window(note.text, span.start, span.end, context)
        found.append(
            Snippet(
                note_id=note.id,
                start=lo,
                end=hi,
                text=note.text[lo:hi],
                mention_start=span.start,
                mention_end=span.end,
                concept=min(hit),
            )
        )
    return tuple(found)


def notes_mentioning(
    record: PatientRecord,
    concept_id: str,
    lexicon: Lexicon,
    automaton: Automaton,
    context: int = 100,
) -> list[tuple[PriorNote, tuple[Snippet, ...]]]:
    """Notes mentioning a concept or any of its linked concepts, oldest first.

    A mention counts when the target id appears among a span's candidates;
    ambiguous surface forms are treated as potential mentions rather than
    dropped.
    """
    targets = {concept_id}
    targets.update(link.target for link in lexicon.links_for(concept_id))
    hits = []
    for note in sorted(record.notes, key=lambda n: n.timestamp):
        if not targets.intersection(note.concepts):
            continue
        snippets = snippets_in_note(note, targets, automaton, context)
        if snippets:
            hits.append((note, snippets))
    return hits


def expand_snippet(record: PatientRecord, snippet: Snippet) -> tuple[str, tuple[int, int]]:
    """Full text of a snippet's source note plus the mention's highlight span."""
    note = record.note(snippet.note_id)
    if snippet.mention_end > len(note.text) or (
        note.text[snippet.mention_start : snippet.mention_end]
        != snippet.text[snippet.mention_start - snippet.start : snippet.mention_end - snippet.start]
    ):
        raise ValidationError(f"snippet does not match note {snippet.note_id!r}")
    return note.text, (snippet.mention_start, snippet.mention_end)


# --- Synthetic patient generator -------------------------------------------
#
# Fixtures are randomized but fully determined by (lexicon, seed): all
# sampling happens over id-sorted concept lists with a seeded RNG, and the
# clock is anchored to a fixed base date rather than wall time.

_BASE_DATE = datetime(2026, 6, 1, tzinfo=timezone.utc)
_AUTHOR_ROLES = ("physician", "nurse", "scribe")

_NOTE_TEMPLATES = (
    "Patient seen today. Reports {a}. Continues {b} as prescribed.",
    "Follow-up visit. {a} noted on exam; {b} reviewed with patient.",
    "Admitted overnight. History includes {a} and {b}.",
    "Routine check. No acute distress. Discussed {a}; plan to monitor {b}.",
    "Telephone encounter. Patient describes {a}. Advised regarding {b}.",
)


def _display_form(concept: Concept) -> str:
    return concept.canonical_name


def generate_patient(lexicon: Lexicon, rng: random.Random, patient_id: str) -> dict[str, Any]:
    """One synthetic patient fixture document."""
    by_type: dict[ConceptType, list[Concept]] = {t: [] for t in ConceptType}
    for concept in sorted(lexicon.concepts.values(), key=lambda c: c.id):
        by_type[concept.concept_type].append(concept)

    labs: list[dict[str, Any]] = []
    lab_pool = by_type[ConceptType.LAB] + by_type[ConceptType.VITAL_SIGN]
    for concept in rng.sample(lab_pool, k=min(len(lab_pool), rng.randint(2, 5))):
        ref = reference_range_for(lexicon, concept.id) or (50.0, 150.0)
        lo, hi = ref
        for _ in range(rng.randint(2, 8)):
            # Mostly in-range values with occasional excursions.
            center = (lo + hi) / 2
            spread = (hi - lo) * rng.uniform(0.1, 0.9)
            value = center + spread * rng.uniform(-1, 1)
            decimals = rng.choice((0, 0, 1, 2))
            raw = f"{value:.{decimals}f}"
            days_back = rng.uniform(0, 730)
            stamp = _BASE_DATE - timedelta(days=days_back)
            labs.append(
                {
                    "id": f"{patient_id}-lab{len(labs) + 1}",
                    "concept": concept.id,
                    "value": raw,
                    "unit": "",
                    "timestamp": format_timestamp(stamp.replace(microsecond=0)),
                }
            )

    mention_pool = (
        by_type[ConceptType.CONDITION]
        + by_type[ConceptType.MEDICATION]
        + by_type[ConceptType.SYMPTOM]
        + by_type[ConceptType.PROCEDURE]
    )
    notes: list[dict[str, Any]] = []
    for i in range(rng.randint(2, 5)):
        if len(mention_pool) >= 2:
            a, b = rng.sample(mention_pool, k=2)
        elif mention_pool:
            a = b = mention_pool[0]
        else:
            break
        template = rng.choice(_NOTE_TEMPLATES)
        stamp = _BASE_DATE - timedelta(days=rng.uniform(0, 730))
        notes.append(
            {
                "id": f"{patient_id}-note{i + 1}",
                "timestamp": format_timestamp(stamp.replace(microsecond=0)),
                "author_role": rng.choice(_AUTHOR_ROLES),
                "text": template.format(a=_display_form(a), b=_display_form(b)),
            }
        )

    entries: list[dict[str, Any]] = []
    entry_pool = (
        by_type[ConceptType.MEDICATION]
        + by_type[ConceptType.PROCEDURE]
        + by_type[ConceptType.CONDITION]
    )
    for concept in rng.sample(entry_pool, k=min(len(entry_pool), rng.randint(1, 4))):
        stamp = _BASE_DATE - timedelta(days=rng.uniform(0, 730))
        entries.append(
            {
                "id": f"{patient_id}-ent{len(entries) + 1}",
                "concept": concept.id,
                "timestamp": format_timestamp(stamp.replace(microsecond=0)),
                "source_note": rng.choice(notes)["id"] if notes and rng.random() < 0.5 else None,
            }
        )

    return {"patient_id": patient_id, "labs": labs, "notes": notes, "entries": entries}


def generate_patients(lexicon: Lexicon, seed: int, count: int) -> list[dict[str, Any]]:
    """Seed-reproducible synthetic fixtures: same (lexicon, seed, count), same bytes."""
    rng = random.Random(seed)
    return [generate_patient(lexicon, rng, f"p{i + 1:03d}") for i in range(count)]


def write_fixture(doc: dict[str, Any], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2, sort_keys=True)
        handle.write("\n")
