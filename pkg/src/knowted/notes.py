"""The note data model: sectioned text, immutable chips, edits, autofill.

A note has five fixed sections. Each section holds plain text plus chips:
structured spans bound to a concept (or candidate set) that behave like
atomic tokens. Edits may move or delete whole chips but can never land
inside one; any edit that would bisect a chip is rejected. Notes are
immutable values; every mutation returns a new note with the version
counter bumped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .ontology import BODY_SYSTEMS, ConceptType, Lexicon
from .records import PatientRecord, in_record
from .recognizer import Modifier, RecognitionSpan

from enum import Enum


class Section(str, Enum):
    HPI = "HPI"
    ROS = "ROS"
    PHYSICAL_EXAM = "PhysicalExam"
    MDM = "MDM"
    CLINICIAN_COMMENT = "ClinicianComment"


SECTION_ORDER: tuple[Section, ...] = (
    Section.HPI,
    Section.ROS,
    Section.PHYSICAL_EXAM,
    Section.MDM,
    Section.CLINICIAN_COMMENT,
)


class ChipOrigin(str, Enum):
    AUTOCOMPLETED = "autocompleted"
    POST_RECOGNIZED = "post-recognized"


class ChipImmutabilityError(Exception):
    """An edit tried to change text inside a chip."""


class StaleDropdownError(Exception):
    """A completion was accepted against an outdated note version."""


@dataclass(frozen=True)
class Chip:
    """An atomic concept span anchored in section text."""

    id: str
    origin: ChipOrigin
    start: int
    end: int
    surface: str
    candidates: tuple[str, ...]
    resolved: str | None = None
    negated: bool = False
    modifiers: tuple[Modifier, ...] = ()
    in_record: bool = False

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"empty chip [{self.start}, {self.end})")
        if not self.candidates:
            raise ValueError(f"chip {self.id!r} has no candidates")
        if self.resolved is not None and self.resolved not in self.candidates:
            raise ValueError(f"chip {self.id!r}: resolved id not a candidate")
        if self.origin is ChipOrigin.AUTOCOMPLETED and self.resolved is None:
            raise ValueError(f"autocompleted chip {self.id!r} must be resolved")

    def as_span(self) -> RecognitionSpan:
        return RecognitionSpan(
            start=self.start,
            end=self.end,
            surface=self.surface,
            candidates=self.candidates,
            resolved=self.resolved,
            negated=self.negated,
            modifiers=self.modifiers,
        )


@dataclass(frozen=True)
class SectionDoc:
    text: str = ""
    chips: tuple[Chip, ...] = ()

    def __post_init__(self) -> None:
        last_end = 0
        for chip in self.chips:
            if chip.start < last_end:
                raise ValueError("chips overlap or are unsorted")
            if chip.end > len(self.text):
                raise ValueError(f"chip {chip.id!r} outside text bounds")
            if self.text[chip.start : chip.end] != chip.surface:
                raise ValueError(f"chip {chip.id!r} surface does not match text")
            last_end = chip.end


@dataclass(frozen=True)
class Note:
    id: str
    patient_id: str
    sections: Mapping[Section, SectionDoc] = field(
        default_factory=lambda: {s: SectionDoc() for s in SECTION_ORDER}
    )
    version: int = 0

    def section(self, section: Section) -> SectionDoc:
        return self.sections[section]

    def with_section(self, section: Section, doc: SectionDoc) -> "Note":
        sections = dict(self.sections)
        sections[section] = doc
        return replace(self, sections=sections, version=self.version + 1)


def new_note(note_id: str, patient_id: str) -> Note:
    return Note(id=note_id, patient_id=patient_id)


@dataclass(frozen=True)
class Edit:
    """A text splice: delete ``delete`` chars at ``offset``, insert ``insert``."""

    offset: int
    delete: int = 0
    insert: str = ""

    def __post_init__(self) -> None:
        if self.offset < 0 or self.delete < 0:
            raise ValueError("negative edit offsets")


def _splice_chips(
    chips: Sequence[Chip], offset: int, delete: int, inserted: int
) -> tuple[Chip, ...]:
    """Shift chips across a splice; caller has already rejected bisections."""
    cut_end = offset + delete
    delta = inserted - delete
    kept = []
    for chip in chips:
        if chip.end <= offset:
            kept.append(chip)
        elif chip.start >= cut_end:
            kept.append(replace(chip, start=chip.start + delta, end=chip.end + delta))
        # else: fully covered by the deletion, dropped with its text
    return tuple(kept)


def apply_edit(note: Note, section: Section, edit: Edit) -> Note:
    """Apply a splice to one section, preserving chip atomicity."""
    doc = note.section(section)
    if edit.offset > len(doc.text) or edit.offset + edit.delete > len(doc.text):
        raise ValueError(
            f"edit [{edit.offset}, {edit.offset + edit.delete}) outside text "
            f"of length {len(doc.text)}"
        )
    cut_end = edit.offset + edit.delete
    for chip in doc.chips:
        if edit.delete:
            overlaps = edit.offset < chip.end and chip.start < cut_end
            covers = edit.offset <= chip.start and chip.end <= cut_end
            if overlaps and not covers:
                raise ChipImmutabilityError(
                    f"edit would bisect chip {chip.id!r} at [{chip.start}, {chip.end})"
                )
        elif edit.insert and chip.start < edit.offset < chip.end:
            raise ChipImmutabilityError(
                f"insert inside chip {chip.id!r} at [{chip.start}, {chip.end})"
            )
    text = doc.text[: edit.offset] + edit.insert + doc.text[cut_end:]
    chips = _splice_chips(doc.chips, edit.offset, edit.delete, len(edit.insert))
    return note.with_section(section, SectionDoc(text=text, chips=chips))


def insert_chips(note: Note, section: Section, chips: Iterable[Chip]) -> Note:
    """Add chips over existing text (no text change); keeps chip order."""
    doc = note.section(section)
    merged = tuple(sorted([*doc.chips, *chips], key=lambda c: c.start))
    return note.with_section(section, SectionDoc(text=doc.text, chips=merged))


def replace_chips(note: Note, section: Section, chips: Iterable[Chip]) -> Note:
    doc = note.section(section)
    ordered = tuple(sorted(chips, key=lambda c: c.start))
    return note.with_section(section, SectionDoc(text=doc.text, chips=ordered))


def _chip_id(note: Note, section: Section, start: int) -> str:
    return f"{section.value}-{note.version + 1}-{start}"


@dataclass(frozen=True)
class Completion:
    """A resolved dropdown choice ready to splice into the note.

    ``chip_length`` is how many leading characters of ``insert_text`` the
    chip covers; lab-value insertions chip only the lab name and leave the
    numbers as plain text.
    """

    replace_start: int
    replace_end: int
    insert_text: str
    concept: str
    chip_length: int

    def __post_init__(self) -> None:
        if not self.insert_text:
            raise ValueError("completion inserts no text")
        if not 0 <= self.chip_length <= len(self.insert_text):
            raise ValueError("chip_length outside inserted text")


def accept_completion(
    note: Note,
    section: Section,
    completion: Completion,
    expected_version: int,
    in_rec: bool = False,
) -> tuple[Note, Chip | None]:
    """Replace the typed prefix (and any slash token) with a resolved chip."""
    if expected_version != note.version:
        raise StaleDropdownError(
            f"dropdown built at version {expected_version}, note at {note.version}"
        )
    edit = Edit(
        offset=completion.replace_start,
        delete=completion.replace_end - completion.replace_start,
        insert=completion.insert_text,
    )
    updated = apply_edit(note, section, edit)
    chip = None
    if completion.chip_length:
        chip = Chip(
            id=_chip_id(note, section, completion.replace_start),
            origin=ChipOrigin.AUTOCOMPLETED,
            start=completion.replace_start,
            end=completion.replace_start + completion.chip_length,
            surface=completion.insert_text[: completion.chip_length],
            candidates=(completion.concept,),
            resolved=completion.concept,
            in_record=in_rec,
        )
        updated = replace_chips(
            updated, section, [*updated.section(section).chips, chip]
        )
    return updated, chip


# --- Section autofill --------------------------------------------------------

DEFAULT_ROS_PHRASE = "negative"

PHYSICAL_EXAM_TEMPLATE = """General: well developed, well nourished, in no acute distress.
HEENT: normocephalic, atraumatic.
Cardiovascular: regular rate and rhythm.
Respiratory: clear to auscultation bilaterally.
Abdomen: soft, non-tender, non-distended.
Extremities: no edema.
"""

DEFAULT_TEMPLATES: Mapping[Section, str] = {
    Section.PHYSICAL_EXAM: PHYSICAL_EXAM_TEMPLATE,
}


@dataclass(frozen=True)
class AutofillResult:
    note: Note
    applied: bool
    reason: str = ""


def chip_phrase(chip: Chip, lexicon: Lexicon) -> str:
    """Text rendering of a chip for copy-forward: modifiers, name, negation."""
    concept_id = chip.resolved or chip.candidates[0]
    words = [m.term for m in chip.modifiers]
    words.append(lexicon.concept(concept_id).canonical_name)
    phrase = " ".join(words)
    return f"no {phrase}" if chip.negated else phrase


def captured_symptoms(note: Note, lexicon: Lexicon) -> list[Chip]:
    """Resolved symptom chips across the note, in section then text order."""
    found = []
    for section in SECTION_ORDER:
        if section is Section.ROS:
            continue
        for chip in note.section(section).chips:
            if chip.resolved is None:
                continue
            if lexicon.concept(chip.resolved).concept_type is ConceptType.SYMPTOM:
                found.append(chip)
    return found


def build_ros_text(
    note: Note,
    lexicon: Lexicon,
    default_phrase: str = DEFAULT_ROS_PHRASE,
) -> str:
    """Ten system lines listing captured symptoms, defaults elsewhere."""
    by_system: dict[str, list[str]] = {system: [] for system in BODY_SYSTEMS}
    for chip in captured_symptoms(note, lexicon):
        system = lexicon.body_system_map.get(chip.resolved or "")
        if system is None:
            continue
        phrase = chip_phrase(chip, lexicon)
        if phrase not in by_system[system]:
            by_system[system].append(phrase)
    lines = []
    for system in BODY_SYSTEMS:
        items = by_system[system]
        lines.append(f"{system}: {', '.join(items) if items else default_phrase}")
    return "\n".join(lines) + "\n"


def autofill_section(
    note: Note,
    section: Section,
    lexicon: Lexicon,
    templates: Mapping[Section, str] | None = None,
    default_phrase: str = DEFAULT_ROS_PHRASE,
) -> AutofillResult:
    """Populate an empty section from its template.

    The ROS template is computed from captured symptom chips; other
    sections use static template text. Non-empty sections are left
    untouched and reported as such.
    """
    doc = note.section(section)
    if doc.text.strip():
        return AutofillResult(note=note, applied=False, reason="section not empty")
    if section is Section.ROS:
        text = build_ros_text(note, lexicon, default_phrase)
    else:
        templates = templates if templates is not None else DEFAULT_TEMPLATES
        text = templates.get(section, "")
        if not text:
            return AutofillResult(note=note, applied=False, reason="no template")
    updated = note.with_section(section, SectionDoc(text=text, chips=()))
    return AutofillResult(note=updated, applied=True)


def chips_from_spans(
    note: Note,
    section: Section,
    spans: Iterable[RecognitionSpan],
    record: PatientRecord | None = None,
) -> list[Chip]:
    """Wrap recognizer spans as post-recognized chips for one section."""
    chips = []
    for span in spans:
        present = False
        if record is not None:
            present = any(in_record(record, cid) for cid in span.candidates)
        chips.append(
            Chip(
                id=_chip_id(note, section, span.start),
                origin=ChipOrigin.POST_RECOGNIZED,
                start=span.start,
                end=span.end,
                surface=span.surface,
                candidates=span.candidates,
                resolved=span.resolved,
                negated=span.negated,
                modifiers=span.modifiers,
                in_record=present,
            )
        )
    return chips


def plain_text_ranges(doc: SectionDoc) -> list[tuple[int, int]]:
    """Maximal text ranges not covered by any chip (rescan targets)."""
    ranges = []
    cursor = 0
    for chip in doc.chips:
        if chip.start > cursor:
            ranges.append((cursor, chip.start))
        cursor = chip.end
    if cursor < len(doc.text):
        ranges.append((cursor, len(doc.text)))
    return ranges
