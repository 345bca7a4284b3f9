"""HTTP + WebSocket service tying the engine together for editor clients.

One process owns the lexicon, the recognizer automaton, ingested patient
records, all open notes, and the session hub. Edits arrive over a per-note
WebSocket stream; recognition re-scans run after a debounce window and are
pushed to every connected session, as are shared pin changes. Plain HTTP
covers the read paths (patients, records, cards, autocomplete, events) and
pin mutations.

Environment: ``KNOWTED_DATA_DIR`` (patient fixtures, database, templates),
``KNOWTED_LEXICON`` (lexicon directory or compiled index file),
``KNOWTED_PORT`` (serve command).
"""

from __future__ import annotations

import asyncio
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, Header, HTTPException, Query, WebSocket
from fastapi.middleware.cors import CORSMiddleware
from fastapi.websockets import WebSocketDisconnect

from . import autocomplete as ac
from . import wire
from .cards import (
    CardOverride,
    UnsupportedConceptError,
    assemble_card,
    load_overrides,
)
from .negation import NegationRules, annotate, load_negation_rules
from .notes import (
    Chip,
    ChipImmutabilityError,
    Completion,
    Edit,
    Note,
    Section,
    StaleDropdownError,
    DEFAULT_TEMPLATES,
    accept_completion,
    apply_edit,
    autofill_section,
    chips_from_spans,
    new_note,
    replace_chips,
)
from .ontology import (
    ConceptType,
    LexiconError,
    Lexicon,
    _TYPE_ALIASES,
    load_index,
    load_lexicon,
    normalize,
)
from .recognizer import Automaton, build_automaton, default_stoplist, load_stoplist, scan
from .records import PatientRecord, in_record, ingest
from .sessions import PinError, SessionHub, UsageKind
from .storage import Store

DEFAULT_PORT = 8877


def packaged_lexicon_dir() -> Path:
    return Path(str(resources.files("knowted") / "data" / "lexicon"))


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    lexicon_path: Path
    debounce_ms: int = 200
    snapshot_period: int = 1
    port: int = DEFAULT_PORT

    @classmethod
    def from_env(cls, **overrides: Any) -> "ServiceConfig":
        data_dir = Path(os.environ.get("KNOWTED_DATA_DIR", "knowted-data"))
        lexicon = Path(os.environ.get("KNOWTED_LEXICON", str(packaged_lexicon_dir())))
        port = int(os.environ.get("KNOWTED_PORT", DEFAULT_PORT))
        config = cls(data_dir=data_dir, lexicon_path=lexicon, port=port)
        return replace(config, **overrides) if overrides else config


@dataclass
class _NoteHandle:
    note: Note
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    edit_seq: dict[Section, int] = field(default_factory=dict)
    queues: list[asyncio.Queue] = field(default_factory=list)


class Engine:
    """Service state and operations, independent of the HTTP framework."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.lexicon = self._load_lexicon(config.lexicon_path)
        stoplist_path = config.lexicon_path / "stoplist.txt"
        if config.lexicon_path.is_dir() and stoplist_path.exists():
            self.stoplist = load_stoplist(stoplist_path, self.lexicon)
        else:
            self.stoplist = default_stoplist(self.lexicon)
        self.automaton: Automaton = build_automaton(self.lexicon, self.stoplist)
        self.negation_rules = self._load_negation_rules(config.lexicon_path)
        self.scorer = self._load_scorer(config.lexicon_path)
        self.overrides: tuple[CardOverride, ...] = self._load_overrides(config.lexicon_path)
        self.templates = self._load_templates(config.data_dir)

        self.store = Store(
            config.data_dir / "knowted.db", snapshot_period=config.snapshot_period
        )
        self.hub = SessionHub(event_sink=self.store.append_event)
        self.records: dict[str, PatientRecord] = {}
        self._load_patients(config.data_dir / "patients")

        self.handles: dict[str, _NoteHandle] = {}
        for note_id in self.store.list_note_ids():
            note = self.store.load_note(note_id)
            if note is not None:
                self._register(note, restore_pins=True)

    # -- startup loading ----------------------------------------------------

    @staticmethod
    def _load_lexicon(path: Path) -> Lexicon:
        if path.is_file():
            return load_index(path)
        return load_lexicon(path)

    @staticmethod
    def _load_negation_rules(lexicon_path: Path) -> NegationRules:
        rules_path = lexicon_path / "negation_rules.tsv"
        if lexicon_path.is_dir() and rules_path.exists():
            return load_negation_rules(rules_path)
        return NegationRules()

    def _load_scorer(self, lexicon_path: Path) -> ac.RuleBasedScorer:
        cues_path = lexicon_path / "cue_phrases.tsv"
        if lexicon_path.is_dir() and cues_path.exists():
            return ac.RuleBasedScorer(
                lexicon=self.lexicon, cue_phrases=ac.load_cue_phrases(cues_path)
            )
        return ac.RuleBasedScorer(lexicon=self.lexicon)

    def _load_overrides(self, lexicon_path: Path) -> tuple[CardOverride, ...]:
        if lexicon_path.is_dir():
            return load_overrides(lexicon_path / "overrides.tsv", self.lexicon)
        return ()

    @staticmethod
    def _load_templates(data_dir: Path) -> dict[Section, str]:
        templates = dict(DEFAULT_TEMPLATES)
        template_dir = data_dir / "templates"
        if template_dir.is_dir():
            for section in Section:
                path = template_dir / f"{section.value}.txt"
                if path.exists():
                    templates[section] = path.read_text(encoding="utf-8")
        return templates

    def _load_patients(self, patients_dir: Path) -> None:
        if not patients_dir.is_dir():
            return
        for path in sorted(patients_dir.glob("*.json")):
            record = ingest(path, self.lexicon, self.automaton)
            self.records[record.patient_id] = record

    # -- note registry --------------------------------------------------------

    def _register(self, note: Note, restore_pins: bool = False) -> _NoteHandle:
        handle = _NoteHandle(note=note)
        self.handles[note.id] = handle
        if restore_pins:
            pins, version = self.store.load_pins(note.id)
            self.hub.set_pins(note.id, pins, version)
        self.hub.subscribe(note.id, self._make_pin_listener(note.id))
        return handle

    def _make_pin_listener(self, note_id: str):
        def on_pins(pins: tuple[str, ...], version: int) -> None:
            self.store.save_pins(note_id, pins, version)
            self.broadcast(
                note_id, {"type": "pins", "pins": list(pins), "pin_version": version}
            )

        return on_pins

    def create_note(self, patient_id: str) -> Note:
        if patient_id not in self.records:
            raise KeyError(f"unknown patient {patient_id!r}")
        number = len(self.store.list_note_ids()) + 1
        note_id = f"note-{number:04d}"
        while note_id in self.handles:
            number += 1
            note_id = f"note-{number:04d}"
        note = new_note(note_id, patient_id)
        self.store.save_note(note)
        self._register(note)
        return note

    def handle(self, note_id: str) -> _NoteHandle:
        try:
            return self.handles[note_id]
        except KeyError:
            raise KeyError(f"unknown note {note_id!r}") from None

    def record_for(self, note: Note) -> PatientRecord | None:
        return self.records.get(note.patient_id)

    def commit(self, handle: _NoteHandle, note: Note) -> None:
        handle.note = note
        self.store.save_note(note)

    # -- broadcasting -----------------------------------------------------------

    def broadcast(self, note_id: str, message: dict[str, Any]) -> None:
        handle = self.handles.get(note_id)
        if handle is None:
            return
        for queue in list(handle.queues):
            queue.put_nowait(message)

    # -- recognition -------------------------------------------------------------

    def rescan_section(self, handle: _NoteHandle, section: Section) -> bool:
        """Re-run recognition over one section; returns True when chips changed.

        Existing chips are masked (their text is immutable), but their
        negation and modifier annotations are recomputed against the
        current surrounding text.
        """
        note = handle.note
        doc = note.section(section)
        existing = doc.chips
        masked = [(chip.start, chip.end) for chip in existing]
        fresh = scan(self.automaton, doc.text, masked)
        combined = [chip.as_span() for chip in existing] + fresh
        annotated = annotate(doc.text, combined, self.lexicon, self.negation_rules)
        updated = tuple(
            replace(chip, negated=span.negated, modifiers=span.modifiers)
            for chip, span in zip(existing, annotated[: len(existing)])
        )
        record = self.record_for(note)
        new_chips = chips_from_spans(note, section, annotated[len(existing):], record)
        if updated == existing and not new_chips:
            return False
        self.commit(handle, replace_chips(note, section, [*updated, *new_chips]))
        return True

    def latest_recognition_card(self, handle: _NoteHandle, section: Section) -> str | None:
        """Concept of the most recent resolved, card-bearing chip in a section."""
        for chip in reversed(handle.note.section(section).chips):
            if chip.resolved is None:
                continue
            if self.lexicon.concept(chip.resolved).concept_type is ConceptType.SYMPTOM:
                continue
            return chip.resolved
        return None

    # -- autocomplete ----------------------------------------------------------

    def autocomplete(
        self, note: Note, section: Section, caret: int, filter_token: str | None
    ) -> dict[str, Any]:
        doc = note.section(section)
        caret = max(0, min(caret, len(doc.text)))
        before = doc.text[:caret]
        context = ac.caret_context(doc.text, caret)
        explicit_filter = _parse_filter_param(filter_token)
        active_filter = explicit_filter or context.filter
        trigger, prior = ac.should_trigger(self.scorer, before)
        if active_filter is not None:
            trigger = True
        record = self.record_for(note)
        suggestions: list[dict[str, Any]] = []
        if trigger:
            query = ac.AutocompleteQuery(
                text_before_caret=before,
                prefix=context.prefix,
                filter=active_filter,
                patient=note.patient_id,
            )
            for suggestion in ac.suggest(query, self.lexicon, record, prior):
                payload = wire.suggestion_to_dict(suggestion)
                concept = self.lexicon.concept(suggestion.concept)
                if (
                    record is not None
                    and concept.concept_type
                    in (ConceptType.LAB, ConceptType.VITAL_SIGN)
                ):
                    tree = ac.lab_tree(suggestion.concept, record, self.lexicon)
                    if tree.frames:
                        payload["tree"] = wire.lab_tree_to_dict(tree)
                suggestions.append(payload)
        return {
            "v": wire.WIRE_VERSION,
            "trigger": trigger,
            "filter": active_filter.value if active_filter else None,
            "prefix": context.prefix,
            "replace_start": context.replace_start,
            "caret": caret,
            "version": note.version,
            "suggestions": suggestions,
        }

    def build_completion(
        self, note: Note, section: Section, message: dict[str, Any]
    ) -> tuple[Completion, bool]:
        """Turn an accept message into a Completion plus its in-record flag."""
        concept_id = message["concept"]
        concept = self.lexicon.concept(concept_id)
        doc = note.section(section)
        caret = int(message.get("caret", len(doc.text)))
        context = ac.caret_context(doc.text, caret)
        record = self.record_for(note)
        present = record is not None and in_record(record, concept_id)
        frame = message.get("frame")
        stat = message.get("stat")
        if frame is not None or stat is not None:
            if record is None:
                raise UnsupportedConceptError("no patient record for lab insertion")
            tree = ac.lab_tree(concept_id, record, self.lexicon)
            text = ac.format_lab_insertion(ac.LabSelection(tree=tree, frame=frame, stat=stat))
            chip_length = len(tree.label)
        else:
            text = concept.canonical_name
            chip_length = len(text)
        return (
            Completion(
                replace_start=context.replace_start,
                replace_end=caret,
                insert_text=text,
                concept=concept_id,
                chip_length=chip_length,
            ),
            present,
        )

    def assemble(self, concept_id: str, patient_id: str):
        record = self.records.get(patient_id)
        if record is None:
            raise KeyError(f"unknown patient {patient_id!r}")
        return assemble_card(
            concept_id, record, self.lexicon, self.automaton, self.overrides
        )


def _parse_filter_param(token: str | None) -> ConceptType | None:
    if not token:
        return None
    if token.startswith("/"):
        recognized, concept_type = ac.parse_slash_filter(token)
        if not recognized:
            raise HTTPException(status_code=422, detail=f"unknown slash filter {token!r}")
        return concept_type
    concept_type = _TYPE_ALIASES.get(token.strip().casefold())
    if concept_type is None:
        raise HTTPException(status_code=422, detail=f"unknown concept type {token!r}")
    return concept_type


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    engine = Engine(config)
    app = FastAPI(title="knowted", version="0.1.0")
    app.state.engine = engine
    # Browser editors are served separately from the API.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def require_note(note_id: str) -> _NoteHandle:
        try:
            return engine.handle(note_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown note {note_id!r}")

    def require_section(name: str) -> Section:
        try:
            return Section(name)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"unknown section {name!r}")

    @app.get("/patients/{patient_id}")
    def get_patient(patient_id: str) -> dict[str, Any]:
        record = engine.records.get(patient_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown patient {patient_id!r}")
        return {
            "v": wire.WIRE_VERSION,
            "patient_id": record.patient_id,
            "labs": len(record.labs),
            "notes": len(record.notes),
            "entries": len(record.entries),
        }

    @app.get("/patients/{patient_id}/record")
    def get_patient_record(patient_id: str) -> dict[str, Any]:
        record = engine.records.get(patient_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown patient {patient_id!r}")
        return wire.record_to_dict(record)

    @app.post("/notes", status_code=201)
    def create_note(body: dict[str, Any] = Body(...)) -> dict[str, Any]:
        patient_id = body.get("patient_id")
        if not patient_id:
            raise HTTPException(status_code=422, detail="patient_id required")
        try:
            note = engine.create_note(patient_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown patient {patient_id!r}")
        return wire.note_to_dict(note)

    @app.get("/notes/{note_id}")
    def get_note(note_id: str) -> dict[str, Any]:
        return wire.note_to_dict(require_note(note_id).note)

    @app.get("/concepts")
    def get_concepts(ids: str = Query(...)) -> dict[str, Any]:
        """Batch concept metadata for chip styling and disambiguation menus.

        Unknown ids are omitted rather than erroring so one bad chip does
        not blank a whole section.
        """
        out: dict[str, Any] = {}
        for concept_id in ids.split(","):
            concept_id = concept_id.strip()
            if not concept_id or concept_id not in engine.lexicon.concepts:
                continue
            concept = engine.lexicon.concept(concept_id)
            out[concept_id] = {
                "type": concept.concept_type.value,
                "canonical": concept.canonical_name,
                "detail": concept.detail,
            }
        return {"v": wire.WIRE_VERSION, "concepts": out}

    @app.get("/lookup")
    def lookup_concepts(
        q: str = Query(...), limit: int = Query(8, ge=1, le=50)
    ) -> dict[str, Any]:
        """Resolve free search text to ranked concept candidates.

        Backs the sidebar search box: exact surface forms rank above
        canonical-name prefixes, which rank above synonym prefixes.
        """
        prefix = q.strip()
        if not prefix:
            return {"v": wire.WIRE_VERSION, "matches": []}
        hits = ac.candidate_concepts(engine.lexicon, prefix)
        norm = normalize(prefix)
        ranked = sorted(
            hits.items(),
            key=lambda item: (
                -ac.match_quality(engine.lexicon, item[0], norm, item[1]),
                engine.lexicon.concepts[item[0]].canonical_name.lower(),
            ),
        )
        matches = []
        for concept_id, _exact in ranked[:limit]:
            concept = engine.lexicon.concept(concept_id)
            matches.append(
                {
                    "concept": concept_id,
                    "display": concept.canonical_name,
                    "detail": concept.detail,
                    "type": concept.concept_type.value,
                }
            )
        return {"v": wire.WIRE_VERSION, "matches": matches}

    @app.get("/autocomplete")
    def get_autocomplete(
        note: str = Query(...),
        section: str = Query(...),
        caret: int = Query(...),
        prefix: str = Query(""),
        filter: str | None = Query(None),
    ) -> dict[str, Any]:
        handle = require_note(note)
        return engine.autocomplete(handle.note, require_section(section), caret, filter)

    @app.get("/cards/{concept_id}")
    def get_card(
        concept_id: str,
        patient: str = Query(...),
        via: str | None = Query(None),
        note: str | None = Query(None),
        x_user: str = Header("anonymous"),
    ) -> dict[str, Any]:
        if concept_id not in engine.lexicon.concepts:
            raise HTTPException(status_code=404, detail=f"unknown concept {concept_id!r}")
        try:
            card = engine.assemble(concept_id, patient)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown patient {patient!r}")
        except UnsupportedConceptError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        if via and note:
            require_note(note)
            if via == "hover":
                engine.hub.hover_card(note, x_user, concept_id)
            else:
                try:
                    engine.hub.surface_card(note, x_user, via, concept_id)
                except ValueError as exc:
                    raise HTTPException(status_code=422, detail=str(exc))
        return wire.card_to_dict(card)

    @app.post("/notes/{note_id}/pins")
    def pin_card(
        note_id: str,
        body: dict[str, Any] = Body(...),
        x_user: str = Header("anonymous"),
    ) -> dict[str, Any]:
        handle = require_note(note_id)
        concept_id = body.get("concept")
        if not concept_id or concept_id not in engine.lexicon.concepts:
            raise HTTPException(status_code=422, detail=f"unknown concept {concept_id!r}")
        concept = engine.lexicon.concept(concept_id)
        if concept.concept_type is ConceptType.SYMPTOM:
            raise HTTPException(status_code=422, detail="symptom concepts have no cards")
        state = engine.hub.pin(note_id, x_user, concept_id)
        return wire.sidebar_to_dict(state)

    @app.delete("/notes/{note_id}/pins/{concept_id}")
    def unpin_card(
        note_id: str, concept_id: str, x_user: str = Header("anonymous")
    ) -> dict[str, Any]:
        require_note(note_id)
        try:
            state = engine.hub.unpin(note_id, x_user, concept_id)
        except PinError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return wire.sidebar_to_dict(state)

    @app.get("/notes/{note_id}/events")
    def get_events(note_id: str) -> dict[str, Any]:
        require_note(note_id)
        events = engine.store.events(note_id)
        return {
            "v": wire.WIRE_VERSION,
            "events": [wire.event_to_dict(e) for e in events],
        }

    @app.websocket("/notes/{note_id}/stream")
    async def note_stream(websocket: WebSocket, note_id: str, user: str = "anonymous"):
        try:
            handle = engine.handle(note_id)
        except KeyError:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue()
        handle.queues.append(queue)

        async def sender() -> None:
            while True:
                message = await queue.get()
                await websocket.send_json(message)

        sender_task = asyncio.create_task(sender())
        await websocket.send_json(
            {
                "type": "hello",
                "note": wire.note_to_dict(handle.note),
                "sidebar": wire.sidebar_to_dict(engine.hub.sidebar(note_id, user)),
            }
        )
        try:
            while True:
                message = await websocket.receive_json()
                await _handle_stream_message(engine, handle, websocket, user, message)
        except WebSocketDisconnect:
            pass
        finally:
            sender_task.cancel()
            if queue in handle.queues:
                handle.queues.remove(queue)

    return app


async def _handle_stream_message(
    engine: Engine,
    handle: _NoteHandle,
    websocket: WebSocket,
    user: str,
    message: dict[str, Any],
) -> None:
    kind = message.get("type")
    note_id = handle.note.id

    async def send_error(code: str, detail: str) -> None:
        await websocket.send_json({"type": "error", "code": code, "message": detail})

    if kind == "ping":
        await websocket.send_json({"type": "pong"})
        return

    if kind == "edit":
        try:
            section = Section(message["section"])
            edit = Edit(
                offset=int(message["offset"]),
                delete=int(message.get("delete", 0)),
                insert=str(message.get("insert", "")),
            )
        except (KeyError, ValueError) as exc:
            await send_error("bad-edit", str(exc))
            return
        async with handle.lock:
            try:
                updated = apply_edit(handle.note, section, edit)
            except ChipImmutabilityError as exc:
                await send_error("chip-immutable", str(exc))
                return
            except ValueError as exc:
                await send_error("bad-edit", str(exc))
                return
            engine.commit(handle, updated)
        engine.broadcast(note_id, {"type": "note", "note": wire.note_to_dict(handle.note)})
        _schedule_rescan(engine, handle, section, user)
        return

    if kind == "caret":
        try:
            section = Section(message["section"])
            caret = int(message["caret"])
        except (KeyError, ValueError) as exc:
            await send_error("bad-caret", str(exc))
            return
        payload = engine.autocomplete(handle.note, section, caret, message.get("filter"))
        payload["type"] = "autocomplete"
        await websocket.send_json(payload)
        return

    if kind == "accept":
        try:
            section = Section(message["section"])
            expected_version = int(message["version"])
            completion, present = engine.build_completion(handle.note, section, message)
        except (KeyError, ValueError, LexiconError) as exc:
            await send_error("bad-accept", str(exc))
            return
        async with handle.lock:
            try:
                updated, chip = accept_completion(
                    handle.note, section, completion, expected_version, present
                )
            except StaleDropdownError as exc:
                await send_error("stale-dropdown", str(exc))
                return
            except ChipImmutabilityError as exc:
                await send_error("chip-immutable", str(exc))
                return
            engine.commit(handle, updated)
        engine.hub.log_event(user, UsageKind.AUTOCOMPLETE_INSERT, note_id, completion.concept)
        engine.broadcast(note_id, {"type": "note", "note": wire.note_to_dict(handle.note)})
        concept_type = engine.lexicon.concept(completion.concept).concept_type
        if concept_type is not ConceptType.SYMPTOM:
            await _push_preview(engine, handle, websocket, user, completion.concept)
        _schedule_rescan(engine, handle, section, user)
        return

    if kind == "disambiguate":
        try:
            section = Section(message["section"])
            chip_id = message["chip_id"]
            choice = message["choice"]
        except KeyError as exc:
            await send_error("bad-disambiguate", f"missing field {exc}")
            return
        async with handle.lock:
            doc = handle.note.section(section)
            target = next((c for c in doc.chips if c.id == chip_id), None)
            if target is None:
                await send_error("unknown-chip", f"no chip {chip_id!r} in {section.value}")
                return
            if choice not in target.candidates:
                await send_error(
                    "bad-choice", f"{choice!r} is not a candidate of chip {chip_id!r}"
                )
                return
            chips = [
                replace(c, resolved=choice) if c.id == chip_id else c for c in doc.chips
            ]
            engine.commit(handle, replace_chips(handle.note, section, chips))
        engine.hub.log_event(
            user, UsageKind.POST_RECOGNITION_DISAMBIGUATE, note_id, choice
        )
        engine.broadcast(note_id, {"type": "note", "note": wire.note_to_dict(handle.note)})
        return

    if kind == "autofill":
        try:
            section = Section(message["section"])
        except (KeyError, ValueError) as exc:
            await send_error("bad-autofill", str(exc))
            return
        async with handle.lock:
            result = autofill_section(
                handle.note, section, engine.lexicon, engine.templates
            )
            if result.applied:
                engine.commit(handle, result.note)
        await websocket.send_json(
            {"type": "autofill", "applied": result.applied, "reason": result.reason}
        )
        if result.applied:
            engine.broadcast(
                note_id, {"type": "note", "note": wire.note_to_dict(handle.note)}
            )
            _schedule_rescan(engine, handle, section, user)
        return

    if kind == "surface":
        concept_id = message.get("concept")
        via = message.get("via", "search")
        if not concept_id or concept_id not in engine.lexicon.concepts:
            await send_error("unknown-concept", f"unknown concept {concept_id!r}")
            return
        if engine.lexicon.concept(concept_id).concept_type is ConceptType.SYMPTOM:
            await send_error("no-card", "symptom concepts have no cards")
            return
        try:
            state = engine.hub.surface_card(note_id, user, via, concept_id)
        except ValueError as exc:
            await send_error("bad-surface", str(exc))
            return
        card = engine.assemble(concept_id, handle.note.patient_id)
        await websocket.send_json(
            {
                "type": "preview",
                "card": wire.card_to_dict(card),
                "sidebar": wire.sidebar_to_dict(state),
            }
        )
        return

    if kind == "hover":
        concept_id = message.get("concept")
        if not concept_id or concept_id not in engine.lexicon.concepts:
            await send_error("unknown-concept", f"unknown concept {concept_id!r}")
            return
        try:
            card = engine.assemble(concept_id, handle.note.patient_id)
        except UnsupportedConceptError as exc:
            await send_error("no-card", str(exc))
            return
        engine.hub.hover_card(note_id, user, concept_id)
        await websocket.send_json({"type": "hover-card", "card": wire.card_to_dict(card)})
        return

    if kind == "navigate":
        direction = message.get("direction", "back")
        try:
            state = engine.hub.navigate(note_id, user, direction)
        except ValueError as exc:
            await send_error("bad-navigate", str(exc))
            return
        payload: dict[str, Any] = {
            "type": "sidebar",
            "sidebar": wire.sidebar_to_dict(state),
        }
        if state.preview is not None:
            card = engine.assemble(state.preview, handle.note.patient_id)
            payload["card"] = wire.card_to_dict(card)
        await websocket.send_json(payload)
        return

    await send_error("unknown-message", f"unrecognized message type {kind!r}")


async def _push_preview(
    engine: Engine,
    handle: _NoteHandle,
    websocket: WebSocket,
    user: str,
    concept_id: str,
    via: str | None = None,
) -> None:
    """Update this user's preview pane to a concept's card and send it."""
    note_id = handle.note.id
    if via is not None:
        state = engine.hub.surface_card(note_id, user, via, concept_id)
    else:
        state = engine.hub.push_preview(note_id, user, concept_id)
    card = engine.assemble(concept_id, handle.note.patient_id)
    await websocket.send_json(
        {
            "type": "preview",
            "card": wire.card_to_dict(card),
            "sidebar": wire.sidebar_to_dict(state),
        }
    )


def _schedule_rescan(
    engine: Engine, handle: _NoteHandle, section: Section, user: str
) -> None:
    """Queue a debounced recognition pass for one section."""
    seq = handle.edit_seq.get(section, 0) + 1
    handle.edit_seq[section] = seq

    async def debounced() -> None:
        await asyncio.sleep(engine.config.debounce_ms / 1000)
        if handle.edit_seq.get(section) != seq:
            return  # superseded by a newer edit
        async with handle.lock:
            if handle.edit_seq.get(section) != seq:
                return
            changed = engine.rescan_section(handle, section)
        if not changed:
            return
        note_id = handle.note.id
        doc = handle.note.section(section)
        engine.broadcast(
            note_id,
            {
                "type": "recognitions",
                "section": section.value,
                "version": handle.note.version,
                "chips": [wire.chip_to_dict(chip) for chip in doc.chips],
            },
        )
        concept_id = engine.latest_recognition_card(handle, section)
        if concept_id is not None:
            state = engine.hub.surface_card(note_id, user, "auto-recognition", concept_id)
            card = engine.assemble(concept_id, handle.note.patient_id)
            engine.broadcast(
                note_id,
                {
                    "type": "preview",
                    "user": user,
                    "card": wire.card_to_dict(card),
                    "sidebar": wire.sidebar_to_dict(state),
                },
            )

    asyncio.get_running_loop().create_task(debounced())
