"""HTTP and WebSocket service: endpoints, live note streams, persistence."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from starlette.websockets import WebSocketDisconnect

import regen_wire_goldens as goldens

DATA_DIR = Path(__file__).parent / "data" / "wire"


def create_note(client, patient="p001") -> dict:
    response = client.post("/notes", json={"patient_id": patient})
    assert response.status_code == 201
    return response.json()


def read_until(ws, wanted: str, limit: int = 30) -> tuple[dict, list[str]]:
    """Read stream messages until one of the wanted type arrives."""
    seen: list[str] = []
    for _ in range(limit):
        message = ws.receive_json()
        if message["type"] == wanted:
            return message, seen
        seen.append(message["type"])
    raise AssertionError(f"no {wanted!r} message, saw {seen}")


def collect(ws, wanted: set[str], limit: int = 30) -> dict[str, dict]:
    """Read until one message of every wanted type has arrived, in any order."""
    got: dict[str, dict] = {}
    order: list[str] = []
    for _ in range(limit):
        message = ws.receive_json()
        kind = message["type"]
        order.append(kind)
        if kind in wanted and kind not in got:
            got[kind] = message
        if set(got) == wanted:
            return got
    raise AssertionError(f"missing {wanted - set(got)}, saw {order}")


def counts_from_events(payload) -> dict[tuple[str, str], int]:
    totals: dict[tuple[str, str], int] = {}
    for event in payload["events"]:
        key = (event["user"], event["kind"])
        totals[key] = totals.get(key, 0) + 1
    return totals


class TestPatientEndpoints:
    def test_patient_summary(self, make_service):
        client = make_service()
        data = client.get("/patients/p001").json()
        assert data == {
            "v": 1,
            "patient_id": "p001",
            "labs": 4,
            "notes": 1,
            "entries": 3,
        }

    def test_unknown_patient(self, make_service):
        assert make_service().get("/patients/p999").status_code == 404

    def test_record_payload_matches_golden(self, make_service):
        client = make_service()
        golden = json.loads((DATA_DIR / "record.json").read_text())
        assert client.get("/patients/p001/record").json() == golden


class TestConceptLookup:
    def test_batch_metadata(self, make_service):
        client = make_service()
        data = client.get("/concepts?ids=cond-chf,lab-potassium").json()
        assert data["v"] == 1
        assert data["concepts"]["cond-chf"]["type"] == "condition"
        assert data["concepts"]["cond-chf"]["canonical"] == "Congestive Heart Failure"
        assert data["concepts"]["lab-potassium"]["type"] == "lab"
        assert "ref 3.5 - 5.2" in data["concepts"]["lab-potassium"]["detail"]

    def test_unknown_ids_are_omitted(self, make_service):
        client = make_service()
        data = client.get("/concepts?ids=cond-chf,not-a-thing,%20").json()
        assert sorted(data["concepts"]) == ["cond-chf"]

    def test_ids_required(self, make_service):
        assert make_service().get("/concepts").status_code == 422


class TestLookup:
    def test_exact_form_ranks_first(self, make_service):
        client = make_service()
        data = client.get("/lookup?q=potassium").json()
        assert data["v"] == 1
        ids = [m["concept"] for m in data["matches"]]
        assert ids[0] == "lab-potassium"
        assert "med-kcl" in ids

    def test_synonym_forms_collapse_to_one_concept(self, make_service):
        client = make_service()
        matches = client.get("/lookup?q=oxycodone").json()["matches"]
        assert [m["concept"] for m in matches] == ["med-oxycodone"]
        assert matches[0]["type"] == "medication"
        assert matches[0]["display"] == "Oxycodone"

    def test_ambiguous_abbreviation_lists_exact_candidates_first(self, make_service):
        client = make_service()
        ids = [m["concept"] for m in client.get("/lookup?q=pt").json()["matches"]]
        # Three concepts share the exact form "pt"; prefix matches follow.
        assert set(ids[:3]) == {"lab-pt", "cond-pt", "proc-physical-therapy"}
        assert "lab-ptt" in ids[3:]

    def test_no_match_is_empty(self, make_service):
        client = make_service()
        assert client.get("/lookup?q=zzzxq").json()["matches"] == []
        assert client.get("/lookup?q=%20").json()["matches"] == []

    def test_limit_caps_results(self, make_service):
        client = make_service()
        matches = client.get("/lookup?q=potassium&limit=2").json()["matches"]
        assert len(matches) == 2
        assert matches[0]["concept"] == "lab-potassium"


class TestCors:
    def test_preflight_allows_browser_clients(self, make_service):
        client = make_service()
        response = client.options(
            "/notes",
            headers={
                "origin": "http://localhost:5173",
                "access-control-request-method": "POST",
                "access-control-request-headers": "content-type,x-user",
            },
        )
        assert response.status_code == 200
        assert response.headers["access-control-allow-origin"] == "*"


class TestNoteEndpoints:
    def test_create_and_fetch(self, make_service):
        client = make_service()
        created = create_note(client)
        assert created["id"] == "note-0001"
        assert created["version"] == 0
        assert created["patient_id"] == "p001"
        assert client.get("/notes/note-0001").json() == created

    def test_sequential_ids(self, make_service):
        client = make_service()
        assert create_note(client)["id"] == "note-0001"
        assert create_note(client, "p002")["id"] == "note-0002"

    def test_create_validations(self, make_service):
        client = make_service()
        assert client.post("/notes", json={}).status_code == 422
        assert client.post("/notes", json={"patient_id": "p999"}).status_code == 404

    def test_unknown_note(self, make_service):
        assert make_service().get("/notes/ghost").status_code == 404


class TestAutocompleteEndpoint:
    def seeded_note(self, client, text):
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": text}
            )
            read_until(ws, "note")
        return note["id"]

    def test_cue_phrase_prioritizes_medications(self, make_service):
        client = make_service()
        note_id = self.seeded_note(client, "started on pota")
        data = client.get(
            "/autocomplete",
            params={"note": note_id, "section": "HPI", "caret": 15},
        ).json()
        assert data["trigger"] is True
        assert data["prefix"] == "pota"
        assert data["replace_start"] == 11
        assert data["suggestions"][0]["concept"] == "med-kcl"
        potassium = next(
            s for s in data["suggestions"] if s["concept"] == "lab-potassium"
        )
        assert potassium["in_record"] is True
        assert potassium["tree"]["frames"], "lab suggestion carries its value tree"

    def test_no_trigger_on_neutral_text(self, make_service):
        client = make_service()
        note_id = self.seeded_note(client, "he")
        data = client.get(
            "/autocomplete",
            params={"note": note_id, "section": "HPI", "caret": 2},
        ).json()
        assert data["trigger"] is False
        assert data["suggestions"] == []

    def test_slash_filter_forces_trigger(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        data = client.get(
            "/autocomplete",
            params={"note": note_id, "section": "HPI", "caret": 0, "filter": "/l"},
        ).json()
        assert data["trigger"] is True
        assert data["filter"] == "lab"
        assert 0 < len(data["suggestions"]) <= 10
        assert all(s["concept"].startswith("lab-") for s in data["suggestions"])

    def test_type_alias_filter(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        data = client.get(
            "/autocomplete",
            params={"note": note_id, "section": "HPI", "caret": 0, "filter": "lab"},
        ).json()
        assert data["filter"] == "lab"

    def test_unknown_filter_rejected(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        for bad in ("/z", "weird"):
            response = client.get(
                "/autocomplete",
                params={"note": note_id, "section": "HPI", "caret": 0, "filter": bad},
            )
            assert response.status_code == 422

    def test_caret_clamped(self, make_service):
        client = make_service()
        note_id = self.seeded_note(client, "short")
        data = client.get(
            "/autocomplete",
            params={"note": note_id, "section": "HPI", "caret": 999},
        ).json()
        assert data["caret"] == 5

    def test_unknown_section_rejected(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        response = client.get(
            "/autocomplete",
            params={"note": note_id, "section": "Plan", "caret": 0},
        )
        assert response.status_code == 422


class TestCardEndpoint:
    def test_card_matches_golden(self, make_service):
        client = make_service()
        golden = json.loads((DATA_DIR / "card.json").read_text())
        data = client.get("/cards/cond-chf", params={"patient": "p001"}).json()
        assert data == golden

    def test_card_without_record_content_is_bare(self, make_service):
        client = make_service()
        data = client.get("/cards/lab-potassium", params={"patient": "p002"}).json()
        assert data["body"] == []

    def test_symptom_card_unsupported(self, make_service):
        client = make_service()
        response = client.get("/cards/sym-fever", params={"patient": "p001"})
        assert response.status_code == 422

    def test_unknowns(self, make_service):
        client = make_service()
        assert client.get("/cards/nope", params={"patient": "p001"}).status_code == 404
        assert (
            client.get("/cards/cond-chf", params={"patient": "p999"}).status_code == 404
        )

    def test_via_logs_surfacing_event(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        client.get(
            "/cards/cond-chf",
            params={"patient": "p001", "via": "search", "note": note_id},
            headers={"X-User": "dr-a"},
        )
        client.get(
            "/cards/cond-chf",
            params={"patient": "p001", "via": "hover", "note": note_id},
            headers={"X-User": "dr-a"},
        )
        events = client.get(f"/notes/{note_id}/events").json()
        assert counts_from_events(events) == {
            ("dr-a", "card-via-search"): 1,
            ("dr-a", "hover-preview"): 1,
        }

    def test_unknown_via_rejected(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        response = client.get(
            "/cards/cond-chf",
            params={"patient": "p001", "via": "telepathy", "note": note_id},
        )
        assert response.status_code == 422


class TestPinEndpoints:
    def test_pin_unpin_cycle(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        state = client.post(
            f"/notes/{note_id}/pins",
            json={"concept": "cond-chf"},
            headers={"X-User": "dr-a"},
        ).json()
        assert state["pins"] == ["cond-chf"]
        assert state["pin_version"] == 1

        repeat = client.post(
            f"/notes/{note_id}/pins",
            json={"concept": "cond-chf"},
            headers={"X-User": "dr-b"},
        ).json()
        assert repeat["pin_version"] == 1  # duplicate pin is a no-op

        gone = client.delete(
            f"/notes/{note_id}/pins/cond-chf", headers={"X-User": "dr-b"}
        ).json()
        assert gone["pins"] == []
        assert gone["pin_version"] == 2

        events = client.get(f"/notes/{note_id}/events").json()
        assert counts_from_events(events) == {
            ("dr-a", "pin"): 1,
            ("dr-b", "unpin"): 1,
        }

    def test_pin_validations(self, make_service):
        client = make_service()
        note_id = create_note(client)["id"]
        assert (
            client.post(f"/notes/{note_id}/pins", json={"concept": "sym-fever"}).status_code
            == 422
        )
        assert (
            client.post(f"/notes/{note_id}/pins", json={"concept": "nope"}).status_code
            == 422
        )
        assert client.delete(f"/notes/{note_id}/pins/cond-chf").status_code == 404


class TestNoteStream:
    def test_hello_and_ping(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            hello, _ = read_until(ws, "hello")
            assert hello["note"] == note
            assert hello["sidebar"]["pins"] == []
            ws.send_json({"type": "ping"})
            read_until(ws, "pong")

    def test_unknown_note_closes_4404(self, make_service):
        client = make_service()
        with pytest.raises(WebSocketDisconnect) as excinfo:
            with client.websocket_connect("/notes/ghost/stream"):
                pass
        assert excinfo.value.code == 4404

    def test_edit_broadcasts_note(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "hello"}
            )
            message, _ = read_until(ws, "note")
            assert message["note"]["sections"]["HPI"]["text"] == "hello"
            assert message["note"]["version"] == 1

    def test_bad_edit_reports_error(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 99, "insert": "x"}
            )
            message, _ = read_until(ws, "error")
            assert message["code"] == "bad-edit"

    def test_recognition_pass_pushes_chips_and_preview(self, make_service):
        client = make_service()
        note = create_note(client)
        url = f"/notes/{note['id']}/stream?user=dr-a"
        with client.websocket_connect(url) as ws:
            read_until(ws, "hello")
            ws.send_json(
                {
                    "type": "edit",
                    "section": "HPI",
                    "offset": 0,
                    "insert": "Denies fever. CHF stable on furosemide.",
                }
            )
            read_until(ws, "note")
            recognized, _ = read_until(ws, "recognitions")
            chips = recognized["chips"]
            assert [c["resolved"] for c in chips] == [
                "sym-fever",
                "cond-chf",
                "med-furosemide",
            ]
            assert chips[0]["negated"] is True
            assert chips[1]["negated"] is False

            preview, _ = read_until(ws, "preview")
            assert preview["card"]["concept"] == "med-furosemide"
            assert preview["sidebar"]["preview"] == "med-furosemide"

        events = client.get(f"/notes/{note['id']}/events").json()
        assert counts_from_events(events)[("dr-a", "card-via-post-recognition")] == 1

    def test_caret_message_returns_autocomplete(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "started on pota"}
            )
            read_until(ws, "note")
            ws.send_json({"type": "caret", "section": "HPI", "caret": 15})
            message, _ = read_until(ws, "autocomplete")
            assert message["trigger"] is True
            assert message["suggestions"][0]["concept"] == "med-kcl"


class TestAcceptOverStream:
    def test_accept_inserts_canonical_with_chip(self, make_service):
        client = make_service()
        note = create_note(client)
        url = f"/notes/{note['id']}/stream?user=dr-a"
        with client.websocket_connect(url) as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "Plan: start pota"}
            )
            edited, _ = read_until(ws, "note")
            ws.send_json(
                {
                    "type": "accept",
                    "section": "HPI",
                    "version": edited["note"]["version"],
                    "concept": "med-kcl",
                    "caret": 16,
                }
            )
            messages = collect(ws, {"note", "preview"})
            doc = messages["note"]["note"]["sections"]["HPI"]
            assert doc["text"] == "Plan: start Potassium Chloride"
            (chip,) = doc["chips"]
            assert (chip["start"], chip["end"]) == (12, 30)
            assert chip["origin"] == "autocompleted"
            assert chip["resolved"] == "med-kcl"
            assert messages["preview"]["card"]["concept"] == "med-kcl"

        events = client.get(f"/notes/{note['id']}/events").json()
        assert counts_from_events(events)[("dr-a", "autocomplete-insert")] == 1

    def test_lab_aggregate_insertion_is_bit_exact(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "pota"}
            )
            edited, _ = read_until(ws, "note")
            ws.send_json(
                {
                    "type": "accept",
                    "section": "HPI",
                    "version": edited["note"]["version"],
                    "concept": "lab-potassium",
                    "frame": "1 month",
                }
            )
            accepted, _ = read_until(ws, "note")
            doc = accepted["note"]["sections"]["HPI"]
            assert doc["text"] == "Potassium (4.10 - 5.30) 4.70"
            (chip,) = doc["chips"]
            assert doc["text"][chip["start"] : chip["end"]] == "Potassium"

    def test_lab_stat_insertion(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "pota"}
            )
            edited, _ = read_until(ws, "note")
            ws.send_json(
                {
                    "type": "accept",
                    "section": "HPI",
                    "version": edited["note"]["version"],
                    "concept": "lab-potassium",
                    "frame": "1 month",
                    "stat": "last",
                }
            )
            accepted, _ = read_until(ws, "note")
            assert (
                accepted["note"]["sections"]["HPI"]["text"] == "Potassium last 4.1"
            )

    def test_stale_version_rejected(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "pota"}
            )
            read_until(ws, "note")
            ws.send_json(
                {
                    "type": "accept",
                    "section": "HPI",
                    "version": 0,
                    "concept": "lab-potassium",
                }
            )
            message, _ = read_until(ws, "error")
            assert message["code"] == "stale-dropdown"

    def test_edit_into_chip_rejected(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "pota"}
            )
            edited, _ = read_until(ws, "note")
            ws.send_json(
                {
                    "type": "accept",
                    "section": "HPI",
                    "version": edited["note"]["version"],
                    "concept": "lab-potassium",
                }
            )
            accepted, _ = read_until(ws, "note")
            version = accepted["note"]["version"]
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 4, "insert": "x"}
            )
            message, _ = read_until(ws, "error")
            assert message["code"] == "chip-immutable"
        after = client.get(f"/notes/{note['id']}").json()
        assert after["version"] == version
        assert after["sections"]["HPI"]["text"] == "Potassium"


class TestDisambiguationOverStream:
    def test_choice_resolves_chip(self, make_service):
        client = make_service()
        note = create_note(client)
        url = f"/notes/{note['id']}/stream?user=dr-a"
        with client.websocket_connect(url) as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "pt follow up"}
            )
            read_until(ws, "note")
            recognized, _ = read_until(ws, "recognitions")
            (chip,) = recognized["chips"]
            assert chip["resolved"] is None
            assert chip["candidates"] == ["cond-pt", "lab-pt", "proc-physical-therapy"]

            ws.send_json(
                {
                    "type": "disambiguate",
                    "section": "HPI",
                    "chip_id": chip["id"],
                    "choice": "lab-pt",
                }
            )
            resolved, _ = read_until(ws, "note")
            assert resolved["note"]["sections"]["HPI"]["chips"][0]["resolved"] == "lab-pt"

            ws.send_json(
                {
                    "type": "disambiguate",
                    "section": "HPI",
                    "chip_id": "nope",
                    "choice": "lab-pt",
                }
            )
            assert read_until(ws, "error")[0]["code"] == "unknown-chip"

            ws.send_json(
                {
                    "type": "disambiguate",
                    "section": "HPI",
                    "chip_id": chip["id"],
                    "choice": "cond-chf",
                }
            )
            assert read_until(ws, "error")[0]["code"] == "bad-choice"

        events = client.get(f"/notes/{note['id']}/events").json()
        assert counts_from_events(events)[
            ("dr-a", "post-recognition-disambiguate")
        ] == 1


class TestAutofillOverStream:
    def test_ros_autofill_round_trip(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json({"type": "autofill", "section": "ROS"})
            result, _ = read_until(ws, "autofill")
            assert result["applied"] is True
            message, _ = read_until(ws, "note")
            lines = message["note"]["sections"]["ROS"]["text"].splitlines()
            assert len(lines) == 10
            assert all(line.endswith(": negative") for line in lines)

            ws.send_json({"type": "autofill", "section": "ROS"})
            second, _ = read_until(ws, "autofill")
            assert second["applied"] is False
            assert second["reason"] == "section not empty"

    def test_physical_exam_template(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json({"type": "autofill", "section": "PhysicalExam"})
            result, _ = read_until(ws, "autofill")
            assert result["applied"] is True
            message, _ = read_until(ws, "note")
            assert message["note"]["sections"]["PhysicalExam"]["text"]

    def test_section_without_template(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json({"type": "autofill", "section": "MDM"})
            result, _ = read_until(ws, "autofill")
            assert result == {"type": "autofill", "applied": False, "reason": "no template"}


class TestSidebarOverStream:
    def test_surface_hover_navigate(self, make_service):
        client = make_service()
        note = create_note(client)
        golden_card = json.loads((DATA_DIR / "card.json").read_text())
        with client.websocket_connect(f"/notes/{note['id']}/stream?user=dr-a") as ws:
            read_until(ws, "hello")
            ws.send_json({"type": "surface", "concept": "cond-chf", "via": "search"})
            preview, _ = read_until(ws, "preview")
            assert preview["card"] == golden_card
            assert preview["sidebar"]["preview"] == "cond-chf"

            ws.send_json({"type": "surface", "concept": "med-furosemide", "via": "chip-click"})
            second, _ = read_until(ws, "preview")
            assert second["sidebar"]["can_back"] is True

            ws.send_json({"type": "hover", "concept": "lab-potassium"})
            hover, _ = read_until(ws, "hover-card")
            assert hover["card"]["concept"] == "lab-potassium"

            ws.send_json({"type": "navigate", "direction": "back"})
            sidebar, _ = read_until(ws, "sidebar")
            assert sidebar["sidebar"]["preview"] == "cond-chf"
            assert sidebar["card"]["concept"] == "cond-chf"

        events = client.get(f"/notes/{note['id']}/events").json()
        assert counts_from_events(events) == {
            ("dr-a", "card-via-search"): 1,
            ("dr-a", "card-via-chip-click"): 1,
            ("dr-a", "hover-preview"): 1,
        }

    def test_surface_validations(self, make_service):
        client = make_service()
        note = create_note(client)
        with client.websocket_connect(f"/notes/{note['id']}/stream") as ws:
            read_until(ws, "hello")
            ws.send_json({"type": "surface", "concept": "nope"})
            assert read_until(ws, "error")[0]["code"] == "unknown-concept"
            ws.send_json({"type": "surface", "concept": "sym-fever"})
            assert read_until(ws, "error")[0]["code"] == "no-card"
            ws.send_json({"type": "surface", "concept": "cond-chf", "via": "telepathy"})
            assert read_until(ws, "error")[0]["code"] == "bad-surface"
            ws.send_json({"type": "mystery"})
            assert read_until(ws, "error")[0]["code"] == "unknown-message"


class TestCrossSessionPins:
    def test_pin_broadcast_reaches_every_session(self, make_service):
        client = make_service()
        note = create_note(client)
        url = f"/notes/{note['id']}/stream"
        with client.websocket_connect(f"{url}?user=dr-a") as ws_a:
            with client.websocket_connect(f"{url}?user=dr-b") as ws_b:
                read_until(ws_a, "hello")
                read_until(ws_b, "hello")
                client.post(
                    f"/notes/{note['id']}/pins",
                    json={"concept": "cond-chf"},
                    headers={"X-User": "dr-a"},
                )
                ws_a.send_json({"type": "ping"})
                ws_b.send_json({"type": "ping"})
                for ws in (ws_a, ws_b):
                    message, _ = read_until(ws, "pins")
                    assert message["pins"] == ["cond-chf"]
                    assert message["pin_version"] == 1


class TestRestartPersistence:
    def test_notes_pins_events_survive(self, make_service):
        first = make_service()
        note = create_note(first)
        with first.websocket_connect(f"/notes/{note['id']}/stream?user=dr-a") as ws:
            read_until(ws, "hello")
            ws.send_json(
                {"type": "edit", "section": "HPI", "offset": 0, "insert": "Denies fever."}
            )
            read_until(ws, "note")
            read_until(ws, "recognitions")
        first.post(
            f"/notes/{note['id']}/pins",
            json={"concept": "cond-chf"},
            headers={"X-User": "dr-a"},
        )
        snapshot = first.get(f"/notes/{note['id']}").json()
        events_before = first.get(f"/notes/{note['id']}/events").json()["events"]
        first.app.state.engine.store.close()

        second = make_service()
        assert second.get(f"/notes/{note['id']}").json() == snapshot

        state = second.post(
            f"/notes/{note['id']}/pins",
            json={"concept": "lab-potassium"},
            headers={"X-User": "dr-b"},
        ).json()
        assert state["pins"] == ["cond-chf", "lab-potassium"]
        assert state["pin_version"] == 2

        events_after = second.get(f"/notes/{note['id']}/events").json()["events"]
        assert events_after[: len(events_before)] == events_before
        assert events_after[-1]["kind"] == "pin"

    def test_new_notes_number_after_restored(self, make_service):
        first = make_service()
        create_note(first)
        first.app.state.engine.store.close()
        second = make_service()
        assert create_note(second)["id"] == "note-0002"
