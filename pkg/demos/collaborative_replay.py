"""Drive the note service end to end: two clinicians, one note.

Boots the real HTTP/WebSocket app in process, replays a short charting
session, and prints what each connected user observes: live note edits,
background concept recognition, an autocomplete accept, card previews,
and shared pins propagating across sessions. `knowted serve` exposes
the identical app on a TCP port for a browser client.
"""

from __future__ import annotations

import json
import tempfile
import time
import warnings
from pathlib import Path

warnings.filterwarnings("ignore", message="Using `httpx`")
from fastapi.testclient import TestClient  # noqa: E402

from knowted.service import ServiceConfig, create_app, packaged_lexicon_dir

PATIENT = {
    "patient_id": "p001",
    "labs": [
        {"id": "k1", "concept": "lab-potassium", "value": "3.6",
         "unit": "mmol/L", "timestamp": "2026-08-01T08:00:00Z"},
        {"id": "k2", "concept": "lab-potassium", "value": "4.2",
         "unit": "mmol/L", "timestamp": "2026-08-10T08:00:00Z"},
        {"id": "c1", "concept": "lab-creatinine", "value": "0.98",
         "unit": "mg/dL", "timestamp": "2026-08-10T08:00:00Z"},
    ],
    "notes": [
        {"id": "n0", "timestamp": "2026-07-28T14:00:00Z",
         "text": "CHF followed in clinic; furosemide continued."},
    ],
    "entries": [
        {"id": "e1", "concept": "med-furosemide", "kind": "medication",
         "timestamp": "2026-07-28T14:05:00Z", "source_note": "n0"},
    ],
}


def pump(ws, wanted: str, limit: int = 40) -> dict:
    """Read until a message of the wanted type, narrating pins on the way."""
    for _ in range(limit):
        message = ws.receive_json()
        if message["type"] == wanted:
            return message
        if message["type"] == "pins":
            print(f"    (pins update drifted in: {message['pins']})")
    raise RuntimeError(f"never saw {wanted!r}")


def main() -> None:
    with tempfile.TemporaryDirectory() as scratch:
        data_dir = Path(scratch) / "clinic"
        (data_dir / "patients").mkdir(parents=True)
        (data_dir / "patients" / "p001.json").write_text(json.dumps(PATIENT))
        config = ServiceConfig(
            data_dir=data_dir,
            lexicon_path=packaged_lexicon_dir(),
            debounce_ms=50,
        )

        with TestClient(create_app(config)) as client:
            note_id = client.post("/notes", json={"patient_id": "p001"}).json()["id"]
            print(f"created {note_id} for patient p001\n")
            stream = f"/notes/{note_id}/stream"

            with client.websocket_connect(f"{stream}?user=dr-a") as ws_a, \
                 client.websocket_connect(f"{stream}?user=dr-b") as ws_b:
                pump(ws_a, "hello")
                pump(ws_b, "hello")
                print("dr-a and dr-b connected to the same note stream")

                text = "Denies fever. CHF stable on furosemide. "
                ws_a.send_json({"type": "edit", "offset": 0, "delete": 0,
                                "insert": text, "section": "HPI", "version": 0})
                note = pump(ws_b, "note")["note"]
                print(f"\ndr-b sees dr-a typing: {note['sections']['HPI']['text']!r}")

                time.sleep(0.3)  # let the rescan debounce expire
                ws_b.send_json({"type": "ping"})
                recognized = pump(ws_b, "recognitions")
                print("\nbackground recognition turned the prose into chips:")
                for chip in recognized["chips"]:
                    mark = " (negated)" if chip["negated"] else ""
                    print(f"  {chip['surface']!r} -> {chip['resolved']}{mark}")
                preview = pump(ws_a, "preview")
                print(f"dr-a preview pane now shows: {preview['card']['title']}")
                version = recognized["version"]

                ws_a.send_json({"type": "edit", "offset": len(text), "delete": 0,
                                "insert": "Start pota", "section": "HPI",
                                "version": version})
                version = pump(ws_a, "note")["note"]["version"]
                caret = len(text) + len("Start pota")
                ws_a.send_json({"type": "caret", "section": "HPI", "caret": caret})
                dropdown = pump(ws_a, "autocomplete")
                top = dropdown["suggestions"][0]
                print(f"\ndr-a types 'Start pota': dropdown offers {top['display']!r}")

                ws_a.send_json({
                    "type": "accept", "section": "HPI", "version": version,
                    "concept": top["concept"], "caret": caret,
                })
                note = pump(ws_b, "note")["note"]
                while note["version"] < version + 2:  # accept bumps twice
                    note = pump(ws_b, "note")["note"]
                print(f"accept committed atomically; dr-b sees: "
                      f"{note['sections']['HPI']['text']!r}")

                response = client.post(f"/notes/{note_id}/pins",
                                       json={"concept": "cond-chf"},
                                       headers={"X-User": "dr-b"})
                print(f"\ndr-b pins cond-chf (pin_version "
                      f"{response.json()['pin_version']})")
                for name, ws in (("dr-a", ws_a), ("dr-b", ws_b)):
                    ws.send_json({"type": "ping"})
                    pins = pump(ws, "pins")
                    print(f"  {name} sidebar now shows pins: {pins['pins']}")

            events = client.get(f"/notes/{note_id}/events").json()["events"]
            print(f"\n{len(events)} usage events journaled:")
            for event in events:
                print(f"  {event['user']:5} {event['kind']:28} {event['concept']}")


if __name__ == "__main__":
    main()
