"""Embedded persistence: append-only event journal plus note snapshots.

A single SQLite database holds three tables: the usage-event journal
(append-only, never updated), current note payloads with their shared pin
state, and point-in-time note snapshots taken every ``snapshot_period``
versions. Everything round-trips through the wire codecs so the stored
shape matches what travels on the network.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from pathlib import Path

from .notes import Note
from .sessions import UsageEvent
from .wire import event_from_dict, event_to_dict, note_from_dict, note_to_dict

_SCHEMA = """
CREATE TABLE IF NOT EXISTS events (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    timestamp TEXT NOT NULL,
    user TEXT NOT NULL,
    kind TEXT NOT NULL,
    note_id TEXT NOT NULL,
    concept TEXT
);
CREATE TABLE IF NOT EXISTS notes (
    note_id TEXT PRIMARY KEY,
    patient_id TEXT NOT NULL,
    version INTEGER NOT NULL,
    payload TEXT NOT NULL,
    pins TEXT NOT NULL DEFAULT '[]',
    pin_version INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS snapshots (
    note_id TEXT NOT NULL,
    version INTEGER NOT NULL,
    payload TEXT NOT NULL,
    PRIMARY KEY (note_id, version)
);
"""


class Store:
    """Thread-safe wrapper over one SQLite file (or ':memory:')."""

    def __init__(self, path: str | Path = ":memory:", snapshot_period: int = 1):
        if snapshot_period < 1:
            raise ValueError("snapshot_period must be >= 1")
        self.snapshot_period = snapshot_period
        if path != ":memory:":
            Path(path).parent.mkdir(parents=True, exist_ok=True)
        # The test client and the websocket layer touch the store from
        # worker threads; a single connection plus a lock keeps ordering.
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- event journal ----------------------------------------------------

    def append_event(self, event: UsageEvent) -> None:
        data = event_to_dict(event)
        with self._lock:
            self._conn.execute(
                "INSERT INTO events (timestamp, user, kind, note_id, concept)"
                " VALUES (?, ?, ?, ?, ?)",
                (data["timestamp"], data["user"], data["kind"], data["note_id"], data["concept"]),
            )
            self._conn.commit()

    def events(self, note_id: str | None = None) -> list[UsageEvent]:
        query = "SELECT timestamp, user, kind, note_id, concept FROM events"
        params: tuple = ()
        if note_id is not None:
            query += " WHERE note_id = ?"
            params = (note_id,)
        query += " ORDER BY seq"
        with self._lock:
            rows = self._conn.execute(query, params).fetchall()
        return [
            event_from_dict(
                {
                    "timestamp": ts,
                    "user": user,
                    "kind": kind,
                    "note_id": nid,
                    "concept": concept,
                }
            )
            for ts, user, kind, nid, concept in rows
        ]

    # -- notes and snapshots ----------------------------------------------

    def save_note(self, note: Note) -> None:
        payload = json.dumps(note_to_dict(note), sort_keys=True)
        with self._lock:
            self._conn.execute(
                "INSERT INTO notes (note_id, patient_id, version, payload)"
                " VALUES (?, ?, ?, ?)"
                " ON CONFLICT(note_id) DO UPDATE SET"
                " patient_id = excluded.patient_id,"
                " version = excluded.version,"
                " payload = excluded.payload",
                (note.id, note.patient_id, note.version, payload),
            )
            if note.version % self.snapshot_period == 0:
                self._conn.execute(
                    "INSERT OR REPLACE INTO snapshots (note_id, version, payload)"
                    " VALUES (?, ?, ?)",
                    (note.id, note.version, payload),
                )
            self._conn.commit()

    def load_note(self, note_id: str) -> Note | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT payload FROM notes WHERE note_id = ?", (note_id,)
            ).fetchone()
        if row is None:
            return None
        return note_from_dict(json.loads(row[0]))

    def list_note_ids(self) -> list[str]:
        with self._lock:
            rows = self._conn.execute("SELECT note_id FROM notes ORDER BY note_id").fetchall()
        return [row[0] for row in rows]

    def snapshot_versions(self, note_id: str) -> list[int]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT version FROM snapshots WHERE note_id = ? ORDER BY version",
                (note_id,),
            ).fetchall()
        return [row[0] for row in rows]

    def load_snapshot(self, note_id: str, version: int) -> Note | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT payload FROM snapshots WHERE note_id = ? AND version = ?",
                (note_id, version),
            ).fetchone()
        if row is None:
            return None
        return note_from_dict(json.loads(row[0]))

    # -- shared pin state ---------------------------------------------------

    def save_pins(self, note_id: str, pins: tuple[str, ...], pin_version: int) -> None:
        with self._lock:
            updated = self._conn.execute(
                "UPDATE notes SET pins = ?, pin_version = ? WHERE note_id = ?",
                (json.dumps(list(pins)), pin_version, note_id),
            )
            self._conn.commit()
        if updated.rowcount == 0:
            raise KeyError(f"unknown note id {note_id!r}")

    def load_pins(self, note_id: str) -> tuple[tuple[str, ...], int]:
        with self._lock:
            row = self._conn.execute(
                "SELECT pins, pin_version FROM notes WHERE note_id = ?", (note_id,)
            ).fetchone()
        if row is None:
            return (), 0
        return tuple(json.loads(row[0])), row[1]
