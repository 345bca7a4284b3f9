"""Per-note session state: preview pane, shared pins, usage events.

The preview pane belongs to one user and keeps a bounded back/forward
history of surfaced cards. The pin list is shared by every session of a
note: pin operations are applied in server order, bump a version counter,
and are announced to subscribers. Every user-visible mutation appends
exactly one usage event to an append-only log, so per-(user, kind) counts
can be reconstructed afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Iterable

PREVIEW_HISTORY_DEPTH = 50


class UsageKind(str, Enum):
    AUTOCOMPLETE_INSERT = "autocomplete-insert"
    POST_RECOGNITION_DISAMBIGUATE = "post-recognition-disambiguate"
    CARD_VIA_SEARCH = "card-via-search"
    CARD_VIA_CHIP_CLICK = "card-via-chip-click"
    CARD_VIA_POST_RECOGNITION = "card-via-post-recognition"
    CARD_VIA_NOTE_SNIPPET = "card-via-note-snippet"
    PIN = "pin"
    UNPIN = "unpin"
    HOVER_PREVIEW = "hover-preview"


#: How a card reached the preview pane, mapped to the event kind it logs.
SURFACE_KINDS: dict[str, UsageKind] = {
    "auto-recognition": UsageKind.CARD_VIA_POST_RECOGNITION,
    "chip-click": UsageKind.CARD_VIA_CHIP_CLICK,
    "search": UsageKind.CARD_VIA_SEARCH,
    "snippet-click": UsageKind.CARD_VIA_NOTE_SNIPPET,
}


@dataclass(frozen=True)
class UsageEvent:
    timestamp: datetime
    user: str
    kind: UsageKind
    note_id: str
    concept: str | None = None


class NeedsDisambiguationError(Exception):
    """A card was requested for an ambiguous, unresolved recognition."""


class PinError(Exception):
    """Unpin of a concept that is not pinned."""


@dataclass(frozen=True)
class SidebarState:
    """One user's view of the sidebar: private preview, shared pins."""

    preview: str | None
    pins: tuple[str, ...]
    pin_version: int
    can_back: bool = False
    can_forward: bool = False


@dataclass
class PreviewHistory:
    """Bounded back/forward history of previewed concepts for one user."""

    depth: int = PREVIEW_HISTORY_DEPTH
    entries: list[str] = field(default_factory=list)
    index: int = -1

    @property
    def current(self) -> str | None:
        if 0 <= self.index < len(self.entries):
            return self.entries[self.index]
        return None

    def push(self, concept: str) -> None:
        if self.current == concept:
            return
        del self.entries[self.index + 1 :]  # branching discards the forward tail
        self.entries.append(concept)
        if len(self.entries) > self.depth:
            del self.entries[: len(self.entries) - self.depth]
        self.index = len(self.entries) - 1

    def back(self) -> str | None:
        if self.index > 0:
            self.index -= 1
        return self.current

    def forward(self) -> str | None:
        if self.index < len(self.entries) - 1:
            self.index += 1
        return self.current


@dataclass
class _NoteState:
    pins: list[str] = field(default_factory=list)
    pin_version: int = 0
    previews: dict[str, PreviewHistory] = field(default_factory=dict)
    listeners: list[Callable[[tuple[str, ...], int], None]] = field(default_factory=list)


class SessionHub:
    """Coordinates all sessions of all notes: previews, pins, event log.

    An optional event sink (e.g. the persistent store's append method)
    receives every event as it is logged; the in-memory log always keeps
    the full sequence for this process.
    """

    def __init__(self, event_sink: Callable[[UsageEvent], None] | None = None):
        self._notes: dict[str, _NoteState] = {}
        self._events: list[UsageEvent] = []
        self._event_sink = event_sink

    def _state(self, note_id: str) -> _NoteState:
        return self._notes.setdefault(note_id, _NoteState())

    def _preview(self, note_id: str, user: str) -> PreviewHistory:
        return self._state(note_id).previews.setdefault(user, PreviewHistory())

    # -- events ---------------------------------------------------------

    def log_event(
        self,
        user: str,
        kind: UsageKind,
        note_id: str,
        concept: str | None = None,
        timestamp: datetime | None = None,
    ) -> UsageEvent:
        event = UsageEvent(
            timestamp=timestamp or datetime.now(timezone.utc),
            user=user,
            kind=kind,
            note_id=note_id,
            concept=concept,
        )
        self._events.append(event)
        if self._event_sink is not None:
            self._event_sink(event)
        return event

    def events(self, note_id: str | None = None) -> list[UsageEvent]:
        if note_id is None:
            return list(self._events)
        return [e for e in self._events if e.note_id == note_id]

    def counts(self, note_id: str | None = None) -> dict[tuple[str, str], int]:
        """Per-(user, kind) event totals, the shape of a usage summary table."""
        totals: dict[tuple[str, str], int] = {}
        for event in self.events(note_id):
            key = (event.user, event.kind.value)
            totals[key] = totals.get(key, 0) + 1
        return totals

    # -- preview pane -----------------------------------------------------

    def surface_card(
        self, note_id: str, user: str, via: str, concept: str
    ) -> SidebarState:
        """Show a card in this user's preview pane and log how it got there."""
        try:
            kind = SURFACE_KINDS[via]
        except KeyError:
            raise ValueError(f"unknown surfacing path {via!r}") from None
        self._preview(note_id, user).push(concept)
        self.log_event(user, kind, note_id, concept)
        return self.sidebar(note_id, user)

    def hover_card(self, note_id: str, user: str, concept: str) -> None:
        """Log a hover popover; hovering never changes the preview pane."""
        self.log_event(user, UsageKind.HOVER_PREVIEW, note_id, concept)

    def push_preview(self, note_id: str, user: str, concept: str) -> SidebarState:
        """Move the preview pane without logging a surfacing event.

        Used when the preview change is a side effect of an operation that
        already produced its own event (an autocomplete insert).
        """
        self._preview(note_id, user).push(concept)
        return self.sidebar(note_id, user)

    def navigate(self, note_id: str, user: str, direction: str) -> SidebarState:
        history = self._preview(note_id, user)
        if direction == "back":
            history.back()
        elif direction == "forward":
            history.forward()
        else:
            raise ValueError(f"unknown direction {direction!r}")
        return self.sidebar(note_id, user)

    # -- shared pins ------------------------------------------------------

    def pin(self, note_id: str, user: str, concept: str) -> SidebarState:
        state = self._state(note_id)
        if concept not in state.pins:
            state.pins.append(concept)
            state.pin_version += 1
            self.log_event(user, UsageKind.PIN, note_id, concept)
            self._announce(state)
        return self.sidebar(note_id, user)

    def unpin(self, note_id: str, user: str, concept: str) -> SidebarState:
        state = self._state(note_id)
        if concept not in state.pins:
            raise PinError(f"{concept!r} is not pinned")
        state.pins.remove(concept)
        state.pin_version += 1
        self.log_event(user, UsageKind.UNPIN, note_id, concept)
        self._announce(state)
        return self.sidebar(note_id, user)

    def set_pins(self, note_id: str, pins: Iterable[str], version: int) -> None:
        """Restore persisted pin state (no events, no announcements)."""
        state = self._state(note_id)
        state.pins = list(dict.fromkeys(pins))
        state.pin_version = version

    def subscribe(
        self, note_id: str, listener: Callable[[tuple[str, ...], int], None]
    ) -> Callable[[], None]:
        """Register a pin-change listener; returns an unsubscribe callable."""
        state = self._state(note_id)
        state.listeners.append(listener)

        def unsubscribe() -> None:
            if listener in state.listeners:
                state.listeners.remove(listener)

        return unsubscribe

    def _announce(self, state: _NoteState) -> None:
        snapshot = tuple(state.pins)
        for listener in list(state.listeners):
            listener(snapshot, state.pin_version)

    # -- views -------------------------------------------------------------

    def sidebar(self, note_id: str, user: str) -> SidebarState:
        state = self._state(note_id)
        history = self._preview(note_id, user)
        return SidebarState(
            preview=history.current,
            pins=tuple(state.pins),
            pin_version=state.pin_version,
            can_back=history.index > 0,
            can_forward=history.index < len(history.entries) - 1,
        )

    def pins(self, note_id: str) -> tuple[str, ...]:
        return tuple(self._state(note_id).pins)

    def pin_version(self, note_id: str) -> int:
        return self._state(note_id).pin_version
