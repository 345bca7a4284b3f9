import type {
  AutocompleteReply,
  Card,
  ConceptInfo,
  LookupMatch,
  Note,
  SectionName,
  ServerMessage,
  SidebarState,
} from "./types.js";
import { WIRE_VERSION } from "./types.js";

export class WireVersionError extends Error {}

function checkVersion(payload: Record<string, unknown>): void {
  if ("v" in payload && payload.v !== WIRE_VERSION) {
    throw new WireVersionError(`wire format v${payload.v}, client speaks v${WIRE_VERSION}`);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = String(body.detail);
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new Error(`${response.status}: ${detail}`);
  }
  const payload = (await response.json()) as T;
  checkVersion(payload as Record<string, unknown>);
  return payload;
}

/** Typed HTTP client for the note service. Caches concept metadata. */
export class ApiClient {
  private conceptCache = new Map<string, ConceptInfo>();

  constructor(
    readonly baseUrl: string,
    readonly user: string = "anonymous",
    private fetchFn: typeof fetch = globalThis.fetch?.bind(globalThis),
  ) {}

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = { "x-user": this.user };
    if (json) headers["content-type"] = "application/json";
    return headers;
  }

  async createNote(patientId: string): Promise<Note> {
    const response = await this.fetchFn(`${this.baseUrl}/notes`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ patient_id: patientId }),
    });
    return asJson<Note>(response);
  }

  async getNote(noteId: string): Promise<Note> {
    return asJson<Note>(await this.fetchFn(`${this.baseUrl}/notes/${noteId}`));
  }

  /** Concept metadata by id; unknown ids come back absent. */
  async concepts(ids: string[]): Promise<Map<string, ConceptInfo>> {
    const missing = [...new Set(ids)].filter((id) => !this.conceptCache.has(id));
    if (missing.length > 0) {
      const query = encodeURIComponent(missing.join(","));
      const payload = await asJson<{ concepts: Record<string, ConceptInfo> }>(
        await this.fetchFn(`${this.baseUrl}/concepts?ids=${query}`),
      );
      for (const [id, info] of Object.entries(payload.concepts)) {
        this.conceptCache.set(id, info);
      }
    }
    const out = new Map<string, ConceptInfo>();
    for (const id of ids) {
      const info = this.conceptCache.get(id);
      if (info) out.set(id, info);
    }
    return out;
  }

  /** Resolve free search text to ranked concept candidates. */
  async lookup(q: string): Promise<LookupMatch[]> {
    const payload = await asJson<{ matches: LookupMatch[] }>(
      await this.fetchFn(`${this.baseUrl}/lookup?q=${encodeURIComponent(q)}`),
    );
    return payload.matches;
  }

  async card(
    conceptId: string,
    patient: string,
    opts: { via?: string; note?: string } = {},
  ): Promise<Card> {
    const params = new URLSearchParams({ patient });
    if (opts.via) params.set("via", opts.via);
    if (opts.note) params.set("note", opts.note);
    const response = await this.fetchFn(
      `${this.baseUrl}/cards/${conceptId}?${params}`,
      { headers: this.headers(false) },
    );
    return asJson<Card>(response);
  }

  async autocomplete(
    noteId: string,
    section: SectionName,
    caret: number,
    filter?: string,
  ): Promise<AutocompleteReply> {
    const params = new URLSearchParams({
      note: noteId,
      section,
      caret: String(caret),
    });
    if (filter) params.set("filter", filter);
    return asJson<AutocompleteReply>(
      await this.fetchFn(`${this.baseUrl}/autocomplete?${params}`),
    );
  }

  async pin(noteId: string, conceptId: string): Promise<SidebarState> {
    const response = await this.fetchFn(`${this.baseUrl}/notes/${noteId}/pins`, {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify({ concept: conceptId }),
    });
    return asJson<SidebarState>(response);
  }

  async unpin(noteId: string, conceptId: string): Promise<SidebarState> {
    const response = await this.fetchFn(
      `${this.baseUrl}/notes/${noteId}/pins/${conceptId}`,
      { method: "DELETE", headers: this.headers(false) },
    );
    return asJson<SidebarState>(response);
  }
}

// The stream works with any WebSocket that speaks the browser API; tests
// inject the `ws` package's implementation since jsdom ships none.
export interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "message" | "close" | "error", listener: (event: any) => void): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export type StreamHandlers = {
  onHello?: (note: Note, sidebar: SidebarState) => void;
  onNote?: (note: Note) => void;
  onRecognitions?: (section: SectionName, version: number, chips: Note["sections"][SectionName]["chips"]) => void;
  onPins?: (pins: string[], pinVersion: number) => void;
  onPreview?: (card: Card, sidebar: SidebarState) => void;
  onHoverCard?: (card: Card) => void;
  onSidebar?: (sidebar: SidebarState, card?: Card) => void;
  onAutofill?: (applied: boolean, reason: string) => void;
  onAutocomplete?: (reply: AutocompleteReply) => void;
  onError?: (code: string, message: string) => void;
  onClose?: () => void;
};

/** One user's live connection to one note. */
export class NoteStream {
  private constructor(
    private socket: WebSocketLike,
    private handlers: StreamHandlers,
  ) {}

  /** Connects and resolves once the server's hello arrives. */
  static connect(
    baseUrl: string,
    noteId: string,
    user: string,
    handlers: StreamHandlers,
    factory: WebSocketFactory,
  ): Promise<NoteStream> {
    const wsBase = baseUrl.replace(/^http/, "ws");
    const socket = factory(
      `${wsBase}/notes/${noteId}/stream?user=${encodeURIComponent(user)}`,
    );
    const stream = new NoteStream(socket, handlers);
    return new Promise((resolve, reject) => {
      let greeted = false;
      socket.addEventListener("message", (event: { data: unknown }) => {
        const message = JSON.parse(String(event.data)) as ServerMessage;
        if (!greeted && message.type === "hello") {
          greeted = true;
          stream.dispatch(message);
          resolve(stream);
          return;
        }
        stream.dispatch(message);
      });
      socket.addEventListener("close", () => {
        handlers.onClose?.();
        if (!greeted) reject(new Error("stream closed before hello"));
      });
      socket.addEventListener("error", (event: unknown) => {
        if (!greeted) reject(event instanceof Error ? event : new Error("websocket error"));
      });
    });
  }

  private dispatch(message: ServerMessage): void {
    switch (message.type) {
      case "hello":
        this.handlers.onHello?.(message.note, message.sidebar);
        break;
      case "note":
        this.handlers.onNote?.(message.note);
        break;
      case "recognitions":
        this.handlers.onRecognitions?.(message.section, message.version, message.chips);
        break;
      case "pins":
        this.handlers.onPins?.(message.pins, message.pin_version);
        break;
      case "preview":
        this.handlers.onPreview?.(message.card, message.sidebar);
        break;
      case "hover-card":
        this.handlers.onHoverCard?.(message.card);
        break;
      case "sidebar":
        this.handlers.onSidebar?.(message.sidebar, message.card);
        break;
      case "autofill":
        this.handlers.onAutofill?.(message.applied, message.reason);
        break;
      case "autocomplete":
        this.handlers.onAutocomplete?.(message);
        break;
      case "error":
        this.handlers.onError?.(message.code, message.message);
        break;
      case "pong":
        break;
    }
  }

  private send(message: Record<string, unknown>): void {
    this.socket.send(JSON.stringify(message));
  }

  sendEdit(section: SectionName, offset: number, del: number, insert: string, version: number): void {
    this.send({ type: "edit", section, offset, delete: del, insert, version });
  }

  sendCaret(section: SectionName, caret: number, filter?: string): void {
    this.send({ type: "caret", section, caret, ...(filter ? { filter } : {}) });
  }

  sendAccept(
    section: SectionName,
    version: number,
    concept: string,
    caret: number,
    selection: { frame?: string; stat?: string } = {},
  ): void {
    this.send({ type: "accept", section, version, concept, caret, ...selection });
  }

  sendDisambiguate(section: SectionName, chipId: string, choice: string): void {
    this.send({ type: "disambiguate", section, chip_id: chipId, choice });
  }

  sendAutofill(section: SectionName): void {
    this.send({ type: "autofill", section });
  }

  sendSurface(concept: string, via: string): void {
    this.send({ type: "surface", concept, via });
  }

  sendHover(concept: string): void {
    this.send({ type: "hover", concept });
  }

  sendNavigate(direction: "back" | "forward"): void {
    this.send({ type: "navigate", direction });
  }

  ping(): void {
    this.send({ type: "ping" });
  }

  close(): void {
    this.socket.close();
  }
}
