import type { Card, CardBlock, LookupMatch, SidebarState } from "./types.js";
import type { CardLoader } from "./chips.js";

export type SidebarHandlers = {
  onPin?: (concept: string) => void;
  onUnpin?: (concept: string) => void;
  onNavigate?: (direction: "back" | "forward") => void;
  /** Resolve search-box text to concept candidates. */
  onSearch?: (q: string) => Promise<LookupMatch[]>;
  /** Surface a concept in the preview pane (the search path). */
  onSurface?: (concept: string) => void;
};

function renderBlock(doc: Document, block: CardBlock): HTMLElement {
  const el = doc.createElement("div");
  el.className = `card-block card-block-${block.kind}`;
  el.dataset.kind = block.kind;
  const payload = block.payload as any;

  switch (block.kind) {
    case "lab-table": {
      const table = doc.createElement("table");
      const head = table.insertRow();
      head.insertCell().textContent = "when";
      for (const column of payload.columns) {
        const cell = head.insertCell();
        cell.textContent = column.display;
        cell.dataset.concept = column.concept;
      }
      for (const row of payload.rows) {
        const tr = table.insertRow();
        tr.insertCell().textContent = row.timestamp;
        for (const column of payload.columns) {
          const value = row.values[column.concept];
          const cell = tr.insertCell();
          cell.textContent = value ? `${value.raw} ${value.unit ?? ""}`.trim() : "";
          if (value?.abnormal) cell.classList.add("abnormal");
        }
      }
      el.appendChild(table);
      break;
    }
    case "lab-aggregate": {
      for (const frame of payload.frames) {
        const row = doc.createElement("div");
        row.className = "aggregate-frame";
        const digits = frame.decimals;
        row.textContent =
          `${frame.name}  (${frame.min.toFixed(digits)} - ` +
          `${frame.max.toFixed(digits)}) ${frame.avg.toFixed(digits)}`;
        el.appendChild(row);
      }
      break;
    }
    case "lab-series": {
      el.dataset.points = String(payload.points.length);
      el.textContent = `${payload.points.length} results over time`;
      break;
    }
    case "medication-list":
    case "procedure-list":
    case "vitals-list": {
      const list = doc.createElement("ul");
      for (const item of payload.items) {
        const li = doc.createElement("li");
        li.dataset.concept = item.concept;
        li.textContent =
          "raw" in item
            ? `${item.display}: ${item.raw} ${item.unit ?? ""}`.trim()
            : `${item.display} (${item.timestamp})`;
        list.appendChild(li);
      }
      el.appendChild(list);
      break;
    }
    case "note-snippets":
    case "report-snippets": {
      const list = doc.createElement("ul");
      for (const snippet of payload.snippets) {
        const li = doc.createElement("li");
        li.dataset.noteId = snippet.note_id;
        const [from, to] = snippet.highlight;
        li.appendChild(doc.createTextNode(snippet.text.slice(0, from)));
        const mark = doc.createElement("mark");
        mark.textContent = snippet.text.slice(from, to);
        li.appendChild(mark);
        li.appendChild(doc.createTextNode(snippet.text.slice(to)));
        list.appendChild(li);
      }
      el.appendChild(list);
      break;
    }
    default:
      el.textContent = block.kind;
  }
  return el;
}

export function renderCard(doc: Document, card: Card): HTMLElement {
  const el = doc.createElement("article");
  el.className = "concept-card";
  el.dataset.concept = card.concept;
  const title = doc.createElement("h3");
  title.textContent = card.title;
  el.appendChild(title);
  if (card.synonyms.length > 0) {
    const synonyms = doc.createElement("div");
    synonyms.className = "card-synonyms";
    synonyms.textContent = card.synonyms.join(", ");
    el.appendChild(synonyms);
  }
  for (const block of card.body) {
    el.appendChild(renderBlock(doc, block));
  }
  return el;
}

/**
 * Preview pane plus the shared pinned stack. The preview is per user and
 * driven by preview/sidebar messages; pins are shared across sessions and
 * re-rendered whenever a pins broadcast arrives.
 */
export class Sidebar {
  readonly element: HTMLElement;
  private previewPane: HTMLElement;
  private pinnedStack: HTMLElement;
  private backButton: HTMLButtonElement;
  private forwardButton: HTMLButtonElement;
  private pinButton: HTMLButtonElement;
  private previewConcept: string | null = null;
  private pinsVersionShown = -1;
  pins: string[] = [];

  constructor(
    root: HTMLElement,
    private loadCard: CardLoader,
    handlers: SidebarHandlers = {},
  ) {
    const doc = root.ownerDocument;
    this.element = doc.createElement("aside");
    this.element.className = "sidebar";

    const searchRow = doc.createElement("div");
    searchRow.className = "card-search";
    this.searchInput = doc.createElement("input");
    this.searchInput.type = "search";
    this.searchInput.className = "search-box";
    this.searchInput.placeholder = "search concepts";
    this.searchInput.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") {
        void this.search(this.searchInput.value);
      }
    });
    this.searchResults = doc.createElement("div");
    this.searchResults.className = "search-results";
    searchRow.append(this.searchInput, this.searchResults);

    const controls = doc.createElement("div");
    controls.className = "preview-controls";
    this.backButton = doc.createElement("button");
    this.backButton.className = "nav-back";
    this.backButton.textContent = "←";
    this.backButton.disabled = true;
    this.backButton.addEventListener("click", () => handlers.onNavigate?.("back"));
    this.forwardButton = doc.createElement("button");
    this.forwardButton.className = "nav-forward";
    this.forwardButton.textContent = "→";
    this.forwardButton.disabled = true;
    this.forwardButton.addEventListener("click", () => handlers.onNavigate?.("forward"));
    this.pinButton = doc.createElement("button");
    this.pinButton.className = "pin-preview";
    this.pinButton.textContent = "pin";
    this.pinButton.disabled = true;
    this.pinButton.addEventListener("click", () => {
      if (this.previewConcept) handlers.onPin?.(this.previewConcept);
    });
    controls.append(this.backButton, this.forwardButton, this.pinButton);

    this.previewPane = doc.createElement("div");
    this.previewPane.className = "preview-pane";
    this.pinnedStack = doc.createElement("div");
    this.pinnedStack.className = "pinned-stack";

    this.element.append(searchRow, controls, this.previewPane, this.pinnedStack);
    root.appendChild(this.element);

    this.handlers = handlers;
  }

  private handlers: SidebarHandlers;
  private searchInput: HTMLInputElement;
  private searchResults: HTMLElement;

  /**
   * Search-box flow: one hit surfaces straight into the preview; several
   * hits ask which concept was meant; zero hits say so.
   */
  async search(q: string): Promise<void> {
    const text = q.trim();
    this.searchResults.innerHTML = "";
    if (!text || !this.handlers.onSearch) return;
    const doc = this.element.ownerDocument;
    const matches = await this.handlers.onSearch(text);
    if (matches.length === 0) {
      const empty = doc.createElement("div");
      empty.className = "search-empty";
      empty.textContent = `no concepts match "${text}"`;
      this.searchResults.appendChild(empty);
      return;
    }
    if (matches.length === 1) {
      this.searchInput.value = "";
      this.handlers.onSurface?.(matches[0]!.concept);
      return;
    }
    const prompt = doc.createElement("ul");
    prompt.className = "search-candidates";
    prompt.setAttribute("role", "menu");
    for (const match of matches) {
      const item = doc.createElement("li");
      item.dataset.concept = match.concept;
      item.textContent = match.detail
        ? `${match.display} (${match.detail})`
        : match.display;
      item.addEventListener("click", () => {
        this.searchResults.innerHTML = "";
        this.searchInput.value = "";
        this.handlers.onSurface?.(match.concept);
      });
      prompt.appendChild(item);
    }
    this.searchResults.appendChild(prompt);
  }

  showPreview(card: Card, state: SidebarState): void {
    this.previewConcept = card.concept;
    this.previewPane.innerHTML = "";
    this.previewPane.appendChild(renderCard(this.element.ownerDocument, card));
    this.applyState(state);
  }

  applyState(state: SidebarState): void {
    this.backButton.disabled = !state.can_back;
    this.forwardButton.disabled = !state.can_forward;
    this.pinButton.disabled =
      this.previewConcept === null || state.pins.includes(this.previewConcept);
  }

  /** Re-render the shared pinned stack; stale async renders are dropped. */
  async setPins(pins: string[], pinVersion: number): Promise<void> {
    if (pinVersion <= this.pinsVersionShown) return;
    this.pinsVersionShown = pinVersion;
    this.pins = [...pins];
    const doc = this.element.ownerDocument;
    const cards = await Promise.all(pins.map((concept) => this.loadCard(concept)));
    if (this.pinsVersionShown !== pinVersion) return;
    this.pinnedStack.innerHTML = "";
    this.pinnedStack.dataset.pinVersion = String(pinVersion);
    cards.forEach((card, index) => {
      if (!card) return;
      const holder = doc.createElement("div");
      holder.className = "pinned-card";
      const unpin = doc.createElement("button");
      unpin.className = "unpin";
      unpin.textContent = "×";
      unpin.addEventListener("click", () => this.handlers.onUnpin?.(pins[index]!));
      holder.appendChild(unpin);
      holder.appendChild(renderCard(doc, card));
      this.pinnedStack.appendChild(holder);
    });
    this.applyState({
      preview: this.previewConcept,
      pins,
      pin_version: pinVersion,
      can_back: !this.backButton.disabled,
      can_forward: !this.forwardButton.disabled,
    });
  }
}
