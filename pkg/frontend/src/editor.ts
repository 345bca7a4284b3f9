import { ApiClient, NoteStream, type WebSocketFactory } from "./api.js";
import { PopoverController, renderSection } from "./chips.js";
import { SuggestionDropdown, type LabSelection } from "./dropdown.js";
import { Sidebar } from "./sidebar.js";
import type {
  Card,
  Chip,
  ConceptInfo,
  Note,
  SectionName,
  Suggestion,
} from "./types.js";

const SECTION_ORDER: SectionName[] = [
  "HPI",
  "ROS",
  "PhysicalExam",
  "MDM",
  "ClinicianComment",
];

/** Single edit covering the delta between two texts (common affix diff). */
export function diffEdit(
  before: string,
  after: string,
): { offset: number; delete: number; insert: string } | null {
  if (before === after) return null;
  let prefix = 0;
  const max = Math.min(before.length, after.length);
  while (prefix < max && before[prefix] === after[prefix]) prefix++;
  let suffix = 0;
  while (
    suffix < max - prefix &&
    before[before.length - 1 - suffix] === after[after.length - 1 - suffix]
  ) {
    suffix++;
  }
  return {
    offset: prefix,
    delete: before.length - prefix - suffix,
    insert: after.slice(prefix, after.length - suffix),
  };
}

export type EditorOptions = {
  noteId: string;
  user: string;
  wsFactory: WebSocketFactory;
};

/**
 * The full editor: one textarea per note section as the typing surface,
 * a chip overlay per section, the autocomplete dropdown, and the card
 * sidebar. All state flows through the service; the editor never mutates
 * a note locally except by echoing server broadcasts.
 */
export class NoteEditor {
  note!: Note;
  readonly sidebar: Sidebar;
  readonly dropdown: SuggestionDropdown;
  readonly popover: PopoverController;
  private stream!: NoteStream;
  private inputs = new Map<SectionName, HTMLTextAreaElement>();
  private overlays = new Map<SectionName, HTMLElement>();
  private conceptInfo = new Map<string, ConceptInfo>();
  private cardCache = new Map<string, Card | null>();
  private activeSection: SectionName = "HPI";
  private acceptCaret = 0;
  private statusLine!: HTMLElement;

  private constructor(
    readonly root: HTMLElement,
    private api: ApiClient,
  ) {
    const doc = root.ownerDocument;
    const sections = doc.createElement("div");
    sections.className = "note-sections";
    for (const name of SECTION_ORDER) {
      const holder = doc.createElement("section");
      holder.className = "note-section";
      holder.dataset.section = name;
      const heading = doc.createElement("h4");
      heading.textContent = name;
      const autofill = doc.createElement("button");
      autofill.className = "autofill-button";
      autofill.dataset.section = name;
      autofill.textContent = "autofill";
      autofill.addEventListener("click", () => this.autofill(name));
      heading.appendChild(autofill);
      const input = doc.createElement("textarea");
      input.className = "section-input";
      input.dataset.section = name;
      const overlay = doc.createElement("div");
      overlay.className = "section-overlay";
      overlay.dataset.section = name;
      holder.append(heading, input, overlay);
      sections.appendChild(holder);
      this.inputs.set(name, input);
      this.overlays.set(name, overlay);
      input.addEventListener("input", () => void this.onInput(name));
      input.addEventListener("keydown", (event) => {
        if (this.dropdown.handleKey(event as KeyboardEvent)) return;
      });
      input.addEventListener("focus", () => {
        this.activeSection = name;
      });
    }
    root.appendChild(sections);

    this.dropdown = new SuggestionDropdown(root, (suggestion, selection) =>
      this.accept(suggestion, selection),
    );
    this.popover = new PopoverController(root, (concept) =>
      this.loadCard(concept, "hover"),
    );
    this.sidebar = new Sidebar(root, (concept) => this.loadCard(concept), {
      onPin: (concept) => void this.api.pin(this.note.id, concept),
      onUnpin: (concept) => void this.api.unpin(this.note.id, concept),
      onNavigate: (direction) => this.stream.sendNavigate(direction),
      onSearch: (q) => this.api.lookup(q),
      onSurface: (concept) => this.stream.sendSurface(concept, "search"),
    });

    this.statusLine = doc.createElement("div");
    this.statusLine.className = "editor-status";
    root.appendChild(this.statusLine);
  }

  static async open(
    root: HTMLElement,
    baseUrl: string,
    options: EditorOptions,
  ): Promise<NoteEditor> {
    const api = new ApiClient(baseUrl, options.user);
    const editor = new NoteEditor(root, api);
    editor.stream = await NoteStream.connect(
      baseUrl,
      options.noteId,
      options.user,
      {
        onHello: (note, sidebar) => {
          editor.note = note;
          void editor.applyNote(note);
          void editor.sidebar.setPins(sidebar.pins, sidebar.pin_version);
        },
        onNote: (note) => {
          editor.note = note;
          void editor.applyNote(note);
        },
        onRecognitions: (section, version, chips) => {
          editor.note.version = version;
          editor.note.sections[section].chips = chips;
          void editor.renderOverlay(section);
        },
        onPins: (pins, pinVersion) => void editor.sidebar.setPins(pins, pinVersion),
        onPreview: (card, sidebar) => editor.sidebar.showPreview(card, sidebar),
        onSidebar: (sidebar, card) => {
          if (card) editor.sidebar.showPreview(card, sidebar);
          else editor.sidebar.applyState(sidebar);
        },
        onAutocomplete: (reply) => {
          if (editor.dropdown.update(reply)) editor.acceptCaret = reply.caret;
        },
        onAutofill: (applied, reason) => {
          editor.statusLine.textContent = applied ? "" : reason;
        },
        onError: (code, message) => {
          editor.statusLine.textContent = `${code}: ${message}`;
        },
      },
      options.wsFactory,
    );
    return editor;
  }

  get noteStream(): NoteStream {
    return this.stream;
  }

  /** Fetch (and cache) a card; `via` makes the fetch count as a surface. */
  private async loadCard(concept: string, via?: string): Promise<Card | null> {
    const cached = this.cardCache.get(concept);
    if (cached !== undefined && via === undefined) return cached;
    try {
      const card = await this.api.card(concept, this.note.patient_id, {
        via,
        note: via ? this.note.id : undefined,
      });
      this.cardCache.set(concept, card);
      return card;
    } catch {
      this.cardCache.set(concept, null);
      return null;
    }
  }

  private async onInput(section: SectionName): Promise<void> {
    const input = this.inputs.get(section)!;
    const edit = diffEdit(this.note.sections[section].text, input.value);
    if (edit) {
      this.stream.sendEdit(
        section,
        edit.offset,
        edit.delete,
        edit.insert,
        this.note.version,
      );
    }
    const caret = input.selectionStart ?? input.value.length;
    this.dropdown.expectCaret(caret);
    this.stream.sendCaret(section, caret);
  }

  private accept(suggestion: Suggestion, selection?: LabSelection): void {
    this.stream.sendAccept(
      this.activeSection,
      this.note.version,
      suggestion.concept,
      this.acceptCaret,
      selection,
    );
  }

  autofill(section: SectionName): void {
    this.stream.sendAutofill(section);
  }

  private async ensureConcepts(chips: Chip[]): Promise<void> {
    const wanted = new Set<string>();
    for (const chip of chips) {
      if (chip.resolved) wanted.add(chip.resolved);
      for (const candidate of chip.candidates) wanted.add(candidate);
    }
    const missing = [...wanted].filter((id) => !this.conceptInfo.has(id));
    if (missing.length === 0) return;
    const fetched = await this.api.concepts(missing);
    for (const [id, info] of fetched) this.conceptInfo.set(id, info);
  }

  private async applyNote(note: Note): Promise<void> {
    for (const name of SECTION_ORDER) {
      const input = this.inputs.get(name)!;
      if (input.value !== note.sections[name].text) {
        input.value = note.sections[name].text;
      }
      await this.renderOverlay(name);
    }
  }

  private async renderOverlay(section: SectionName): Promise<void> {
    const doc = this.note.sections[section];
    await this.ensureConcepts(doc.chips);
    renderSection(this.overlays.get(section)!, doc, {
      concepts: this.conceptInfo,
      popover: this.popover,
      onChipClick: (chip) => this.onChipClick(section, chip),
      onAmbiguousHover: (chip) => this.openDisambiguation(section, chip),
    });
  }

  private onChipClick(section: SectionName, chip: Chip): void {
    if (chip.resolved === null) {
      this.openDisambiguation(section, chip);
      return;
    }
    const info = this.conceptInfo.get(chip.resolved);
    if (info?.type === "symptom") return;
    this.stream.sendSurface(chip.resolved, "chip-click");
  }

  private openDisambiguation(section: SectionName, chip: Chip): void {
    const doc = this.root.ownerDocument;
    this.root.querySelector(".disambiguation-menu")?.remove();
    const menu = doc.createElement("ul");
    menu.className = "disambiguation-menu";
    menu.setAttribute("role", "menu");
    for (const candidate of chip.candidates) {
      const item = doc.createElement("li");
      item.dataset.concept = candidate;
      item.textContent = this.conceptInfo.get(candidate)?.canonical ?? candidate;
      item.addEventListener("click", () => {
        this.stream.sendDisambiguate(section, chip.id, candidate);
        menu.remove();
      });
      menu.appendChild(item);
    }
    this.root.appendChild(menu);
  }

  close(): void {
    this.stream.close();
  }
}
