import { chipColor } from "./colors.js";
import type { Card, Chip, ConceptInfo, SectionDoc } from "./types.js";

export type CardLoader = (conceptId: string) => Promise<Card | null>;

/**
 * Hover popover shared by all chips: shows the concept's card after the
 * pointer has rested on a chip for `delayMs`. Leaving the chip before the
 * delay cancels the fetch; stale responses are dropped by token.
 */
export class PopoverController {
  readonly element: HTMLDivElement;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private showToken = 0;

  constructor(
    root: HTMLElement,
    private loadCard: CardLoader,
    private delayMs = 300,
  ) {
    this.element = root.ownerDocument.createElement("div");
    this.element.className = "chip-popover";
    this.element.setAttribute("role", "tooltip");
    this.element.hidden = true;
    root.appendChild(this.element);
  }

  attach(target: HTMLElement, conceptId: string): void {
    target.addEventListener("mouseenter", () => {
      this.cancel();
      const token = ++this.showToken;
      this.timer = setTimeout(() => {
        void this.show(target, conceptId, token);
      }, this.delayMs);
    });
    target.addEventListener("mouseleave", () => this.hide());
  }

  private async show(target: HTMLElement, conceptId: string, token: number): Promise<void> {
    const card = await this.loadCard(conceptId);
    if (card === null || token !== this.showToken) return;
    this.element.innerHTML = "";
    const title = this.element.ownerDocument.createElement("div");
    title.className = "chip-popover-title";
    title.textContent = card.title;
    this.element.appendChild(title);
    for (const block of card.body) {
      const row = this.element.ownerDocument.createElement("div");
      row.className = "chip-popover-block";
      row.dataset.kind = block.kind;
      row.textContent = block.kind;
      this.element.appendChild(row);
    }
    const rect = target.getBoundingClientRect();
    this.element.style.left = `${rect.left}px`;
    this.element.style.top = `${rect.bottom + 4}px`;
    this.element.hidden = false;
  }

  private cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }

  hide(): void {
    this.cancel();
    this.showToken++;
    this.element.hidden = true;
  }
}

export type ChipRenderOptions = {
  /** Metadata for resolved concepts and candidates (drives colors). */
  concepts: Map<string, ConceptInfo>;
  onChipClick?: (chip: Chip) => void;
  /** Hovering an unresolved chip offers its candidates instead of a card. */
  onAmbiguousHover?: (chip: Chip, target: HTMLElement) => void;
  popover?: PopoverController;
};

function describeModifiers(chip: Chip): string {
  const parts = chip.modifiers.map((m) => `${m.cls}: ${m.term}`);
  if (chip.negated) parts.unshift("negated");
  return parts.join(", ");
}

export function chipElement(
  doc: Document,
  chip: Chip,
  options: ChipRenderOptions,
): HTMLSpanElement {
  const el = doc.createElement("span");
  const info = chip.resolved ? options.concepts.get(chip.resolved) : undefined;
  const type = info?.type ?? null;
  const color = chipColor(type);

  el.textContent = chip.surface;
  el.className = type === null ? "chip chip-ambiguous" : `chip chip-${type}`;
  el.dataset.chipId = chip.id;
  el.dataset.origin = chip.origin;
  if (chip.resolved) el.dataset.concept = chip.resolved;
  else el.dataset.candidates = chip.candidates.join(",");
  if (chip.in_record) el.dataset.inRecord = "true";

  el.style.backgroundColor = color;
  // Border style encodes provenance: typed completions read as settled,
  // background recognitions as provisional.
  el.style.border =
    chip.origin === "post-recognized" ? `1px dotted ${color}` : `1px solid ${color}`;
  if (chip.negated) {
    // Absence must read without relying on color alone.
    el.style.textDecorationLine = "underline";
    el.style.textDecorationStyle = "dotted";
    el.classList.add("chip-negated");
  }
  if (chip.in_record) {
    const marker = doc.createElement("span");
    marker.className = "chip-in-record";
    marker.title = "has data in this patient's record";
    el.appendChild(marker);
  }
  const hint = describeModifiers(chip);
  if (hint) el.title = hint;

  if (options.onChipClick) {
    el.addEventListener("click", () => options.onChipClick?.(chip));
  }
  if (chip.resolved) {
    options.popover?.attach(el, chip.resolved);
  } else if (options.onAmbiguousHover) {
    el.addEventListener("mouseenter", () => options.onAmbiguousHover?.(chip, el));
  }
  return el;
}

/** Replace a container's content with the section text, chips inline. */
export function renderSection(
  container: HTMLElement,
  doc: SectionDoc,
  options: ChipRenderOptions,
): void {
  const owner = container.ownerDocument;
  container.innerHTML = "";
  let cursor = 0;
  for (const chip of doc.chips) {
    if (chip.start > cursor) {
      container.appendChild(owner.createTextNode(doc.text.slice(cursor, chip.start)));
    }
    container.appendChild(chipElement(owner, chip, options));
    cursor = chip.end;
  }
  if (cursor < doc.text.length) {
    container.appendChild(owner.createTextNode(doc.text.slice(cursor)));
  }
}
