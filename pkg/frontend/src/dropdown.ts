import type { AutocompleteReply, LabTree, Suggestion } from "./types.js";

export type LabSelection = { frame?: string; stat?: string };
export type AcceptHandler = (suggestion: Suggestion, selection?: LabSelection) => void;

type TreeChoice = {
  label: string;
  selection: LabSelection;
};

function fixed(value: number, decimals: number): string {
  return value.toFixed(decimals);
}

function treeChoices(tree: LabTree): TreeChoice[] {
  // Root row inserts the bare name; frame and stat rows insert values.
  const choices: TreeChoice[] = [{ label: tree.label, selection: {} }];
  for (const frame of tree.frames) {
    choices.push({
      label: `${frame.name}  (${fixed(frame.min, frame.decimals)} - ${fixed(frame.max, frame.decimals)}) ${fixed(frame.avg, frame.decimals)}`,
      selection: { frame: frame.name },
    });
  }
  const first = tree.frames[0];
  if (first) {
    for (const stat of first.stats) {
      choices.push({
        label: `${stat.name}  ${fixed(stat.value, stat.decimals)}`,
        selection: { frame: first.name, stat: stat.name },
      });
    }
  }
  return choices;
}

/**
 * Autocomplete dropdown. The editor stamps each request with its caret;
 * replies for any other caret are discarded so a slow response can never
 * clobber what the user has typed since.
 */
export class SuggestionDropdown {
  readonly element: HTMLUListElement;
  private suggestions: Suggestion[] = [];
  private activeIndex = 0;
  private expectedCaret: number | null = null;
  private filter: string | null = null;
  private tree: { suggestion: Suggestion; choices: TreeChoice[]; activeIndex: number } | null = null;

  constructor(
    root: HTMLElement,
    private onAccept: AcceptHandler,
  ) {
    this.element = root.ownerDocument.createElement("ul");
    this.element.className = "suggestion-dropdown";
    this.element.setAttribute("role", "listbox");
    this.element.hidden = true;
    root.appendChild(this.element);
  }

  get isOpen(): boolean {
    return !this.element.hidden;
  }

  /** Call right before requesting suggestions for a caret position. */
  expectCaret(caret: number): void {
    this.expectedCaret = caret;
  }

  /** Returns false when the reply was stale or did not trigger. */
  update(reply: AutocompleteReply): boolean {
    if (this.expectedCaret !== null && reply.caret !== this.expectedCaret) {
      return false;
    }
    if (!reply.trigger || reply.suggestions.length === 0) {
      this.close();
      return false;
    }
    this.suggestions = reply.suggestions;
    this.activeIndex = 0;
    this.filter = reply.filter;
    this.tree = null;
    this.render();
    return true;
  }

  close(): void {
    this.element.hidden = true;
    this.element.innerHTML = "";
    this.suggestions = [];
    this.filter = null;
    this.tree = null;
    this.activeIndex = 0;
  }

  /** Returns true when the key was consumed by the dropdown. */
  handleKey(event: KeyboardEvent): boolean {
    if (!this.isOpen) return false;
    const items = this.tree ? this.tree.choices.length : this.suggestions.length;
    switch (event.key) {
      case "ArrowDown":
        this.moveActive((this.currentIndex() + 1) % items);
        break;
      case "ArrowUp":
        this.moveActive((this.currentIndex() - 1 + items) % items);
        break;
      case "ArrowRight": {
        const current = this.suggestions[this.activeIndex];
        if (!this.tree && current?.tree) {
          this.expandTree(current);
          break;
        }
        return false;
      }
      case "ArrowLeft":
        if (this.tree) {
          this.tree = null;
          this.render();
          break;
        }
        return false;
      case "Enter":
        this.acceptActive();
        break;
      case "Escape":
        this.close();
        break;
      default:
        return false;
    }
    event.preventDefault();
    return true;
  }

  acceptActive(): void {
    if (this.tree) {
      const choice = this.tree.choices[this.tree.activeIndex];
      const suggestion = this.tree.suggestion;
      this.close();
      if (choice) this.onAccept(suggestion, choice.selection);
      return;
    }
    const suggestion = this.suggestions[this.activeIndex];
    if (suggestion?.tree) {
      // Labs never insert in one step: the submenu opens first so a
      // value string can be chosen over the bare name.
      this.expandTree(suggestion);
      return;
    }
    this.close();
    if (suggestion) this.onAccept(suggestion);
  }

  private expandTree(suggestion: Suggestion): void {
    this.tree = {
      suggestion,
      choices: treeChoices(suggestion.tree!),
      activeIndex: 0,
    };
    this.render();
  }

  private currentIndex(): number {
    return this.tree ? this.tree.activeIndex : this.activeIndex;
  }

  private moveActive(index: number): void {
    if (this.tree) this.tree.activeIndex = index;
    else this.activeIndex = index;
    this.render();
  }

  private render(): void {
    const doc = this.element.ownerDocument;
    this.element.innerHTML = "";
    this.element.hidden = false;
    if (this.filter && !this.tree) {
      const badge = doc.createElement("li");
      badge.className = "dropdown-filter-badge";
      badge.textContent = this.filter.replace("_", " ");
      this.element.appendChild(badge);
    }
    if (this.tree) {
      for (const [index, choice] of this.tree.choices.entries()) {
        const li = doc.createElement("li");
        li.className = "dropdown-item dropdown-tree-item";
        if (index === this.tree.activeIndex) li.classList.add("is-active");
        li.setAttribute("role", "option");
        li.textContent = choice.label;
        li.addEventListener("click", () => {
          this.tree!.activeIndex = index;
          this.acceptActive();
        });
        this.element.appendChild(li);
      }
      return;
    }
    for (const [index, suggestion] of this.suggestions.entries()) {
      const li = doc.createElement("li");
      li.className = "dropdown-item";
      if (index === this.activeIndex) li.classList.add("is-active");
      li.setAttribute("role", "option");
      li.dataset.concept = suggestion.concept;

      const name = doc.createElement("span");
      name.className = "dropdown-display";
      name.textContent = suggestion.display;
      li.appendChild(name);

      if (suggestion.in_record) {
        const marker = doc.createElement("span");
        marker.className = "dropdown-in-record";
        marker.textContent = "●";
        marker.title = "has data in this patient's record";
        li.appendChild(marker);
      }

      const detail = doc.createElement("span");
      detail.className = "dropdown-detail";
      detail.textContent = suggestion.detail;
      li.appendChild(detail);

      li.addEventListener("click", () => {
        this.activeIndex = index;
        this.acceptActive();
      });
      this.element.appendChild(li);
    }
  }
}
