import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { PopoverController, chipElement, renderSection } from "../src/chips.js";
import { AMBIGUOUS_COLOR, CHIP_COLORS, chipColor } from "../src/colors.js";
import type { Card, Chip, ConceptInfo, ConceptType } from "../src/types.js";

const TYPES: ConceptType[] = [
  "condition",
  "lab",
  "medication",
  "symptom",
  "procedure",
  "vital_sign",
];

function chip(overrides: Partial<Chip> = {}): Chip {
  return {
    id: "HPI-1-0",
    origin: "post-recognized",
    start: 0,
    end: 5,
    surface: "fever",
    candidates: ["sym-fever"],
    resolved: "sym-fever",
    negated: false,
    modifiers: [],
    in_record: false,
    ...overrides,
  };
}

function conceptMap(): Map<string, ConceptInfo> {
  const map = new Map<string, ConceptInfo>();
  for (const type of TYPES) {
    map.set(`${type}-x`, { type, canonical: `${type} concept`, detail: "" });
  }
  map.set("sym-fever", { type: "symptom", canonical: "Fever", detail: "" });
  return map;
}

describe("chip colors", () => {
  it("assigns six distinct colors, one per concept type", () => {
    const colors = new Set(Object.values(CHIP_COLORS));
    expect(colors.size).toBe(6);
    expect(colors.has(AMBIGUOUS_COLOR)).toBe(false);
  });

  it("renders each type with its own background", () => {
    const concepts = conceptMap();
    const seen = new Set<string>();
    for (const type of TYPES) {
      const el = chipElement(
        document,
        chip({ resolved: `${type}-x`, candidates: [`${type}-x`] }),
        { concepts },
      );
      expect(el.className).toContain(`chip-${type}`);
      seen.add(el.style.backgroundColor);
    }
    expect(seen.size).toBe(6);
  });

  it("renders ambiguous chips grey until disambiguated", () => {
    const el = chipElement(
      document,
      chip({ resolved: null, candidates: ["cond-pt", "lab-pt"] }),
      { concepts: conceptMap() },
    );
    expect(el.className).toContain("chip-ambiguous");
    expect(chipColor(null)).toBe(AMBIGUOUS_COLOR);
    expect(el.dataset.candidates).toBe("cond-pt,lab-pt");
  });
});

describe("origin and negation rendering", () => {
  it("draws post recognitions with a dotted border", () => {
    const el = chipElement(document, chip(), { concepts: conceptMap() });
    expect(el.style.borderStyle).toBe("dotted");
  });

  it("draws accepted completions with a solid border", () => {
    const el = chipElement(document, chip({ origin: "autocompleted" }), {
      concepts: conceptMap(),
    });
    expect(el.style.borderStyle).toBe("solid");
  });

  it("renders a negated post recognition dotted plus underlined", () => {
    const el = chipElement(document, chip({ negated: true }), {
      concepts: conceptMap(),
    });
    expect(el.classList.contains("chip-negated")).toBe(true);
    expect(el.style.borderStyle).toBe("dotted");
    expect(el.style.textDecorationLine).toBe("underline");
    expect(el.style.textDecorationStyle).toBe("dotted");
  });

  it("leaves affirmed chips without the underline", () => {
    const el = chipElement(document, chip(), { concepts: conceptMap() });
    expect(el.classList.contains("chip-negated")).toBe(false);
    expect(el.style.textDecorationLine).toBe("");
  });

  it("marks chips whose concept has record data with a circle", () => {
    const flagged = chipElement(document, chip({ in_record: true }), {
      concepts: conceptMap(),
    });
    expect(flagged.querySelector(".chip-in-record")).not.toBeNull();
    expect(flagged.textContent).toBe("fever");

    const plain = chipElement(document, chip(), { concepts: conceptMap() });
    expect(plain.querySelector(".chip-in-record")).toBeNull();
  });

  it("exposes negation and modifiers in the tooltip", () => {
    const el = chipElement(
      document,
      chip({
        negated: true,
        modifiers: [{ term: "severe", cls: "severity" }],
      }),
      { concepts: conceptMap() },
    );
    expect(el.title).toBe("negated, severity: severe");
  });
});

describe("renderSection", () => {
  it("interleaves plain text with chip spans and keeps every byte", () => {
    const container = document.createElement("div");
    const text = "no fever today, potassium stable";
    renderSection(
      container,
      {
        text,
        chips: [
          chip({ id: "c1", start: 3, end: 8, surface: "fever" }),
          chip({
            id: "c2",
            start: 16,
            end: 25,
            surface: "potassium",
            resolved: "lab-x",
            candidates: ["lab-x"],
          }),
        ],
      },
      { concepts: conceptMap() },
    );
    expect(container.textContent).toBe(text);
    const rendered = container.querySelectorAll(".chip");
    expect(rendered.length).toBe(2);
    expect(rendered[0]!.textContent).toBe("fever");
    expect(rendered[1]!.textContent).toBe("potassium");
  });

  it("invokes the click handler with the chip", () => {
    const container = document.createElement("div");
    const clicks: string[] = [];
    renderSection(
      container,
      { text: "fever", chips: [chip()] },
      {
        concepts: conceptMap(),
        onChipClick: (c) => clicks.push(c.id),
      },
    );
    (container.querySelector(".chip") as HTMLElement).click();
    expect(clicks).toEqual(["HPI-1-0"]);
  });

  it("routes hover on an unresolved chip to the candidate menu", () => {
    const container = document.createElement("div");
    const hovers: string[] = [];
    renderSection(
      container,
      {
        text: "pt fever",
        chips: [
          chip({ id: "amb", end: 2, surface: "pt", resolved: null, candidates: ["a", "b"] }),
          chip({ id: "ok", start: 3, end: 8 }),
        ],
      },
      {
        concepts: conceptMap(),
        onAmbiguousHover: (c) => hovers.push(c.id),
      },
    );
    for (const el of container.querySelectorAll(".chip")) {
      el.dispatchEvent(new Event("mouseenter"));
    }
    expect(hovers).toEqual(["amb"]);
  });
});

describe("hover popover", () => {
  const card: Card = {
    v: 1,
    concept: "sym-fever",
    title: "Fever",
    synonyms: [],
    body: [{ kind: "note-snippets", payload: { snippets: [] } }],
  };

  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("shows the card after the pointer rests 300ms", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const popover = new PopoverController(root, async () => card);
    const el = chipElement(document, chip(), {
      concepts: conceptMap(),
      popover,
    });
    root.appendChild(el);

    el.dispatchEvent(new Event("mouseenter"));
    vi.advanceTimersByTime(299);
    expect(popover.element.hidden).toBe(true);

    vi.advanceTimersByTime(1);
    await vi.runAllTimersAsync();
    expect(popover.element.hidden).toBe(false);
    expect(popover.element.querySelector(".chip-popover-title")!.textContent).toBe(
      "Fever",
    );
  });

  it("never opens for a pointer that leaves before the delay", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    let fetches = 0;
    const popover = new PopoverController(root, async () => {
      fetches++;
      return card;
    });
    const el = chipElement(document, chip(), {
      concepts: conceptMap(),
      popover,
    });
    root.appendChild(el);

    el.dispatchEvent(new Event("mouseenter"));
    vi.advanceTimersByTime(150);
    el.dispatchEvent(new Event("mouseleave"));
    await vi.runAllTimersAsync();
    expect(popover.element.hidden).toBe(true);
    expect(fetches).toBe(0);
  });

  it("drops a response that lands after the pointer left", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    let release!: (value: Card) => void;
    const popover = new PopoverController(
      root,
      () => new Promise<Card | null>((resolve) => (release = resolve)),
    );
    const el = chipElement(document, chip(), {
      concepts: conceptMap(),
      popover,
    });
    root.appendChild(el);

    el.dispatchEvent(new Event("mouseenter"));
    await vi.advanceTimersByTimeAsync(300);
    el.dispatchEvent(new Event("mouseleave"));
    release(card);
    await vi.runAllTimersAsync();
    expect(popover.element.hidden).toBe(true);
  });
});
