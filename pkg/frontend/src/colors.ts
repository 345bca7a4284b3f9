import type { ConceptType } from "./types.js";

// Okabe-Ito palette: six hues distinguishable under the common forms of
// color-vision deficiency. One hue per concept type, fixed across the app
// so users can learn the mapping.
export const CHIP_COLORS: Record<ConceptType, string> = {
  condition: "#0072b2",
  medication: "#009e73",
  lab: "#d55e00",
  symptom: "#cc79a7",
  procedure: "#e69f00",
  vital_sign: "#56b4e9",
};

// Ambiguous recognitions have no settled type yet; they render grey until
// the user picks a candidate.
export const AMBIGUOUS_COLOR = "#8a8a8a";

export function chipColor(type: ConceptType | null): string {
  return type === null ? AMBIGUOUS_COLOR : CHIP_COLORS[type];
}
