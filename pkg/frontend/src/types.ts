// Wire payload shapes as served by the note service. Every top-level
// payload carries a format version `v`; the client refuses mismatches.

export const WIRE_VERSION = 1;

export type ConceptType =
  | "condition"
  | "lab"
  | "medication"
  | "symptom"
  | "procedure"
  | "vital_sign";

export type SectionName =
  | "HPI"
  | "ROS"
  | "PhysicalExam"
  | "MDM"
  | "ClinicianComment";

export type Modifier = {
  term: string;
  cls: string;
};

export type Chip = {
  id: string;
  origin: "autocompleted" | "post-recognized";
  start: number;
  end: number;
  surface: string;
  candidates: string[];
  resolved: string | null;
  negated: boolean;
  modifiers: Modifier[];
  in_record: boolean;
};

export type SectionDoc = {
  text: string;
  chips: Chip[];
};

export type Note = {
  v: number;
  id: string;
  patient_id: string;
  version: number;
  sections: Record<SectionName, SectionDoc>;
};

export type ConceptInfo = {
  type: ConceptType;
  canonical: string;
  detail: string;
};

/** One search-box candidate from the lookup endpoint. */
export type LookupMatch = {
  concept: string;
  display: string;
  detail: string;
  type: ConceptType;
};

export type LabStat = {
  name: string;
  value: number;
  decimals: number;
  timestamp: string;
};

export type LabFrame = {
  name: string;
  min: number;
  max: number;
  avg: number;
  decimals: number;
  result_ids: string[];
  stats: LabStat[];
};

export type LabTree = {
  concept: string;
  label: string;
  frames: LabFrame[];
};

export type Suggestion = {
  concept: string;
  display: string;
  detail: string;
  score: number;
  in_record: boolean;
  tree?: LabTree;
};

export type AutocompleteReply = {
  v: number;
  trigger: boolean;
  filter: string | null;
  prefix: string;
  replace_start: number;
  caret: number;
  version: number;
  suggestions: Suggestion[];
};

export type CardBlock = {
  kind: string;
  payload: Record<string, unknown>;
};

export type Card = {
  v: number;
  concept: string;
  title: string;
  synonyms: string[];
  body: CardBlock[];
};

export type SidebarState = {
  preview: string | null;
  pins: string[];
  pin_version: number;
  can_back: boolean;
  can_forward: boolean;
};

// Messages pushed by the service over the note stream.
export type ServerMessage =
  | { type: "hello"; note: Note; sidebar: SidebarState }
  | { type: "note"; note: Note }
  | { type: "recognitions"; section: SectionName; version: number; chips: Chip[] }
  | { type: "pins"; pins: string[]; pin_version: number }
  | { type: "preview"; card: Card; sidebar: SidebarState }
  | { type: "hover-card"; card: Card }
  | { type: "sidebar"; sidebar: SidebarState; card?: Card }
  | { type: "autofill"; applied: boolean; reason: string }
  | ({ type: "autocomplete" } & AutocompleteReply)
  | { type: "pong" }
  | { type: "error"; code: string; message: string };
