export { ApiClient, NoteStream, WireVersionError } from "./api.js";
export type { StreamHandlers, WebSocketFactory, WebSocketLike } from "./api.js";
export { AMBIGUOUS_COLOR, CHIP_COLORS, chipColor } from "./colors.js";
export { PopoverController, chipElement, renderSection } from "./chips.js";
export type { CardLoader, ChipRenderOptions } from "./chips.js";
export { SuggestionDropdown } from "./dropdown.js";
export type { AcceptHandler, LabSelection } from "./dropdown.js";
export { Sidebar, renderCard } from "./sidebar.js";
export type { SidebarHandlers } from "./sidebar.js";
export { NoteEditor, diffEdit } from "./editor.js";
export type { EditorOptions } from "./editor.js";
export * from "./types.js";
