/**
 * Browser entry point. Query parameters pick the service and identity:
 *
 *   index.html?base=http://127.0.0.1:8000&patient=p001&user=dr-a
 *   index.html?base=...&note=note-0001&user=dr-b   (join an open note)
 *
 * Connecting a second tab or machine to the same note exercises the
 * collaborative path: edits, chips, and pins stay in sync everywhere.
 */
import { ApiClient } from "./api.js";
import { NoteEditor } from "./editor.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("base") ?? "http://127.0.0.1:8000";
  const user = params.get("user") ?? "anonymous";
  const root = document.getElementById("editor");
  if (!root) throw new Error("missing #editor element");
  root.classList.add("knowted-editor");

  let noteId = params.get("note");
  if (!noteId) {
    const patient = params.get("patient");
    if (!patient) {
      root.textContent = "pass ?patient=<id> to start a note or ?note=<id> to join one";
      return;
    }
    const api = new ApiClient(base, user);
    noteId = (await api.createNote(patient)).id;
    const joinable = new URL(window.location.href);
    joinable.searchParams.delete("patient");
    joinable.searchParams.set("note", noteId);
    console.log(`note ${noteId}; share ${joinable} to collaborate`);
  }

  await NoteEditor.open(root, base, {
    noteId,
    user,
    wsFactory: (url) => new WebSocket(url),
  });
}

void boot();
