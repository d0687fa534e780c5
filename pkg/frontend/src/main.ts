// Browser entry point: annotator id comes from the query string (opaque ids
// only, no accounts), service base URL defaults to same origin.

import { mount } from "./app.js";

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("annotator");
  if (fromQuery) return fromQuery;
  const typed = window.prompt("Annotator id:") ?? "";
  return typed.trim() || `anon-${Math.random().toString(36).slice(2, 8)}`;
}

const root = document.getElementById("app");
if (root) {
  mount(root, window.location.origin, annotatorId());
}
