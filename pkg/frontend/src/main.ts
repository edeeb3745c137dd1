/** Console wiring: events in, API calls out, renders in between. */

import {
  ApiError,
  exportFilename,
  fetchExport,
  fetchHistory,
  fetchRecord,
  search,
} from "./api.js";
import { downloadBlob } from "./download.js";
import {
  renderDetail,
  renderHistory,
  renderResults,
  renderShell,
  renderToast,
} from "./render.js";
import * as state from "./state.js";
import type { ExportFormat, Platform } from "./types.js";

let current = state.initialState();

function mount(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing mount point #${id}`);
  }
  return node;
}

function toast(message: string): void {
  const node = renderToast(message);
  mount("toasts").append(node);
  setTimeout(() => node.remove(), 4000);
}

function redrawResults(): void {
  const results = mount("results");
  results.replaceChildren();
  const statusLine = mount("status-line");
  statusLine.replaceChildren();
  const result = current.lastResult;
  const exportable = result !== null;
  (mount("export-csv") as HTMLButtonElement).disabled = !exportable;
  (mount("export-jsonlines") as HTMLButtonElement).disabled = !exportable;
  if (!result) {
    return;
  }
  statusLine.textContent = result.partial
    ? `partial result for "${result.record.query}" (some platforms failed)`
    : `results for "${result.record.query}"`;
  results.append(
    renderResults(result, (ranked) => {
      current = state.selectProfile(current, ranked);
      redrawDetail();
    }),
  );
}

function redrawDetail(): void {
  const detail = mount("detail-mount");
  detail.replaceChildren();
  if (current.selectedProfile) {
    detail.append(
      renderDetail(current.selectedProfile, () => {
        current = state.selectProfile(current, null);
        redrawDetail();
      }),
    );
  }
}

function redrawHistory(): void {
  const history = mount("history-mount");
  history.replaceChildren();
  if (current.history) {
    history.append(renderHistory(current.history, openRecord));
  }
}

async function refreshHistory(): Promise<void> {
  try {
    current = state.setHistory(current, await fetchHistory());
    redrawHistory();
  } catch {
    // history is non-essential; leave the panel as is
  }
}

async function openRecord(id: string): Promise<void> {
  try {
    const record = await fetchRecord(id);
    const partial = Object.values(record.statuses).some((s) => s.state === "error");
    current = state.showRecord(current, { record, partial });
    redrawResults();
    redrawDetail();
  } catch (error) {
    toast(error instanceof ApiError ? error.message : "could not load record");
  }
}

async function runSearch(): Promise<void> {
  const next = state.beginSearch(current);
  if (!next) {
    return;
  }
  current = next;
  (mount("submit") as HTMLButtonElement).disabled = true;
  try {
    const result = await search(
      current.query.trim(),
      current.selectedPlatforms,
      current.limit,
    );
    current = state.completeSearch(current, result);
    redrawResults();
    redrawDetail();
    void refreshHistory();
  } catch (error) {
    current = state.failSearch(current);
    toast(error instanceof ApiError ? error.message : "search failed");
  } finally {
    (mount("submit") as HTMLButtonElement).disabled = false;
  }
}

async function runExport(format: ExportFormat): Promise<void> {
  const result = current.lastResult;
  if (!result) {
    return;
  }
  try {
    const blob = await fetchExport(result.record.id, format);
    downloadBlob(exportFilename(result.record.id, format), blob);
  } catch (error) {
    toast(error instanceof ApiError ? error.message : "export failed");
  }
}

export function boot(): void {
  document.body.prepend(renderShell());

  const form = mount("search-form") as HTMLFormElement;
  const queryInput = mount("query") as HTMLInputElement;
  const limitSelect = mount("limit") as HTMLSelectElement;

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void runSearch();
  });
  queryInput.addEventListener("input", () => {
    current = state.setQuery(current, queryInput.value);
  });
  limitSelect.addEventListener("change", () => {
    current = state.setLimit(current, Number(limitSelect.value));
  });
  for (const box of form.querySelectorAll<HTMLInputElement>(
    'input[name="platforms"]',
  )) {
    box.addEventListener("change", () => {
      current = state.togglePlatform(current, box.value as Platform, box.checked);
    });
  }
  mount("export-csv").addEventListener("click", () => void runExport("csv"));
  mount("export-jsonlines").addEventListener("click", () =>
    void runExport("jsonlines"),
  );

  void refreshHistory();
}

boot();
