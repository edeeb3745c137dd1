/** DOM builders for the console.
 *
 * Rendering never reorders, filters, or reformats result data: each
 * platform column is the API's merged ranked list filtered to that
 * platform, in the API's order. Twitter cards carry one extra labeled
 * field (location); every other card shows exactly the five core
 * attributes.
 */

import { PLATFORM_ORDER } from "./types.js";
import type {
  CrossPlatformResult,
  HistoryPage,
  HistorySummary,
  Platform,
  PlatformStatus,
  RankedResult,
} from "./types.js";

type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Child[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

function field(name: string, label: string, value: string): HTMLElement {
  return el("div", { class: "field", "data-field": name }, [
    el("span", { class: "field-label" }, [label]),
    el("span", { class: "field-value" }, [value]),
  ]);
}

export function renderCard(
  ranked: RankedResult,
  onSelect?: (ranked: RankedResult) => void,
): HTMLElement {
  const p = ranked.profile;
  const card = el(
    "article",
    {
      class: "card",
      "data-platform": p.platform,
      "data-handle": p.handle,
      "data-score": String(ranked.score),
    },
    [
      el("div", { class: "card-head" }, [
        el("span", { class: "score-badge", title: "relevance" }, [
          ranked.score.toFixed(2),
        ]),
      ]),
      field("handle", "handle", `@${p.handle}`),
      field("display_name", "name", p.display_name),
      field("bio", "bio", p.bio),
      field("followers", "followers", String(p.followers)),
      field("following", "following", String(p.following)),
    ],
  );
  if (p.platform === "twitter") {
    card.append(field("location", "location", p.location ?? ""));
  }
  if (onSelect) {
    card.addEventListener("click", () => onSelect(ranked));
  }
  return card;
}

export function bannerText(status: PlatformStatus & { state: "error" }): string {
  if (status.kind === "rate_limited") {
    const match = status.detail.match(/([0-9]+(?:\.[0-9]+)?)/);
    if (match) {
      return `rate limited, retry in ${match[1]} s`;
    }
    return "rate limited";
  }
  return `${status.kind.replace(/_/g, " ")}: ${status.detail}`;
}

export function renderResults(
  result: CrossPlatformResult,
  onSelect?: (ranked: RankedResult) => void,
): HTMLElement {
  const record = result.record;
  const columns = PLATFORM_ORDER.filter((p) =>
    record.requested_platforms.includes(p),
  );
  const view = el("div", { class: "columns", "data-record-id": record.id });
  for (const platform of columns) {
    view.append(renderColumn(platform, record.statuses[platform], record.results, onSelect));
  }
  return view;
}

function renderColumn(
  platform: Platform,
  status: PlatformStatus | undefined,
  results: readonly RankedResult[],
  onSelect?: (ranked: RankedResult) => void,
): HTMLElement {
  const column = el("section", { class: "column", "data-platform": platform }, [
    el("h2", {}, [platform]),
  ]);
  if (status && status.state === "error") {
    column.append(
      el("div", { class: `banner banner-${status.kind}`, role: "alert" }, [
        bannerText(status),
      ]),
    );
    return column;
  }
  const mine = results.filter((r) => r.profile.platform === platform);
  if (mine.length === 0) {
    column.append(el("p", { class: "empty" }, ["no matches"]));
    return column;
  }
  for (const ranked of mine) {
    column.append(renderCard(ranked, onSelect));
  }
  return column;
}

export function renderDetail(
  ranked: RankedResult,
  onClose?: () => void,
): HTMLElement {
  const p = ranked.profile;
  const close = el("button", { class: "close", type: "button" }, ["close"]);
  if (onClose) {
    close.addEventListener("click", onClose);
  }
  const rows: Child[] = [
    el("h3", {}, [`@${p.handle} on ${p.platform}`]),
    field("display_name", "name", p.display_name),
    field("bio", "bio", p.bio),
    field("followers", "followers", String(p.followers)),
    field("following", "following", String(p.following)),
  ];
  if (p.platform === "twitter") {
    rows.push(field("location", "location", p.location ?? ""));
  }
  rows.push(field("retrieved_at", "retrieved", p.retrieved_at));
  rows.push(field("score", "relevance", ranked.score.toFixed(4)));
  rows.push(close);
  return el("aside", { class: "detail" }, rows);
}

function historyCounts(summary: HistorySummary): string {
  return PLATFORM_ORDER.filter((p) => p in summary.platform_counts)
    .map((p) => {
      const count = summary.platform_counts[p];
      return `${p[0]}:${count === null ? "err" : count}`;
    })
    .join(" ");
}

export function renderHistory(
  page: HistoryPage,
  onOpen?: (id: string) => void,
): HTMLElement {
  const list = el("ul", { class: "history" });
  for (const summary of page.queries) {
    const open = el("button", { class: "history-item", type: "button" }, [
      el("span", { class: "history-query" }, [summary.query]),
      el("span", { class: "history-counts" }, [historyCounts(summary)]),
      el("span", { class: "history-when" }, [summary.created_at]),
    ]);
    if (onOpen) {
      open.addEventListener("click", () => onOpen(summary.id));
    }
    list.append(el("li", { "data-id": summary.id }, [open]));
  }
  if (page.queries.length === 0) {
    list.append(el("li", { class: "empty" }, ["no searches yet"]));
  }
  return list;
}

export function renderToast(message: string): HTMLElement {
  return el("div", { class: "toast", role: "status" }, [message]);
}

/** Static page skeleton. Search input, platform checkboxes, and limit
 * selector only: the console has no credential inputs of any kind. */
export function renderShell(): HTMLElement {
  const checkboxes = PLATFORM_ORDER.map((platform) =>
    el("label", { class: "platform-toggle" }, [
      el("input", {
        type: "checkbox",
        name: "platforms",
        value: platform,
        checked: "",
      }),
      platform,
    ]),
  );
  return el("main", { class: "app" }, [
    el("header", {}, [
      el("h1", {}, ["SocioHub"]),
      el("p", { class: "tagline" }, ["one query, three platforms"]),
    ]),
    el("form", { id: "search-form" }, [
      el("input", {
        id: "query",
        name: "q",
        type: "search",
        placeholder: "search a username…",
        autocomplete: "off",
      }),
      ...checkboxes,
      el("select", { id: "limit", name: "limit" }, [
        el("option", { value: "5" }, ["5"]),
        el("option", { value: "10", selected: "" }, ["10"]),
        el("option", { value: "20" }, ["20"]),
        el("option", { value: "50" }, ["50"]),
      ]),
      el("button", { id: "submit", type: "submit" }, ["search"]),
    ]),
    el("div", { id: "status-line" }),
    el("div", { id: "export-bar" }, [
      el("button", { id: "export-csv", type: "button", disabled: "" }, ["export csv"]),
      el("button", { id: "export-jsonlines", type: "button", disabled: "" }, [
        "export json lines",
      ]),
    ]),
    el("div", { id: "results" }),
    el("div", { id: "detail-mount" }),
    el("section", { id: "history-panel" }, [
      el("h2", {}, ["history"]),
      el("div", { id: "history-mount" }),
    ]),
    el("div", { id: "toasts" }),
  ]);
}
