/** Thin typed client for the service API. No transformation of payloads:
 * the console displays exactly what the server ranked. */

import type {
  CrossPlatformResult,
  ExportFormat,
  HistoryPage,
  Platform,
  QueryRecord,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url);
  if (!response.ok) {
    let code = "error";
    let detail = `request failed with status ${response.status}`;
    try {
      const body = (await response.json()) as { error?: string; detail?: string };
      code = body.error ?? code;
      detail = body.detail ?? detail;
    } catch {
      // non-JSON error body; keep the defaults
    }
    throw new ApiError(response.status, code, detail);
  }
  return (await response.json()) as T;
}

export function searchUrl(
  query: string,
  platforms: readonly Platform[],
  limit: number,
): string {
  const params = new URLSearchParams({
    q: query,
    platforms: platforms.join(","),
    limit: String(limit),
  });
  return `/api/search?${params}`;
}

export function search(
  query: string,
  platforms: readonly Platform[],
  limit: number,
): Promise<CrossPlatformResult> {
  return getJson(searchUrl(query, platforms, limit));
}

export function fetchHistory(offset = 0, pageSize = 20): Promise<HistoryPage> {
  const params = new URLSearchParams({
    offset: String(offset),
    page_size: String(pageSize),
  });
  return getJson(`/api/queries?${params}`);
}

export function fetchRecord(id: string): Promise<QueryRecord> {
  return getJson(`/api/queries/${encodeURIComponent(id)}`);
}

/** Raw export bytes, byte-for-byte as the server produced them. */
export async function fetchExport(id: string, format: ExportFormat): Promise<Blob> {
  const response = await fetch(
    `/api/export/${encodeURIComponent(id)}?format=${format}`,
  );
  if (!response.ok) {
    throw new ApiError(response.status, "not_found", `no export for ${id}`);
  }
  return response.blob();
}

export function exportFilename(id: string, format: ExportFormat): string {
  return `sociohub-${id}.${format === "csv" ? "csv" : "ndjson"}`;
}
