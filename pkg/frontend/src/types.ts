/** Wire types for the SocioHub HTTP API, as served under /api. */

export type Platform = "twitter" | "instagram" | "mastodon";

/** Canonical platform order; columns always render in this order. */
export const PLATFORM_ORDER: readonly Platform[] = ["twitter", "instagram", "mastodon"];

export interface Profile {
  platform: Platform;
  handle: string;
  display_name: string;
  bio: string;
  followers: number;
  following: number;
  /** Present on twitter profiles only. */
  location?: string;
  retrieved_at: string;
}

export interface RankedResult {
  profile: Profile;
  score: number;
}

export type PlatformStatus =
  | { state: "ok"; count: number }
  | { state: "error"; kind: string; detail: string };

export interface QueryRecord {
  id: string;
  query: string;
  requested_platforms: Platform[];
  created_at: string;
  statuses: Record<string, PlatformStatus>;
  /** Merged ranked list; order is the API's ranking and must be preserved. */
  results: RankedResult[];
}

export interface CrossPlatformResult {
  record: QueryRecord;
  partial: boolean;
}

export interface HistorySummary {
  id: string;
  query: string;
  created_at: string;
  platform_counts: Record<string, number | null>;
}

export interface HistoryPage {
  total: number;
  queries: HistorySummary[];
}

export type ExportFormat = "csv" | "jsonlines";
