/** Recorded API payload shapes used across the console tests. */

import type {
  CrossPlatformResult,
  HistoryPage,
  Platform,
  Profile,
  RankedResult,
} from "../src/types.js";

export function profile(
  platform: Platform,
  handle: string,
  overrides: Partial<Profile> = {},
): Profile {
  const base: Profile = {
    platform,
    handle,
    display_name: `Name of ${handle}`,
    bio: "a bio",
    followers: 10,
    following: 5,
    retrieved_at: "2024-07-15T12:00:00Z",
  };
  if (platform === "twitter") {
    base.location = "Tempe";
  }
  return { ...base, ...overrides };
}

export function ranked(
  platform: Platform,
  handle: string,
  score: number,
  overrides: Partial<Profile> = {},
): RankedResult {
  return { profile: profile(platform, handle, overrides), score };
}

/** A healthy three-platform result. The merged list is the API's
 * ranking; per-platform order inside it is what columns must preserve. */
export function healthyResult(): CrossPlatformResult {
  return {
    partial: false,
    record: {
      id: "01ARZ3NDEKTSV4RRFFQ69G5FAV",
      query: "ada",
      requested_platforms: ["twitter", "instagram", "mastodon"],
      created_at: "2024-07-15T12:00:00Z",
      statuses: {
        twitter: { state: "ok", count: 2 },
        instagram: { state: "ok", count: 2 },
        mastodon: { state: "ok", count: 2 },
      },
      results: [
        ranked("mastodon", "ada", 1.0),
        ranked("twitter", "ada", 1.0),
        ranked("instagram", "adagallery", 0.9),
        ranked("twitter", "adam", 0.9),
        ranked("mastodon", "adalberta", 0.72),
        ranked("instagram", "adair", 0.64),
      ],
    },
  };
}

export function rateLimitedResult(): CrossPlatformResult {
  const base = healthyResult();
  return {
    partial: true,
    record: {
      ...base.record,
      statuses: {
        twitter: { state: "ok", count: 2 },
        instagram: { state: "ok", count: 2 },
        mastodon: { state: "error", kind: "rate_limited", detail: "retry after 15s" },
      },
      results: base.record.results.filter((r) => r.profile.platform !== "mastodon"),
    },
  };
}

export function emptyResult(): CrossPlatformResult {
  const base = healthyResult();
  return {
    partial: false,
    record: {
      ...base.record,
      statuses: {
        twitter: { state: "ok", count: 0 },
        instagram: { state: "ok", count: 0 },
        mastodon: { state: "ok", count: 0 },
      },
      results: [],
    },
  };
}

export function historyPage(): HistoryPage {
  return {
    total: 2,
    queries: [
      {
        id: "01B",
        query: "grace",
        created_at: "2024-07-15T12:05:00Z",
        platform_counts: { twitter: 2, instagram: 1, mastodon: 2 },
      },
      {
        id: "01A",
        query: "ada",
        created_at: "2024-07-15T12:00:00Z",
        platform_counts: { twitter: 3, instagram: null, mastodon: 2 },
      },
    ],
  };
}
