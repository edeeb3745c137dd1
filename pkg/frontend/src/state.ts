/** In-memory view state and its transitions.
 *
 * Transitions are pure: they take a state and return the next one (or
 * null when the transition is not allowed), which keeps the in-flight
 * guard and platform-selection rules unit-testable without a DOM.
 */

import { PLATFORM_ORDER } from "./types.js";
import type {
  CrossPlatformResult,
  HistoryPage,
  Platform,
  RankedResult,
} from "./types.js";

export interface ViewState {
  query: string;
  selectedPlatforms: readonly Platform[];
  limit: number;
  inFlight: boolean;
  lastResult: CrossPlatformResult | null;
  history: HistoryPage | null;
  selectedProfile: RankedResult | null;
}

export function initialState(): ViewState {
  return {
    query: "",
    selectedPlatforms: [...PLATFORM_ORDER],
    limit: 10,
    inFlight: false,
    lastResult: null,
    history: null,
    selectedProfile: null,
  };
}

/** Start a search; null when one is already running or input is unusable. */
export function beginSearch(state: ViewState): ViewState | null {
  if (state.inFlight) {
    return null;
  }
  if (state.query.trim() === "" || state.selectedPlatforms.length === 0) {
    return null;
  }
  return { ...state, inFlight: true, selectedProfile: null };
}

export function completeSearch(
  state: ViewState,
  result: CrossPlatformResult,
): ViewState {
  return { ...state, inFlight: false, lastResult: result };
}

export function failSearch(state: ViewState): ViewState {
  return { ...state, inFlight: false };
}

export function setQuery(state: ViewState, query: string): ViewState {
  return { ...state, query };
}

export function setLimit(state: ViewState, limit: number): ViewState {
  return { ...state, limit };
}

/** Toggle one platform; selection keeps canonical order. */
export function togglePlatform(
  state: ViewState,
  platform: Platform,
  on: boolean,
): ViewState {
  const chosen = new Set(state.selectedPlatforms);
  if (on) {
    chosen.add(platform);
  } else {
    chosen.delete(platform);
  }
  return {
    ...state,
    selectedPlatforms: PLATFORM_ORDER.filter((p) => chosen.has(p)),
  };
}

export function showRecord(state: ViewState, result: CrossPlatformResult): ViewState {
  return { ...state, lastResult: result, selectedProfile: null };
}

export function selectProfile(
  state: ViewState,
  profile: RankedResult | null,
): ViewState {
  return { ...state, selectedProfile: profile };
}

export function setHistory(state: ViewState, history: HistoryPage): ViewState {
  return { ...state, history };
}
