// Session state for the two-stage labeling flow. The store is framework-free
// (React components attach via useSyncExternalStore) so the state machine can
// be tested without rendering anything.
//
// Stages move strictly forward:
//   CitySelect -> CityResults -> NeighborhoodSelect -> NeighborhoodResults
// The only way back is an explicit reset(). Labeling limits mirror the
// server's validation rules so the client never sends a rejectable request.

import type { LabelValue, RecommendationResponse } from "./types";

export type Stage =
  | "CitySelect"
  | "CityResults"
  | "NeighborhoodSelect"
  | "NeighborhoodResults";

/** The server accepts at most this many labeled cities per request. */
export const MAX_CITY_LABELS = 6;

export const LABEL_CAP_HINT = `At most ${MAX_CITY_LABELS} cities can be labeled. Unlabel one to add another.`;

export interface SessionState {
  stage: Stage;
  /** code -> label; key order is labeling order (drives neighborhood tab order). */
  cityLabels: Record<string, LabelValue>;
  chosenDestination: string | null;
  zipLabels: Record<string, LabelValue>;
  lastResponses: {
    cityRecs?: RecommendationResponse;
    zipRecs?: RecommendationResponse;
  };
}

export type LabelResult = { ok: true } | { ok: false; hint: string };

const STORAGE_KEY = "regionrec-session";

function freshState(): SessionState {
  return {
    stage: "CitySelect",
    cityLabels: {},
    chosenDestination: null,
    zipLabels: {},
    lastResponses: {},
  };
}

const STAGES: readonly Stage[] = [
  "CitySelect",
  "CityResults",
  "NeighborhoodSelect",
  "NeighborhoodResults",
];

function isLabelMap(value: unknown): value is Record<string, LabelValue> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    return false;
  }
  return Object.values(value).every((v) => v === "liked" || v === "disliked");
}

/** Validate persisted JSON; anything malformed falls back to a fresh session. */
function parsePersisted(raw: string): SessionState | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) {
    return null;
  }
  const d = data as Record<string, unknown>;
  if (!STAGES.includes(d.stage as Stage)) return null;
  if (!isLabelMap(d.cityLabels) || !isLabelMap(d.zipLabels)) return null;
  if (d.chosenDestination !== null && typeof d.chosenDestination !== "string") {
    return null;
  }
  const responses =
    typeof d.lastResponses === "object" && d.lastResponses !== null
      ? (d.lastResponses as SessionState["lastResponses"])
      : {};
  const state: SessionState = {
    stage: d.stage as Stage,
    cityLabels: d.cityLabels,
    chosenDestination: d.chosenDestination,
    zipLabels: d.zipLabels,
    lastResponses: responses,
  };
  // Cross-field invariants: stages past CitySelect need the data that got
  // the session there, and the destination must be one of the shown cards.
  const cityRecs = state.lastResponses.cityRecs;
  if (state.stage !== "CitySelect" && !cityRecs) return null;
  if (state.chosenDestination !== null) {
    const codes = cityRecs?.recommendations.map((r) => r.code) ?? [];
    if (!codes.includes(state.chosenDestination)) return null;
  }
  if (
    (state.stage === "NeighborhoodSelect" ||
      state.stage === "NeighborhoodResults") &&
    state.chosenDestination === null
  ) {
    return null;
  }
  return state;
}

export class SessionStore {
  private state: SessionState;
  private readonly listeners = new Set<() => void>();
  private readonly storage: Storage | null;

  constructor(storage: Storage | null = null) {
    this.storage = storage;
    this.state = this.restore() ?? freshState();
  }

  get(): SessionState {
    return this.state;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private set(next: SessionState): void {
    this.state = next;
    this.persist();
    for (const listener of this.listeners) listener();
  }

  private restore(): SessionState | null {
    if (!this.storage) return null;
    try {
      const raw = this.storage.getItem(STORAGE_KEY);
      return raw === null ? null : parsePersisted(raw);
    } catch {
      return null;
    }
  }

  private persist(): void {
    if (!this.storage) return;
    try {
      this.storage.setItem(STORAGE_KEY, JSON.stringify(this.state));
    } catch {
      // Persistence is best-effort; a full or blocked storage never breaks the UI.
    }
  }

  // ---- labeling ----------------------------------------------------------

  /**
   * Apply a like/dislike to a city. Clicking the label a city already has
   * removes it; switching is always allowed; adding a label to a seventh
   * city is rejected with a hint.
   */
  setCityLabel(code: string, value: LabelValue): LabelResult {
    const current = this.state.cityLabels[code];
    if (current === undefined) {
      if (Object.keys(this.state.cityLabels).length >= MAX_CITY_LABELS) {
        return { ok: false, hint: LABEL_CAP_HINT };
      }
      this.set({
        ...this.state,
        cityLabels: { ...this.state.cityLabels, [code]: value },
      });
      return { ok: true };
    }
    const cityLabels = { ...this.state.cityLabels };
    if (current === value) {
      delete cityLabels[code];
    } else {
      cityLabels[code] = value;
    }
    this.set({ ...this.state, cityLabels });
    return { ok: true };
  }

  /** Same toggle semantics for neighborhoods; no per-request cap here. */
  setZipLabel(zip: string, value: LabelValue): void {
    const current = this.state.zipLabels[zip];
    const zipLabels = { ...this.state.zipLabels };
    if (current === value) {
      delete zipLabels[zip];
    } else {
      zipLabels[zip] = value;
    }
    this.set({ ...this.state, zipLabels });
  }

  // ---- stage transitions (forward only) ----------------------------------

  applyCityResults(response: RecommendationResponse): void {
    if (this.state.stage !== "CitySelect") {
      throw new Error(`cannot accept city results in stage ${this.state.stage}`);
    }
    this.set({
      ...this.state,
      stage: "CityResults",
      lastResponses: { ...this.state.lastResponses, cityRecs: response },
    });
  }

  chooseDestination(code: string): void {
    if (this.state.stage !== "CityResults") {
      throw new Error(
        `cannot choose a destination in stage ${this.state.stage}`,
      );
    }
    const recs = this.state.lastResponses.cityRecs?.recommendations ?? [];
    if (!recs.some((r) => r.code === code)) {
      throw new Error(`${code} is not one of the recommended cities`);
    }
    this.set({
      ...this.state,
      stage: "NeighborhoodSelect",
      chosenDestination: code,
    });
  }

  applyZipResults(response: RecommendationResponse): void {
    if (this.state.stage !== "NeighborhoodSelect") {
      throw new Error(
        `cannot accept neighborhood results in stage ${this.state.stage}`,
      );
    }
    this.set({
      ...this.state,
      stage: "NeighborhoodResults",
      lastResponses: { ...this.state.lastResponses, zipRecs: response },
    });
  }

  /** The only backward transition: drop everything and start over. */
  reset(): void {
    this.set(freshState());
  }
}

// ---- pure selectors ------------------------------------------------------

export function likedCities(state: SessionState): string[] {
  return Object.entries(state.cityLabels)
    .filter(([, value]) => value === "liked")
    .map(([code]) => code);
}

export function dislikedCities(state: SessionState): string[] {
  return Object.entries(state.cityLabels)
    .filter(([, value]) => value === "disliked")
    .map(([code]) => code);
}

export function likedZips(state: SessionState): string[] {
  return Object.entries(state.zipLabels)
    .filter(([, value]) => value === "liked")
    .map(([code]) => code);
}

export function dislikedZips(state: SessionState): string[] {
  return Object.entries(state.zipLabels)
    .filter(([, value]) => value === "disliked")
    .map(([code]) => code);
}

/** Mirror of the server rule: 1..MAX_CITY_LABELS labels, at least one liked. */
export function canSubmitCities(state: SessionState): boolean {
  const total = Object.keys(state.cityLabels).length;
  return (
    total >= 1 &&
    total <= MAX_CITY_LABELS &&
    likedCities(state).length >= 1
  );
}

/** Mirror of the server rule at neighborhood level: at least one liked. */
export function canSubmitZips(state: SessionState): boolean {
  return likedZips(state).length >= 1;
}
