// Binds the session store to the API client and enforces the request
// discipline: at most one recommendation request in flight, and a response
// that was superseded by a newer submission is discarded instead of applied.

import type { RecommenderApi } from "./api";
import type { NeighborhoodSummary } from "./types";
import {
  canSubmitCities,
  canSubmitZips,
  dislikedCities,
  dislikedZips,
  likedCities,
  likedZips,
  SessionStore,
} from "./session";

/** The labeling list for one liked city on the neighborhood screen. */
export interface NeighborhoodPanel {
  cityCode: string;
  neighborhoods: NeighborhoodSummary[];
}

export class SessionController {
  private seq = 0;

  constructor(
    private readonly store: SessionStore,
    private readonly client: RecommenderApi,
  ) {}

  /**
   * Send the labeled cities off for recommendations and advance the stage.
   * Resolves false when the response was superseded and discarded.
   */
  async submitCityLabels(): Promise<boolean> {
    const state = this.store.get();
    if (!canSubmitCities(state)) {
      throw new Error("label between 1 and 6 cities, at least one liked");
    }
    const ticket = ++this.seq;
    const response = await this.client.recommendCities(
      likedCities(state),
      dislikedCities(state),
    );
    if (ticket !== this.seq) {
      return false;
    }
    this.store.applyCityResults(response);
    return true;
  }

  /**
   * Request neighborhood recommendations inside the chosen destination,
   * using the liked/disliked neighborhoods as labels.
   */
  async submitZipLabels(): Promise<boolean> {
    const state = this.store.get();
    if (state.chosenDestination === null) {
      throw new Error("choose a destination city first");
    }
    if (!canSubmitZips(state)) {
      throw new Error("like at least one neighborhood");
    }
    const ticket = ++this.seq;
    const response = await this.client.recommendNeighborhoods(
      state.chosenDestination,
      likedZips(state),
      dislikedZips(state),
    );
    if (ticket !== this.seq) {
      return false;
    }
    this.store.applyZipResults(response);
    return true;
  }

  /**
   * Load the labeling panels for the neighborhood screen: one per liked
   * city, in the order the likes were given.
   */
  async fetchPanels(): Promise<NeighborhoodPanel[]> {
    const liked = likedCities(this.store.get());
    const lists = await Promise.all(
      liked.map((code) => this.client.fetchNeighborhoods(code)),
    );
    return liked.map((cityCode, i) => ({
      cityCode,
      neighborhoods: lists[i],
    }));
  }
}
