// Typed client for the recommender's JSON API. Talks only to the documented
// endpoints; the base URL is configurable at build time (VITE_API_BASE) or
// per instance, and defaults to same-origin relative paths.

import type {
  CitySummary,
  HealthResponse,
  NeighborhoodSummary,
  RecommendationResponse,
} from "./types";

/** A non-2xx response, carrying the server's structured error envelope. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly field?: string;

  constructor(status: number, code: string, message: string, field?: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.field = field;
  }
}

/** The surface the UI depends on; tests substitute a stub implementation. */
export interface RecommenderApi {
  fetchCities(): Promise<CitySummary[]>;
  fetchNeighborhoods(cityCode: string): Promise<NeighborhoodSummary[]>;
  recommendCities(
    liked: string[],
    disliked: string[],
  ): Promise<RecommendationResponse>;
  recommendNeighborhoods(
    destination: string,
    liked: string[],
    disliked: string[],
  ): Promise<RecommendationResponse>;
  health(): Promise<HealthResponse>;
}

function defaultBaseUrl(): string {
  const fromEnv = import.meta.env?.VITE_API_BASE;
  return typeof fromEnv === "string" ? fromEnv : "";
}

export class ApiClient implements RecommenderApi {
  private readonly baseUrl: string;

  constructor(baseUrl: string = defaultBaseUrl()) {
    // Normalize away a trailing slash so path joining is uniform.
    this.baseUrl = baseUrl.endsWith("/") ? baseUrl.slice(0, -1) : baseUrl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}${path}`, {
        headers: { "Content-Type": "application/json" },
        ...init,
      });
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      throw new ApiError(0, "NETWORK", `cannot reach the server: ${reason}`);
    }
    if (!response.ok) {
      let code = "INTERNAL";
      let message = `request failed with status ${response.status}`;
      let field: string | undefined;
      try {
        const body = await response.json();
        if (body && typeof body.message === "string") {
          code = typeof body.code === "string" ? body.code : code;
          message = body.message;
          field = typeof body.field === "string" ? body.field : undefined;
        }
      } catch {
        // Non-JSON error body: keep the generic message.
      }
      throw new ApiError(response.status, code, message, field);
    }
    return (await response.json()) as T;
  }

  fetchCities(): Promise<CitySummary[]> {
    return this.request<CitySummary[]>("/api/cities");
  }

  fetchNeighborhoods(cityCode: string): Promise<NeighborhoodSummary[]> {
    return this.request<NeighborhoodSummary[]>(
      `/api/cities/${encodeURIComponent(cityCode)}/neighborhoods`,
    );
  }

  recommendCities(
    liked: string[],
    disliked: string[],
  ): Promise<RecommendationResponse> {
    return this.request<RecommendationResponse>("/api/recommendations/cities", {
      method: "POST",
      body: JSON.stringify({ liked, disliked }),
    });
  }

  recommendNeighborhoods(
    destination: string,
    liked: string[],
    disliked: string[],
  ): Promise<RecommendationResponse> {
    return this.request<RecommendationResponse>(
      "/api/recommendations/neighborhoods",
      {
        method: "POST",
        body: JSON.stringify({ destination, liked, disliked }),
      },
    );
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/api/health");
  }
}
