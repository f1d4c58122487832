// Payload types for the recommender's JSON API, mirroring docs/api.md in the
// repository root. All numbers displayed in the UI come verbatim from these
// payloads; the client never recomputes scores or weights.

export type Level = "city" | "neighborhood";

export type LabelValue = "liked" | "disliked";

export interface Centroid {
  lat: number;
  lon: number;
}

/** One entry of GET /api/cities. */
export interface CitySummary {
  code: string;
  name: string;
  description: string;
  image_url: string | null;
  centroid: Centroid;
  total_reviews: number;
}

/** One entry of GET /api/cities/{code}/neighborhoods. */
export interface NeighborhoodSummary extends CitySummary {
  parent_city: string;
  description_prompt: string;
}

export interface Attribution {
  feature: string;
  weight: number;
}

export interface Explanation {
  attributions: Attribution[];
  intercept: number;
  raw_distances: Record<string, number>;
  surrogate_r2: number;
  rendered_text: string;
  llm_prompt: string;
}

export interface Recommendation {
  code: string;
  level: Level;
  parent_city: string | null;
  name: string;
  score: number;
  description: string;
  image_url: string | null;
  explanation: Explanation;
}

/** Body of both POST /api/recommendations/* endpoints. */
export interface RecommendationResponse {
  recommendations: Recommendation[];
  flags: string[];
}

export interface HealthResponse {
  status: "ready" | "degraded" | "starting";
  model_versions: Record<Level, number | null>;
  region_counts: Record<Level, number>;
  missing?: string[];
}

/** Error envelope returned by every non-2xx response. */
export interface ApiErrorBody {
  code: "VALIDATION" | "NOT_FOUND" | "INTERNAL";
  message: string;
  field?: string;
}
