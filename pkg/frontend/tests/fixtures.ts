// Mocked API payloads with the exact shapes the server documents, plus a
// stub client the tests drive instead of a live backend.

import { vi } from "vitest";
import type { RecommenderApi } from "../src/api";
import type {
  CitySummary,
  Explanation,
  HealthResponse,
  NeighborhoodSummary,
  Recommendation,
  RecommendationResponse,
} from "../src/types";

export const FEATURE_NAMES = [
  "geo_to_top",
  "geo_to_bottom",
  "population_to_top",
  "population_to_bottom",
  "income_to_top",
  "income_to_bottom",
  "education_to_top",
  "education_to_bottom",
  "race_to_top",
  "race_to_bottom",
  "politics_to_top",
  "politics_to_bottom",
  "scenes_to_top",
  "scenes_to_bottom",
  "venues_to_top",
  "venues_to_bottom",
] as const;

const CITY_NAMES = [
  "Ashbrook",
  "Bayfield",
  "Cedarport",
  "Doverton",
  "Elmridge",
  "Fairharbor",
  "Glenwood",
  "Havenview",
  "Ironside",
  "Junipergate",
  "Kingsmont",
  "Larkhill",
  "Mapleford",
  "Northvale",
  "Oakbrook",
  "Pinefield",
  "Quarryford",
  "Rivergate",
  "Stoneharbor",
  "Thornhill",
  "Unionmont",
  "Valeport",
  "Westridge",
  "Wrenside",
  "Zephyrton",
];

export function makeCatalog(n = 25): CitySummary[] {
  return Array.from({ length: n }, (_, i) => ({
    code: `C${100 + i}`,
    name: CITY_NAMES[i % CITY_NAMES.length],
    description: `A test city with its own flavor, number ${i}.`,
    image_url: `https://images.test/C${100 + i}.jpg`,
    centroid: { lat: 30 + (i % 5) * 3, lon: -120 + Math.floor(i / 5) * 8 },
    total_reviews: 500 - i * 7,
  }));
}

function makeExplanation(seed: number, name: string): Explanation {
  const attributions = FEATURE_NAMES.map((feature, k) => ({
    feature,
    weight: (seed + 1) * (k % 2 === 0 ? 0.011 : -0.007) * (k + 1),
  }));
  const raw_distances: Record<string, number> = {};
  FEATURE_NAMES.forEach((feature, k) => {
    raw_distances[feature] = 0.05 * (k + 1) + 0.01 * seed;
  });
  return {
    attributions,
    intercept: 0.4 + 0.01 * seed,
    raw_distances,
    surrogate_r2: 0.9 - 0.01 * seed,
    rendered_text: `Why ${name} compared with your picks: it matches on venues and scenes.`,
    llm_prompt: `You are a travel writer. Describe ${name} using these model signals (seed ${seed}).`,
  };
}

export function recommendationFor(
  city: CitySummary,
  seed: number,
  level: "city" | "neighborhood" = "city",
  parentCity: string | null = null,
): Recommendation {
  return {
    code: city.code,
    level,
    parent_city: parentCity,
    name: city.name,
    score: 0.93 - 0.13 * seed,
    description: city.description,
    image_url: city.image_url,
    explanation: makeExplanation(seed, city.name),
  };
}

/** Three city cards drawn from the catalog's unlabeled tail. */
export function makeCityRecs(catalog: CitySummary[]): RecommendationResponse {
  return {
    recommendations: [
      recommendationFor(catalog[10], 0),
      recommendationFor(catalog[11], 1),
      recommendationFor(catalog[12], 2),
    ],
    flags: [],
  };
}

export function makeHoods(
  cityCode: string,
  n = 10,
): NeighborhoodSummary[] {
  return Array.from({ length: n }, (_, i) => ({
    code: `Z${cityCode.slice(1)}${String(i).padStart(2, "0")}`,
    parent_city: cityCode,
    name: `District ${i} of ${cityCode}`,
    description: `A compact neighborhood, number ${i}, inside ${cityCode}.`,
    description_prompt: `Write a two-sentence, visitor-friendly description of District ${i}.`,
    image_url: `https://images.test/${cityCode}-${i}.jpg`,
    centroid: { lat: 30 + i * 0.01, lon: -120 + i * 0.01 },
    total_reviews: 100 - i * 3,
  }));
}

export function makeZipRecs(destination: string): RecommendationResponse {
  const hoods = makeHoods(destination, 3);
  return {
    recommendations: hoods.map((hood, i) =>
      recommendationFor(
        { ...hood, name: `Pick ${i} in ${destination}` },
        i,
        "neighborhood",
        destination,
      ),
    ),
    flags: [],
  };
}

export const READY_HEALTH: HealthResponse = {
  status: "ready",
  model_versions: { city: 1, neighborhood: 1 },
  region_counts: { city: 25, neighborhood: 250 },
};

export interface StubApi extends RecommenderApi {
  fetchCities: ReturnType<typeof vi.fn>;
  fetchNeighborhoods: ReturnType<typeof vi.fn>;
  recommendCities: ReturnType<typeof vi.fn>;
  recommendNeighborhoods: ReturnType<typeof vi.fn>;
  health: ReturnType<typeof vi.fn>;
}

/** A happy-path stub: 25 cities, 3 recs, 10 neighborhoods per city. */
export function stubClient(catalog = makeCatalog()): StubApi {
  return {
    fetchCities: vi.fn(async () => catalog),
    fetchNeighborhoods: vi.fn(async (code: string) => makeHoods(code)),
    recommendCities: vi.fn(async () => makeCityRecs(catalog)),
    recommendNeighborhoods: vi.fn(async (destination: string) =>
      makeZipRecs(destination),
    ),
    health: vi.fn(async () => READY_HEALTH),
  };
}
