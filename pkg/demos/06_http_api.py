"""A guided tour of the JSON API, in-process (no sockets needed).

The same app normally runs under `regionrec serve`; here it is mounted on
a test client so every request/response pair can be printed. The served
engine is an immutable snapshot: identical requests get identical answers.
"""

import json

from fastapi.testclient import TestClient

from regionrec import (
    EngineConfig,
    Level,
    SyntheticSpec,
    build_profiles,
    filter_tourists,
    generate_synthetic,
    train_bundle,
)
from regionrec.ingest import attach_review_counts
from regionrec.interest import build_dataset
from regionrec.server import Engine, create_app


def show(label, payload, keep=None):
    text = json.dumps(payload, indent=2)
    if keep is not None:
        text = "\n".join(text.splitlines()[:keep]) + "\n  ..."
    print(f"\n{label}\n{text}")


# Build the engine snapshot: regions + reviews + one model per level.
spec = SyntheticSpec(
    n_cities=10,
    n_neighborhoods_per_city=5,
    n_users=40,
    n_archetypes=3,
    reviews_per_user_range=(40, 60),
    noise_rate=0.1,
    rng_seed=50,
)
regions, registry, log, _ = generate_synthetic(spec)
log = filter_tourists(log, min_cbsas=6)
regions = attach_review_counts(regions, log)
config = EngineConfig()
profiles = build_profiles(log)
bundles = {}
for level in (Level.CITY, Level.NEIGHBORHOOD):
    train, _ = build_dataset(profiles, regions, registry, config, level)
    bundles[level] = train_bundle(train, registry, level)

engine = Engine(
    regions=regions,
    registry=registry,
    log=log,
    config=config,
    city_bundle=bundles[Level.CITY],
    neighborhood_bundle=bundles[Level.NEIGHBORHOOD],
)
client = TestClient(create_app(engine))

# --- health first ---------------------------------------------------------------

show("GET /api/health", client.get("/api/health").json())

# --- browse the catalog -----------------------------------------------------------

cities = client.get("/api/cities").json()
print(f"\nGET /api/cities -> {len(cities)} cities, most reviewed first:")
for c in cities[:3]:
    print(f"  {c['code']} {c['name']:<16} reviews={c['total_reviews']}")

code = cities[0]["code"]
hoods = client.get(f"/api/cities/{code}/neighborhoods").json()
print(f"\nGET /api/cities/{code}/neighborhoods -> {len(hoods)} entries")
print(f"  first: {hoods[0]['code']} {hoods[0]['name']}")

# --- ask for recommendations -------------------------------------------------------

request = {"liked": [cities[0]["code"]], "disliked": [cities[1]["code"]]}
response = client.post("/api/recommendations/cities", json=request)
body = response.json()
print(f"\nPOST /api/recommendations/cities {request!r} -> {response.status_code}")
for rec in body["recommendations"]:
    print(f"  {rec['code']} {rec['name']:<16} score {rec['score']:.3f}")
show("  full first recommendation payload (truncated):",
     body["recommendations"][0], keep=14)

# --- validation errors are structured ----------------------------------------------

bad = client.post("/api/recommendations/cities", json={"liked": []})
show(f"0 labels -> {bad.status_code}", bad.json())

too_many = client.post(
    "/api/recommendations/cities",
    json={"liked": [c["code"] for c in cities[:7]]},
)
show(f"7 labels -> {too_many.status_code}", too_many.json())

unknown = client.post("/api/recommendations/cities", json={"liked": ["XXXXX"]})
show(f"unknown code -> {unknown.status_code}", unknown.json())

# --- determinism --------------------------------------------------------------------

first = client.post("/api/recommendations/cities", json=request)
second = client.post("/api/recommendations/cities", json=request)
print(f"\nsame request twice, byte-identical bodies: "
      f"{first.content == second.content}")
