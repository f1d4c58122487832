"""How region similarity is measured, one dimension at a time.

Builds a four-city toy world by hand, then walks through the distance
functions, the per-dimension normalization scales, and finally the full
16-feature comparison vector that the ranking model consumes.
"""

from regionrec import (
    Level,
    RegionAttributes,
    RegionId,
    RegionRecord,
    aggregate_features,
    build_registry,
    cosine_distance,
    feature_names,
    haversine_km,
    jensen_shannon_distance,
)
from regionrec.simfeat import dimension_distance

RACE = ("group_a", "group_b", "group_c")
SCENES = ("tradition", "glamour", "bohemia")
VENUES = ("dining", "outdoors", "arts")


def make_city(code, name, lat, lon, population, income, education, scenes, venues):
    return RegionRecord(
        id=RegionId(level=Level.CITY, code=code),
        name=name,
        attributes=RegionAttributes(
            population=population,
            median_income=income,
            education_rate=education,
            employment_rate=0.92,
            racial_composition=(0.5, 0.3, 0.2),
            political_leaning=0.5,
            scenes_vector=scenes,
            venue_type_distribution=venues,
            centroid_lat=lat,
            centroid_lon=lon,
        ),
    )


# Four cities with deliberately contrasting profiles: two dense coastal
# look-alikes, one mid-sized inland city, one small remote town.
harbor = make_city("C01", "Harborview", 40.7, -74.0, 880_000, 85_000, 0.42,
                   (0.4, 1.6, 1.2), (0.5, 0.1, 0.4))
bayside = make_city("C02", "Bayside", 37.8, -122.4, 810_000, 92_000, 0.45,
                    (0.3, 1.5, 1.4), (0.45, 0.15, 0.4))
plains = make_city("C03", "Plainsboro", 39.1, -94.6, 310_000, 58_000, 0.31,
                   (1.4, 0.4, 0.5), (0.4, 0.4, 0.2))
mesa = make_city("C04", "Dry Mesa", 35.1, -106.6, 45_000, 42_000, 0.22,
                 (1.6, 0.2, 0.3), (0.3, 0.6, 0.1))

records = [harbor, bayside, plains, mesa]

# --- raw distance functions -------------------------------------------------

print("great-circle distances (km):")
for a in (harbor,):
    for b in (bayside, plains, mesa):
        d = haversine_km(
            (a.attributes.centroid_lat, a.attributes.centroid_lon),
            (b.attributes.centroid_lat, b.attributes.centroid_lon),
        )
        print(f"  {a.name:>10} -> {b.name:<10} {d:8.1f}")

print("\nvenue-mix divergence (Jensen-Shannon distance, 0..1):")
print(f"  Harborview vs Bayside    {jensen_shannon_distance(harbor.attributes.venue_type_distribution, bayside.attributes.venue_type_distribution):.4f}")
print(f"  Harborview vs Dry Mesa   {jensen_shannon_distance(harbor.attributes.venue_type_distribution, mesa.attributes.venue_type_distribution):.4f}")

print("\ncultural-profile distance (1 - cosine, 0..2):")
print(f"  Harborview vs Bayside    {cosine_distance(harbor.attributes.scenes_vector, bayside.attributes.scenes_vector):.4f}")
print(f"  Harborview vs Dry Mesa   {cosine_distance(harbor.attributes.scenes_vector, mesa.attributes.scenes_vector):.4f}")

# --- the registry fixes the normalization scales ------------------------------

# Each dimension carries a scale so that every normalized distance lands in
# a comparable range: geodesic km divide by the widest pair, log-scaled
# scalars by the widest log gap, bounded distances keep scale 1.
registry = build_registry(records, RACE, SCENES, VENUES)
print("\ndimension scales fitted on this table:")
for dim in registry.dimensions:
    print(f"  {dim.name:<12} kind={dim.kind.name:<12} scale={dim.scale:10.3f} max={dim.max_distance}")

print("\nnormalized per-dimension distances, Harborview vs the rest:")
for other in (bayside, plains, mesa):
    row = ", ".join(
        f"{dim.name}={dimension_distance(dim, harbor.attributes, other.attributes):.3f}"
        for dim in registry.dimensions
    )
    print(f"  vs {other.name:<10} {row}")

# --- the 16-feature comparison vector ----------------------------------------

# A candidate is described by its mean distance to the regions the traveler
# liked (_to_top) and to the ones they disliked (_to_bottom), per dimension.
liked = [harbor, bayside]
disliked = [mesa]
candidate = plains

features = aggregate_features(candidate, liked, disliked, registry)
print(f"\nfeature vector for candidate {candidate.name}")
print(f"  (liked: {', '.join(r.name for r in liked)}; disliked: {disliked[0].name})")
for name, value in zip(feature_names(registry), features):
    print(f"  {name:<22} {value:.4f}")

# With no disliked regions at all, the _to_bottom half falls back to each
# dimension's maximum distance — a sentinel meaning "nothing to compare to".
features_no_bottom = aggregate_features(candidate, liked, [], registry)
print("\nsame candidate with an empty disliked set (sentinel kicks in):")
for name, value in zip(feature_names(registry), features_no_bottom):
    if name.endswith("_to_bottom"):
        print(f"  {name:<22} {value:.4f}")
