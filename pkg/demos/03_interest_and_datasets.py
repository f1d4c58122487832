"""From raw review events to a labeled train/test dataset.

Review counts are the interest signal. Each user's visited regions are
dense-ranked by count, the top of the ranking becomes the positive class,
and features for each example compare the region to the user's own top and
bottom sets with the region held out of them (leave-one-out).
"""

import tempfile
from pathlib import Path

from regionrec import (
    EngineConfig,
    Level,
    SyntheticSpec,
    build_profiles,
    filter_tourists,
    generate_synthetic,
    partition_regions,
)
from regionrec.interest import (
    build_dataset,
    dense_ranks,
    read_dataset_csv,
    write_dataset_csv,
)

# A compact generated world: 8 cities x 4 neighborhoods, 24 travelers whose
# tastes follow 2 planted archetypes plus 15% noise. Same seed, same bytes.
spec = SyntheticSpec(
    n_cities=8,
    n_neighborhoods_per_city=4,
    n_users=24,
    n_archetypes=2,
    reviews_per_user_range=(30, 50),
    noise_rate=0.15,
    rng_seed=20,
)
regions, registry, log, assignments = generate_synthetic(spec)
print(f"generated {len(regions)} regions, {len(log.events)} reviews, "
      f"{log.n_users} users")

# Keep only users who reviewed widely enough to reveal a taste profile.
log = filter_tourists(log, min_cbsas=6)
print(f"after the wide-traveler filter: {log.n_users} users remain")

# --- one user's interest profile ----------------------------------------------

profiles = build_profiles(log)
profile = profiles[0]
city_counts = profile.counts[Level.CITY]
print(f"\nuser {profile.user_id} reviewed {len(city_counts)} cities:")
for rid, count in sorted(city_counts.items(), key=lambda kv: -kv[1]):
    rank = profile.ranks[Level.CITY][rid]
    print(f"  {rid.code}: {count:3d} reviews -> dense rank {rank}")

# Dense ranking shares a rank between ties and never skips a number.
toy = dense_ranks({"a": 7, "b": 7, "c": 3, "d": 1})
print(f"\ndense_ranks on counts 7,7,3,1 -> {toy}")

# --- top/bottom partition -----------------------------------------------------

# Top = every region whose dense rank is <= k. Ties can push the top set
# past k members; that is intended — equally-loved places stay together.
partition = partition_regions(profile, Level.CITY, k_or_m=2)
print(f"\nk=2 partition for {profile.user_id}:")
print(f"  top    = {sorted(rid.code for rid in partition.top)}")
print(f"  bottom = {sorted(rid.code for rid in partition.bottom)}")

# --- leave-one-out labeled examples -------------------------------------------

config = EngineConfig(k=2, m=3, train_fraction=0.8, rng_seed=20)
train, test = build_dataset(profiles, regions, registry, config, Level.CITY)
print(f"\ncity-level dataset: {len(train)} train / {len(test)} test examples")
positives = sum(e.label for e in train)
print(f"  train positives: {positives} ({positives / len(train):.0%})")

example = train[0]
print(f"  example: user={example.user_id} region={example.region.code} "
      f"label={example.label} features[:4]="
      f"{[round(float(v), 3) for v in example.features[:4]]}")

# --- the CSV round-trip -------------------------------------------------------

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "city.train.csv"
    write_dataset_csv(path, train, registry)
    reloaded, names = read_dataset_csv(path, Level.CITY)
    print(f"\nwrote and reloaded {len(reloaded)} examples; "
          f"{len(names)} feature columns")
    print(f"  first columns: {names[:4]}")
