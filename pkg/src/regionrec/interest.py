"""Per-user interest profiles, top/bottom partitions, and labeled datasets.

Interest in a region is proxied by the user's review volume there. Regions
are ranked per user with dense ranking (ties share a rank, the next rank is
sequential), the top of the ranking becomes the positive reference set, and
every visited region yields one binary training example whose features
compare it to the user's other top/bottom regions (the candidate itself is
held out of both reference sets so its own membership cannot leak into the
features). An example whose held-out top set would be empty cannot be
featurized and is skipped.

Neighborhood-level partitions are scoped to the user's top-k cities first;
ranks are then recomputed within that restricted set so the top-m selection
is well-defined (and never empty). Neighborhoods outside the top-k cities
take no part in neighborhood-level partitions or datasets.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import (
    ConfigError,
    ContractError,
    DimensionRegistry,
    EngineConfig,
    Level,
    LoadError,
    RegionId,
    ValidationError,
    feature_names,
)
from .ingest import RegionTable, ReviewLog
from .simfeat import DistanceCache, aggregate_features

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UserProfile:
    """Review counts and dense ranks per level for one user."""

    user_id: str
    counts: dict[Level, dict[RegionId, int]]
    ranks: dict[Level, dict[RegionId, int]]

    def visited(self, level: Level) -> dict[RegionId, int]:
        return self.counts[level]


@dataclass(frozen=True)
class Partition:
    top: frozenset[RegionId]
    bottom: frozenset[RegionId]

    @property
    def universe(self) -> frozenset[RegionId]:
        return self.top | self.bottom


@dataclass(frozen=True)
class LabeledExample:
    user_id: str
    region: RegionId
    features: np.ndarray
    label: int


def dense_ranks(counts: dict[RegionId, int]) -> dict[RegionId, int]:
    """Rank regions by count, descending; ties share a rank, no gaps."""
    distinct = sorted(set(counts.values()), reverse=True)
    rank_of = {count: i + 1 for i, count in enumerate(distinct)}
    return {rid: rank_of[count] for rid, count in counts.items()}


def build_profiles(log: ReviewLog) -> list[UserProfile]:
    """One profile per user, in order of first appearance in the log.

    City counts are the sums of the user's neighborhood counts within each
    city, so both levels rank consistently with the same review evidence.
    """
    profiles = []
    for user_id, indices in log.user_index.items():
        zip_counts: dict[RegionId, int] = {}
        city_totals: dict[str, int] = {}
        for i in indices:
            rid = log.events[i].neighborhood
            zip_counts[rid] = zip_counts.get(rid, 0) + 1
            city_totals[rid.parent_city] = city_totals.get(rid.parent_city, 0) + 1
        city_counts = {
            RegionId(level=Level.CITY, code=code): count
            for code, count in city_totals.items()
        }
        profiles.append(
            UserProfile(
                user_id=user_id,
                counts={Level.CITY: city_counts, Level.NEIGHBORHOOD: zip_counts},
                ranks={
                    Level.CITY: dense_ranks(city_counts),
                    Level.NEIGHBORHOOD: dense_ranks(zip_counts),
                },
            )
        )
    return profiles


def partition_regions(
    profile: UserProfile,
    level: Level,
    k_or_m: int,
    city_k: Optional[int] = None,
) -> Partition:
    """Split the user's visited regions at ``level`` into top and bottom.

    Top = dense rank <= ``k_or_m`` (ties can push the top past ``k_or_m``
    members). At the neighborhood level the candidate pool is first
    restricted to neighborhoods of the user's top-``city_k`` cities and
    re-ranked within that pool.
    """
    if k_or_m < 1:
        raise ConfigError(f"k_or_m must be >= 1, got {k_or_m}")
    counts = profile.counts[level]
    if not counts:
        raise ContractError(
            f"user {profile.user_id!r} has no visited regions at level "
            f"{level.value!r}"
        )
    if level is Level.CITY:
        ranks = profile.ranks[Level.CITY]
    else:
        if city_k is None:
            raise ConfigError(
                "neighborhood-level partitions require city_k (the city-level"
                " top size) to scope the candidate pool"
            )
        city_partition = partition_regions(profile, Level.CITY, city_k)
        top_city_codes = {rid.code for rid in city_partition.top}
        restricted = {
            rid: count
            for rid, count in counts.items()
            if rid.parent_city in top_city_codes
        }
        ranks = dense_ranks(restricted)
    top = frozenset(rid for rid, rank in ranks.items() if rank <= k_or_m)
    bottom = frozenset(rid for rid in ranks if rid not in top)
    return Partition(top=top, bottom=bottom)


def build_dataset(
    profiles: Sequence[UserProfile],
    regions: RegionTable,
    registry: DimensionRegistry,
    config: EngineConfig,
    level: Level,
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Leave-one-out labeled examples at ``level``, split into train/test.

    For each user and each region in their partition universe, the features
    compare the region to the user's top/bottom sets with the region itself
    removed from both; the label records whether it belonged to the top.
    Users with fewer than 2 visited regions at the level contribute nothing;
    individual examples whose held-out top set is empty are skipped. The
    split is by example: ``round(train_fraction * n)`` examples, chosen by a
    permutation seeded with ``config.rng_seed``, form the train set.
    """
    if not profiles:
        raise ContractError("build_dataset requires at least one profile")
    k_or_m = config.k if level is Level.CITY else config.m
    cache: DistanceCache = {}
    examples: list[LabeledExample] = []
    for profile in profiles:
        if len(profile.counts[level]) < 2:
            logger.debug(
                "user %s: <2 visited %s regions, no examples",
                profile.user_id,
                level.value,
            )
            continue
        partition = partition_regions(profile, level, k_or_m, city_k=config.k)
        for rid in sorted(partition.universe, key=lambda r: r.code):
            top_held = partition.top - {rid}
            if not top_held:
                logger.debug(
                    "user %s: held-out top set empty for %s, example skipped",
                    profile.user_id,
                    rid.code,
                )
                continue
            bottom_held = partition.bottom - {rid}
            features = aggregate_features(
                regions[rid],
                [regions[t] for t in sorted(top_held, key=lambda r: r.code)],
                [regions[b] for b in sorted(bottom_held, key=lambda r: r.code)],
                registry,
                cache,
            )
            examples.append(
                LabeledExample(
                    user_id=profile.user_id,
                    region=rid,
                    features=features,
                    label=1 if rid in partition.top else 0,
                )
            )
    return split_examples(examples, config.train_fraction, config.rng_seed)


def split_examples(
    examples: list[LabeledExample], train_fraction: float, rng_seed: int
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Deterministic by-example split; train gets round(fraction * n)."""
    n = len(examples)
    n_train = int(round(train_fraction * n))
    perm = np.random.default_rng(rng_seed).permutation(n)
    train = [examples[i] for i in perm[:n_train]]
    test = [examples[i] for i in perm[n_train:]]
    return train, test


def examples_to_matrix(
    examples: Sequence[LabeledExample],
) -> tuple[np.ndarray, np.ndarray]:
    """Stack features into X (n, d) and labels into y (n,)."""
    if not examples:
        raise ContractError("cannot build a matrix from zero examples")
    X = np.stack([e.features for e in examples])
    y = np.asarray([e.label for e in examples], dtype=float)
    return X, y


def write_dataset_csv(
    path: str | Path,
    examples: Sequence[LabeledExample],
    registry: DimensionRegistry,
) -> None:
    names = feature_names(registry)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["user_id", "region", "label"])
        for e in examples:
            if e.features.shape != (len(names),):
                raise ContractError(
                    f"example for {e.region.code!r} has {e.features.shape} "
                    f"features, expected ({len(names)},)"
                )
            writer.writerow(
                [repr(float(v)) for v in e.features]
                + [e.user_id, e.region.code, e.label]
            )


def read_dataset_csv(
    path: str | Path, level: Level
) -> tuple[list[LabeledExample], list[str]]:
    """Load a dataset CSV; returns the examples and the feature column names.

    Region ids are reconstructed at ``level``; neighborhood parents are not
    stored in the CSV, so neighborhood-level ids carry a placeholder parent.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError(f"{path}: empty file, expected a header row") from None
        try:
            meta_start = header.index("user_id")
        except ValueError:
            raise LoadError(f"{path}: missing 'user_id' column") from None
        if header[meta_start:] != ["user_id", "region", "label"]:
            raise LoadError(
                f"{path}: expected trailing columns user_id, region, label, "
                f"got {header[meta_start:]}"
            )
        names = header[:meta_start]
        examples = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise LoadError(
                    f"{path} row {row_no}: expected {len(header)} fields, "
                    f"got {len(row)}"
                )
            try:
                features = np.asarray([float(v) for v in row[:meta_start]])
                label = int(row[meta_start + 2])
            except ValueError as exc:
                raise LoadError(f"{path} row {row_no}: {exc}") from None
            if label not in (0, 1):
                raise ValidationError(
                    f"{path} row {row_no}: label must be 0 or 1, got {label}"
                )
            region = RegionId(
                level=level,
                code=row[meta_start + 1],
                parent_city="?" if level is Level.NEIGHBORHOOD else None,
            )
            examples.append(
                LabeledExample(
                    user_id=row[meta_start],
                    region=region,
                    features=features,
                    label=label,
                )
            )
    return examples, names
