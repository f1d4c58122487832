"""Shared domain types for the region recommender.

Regions come in two granularities: cities (CBSA codes) and neighborhoods
(ZIP codes nested inside a city). Every region carries an attribute vector
spanning the fixed similarity dimensions declared in ``DimensionRegistry``;
all downstream feature construction derives its layout from that registry
and nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional


class RegionrecError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RegionrecError):
    """A domain invariant was violated at construction or load time."""


class LoadError(RegionrecError):
    """A data file was malformed; the message names the row and field."""


class ReferentialError(RegionrecError):
    """A record referenced a region code that does not exist."""


class ConfigError(RegionrecError):
    """A configuration value was outside its allowed range."""


class ContractError(RegionrecError):
    """A call violated an operation's preconditions."""


class DegenerateInputError(RegionrecError):
    """An input was numerically degenerate (e.g. a zero-norm vector)."""


class ModelIOError(RegionrecError):
    """A model file could not be read back (corrupt or wrong version)."""


class Level(str, Enum):
    CITY = "city"
    NEIGHBORHOOD = "neighborhood"


@dataclass(frozen=True)
class RegionId:
    """Identifies one region: a city (CBSA code) or a neighborhood (ZIP).

    ``parent_city`` is present exactly when ``level`` is NEIGHBORHOOD.
    """

    level: Level
    code: str
    parent_city: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.code:
            raise ValidationError("region code must be non-empty")
        if self.level is Level.NEIGHBORHOOD and not self.parent_city:
            raise ValidationError(
                f"neighborhood {self.code!r} is missing its parent city"
            )
        if self.level is Level.CITY and self.parent_city is not None:
            raise ValidationError(
                f"city {self.code!r} must not declare a parent city"
            )


def _check_fraction(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValidationError(f"{name} must lie in [0,1], got {value}")


def _check_distribution(name: str, values: tuple[float, ...]) -> None:
    if any(v < 0 for v in values):
        raise ValidationError(f"{name} has a negative entry: {values}")
    total = sum(values)
    if abs(total - 1.0) > 1e-6:
        raise ValidationError(f"{name} must sum to 1 +/- 1e-6, got {total}")


@dataclass(frozen=True)
class RegionAttributes:
    """Attribute vector for one region across all similarity dimensions.

    Distribution-valued fields (racial composition, venue types) are
    probability vectors over category lists declared once per region table;
    the scenes vector is a fixed-length cultural-dimension score vector.
    """

    population: float
    median_income: float
    education_rate: float
    employment_rate: float
    racial_composition: tuple[float, ...]
    political_leaning: float
    scenes_vector: tuple[float, ...]
    venue_type_distribution: tuple[float, ...]
    centroid_lat: float
    centroid_lon: float

    def __post_init__(self) -> None:
        if self.population < 0:
            raise ValidationError(f"population must be >= 0, got {self.population}")
        if self.median_income < 0:
            raise ValidationError(
                f"median_income must be >= 0, got {self.median_income}"
            )
        _check_fraction("education_rate", self.education_rate)
        _check_fraction("employment_rate", self.employment_rate)
        _check_fraction("political_leaning", self.political_leaning)
        _check_distribution("racial_composition", self.racial_composition)
        _check_distribution("venue_type_distribution", self.venue_type_distribution)
        if not (-90.0 <= self.centroid_lat <= 90.0):
            raise ValidationError(f"centroid_lat out of range: {self.centroid_lat}")
        if not (-180.0 <= self.centroid_lon <= 180.0):
            raise ValidationError(f"centroid_lon out of range: {self.centroid_lon}")
        if any(not math.isfinite(v) for v in self.scenes_vector):
            raise ValidationError("scenes_vector contains a non-finite entry")


@dataclass(frozen=True)
class RegionRecord:
    """One region plus its display metadata and review-count popularity."""

    id: RegionId
    attributes: RegionAttributes
    name: str
    description: str = ""
    image_url: Optional[str] = None
    total_reviews: int = 0

    def __post_init__(self) -> None:
        if self.total_reviews < 0:
            raise ValidationError("total_reviews must be >= 0")

    def with_total_reviews(self, count: int) -> "RegionRecord":
        return replace(self, total_reviews=count)


def record_to_dict(record: RegionRecord) -> dict:
    """JSON-compatible representation of a region record."""
    a = record.attributes
    return {
        "level": record.id.level.value,
        "code": record.id.code,
        "parent_city": record.id.parent_city,
        "name": record.name,
        "description": record.description,
        "image_url": record.image_url,
        "total_reviews": record.total_reviews,
        "attributes": {
            "population": a.population,
            "median_income": a.median_income,
            "education_rate": a.education_rate,
            "employment_rate": a.employment_rate,
            "racial_composition": list(a.racial_composition),
            "political_leaning": a.political_leaning,
            "scenes_vector": list(a.scenes_vector),
            "venue_type_distribution": list(a.venue_type_distribution),
            "centroid_lat": a.centroid_lat,
            "centroid_lon": a.centroid_lon,
        },
    }


def record_from_dict(data: dict) -> RegionRecord:
    a = data["attributes"]
    return RegionRecord(
        id=RegionId(
            level=Level(data["level"]),
            code=data["code"],
            parent_city=data.get("parent_city"),
        ),
        attributes=RegionAttributes(
            population=a["population"],
            median_income=a["median_income"],
            education_rate=a["education_rate"],
            employment_rate=a["employment_rate"],
            racial_composition=tuple(a["racial_composition"]),
            political_leaning=a["political_leaning"],
            scenes_vector=tuple(a["scenes_vector"]),
            venue_type_distribution=tuple(a["venue_type_distribution"]),
            centroid_lat=a["centroid_lat"],
            centroid_lon=a["centroid_lon"],
        ),
        name=data["name"],
        description=data.get("description", ""),
        image_url=data.get("image_url"),
        total_reviews=data.get("total_reviews", 0),
    )


class DimensionKind(str, Enum):
    SCALAR_LOG = "scalar_log"
    SCALAR_ABS = "scalar_abs"
    DISTRIBUTION = "distribution"
    VECTOR = "vector"
    GEODESIC = "geodesic"


@dataclass(frozen=True)
class Dimension:
    """One similarity dimension: its name, distance kind, and scale.

    ``scale`` normalizes raw distances (max pairwise geodesic km for geo,
    max pairwise log1p gap for the log-scaled scalars, 1.0 where the raw
    distance is already bounded). ``max_distance`` is the dimension's
    normalized maximum, used as the empty-reference-set sentinel.
    """

    name: str
    kind: DimensionKind
    scale: float = 1.0
    max_distance: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValidationError(f"dimension {self.name!r} scale must be > 0")


# Canonical layout: name -> kind, in the one fixed order the feature vector
# uses. "employment" is the optional ninth dimension appended only when the
# engine is configured with include_employment=True.
DIMENSION_ORDER: tuple[tuple[str, DimensionKind], ...] = (
    ("geo", DimensionKind.GEODESIC),
    ("population", DimensionKind.SCALAR_LOG),
    ("income", DimensionKind.SCALAR_LOG),
    ("education", DimensionKind.SCALAR_ABS),
    ("race", DimensionKind.DISTRIBUTION),
    ("politics", DimensionKind.SCALAR_ABS),
    ("scenes", DimensionKind.VECTOR),
    ("venues", DimensionKind.DISTRIBUTION),
)

EMPLOYMENT_DIMENSION: tuple[str, DimensionKind] = (
    "employment",
    DimensionKind.SCALAR_ABS,
)


@dataclass(frozen=True)
class DimensionRegistry:
    """The ordered similarity dimensions plus their normalization constants.

    Construction rejects any deviation from the canonical dimension order,
    so every feature vector in the system shares one layout. Category and
    scene-dimension names are table-defined (declared in the region-table
    header), never hard-coded.
    """

    dimensions: tuple[Dimension, ...]
    racial_categories: tuple[str, ...]
    scene_names: tuple[str, ...]
    venue_categories: tuple[str, ...]

    def __post_init__(self) -> None:
        expected = list(DIMENSION_ORDER)
        if len(self.dimensions) == len(DIMENSION_ORDER) + 1:
            expected.append(EMPLOYMENT_DIMENSION)
        if len(self.dimensions) != len(expected):
            raise ValidationError(
                f"registry must declare {len(DIMENSION_ORDER)} dimensions "
                f"(+1 with employment), got {len(self.dimensions)}"
            )
        for dim, (name, kind) in zip(self.dimensions, expected):
            if dim.name != name or dim.kind is not kind:
                raise ValidationError(
                    f"dimension order violated: expected {name}/{kind.value}, "
                    f"got {dim.name}/{dim.kind.value}"
                )
        for label, values in (
            ("racial_categories", self.racial_categories),
            ("scene_names", self.scene_names),
            ("venue_categories", self.venue_categories),
        ):
            if not values:
                raise ValidationError(f"{label} must be non-empty")

    @property
    def scenes_length(self) -> int:
        return len(self.scene_names)

    @property
    def include_employment(self) -> bool:
        return len(self.dimensions) == len(DIMENSION_ORDER) + 1

    @property
    def feature_count(self) -> int:
        return 2 * len(self.dimensions)


def feature_names(registry: DimensionRegistry) -> list[str]:
    """Fixed feature-vector layout: per dimension, distance-to-top then
    distance-to-bottom. Pure; identical registries yield identical lists."""
    names: list[str] = []
    for dim in registry.dimensions:
        names.append(f"{dim.name}_to_top")
        names.append(f"{dim.name}_to_bottom")
    return names


@dataclass(frozen=True)
class EngineConfig:
    """Tunable knobs for the whole pipeline.

    ``k`` / ``m`` size the top partitions at the city / neighborhood level;
    the remaining counts mirror the served catalog sizes and the default
    recommendation count. GBDT and LIME hyperparameters live with their
    modules and are attached in :class:`regionrec.recsys` when training.
    """

    k: int = 2
    m: int = 3
    min_cbsas_per_user: int = 6
    n_city_recs: int = 3
    n_popular_cities: int = 25
    n_popular_neighborhoods: int = 10
    train_fraction: float = 0.8
    rng_seed: int = 7
    include_employment: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.min_cbsas_per_user < 1:
            raise ConfigError("min_cbsas_per_user must be >= 1")
        if self.n_city_recs < 1:
            raise ConfigError("n_city_recs must be >= 1")
        if self.n_popular_cities < 1:
            raise ConfigError("n_popular_cities must be >= 1")
        if self.n_popular_neighborhoods < 1:
            raise ConfigError("n_popular_neighborhoods must be >= 1")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError(
                f"train_fraction must lie in (0,1), got {self.train_fraction}"
            )
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be non-negative")
