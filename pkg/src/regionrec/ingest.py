"""Region-table and review-log I/O, the tourist filter, and synthetic data.

File formats are line-delimited UTF-8 CSV so fixtures stay inspectable:

* Region table: header row with the fixed prefix columns ``level, code,
  parent_city, name, description, image_url, population, median_income,
  education_rate, employment_rate, political_leaning, centroid_lat,
  centroid_lon`` followed by ``race:<category>``, ``scene:<dim>`` and
  ``venue:<category>`` columns in any order; category lists are inferred
  from the header.
* Review log: header ``user_id, zip, timestamp`` with timestamp optional.

The synthetic generator plants latent user archetypes (taste clusters) and
emits the ground-truth assignment alongside the data, so desk-scale
experiments can check that the pipeline recovers known structure.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .core import (
    ConfigError,
    ContractError,
    DimensionRegistry,
    Level,
    LoadError,
    ReferentialError,
    RegionAttributes,
    RegionId,
    RegionRecord,
    ValidationError,
)
from .simfeat import build_registry

RegionTable = dict[RegionId, RegionRecord]

_FIXED_COLUMNS = (
    "level",
    "code",
    "parent_city",
    "name",
    "description",
    "image_url",
    "population",
    "median_income",
    "education_rate",
    "employment_rate",
    "political_leaning",
    "centroid_lat",
    "centroid_lon",
)


@dataclass(frozen=True)
class ReviewEvent:
    user_id: str
    neighborhood: RegionId
    timestamp: Optional[int] = None


@dataclass
class ReviewLog:
    """Ordered review events plus a user -> event-index lookup."""

    events: list[ReviewEvent] = field(default_factory=list)
    user_index: dict[str, list[int]] = field(default_factory=dict)

    @classmethod
    def from_events(cls, events: Iterable[ReviewEvent]) -> "ReviewLog":
        log = cls(events=list(events))
        for i, event in enumerate(log.events):
            log.user_index.setdefault(event.user_id, []).append(i)
        return log

    @property
    def n_users(self) -> int:
        return len(self.user_index)

    def events_for(self, user_id: str) -> list[ReviewEvent]:
        return [self.events[i] for i in self.user_index.get(user_id, [])]


# ---------------------------------------------------------------------------
# Region table I/O


def load_regions(path: str | Path) -> tuple[RegionTable, DimensionRegistry]:
    """Load and validate a region table; derive the dimension registry.

    Raises ``LoadError`` for malformed rows (naming row and field),
    ``ValidationError`` for invariant violations, and ``ReferentialError``
    for neighborhoods whose parent city is missing from the table.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read region table {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise LoadError(f"{path}: empty file, expected a header row")
        missing = [c for c in _FIXED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise LoadError(f"{path}: missing required columns {missing}")
        racial = tuple(
            c[len("race:"):] for c in reader.fieldnames if c.startswith("race:")
        )
        scenes = tuple(
            c[len("scene:"):] for c in reader.fieldnames if c.startswith("scene:")
        )
        venues = tuple(
            c[len("venue:"):] for c in reader.fieldnames if c.startswith("venue:")
        )
        if not racial or not scenes or not venues:
            raise LoadError(
                f"{path}: header must declare race:<cat>, scene:<dim> and "
                f"venue:<cat> columns"
            )

        regions: RegionTable = {}
        seen: dict[tuple[Level, str], int] = {}
        for row_no, row in enumerate(reader, start=2):
            record = _parse_region_row(path, row_no, row, racial, scenes, venues)
            key = (record.id.level, record.id.code)
            if key in seen:
                raise ValidationError(
                    f"{path} row {row_no}: duplicate {record.id.level.value} "
                    f"code {record.id.code!r} (first seen at row {seen[key]})"
                )
            seen[key] = row_no
            regions[record.id] = record

    if not regions:
        raise LoadError(f"{path}: table contains no regions")
    city_codes = {rid.code for rid in regions if rid.level is Level.CITY}
    for rid in regions:
        if rid.level is Level.NEIGHBORHOOD and rid.parent_city not in city_codes:
            raise ReferentialError(
                f"{path}: neighborhood {rid.code!r} references unknown parent "
                f"city {rid.parent_city!r}"
            )
    registry = build_registry(regions.values(), racial, scenes, venues)
    return regions, registry


def _parse_region_row(
    path: Path,
    row_no: int,
    row: dict[str, str],
    racial: tuple[str, ...],
    scenes: tuple[str, ...],
    venues: tuple[str, ...],
) -> RegionRecord:
    def get(fieldname: str) -> str:
        value = row.get(fieldname)
        if value is None:
            raise LoadError(f"{path} row {row_no}: missing field {fieldname!r}")
        return value.strip()

    def number(fieldname: str) -> float:
        raw = get(fieldname)
        try:
            value = float(raw)
        except ValueError:
            raise LoadError(
                f"{path} row {row_no}: field {fieldname!r} is not a number: {raw!r}"
            ) from None
        if not math.isfinite(value):
            raise LoadError(
                f"{path} row {row_no}: field {fieldname!r} is not finite: {raw!r}"
            )
        return value

    level_raw = get("level")
    try:
        level = Level(level_raw)
    except ValueError:
        raise LoadError(
            f"{path} row {row_no}: field 'level' must be "
            f"'city' or 'neighborhood', got {level_raw!r}"
        ) from None
    parent = get("parent_city") or None

    try:
        region_id = RegionId(level=level, code=get("code"), parent_city=parent)
        attributes = RegionAttributes(
            population=number("population"),
            median_income=number("median_income"),
            education_rate=number("education_rate"),
            employment_rate=number("employment_rate"),
            racial_composition=tuple(number(f"race:{c}") for c in racial),
            political_leaning=number("political_leaning"),
            scenes_vector=tuple(number(f"scene:{s}") for s in scenes),
            venue_type_distribution=tuple(number(f"venue:{v}") for v in venues),
            centroid_lat=number("centroid_lat"),
            centroid_lon=number("centroid_lon"),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path} row {row_no}: {exc}") from exc
    return RegionRecord(
        id=region_id,
        attributes=attributes,
        name=get("name"),
        description=get("description"),
        image_url=get("image_url") or None,
    )


def write_regions(
    path: str | Path, regions: RegionTable, registry: DimensionRegistry
) -> None:
    """Write a region table in the documented CSV format (deterministic order)."""
    path = Path(path)
    header = list(_FIXED_COLUMNS)
    header += [f"race:{c}" for c in registry.racial_categories]
    header += [f"scene:{s}" for s in registry.scene_names]
    header += [f"venue:{v}" for v in registry.venue_categories]

    ordered = sorted(
        regions.values(), key=lambda r: (r.id.level is not Level.CITY, r.id.code)
    )
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for record in ordered:
            a = record.attributes
            row = [
                record.id.level.value,
                record.id.code,
                record.id.parent_city or "",
                record.name,
                record.description,
                record.image_url or "",
                repr(a.population),
                repr(a.median_income),
                repr(a.education_rate),
                repr(a.employment_rate),
                repr(a.political_leaning),
                repr(a.centroid_lat),
                repr(a.centroid_lon),
            ]
            row += [repr(v) for v in a.racial_composition]
            row += [repr(v) for v in a.scenes_vector]
            row += [repr(v) for v in a.venue_type_distribution]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Review log I/O


def load_reviews(path: str | Path, regions: RegionTable) -> ReviewLog:
    """Load a review log; every event must reference a known neighborhood.

    An empty file yields an empty log.
    """
    path = Path(path)
    zip_index = {
        rid.code: rid for rid in regions if rid.level is Level.NEIGHBORHOOD
    }
    events: list[ReviewEvent] = []
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read review log {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return ReviewLog.from_events([])
        for col in ("user_id", "zip"):
            if col not in reader.fieldnames:
                raise LoadError(f"{path}: missing required column {col!r}")
        for row_no, row in enumerate(reader, start=2):
            user_id = (row.get("user_id") or "").strip()
            zip_code = (row.get("zip") or "").strip()
            if not user_id or not zip_code:
                raise LoadError(
                    f"{path} row {row_no}: user_id and zip must be non-empty"
                )
            rid = zip_index.get(zip_code)
            if rid is None:
                raise ReferentialError(
                    f"{path} row {row_no}: unknown neighborhood code {zip_code!r}"
                )
            ts_raw = (row.get("timestamp") or "").strip()
            timestamp = None
            if ts_raw:
                try:
                    timestamp = int(ts_raw)
                except ValueError:
                    raise LoadError(
                        f"{path} row {row_no}: field 'timestamp' is not an "
                        f"integer: {ts_raw!r}"
                    ) from None
            events.append(ReviewEvent(user_id, rid, timestamp))
    return ReviewLog.from_events(events)


def write_reviews(path: str | Path, log: ReviewLog) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "zip", "timestamp"])
        for event in log.events:
            writer.writerow(
                [
                    event.user_id,
                    event.neighborhood.code,
                    "" if event.timestamp is None else event.timestamp,
                ]
            )


# ---------------------------------------------------------------------------
# Filtering and enrichment


def filter_tourists(log: ReviewLog, min_cbsas: int) -> ReviewLog:
    """Keep only users with reviews in at least ``min_cbsas`` distinct cities.

    Event order is preserved; idempotent, and monotone in ``min_cbsas``.
    """
    if min_cbsas < 1:
        raise ConfigError(f"min_cbsas must be >= 1, got {min_cbsas}")
    cities_per_user: dict[str, set[str]] = {}
    for event in log.events:
        cities_per_user.setdefault(event.user_id, set()).add(
            event.neighborhood.parent_city
        )
    keep = {u for u, cities in cities_per_user.items() if len(cities) >= min_cbsas}
    return ReviewLog.from_events(e for e in log.events if e.user_id in keep)


def attach_review_counts(regions: RegionTable, log: ReviewLog) -> RegionTable:
    """Return a copy of the table with total_reviews filled from the log.

    A neighborhood counts its own events; a city counts every event in its
    neighborhoods.
    """
    zip_counts: dict[str, int] = {}
    city_counts: dict[str, int] = {}
    for event in log.events:
        zip_counts[event.neighborhood.code] = (
            zip_counts.get(event.neighborhood.code, 0) + 1
        )
        city_counts[event.neighborhood.parent_city] = (
            city_counts.get(event.neighborhood.parent_city, 0) + 1
        )
    out: RegionTable = {}
    for rid, record in regions.items():
        counts = city_counts if rid.level is Level.CITY else zip_counts
        out[rid] = record.with_total_reviews(counts.get(rid.code, 0))
    return out


def regions_at_level(regions: RegionTable, level: Level) -> list[RegionRecord]:
    return [r for rid, r in regions.items() if rid.level is level]


def neighborhoods_of(regions: RegionTable, city_code: str) -> list[RegionRecord]:
    return [
        r
        for rid, r in regions.items()
        if rid.level is Level.NEIGHBORHOOD and rid.parent_city == city_code
    ]


def get_region(
    regions: RegionTable, level: Level, code: str
) -> Optional[RegionRecord]:
    for rid, record in regions.items():
        if rid.level is level and rid.code == code:
            return record
    return None


# ---------------------------------------------------------------------------
# Synthetic data with planted archetypes


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a generated dataset; same spec + seed => identical bytes."""

    n_cities: int = 50
    n_neighborhoods_per_city: int = 10
    n_users: int = 500
    n_archetypes: int = 3
    reviews_per_user_range: tuple[int, int] = (120, 190)
    noise_rate: float = 0.1
    rng_seed: int = 7

    def __post_init__(self) -> None:
        for name in ("n_cities", "n_neighborhoods_per_city", "n_users", "n_archetypes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        lo, hi = self.reviews_per_user_range
        if lo < 1 or lo > hi:
            raise ConfigError(
                f"reviews_per_user_range must satisfy 1 <= lo <= hi, got {lo}..{hi}"
            )
        if not (0.0 <= self.noise_rate <= 1.0):
            raise ConfigError(f"noise_rate must lie in [0,1], got {self.noise_rate}")
        if self.n_archetypes > self.n_cities:
            raise ConfigError(
                f"cannot plant {self.n_archetypes} archetypes across only "
                f"{self.n_cities} cities"
            )

    @property
    def min_cbsas_guarantee(self) -> int:
        """Every generated user reviews at least this many distinct cities."""
        return min(6, self.n_cities, self.reviews_per_user_range[0])

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticSpec":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if "reviews_per_user_range" in data:
            data["reviews_per_user_range"] = tuple(data["reviews_per_user_range"])
        return cls(**data)


_RACE_CATEGORIES = ("r1", "r2", "r3", "r4")
_SCENE_NAMES = ("tradition", "glamour", "bohemia", "utility", "charisma")
_VENUE_CATEGORIES = ("dining", "outdoors", "arts", "nightlife", "shopping", "sports")

_NAME_HEADS = (
    "Ash", "Bay", "Cedar", "Dover", "Elm", "Fair", "Glen", "Haven", "Iron",
    "Juniper", "Kings", "Lark", "Maple", "North", "Oak", "Pine", "Quarry",
    "River", "Stone", "Thorn", "Union", "Vale", "West", "Wren", "Zephyr",
)
_NAME_TAILS = (
    "brook", "field", "ford", "gate", "harbor", "hill", "mont", "port",
    "ridge", "side", "ton", "view", "wood",
)
_DISTRICTS = (
    "Old Town", "Riverside", "Uptown", "Garden Quarter", "Mill End",
    "Arts Block", "Southside", "The Meadows", "Foundry Row", "Summit Park",
    "Lakeshore", "The Narrows",
)


@dataclass(frozen=True)
class _Archetype:
    geo: tuple[float, float]
    log_population: float
    log_income: float
    education: float
    employment: float
    politics: float
    race_alpha: np.ndarray
    scenes_center: np.ndarray
    venue_alpha: np.ndarray


def _plant_archetypes(n: int) -> list[_Archetype]:
    """Deterministic, well-separated taste-cluster centroids."""
    archetypes = []
    for i in range(n):
        theta = 2.0 * math.pi * i / n
        spread = (2.0 * i / (n - 1) - 1.0) if n > 1 else 0.0
        race_alpha = np.full(len(_RACE_CATEGORIES), 1.2)
        race_alpha[i % len(_RACE_CATEGORIES)] = 6.0
        scenes = np.full(len(_SCENE_NAMES), 0.4)
        scenes[i % len(_SCENE_NAMES)] = 2.2
        venue_alpha = np.full(len(_VENUE_CATEGORIES), 1.5)
        venue_alpha[i % len(_VENUE_CATEGORIES)] = 6.0
        archetypes.append(
            _Archetype(
                geo=(37.0 + 8.0 * math.sin(theta), -96.0 + 20.0 * math.cos(theta)),
                log_population=11.5 + 1.2 * spread,
                log_income=10.6 + 0.4 * spread,
                education=0.25 + 0.5 * (i + 1) / (n + 1),
                employment=0.85 + 0.1 * (i + 1) / (n + 1),
                politics=(i + 1) / (n + 1),
                race_alpha=race_alpha,
                scenes_center=scenes,
                venue_alpha=venue_alpha,
            )
        )
    return archetypes


def _clip01(x: float) -> float:
    return float(min(max(x, 0.02), 0.98))


def _ftuple(values: Iterable[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _region_name(index: int) -> str:
    head = _NAME_HEADS[index % len(_NAME_HEADS)]
    tail = _NAME_TAILS[(index // len(_NAME_HEADS) + index) % len(_NAME_TAILS)]
    name = head + tail
    cycle = index // (len(_NAME_HEADS) * len(_NAME_TAILS))
    return name if cycle == 0 else f"{name} {cycle + 1}"


def _describe_city(name: str, attrs: RegionAttributes) -> str:
    pop = int(round(attrs.population, -3))
    lean = (
        "left-leaning"
        if attrs.political_leaning > 0.55
        else "right-leaning"
        if attrs.political_leaning < 0.45
        else "politically mixed"
    )
    return (
        f"{name} is a {lean} metro area of roughly {pop:,} residents, "
        f"where about {attrs.education_rate:.0%} of adults hold a "
        f"bachelor's degree or higher."
    )


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[RegionTable, DimensionRegistry, ReviewLog, dict[str, int]]:
    """Generate a region table, review log, and ground-truth archetypes.

    Each archetype is a distinct centroid in attribute space; cities are
    assigned to archetype clusters round-robin and users draw reviews
    preferring regions near their own archetype's centroid (with per-user
    idiosyncratic jitter so same-archetype users do not collapse onto the
    same few regions). A ``noise_rate`` fraction of reviews is placed
    uniformly at random over all neighborhoods. Every user is guaranteed
    reviews in at least ``spec.min_cbsas_guarantee`` distinct cities.

    Deterministic given ``spec.rng_seed``.
    """
    rng = np.random.default_rng(spec.rng_seed)
    archetypes = _plant_archetypes(spec.n_archetypes)

    # District templates shared by every city: each city realizes the same
    # set of neighborhood archetypes (a moneyed downtown, an arts quarter,
    # a working suburb, ...), so the kind of neighborhood a person favors
    # exists, recognizably, in every city they might visit. Neighborhood
    # attributes below blend the parent city's base with the district
    # template plus a little idiosyncratic noise.
    district_templates = [
        {
            "pop_mult": float(np.exp(rng.normal(0.0, 0.15))),
            "income_mult": float(np.exp(rng.normal(0.0, 0.5))),
            "edu_delta": float(rng.normal(0.0, 0.18)),
            "politics_delta": float(rng.normal(0.0, 0.03)),
            "race_tilt": rng.dirichlet(np.ones(len(_RACE_CATEGORIES)) * 8.0),
            "scenes_delta": rng.normal(0.0, 0.8, len(_SCENE_NAMES)),
            "venue_center": rng.dirichlet(np.ones(len(_VENUE_CATEGORIES)) * 2.0),
        }
        for _ in range(spec.n_neighborhoods_per_city)
    ]

    # --- regions ---------------------------------------------------------
    city_records: list[RegionRecord] = []
    city_cluster: list[int] = []
    zip_records: list[RegionRecord] = []
    zip_city_index: list[int] = []

    for c in range(spec.n_cities):
        cluster = c % spec.n_archetypes
        arch = archetypes[cluster]
        lat = float(np.clip(arch.geo[0] + rng.normal(0.0, 1.2), -89.0, 89.0))
        lon = float(np.clip(arch.geo[1] + rng.normal(0.0, 1.8), -179.0, 179.0))
        population = float(np.exp(arch.log_population + rng.normal(0.0, 0.4)))
        income = float(np.exp(arch.log_income + rng.normal(0.0, 0.2)))
        # Cities inside one cluster share a near-identical cultural base
        # (scenes, venue mix); the cultural texture that tells neighborhoods
        # apart is generated at the neighborhood level below. Cross-cluster
        # contrast stays in the archetype centers.
        attrs = RegionAttributes(
            population=round(population),
            median_income=round(income),
            education_rate=_clip01(arch.education + rng.normal(0.0, 0.05)),
            employment_rate=_clip01(arch.employment + rng.normal(0.0, 0.02)),
            racial_composition=_ftuple(rng.dirichlet(arch.race_alpha * 10.0)),
            political_leaning=_clip01(arch.politics + rng.normal(0.0, 0.06)),
            scenes_vector=_ftuple(
                np.clip(arch.scenes_center + rng.normal(0.0, 0.08, len(_SCENE_NAMES)), 0.05, None)
            ),
            venue_type_distribution=_ftuple(rng.dirichlet(arch.venue_alpha * 60.0)),
            centroid_lat=lat,
            centroid_lon=lon,
        )
        code = f"C{100 + c}"
        name = _region_name(c)
        city_records.append(
            RegionRecord(
                id=RegionId(level=Level.CITY, code=code),
                attributes=attrs,
                name=name,
                description=_describe_city(name, attrs),
                image_url=f"https://picsum.photos/seed/{code}/400/240",
            )
        )
        city_cluster.append(cluster)

        for j in range(spec.n_neighborhoods_per_city):
            t = district_templates[j]
            race_mix = 0.6 * np.asarray(attrs.racial_composition) + 0.4 * t["race_tilt"]
            venue_mix = (
                0.45 * np.asarray(attrs.venue_type_distribution)
                + 0.55 * t["venue_center"]
            )
            z_attrs = RegionAttributes(
                population=round(
                    attrs.population
                    / spec.n_neighborhoods_per_city
                    * t["pop_mult"]
                    * float(np.exp(rng.normal(0.0, 0.05)))
                ),
                median_income=round(
                    attrs.median_income
                    * t["income_mult"]
                    * float(np.exp(rng.normal(0.0, 0.12)))
                ),
                education_rate=_clip01(
                    attrs.education_rate + t["edu_delta"] + rng.normal(0.0, 0.04)
                ),
                employment_rate=_clip01(attrs.employment_rate + rng.normal(0.0, 0.02)),
                racial_composition=_ftuple(rng.dirichlet(race_mix * 60.0)),
                political_leaning=_clip01(
                    attrs.political_leaning + t["politics_delta"] + rng.normal(0.0, 0.02)
                ),
                scenes_vector=_ftuple(
                    np.clip(
                        np.asarray(attrs.scenes_vector)
                        + t["scenes_delta"]
                        + rng.normal(0.0, 0.15, len(_SCENE_NAMES)),
                        0.05,
                        None,
                    )
                ),
                venue_type_distribution=_ftuple(rng.dirichlet(venue_mix * 40.0)),
                centroid_lat=float(np.clip(lat + rng.normal(0.0, 0.12), -90.0, 90.0)),
                centroid_lon=float(np.clip(lon + rng.normal(0.0, 0.12), -180.0, 180.0)),
            )
            zip_code = f"Z{100 + c}{j:02d}"
            district = (
                _DISTRICTS[j] if j < len(_DISTRICTS) else f"District {j + 1}"
            )
            zip_records.append(
                RegionRecord(
                    id=RegionId(
                        level=Level.NEIGHBORHOOD, code=zip_code, parent_city=code
                    ),
                    attributes=z_attrs,
                    name=f"{name} {district}",
                    image_url=f"https://picsum.photos/seed/{zip_code}/400/240",
                )
            )
            zip_city_index.append(c)

    regions: RegionTable = {r.id: r for r in city_records + zip_records}
    registry = build_registry(
        regions.values(), _RACE_CATEGORIES, _SCENE_NAMES, _VENUE_CATEGORIES
    )

    # --- preference geometry ---------------------------------------------
    # Embed every region and archetype into one standardized space; user
    # preferences decay with embedding distance to their archetype.
    city_embed = np.stack([_embed(r.attributes) for r in city_records])
    zip_embed = np.stack([_embed(r.attributes) for r in zip_records])
    arch_embed = np.stack([_embed_archetype(a) for a in archetypes])
    mu = zip_embed.mean(axis=0)
    sd = zip_embed.std(axis=0)
    sd[sd == 0] = 1.0
    city_embed = (city_embed - mu) / sd
    zip_embed = (zip_embed - mu) / sd
    arch_embed = (arch_embed - mu) / sd

    n_zips = len(zip_records)
    embed_dim = city_embed.shape[1]
    zip_city = np.asarray(zip_city_index)
    zips_of_city = [
        np.flatnonzero(zip_city == c) for c in range(spec.n_cities)
    ]

    # --- users and reviews -------------------------------------------------
    # Each user gets a personal taste point: the embedding of one
    # neighborhood of a randomly chosen "anchor" city from their
    # archetype's cluster, plus a small offset. Preference decays with
    # embedding distance to the taste point at both scales. Anchoring on
    # the manifold keeps every user internally consistent (their favorite
    # regions cluster around a real place in attribute space, so
    # similarity features carry signal). Archetype membership and the
    # anchor's district template are assigned round-robin so the panel is
    # balanced: every district style has the same number of fans, which
    # keeps global popularity from doubling as a taste oracle merely
    # because one style drew a few more devotees by chance.
    cluster_members = [
        np.flatnonzero(np.asarray(city_cluster) == a)
        for a in range(spec.n_archetypes)
    ]
    events: list[ReviewEvent] = []
    assignments: dict[str, int] = {}
    lo, hi = spec.reviews_per_user_range
    guarantee = spec.min_cbsas_guarantee
    tau_city, tau_zip = 0.22, 0.42
    user_spread = 0.25

    for u in range(spec.n_users):
        user_id = f"u{u:05d}"
        a = u % spec.n_archetypes
        assignments[user_id] = a
        # Two favorite cities per user, both drawn uniformly from the
        # cluster: the taste anchor and an independent second home. Without
        # the explicit second draw, every user's runner-up city would be
        # their anchor's nearest neighbor, and a handful of central "hub"
        # cities would soak up most second-city mass.
        anchor = int(rng.choice(cluster_members[a]))
        anchor2 = int(rng.choice(cluster_members[a]))
        template_idx = (u // spec.n_archetypes) % spec.n_neighborhoods_per_city
        anchor_zip = int(zips_of_city[anchor][template_idx])
        taste = zip_embed[anchor_zip] + rng.normal(0.0, user_spread, embed_dim)

        # Both favorite cities carry a comparable share of the user's
        # reviews. Near-symmetric shares keep the user's favorite district
        # style well represented in *both* cities, so the cross-city
        # regularity similarity features rely on is actually present in
        # the review counts; a lopsided split would leave the second
        # city's districts at one or two reviews, indistinguishable from
        # noise visits.
        d_city = np.linalg.norm(city_embed - taste, axis=1)
        d_city = (d_city - d_city.mean()) / (d_city.std() or 1.0)
        pref_city = 0.30 * _softmax(-d_city / tau_city)
        pref_city[anchor] += 0.38
        pref_city[anchor2] += 0.32

        # Within-city choice: distances to the taste point are standardized
        # per city before the softmax, so the preference sharpness inside a
        # city does not depend on how far the city as a whole sits from the
        # user's taste.
        d_zip = np.linalg.norm(zip_embed - taste, axis=1)
        zip_within = np.empty_like(d_zip)
        for idx in zips_of_city:
            d = d_zip[idx]
            d = (d - d.mean()) / (d.std() or 1.0)
            w = np.exp(-d / tau_zip)
            zip_within[idx] = w / w.sum()

        p_zip = (
            spec.noise_rate / n_zips
            + (1.0 - spec.noise_rate) * pref_city[zip_city] * zip_within
        )
        p_zip = p_zip / p_zip.sum()
        p_city = np.bincount(zip_city, weights=p_zip, minlength=spec.n_cities)
        p_city = p_city / p_city.sum()

        n_reviews = int(rng.integers(lo, hi + 1))
        chosen_zips: list[int] = []
        distinct = rng.choice(spec.n_cities, size=guarantee, replace=False, p=p_city)
        for c in distinct:
            mask = zip_city == c
            within = p_zip[mask] / p_zip[mask].sum()
            chosen_zips.append(int(np.flatnonzero(mask)[rng.choice(mask.sum(), p=within)]))
        if n_reviews > guarantee:
            chosen_zips.extend(
                int(z)
                for z in rng.choice(n_zips, size=n_reviews - guarantee, p=p_zip)
            )
        for z in chosen_zips:
            events.append(ReviewEvent(user_id, zip_records[z].id, None))

    log = ReviewLog.from_events(events)
    regions = attach_review_counts(regions, log)
    return regions, registry, log, assignments


def _embed(attrs: RegionAttributes) -> np.ndarray:
    scenes = np.asarray(attrs.scenes_vector)
    scenes = scenes / np.linalg.norm(scenes)
    return np.concatenate(
        [
            [attrs.centroid_lat / 5.0, attrs.centroid_lon / 5.0],
            [math.log1p(attrs.population), math.log1p(attrs.median_income)],
            [3.0 * attrs.education_rate, 3.0 * attrs.political_leaning],
            2.0 * np.asarray(attrs.racial_composition),
            3.5 * scenes,
            3.5 * np.asarray(attrs.venue_type_distribution),
        ]
    )


def _embed_archetype(arch: _Archetype) -> np.ndarray:
    race = arch.race_alpha / arch.race_alpha.sum()
    scenes = arch.scenes_center / np.linalg.norm(arch.scenes_center)
    venues = arch.venue_alpha / arch.venue_alpha.sum()
    return np.concatenate(
        [
            [arch.geo[0] / 5.0, arch.geo[1] / 5.0],
            [arch.log_population, arch.log_income],
            [3.0 * arch.education, 3.0 * arch.politics],
            2.0 * race,
            3.5 * scenes,
            3.5 * venues,
        ]
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def write_assignments(path: str | Path, assignments: dict[str, int]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "archetype"])
        for user_id in sorted(assignments):
            writer.writerow([user_id, assignments[user_id]])


def load_assignments(path: str | Path) -> dict[str, int]:
    out: dict[str, int] = {}
    try:
        fh = Path(path).open(newline="", encoding="utf-8")
    except OSError as exc:
        raise LoadError(f"cannot read assignments {path}: {exc}") from exc
    with fh:
        for row in csv.DictReader(fh):
            out[row["user_id"]] = int(row["archetype"])
    return out
