"""Region-to-region dissimilarities and the aggregated feature vector.

Each similarity dimension defines one bounded, symmetric distance between
two regions' attributes. A candidate region is then described relative to a
user's liked ("top") and disliked ("bottom") reference sets by averaging
those per-dimension distances over each set, giving the fixed-layout
feature vector ``[<dim>_to_top, <dim>_to_bottom, ...]`` (see
:func:`regionrec.core.feature_names`).

Distance kinds:

* geodesic  -- haversine great-circle km, normalized by the table's maximum
  pairwise distance;
* scalar_log -- absolute gap of log1p-transformed values (population,
  income are heavy-tailed), normalized by the table's maximum gap;
* scalar_abs -- absolute gap of values already in [0,1];
* distribution -- Jensen-Shannon distance, base 2, bounded in [0,1];
* vector -- cosine distance 1 - cos(theta), in [0,2].
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Iterable, Optional

import numpy as np

from .core import (
    ContractError,
    DegenerateInputError,
    Dimension,
    DimensionKind,
    DimensionRegistry,
    DIMENSION_ORDER,
    EMPLOYMENT_DIMENSION,
    RegionAttributes,
    RegionRecord,
    ValidationError,
)

EARTH_RADIUS_KM = 6371.0


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two (lat, lon) points in degrees.

    Symmetric, zero iff the points coincide; uses the mean Earth radius
    6371.0 km. Raises ``ValueError`` for out-of-range coordinates.
    """
    for lat, lon in (a, b):
        if not (-90.0 <= lat <= 90.0):
            raise ValueError(f"latitude out of range: {lat}")
        if not (-180.0 <= lon <= 180.0):
            raise ValueError(f"longitude out of range: {lon}")
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    s = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def jensen_shannon_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Base-2 Jensen-Shannon distance between two probability vectors.

    Bounded in [0,1]; reaches 1.0 exactly for disjoint supports.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = 0.5 * (p + q)
    # 0*log(0/x) = 0 by continuity; m is zero only where both p and q are.
    with np.errstate(divide="ignore", invalid="ignore"):
        kl_p = np.where(p > 0, p * np.log2(np.where(p > 0, p / m, 1.0)), 0.0)
        kl_q = np.where(q > 0, q * np.log2(np.where(q > 0, q / m, 1.0)), 0.0)
    divergence = 0.5 * (kl_p.sum() + kl_q.sum())
    return math.sqrt(min(max(divergence, 0.0), 1.0))


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(theta), clamped to [0,2]. Zero-norm inputs are degenerate."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateInputError("zero-norm scenes vector")
    d = 1.0 - float(np.dot(u, v)) / (nu * nv)
    return min(max(d, 0.0), 2.0)


def _log1p_gap(x: float, y: float) -> float:
    return abs(math.log1p(x) - math.log1p(y))


_SCALAR_FIELDS: dict[str, Callable[[RegionAttributes], float]] = {
    "population": lambda a: a.population,
    "income": lambda a: a.median_income,
    "education": lambda a: a.education_rate,
    "politics": lambda a: a.political_leaning,
    "employment": lambda a: a.employment_rate,
}


def dimension_distance(dim: Dimension, a: RegionAttributes, b: RegionAttributes) -> float:
    """Normalized dissimilarity between two attribute vectors on one dimension."""
    if dim.kind is DimensionKind.GEODESIC:
        raw = haversine_km(
            (a.centroid_lat, a.centroid_lon), (b.centroid_lat, b.centroid_lon)
        )
        return raw / dim.scale
    if dim.kind is DimensionKind.SCALAR_LOG:
        get = _SCALAR_FIELDS[dim.name]
        return _log1p_gap(get(a), get(b)) / dim.scale
    if dim.kind is DimensionKind.SCALAR_ABS:
        get = _SCALAR_FIELDS[dim.name]
        return abs(get(a) - get(b))
    if dim.kind is DimensionKind.DISTRIBUTION:
        if dim.name == "race":
            return jensen_shannon_distance(
                np.array(a.racial_composition), np.array(b.racial_composition)
            )
        return jensen_shannon_distance(
            np.array(a.venue_type_distribution), np.array(b.venue_type_distribution)
        )
    if dim.kind is DimensionKind.VECTOR:
        return cosine_distance(np.array(a.scenes_vector), np.array(b.scenes_vector))
    raise ContractError(f"unknown dimension kind: {dim.kind}")


def build_registry(
    records: Iterable[RegionRecord],
    racial_categories: tuple[str, ...],
    scene_names: tuple[str, ...],
    venue_categories: tuple[str, ...],
    include_employment: bool = False,
) -> DimensionRegistry:
    """Derive per-dimension normalization constants from a region table.

    The geodesic scale is the maximum pairwise haversine distance; the
    log-scalar scales are the spans of log1p(population) and
    log1p(median_income). Degenerate tables (a single region, or constant
    attributes) fall back to scale 1.0 so distances stay finite.
    """
    records = list(records)
    if not records:
        raise ContractError("cannot build a registry from an empty region table")

    for r in records:
        if len(r.attributes.scenes_vector) != len(scene_names):
            raise ValidationError(
                f"region {r.id.code!r} has a scenes vector of length "
                f"{len(r.attributes.scenes_vector)}, table declares "
                f"{len(scene_names)}"
            )
        if len(r.attributes.racial_composition) != len(racial_categories):
            raise ValidationError(
                f"region {r.id.code!r} racial_composition length mismatch"
            )
        if len(r.attributes.venue_type_distribution) != len(venue_categories):
            raise ValidationError(
                f"region {r.id.code!r} venue_type_distribution length mismatch"
            )

    lats = np.array([r.attributes.centroid_lat for r in records])
    lons = np.array([r.attributes.centroid_lon for r in records])
    geo_scale = _max_pairwise_haversine(lats, lons)

    pops = np.log1p(np.array([r.attributes.population for r in records]))
    incomes = np.log1p(np.array([r.attributes.median_income for r in records]))
    pop_scale = float(pops.max() - pops.min()) if len(records) > 1 else 0.0
    income_scale = float(incomes.max() - incomes.min()) if len(records) > 1 else 0.0

    scales = {
        "geo": geo_scale if geo_scale > 0 else 1.0,
        "population": pop_scale if pop_scale > 0 else 1.0,
        "income": income_scale if income_scale > 0 else 1.0,
    }
    order = list(DIMENSION_ORDER)
    if include_employment:
        order.append(EMPLOYMENT_DIMENSION)
    dims = tuple(
        Dimension(
            name=name,
            kind=kind,
            scale=scales.get(name, 1.0),
            max_distance=2.0 if kind is DimensionKind.VECTOR else 1.0,
        )
        for name, kind in order
    )
    return DimensionRegistry(
        dimensions=dims,
        racial_categories=racial_categories,
        scene_names=scene_names,
        venue_categories=venue_categories,
    )


def _max_pairwise_haversine(lats: np.ndarray, lons: np.ndarray) -> float:
    if len(lats) < 2:
        return 0.0
    lat_r = np.radians(lats)
    lon_r = np.radians(lons)
    dlat = lat_r[:, None] - lat_r[None, :]
    dlon = lon_r[:, None] - lon_r[None, :]
    s = (
        np.sin(dlat / 2.0) ** 2
        + np.cos(lat_r)[:, None] * np.cos(lat_r)[None, :] * np.sin(dlon / 2.0) ** 2
    )
    d = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(s, 0.0, 1.0)))
    return float(d.max())


DistanceCache = dict[tuple[int, str, str], float]


def _cached_distance(
    dim_index: int,
    dim: Dimension,
    a: RegionRecord,
    b: RegionRecord,
    cache: Optional[DistanceCache],
) -> float:
    if cache is None:
        return dimension_distance(dim, a.attributes, b.attributes)
    ca, cb = a.id.code, b.id.code
    key = (dim_index, ca, cb) if ca <= cb else (dim_index, cb, ca)
    hit = cache.get(key)
    if hit is None:
        hit = dimension_distance(dim, a.attributes, b.attributes)
        cache[key] = hit
    return hit


def aggregate_features(
    candidate: RegionRecord,
    top: Iterable[RegionRecord],
    bottom: Iterable[RegionRecord],
    registry: DimensionRegistry,
    cache: Optional[DistanceCache] = None,
) -> np.ndarray:
    """Feature vector of a candidate against the top and bottom reference sets.

    Per dimension, ``<dim>_to_top`` is the arithmetic mean distance from the
    candidate to the top-set members and ``<dim>_to_bottom`` the same over
    the bottom set. An empty bottom set contributes the dimension's
    normalized maximum distance (no evidence of dislike is encoded as
    maximal dissimilarity-to-disliked, not as similarity). The top set must
    be non-empty.

    ``cache`` optionally memoizes pairwise distances across calls keyed by
    region codes; results are identical with or without it.
    """
    top = list(top)
    bottom = list(bottom)
    if not top:
        raise ContractError("aggregate_features requires a non-empty top set")
    try:
        values = np.empty(registry.feature_count, dtype=np.float64)
        for i, dim in enumerate(registry.dimensions):
            to_top = float(
                np.mean([_cached_distance(i, dim, candidate, t, cache) for t in top])
            )
            if bottom:
                to_bottom = float(
                    np.mean(
                        [_cached_distance(i, dim, candidate, b, cache) for b in bottom]
                    )
                )
            else:
                to_bottom = dim.max_distance
            values[2 * i] = to_top
            values[2 * i + 1] = to_bottom
    except DegenerateInputError as exc:
        raise DegenerateInputError(
            f"{exc} (while featurizing region {candidate.id.code!r})"
        ) from exc
    if not np.all(np.isfinite(values)):
        raise ContractError(
            f"non-finite feature produced for region {candidate.id.code!r}"
        )
    return values


def pairwise_dimension_matrix(
    records: list[RegionRecord], dim: Dimension
) -> np.ndarray:
    """Symmetric matrix of one dimension's distances over a record list."""
    n = len(records)
    out = np.zeros((n, n), dtype=np.float64)
    for i, j in itertools.combinations(range(n), 2):
        d = dimension_distance(dim, records[i].attributes, records[j].attributes)
        out[i, j] = d
        out[j, i] = d
    return out
