"""Hand-built fixtures and independent oracles shared across test modules.

Everything here is deliberately written from the public contracts (docstrings
and documented formulas), not by calling back into the code under test, so a
regression in the implementation cannot silently update the expectation.
"""

from __future__ import annotations

import math

import numpy as np

from regionrec.core import (
    Level,
    RegionAttributes,
    RegionId,
    RegionRecord,
)
from regionrec.gbdt import GbdtParams
from regionrec.simfeat import build_registry

RACE = ("a", "b")
SCENES = ("s1", "s2", "s3")
VENUES = ("v1", "v2")


def make_attrs(**overrides) -> RegionAttributes:
    """A valid attribute vector; keyword overrides tweak single fields."""
    base = dict(
        population=50_000.0,
        median_income=60_000.0,
        education_rate=0.3,
        employment_rate=0.9,
        racial_composition=(0.6, 0.4),
        political_leaning=0.5,
        scenes_vector=(1.0, 0.5, 0.2),
        venue_type_distribution=(0.7, 0.3),
        centroid_lat=40.0,
        centroid_lon=-75.0,
    )
    base.update(overrides)
    return RegionAttributes(**base)


def make_city(code: str, name: str | None = None, **attr_overrides) -> RegionRecord:
    return RegionRecord(
        id=RegionId(level=Level.CITY, code=code),
        attributes=make_attrs(**attr_overrides),
        name=name or f"City {code}",
        description=f"{code} description",
    )


def make_zip(
    code: str, parent: str, name: str | None = None, **attr_overrides
) -> RegionRecord:
    return RegionRecord(
        id=RegionId(level=Level.NEIGHBORHOOD, code=code, parent_city=parent),
        attributes=make_attrs(**attr_overrides),
        name=name or f"Zip {code}",
    )


def table_of(*records: RegionRecord) -> dict[RegionId, RegionRecord]:
    return {r.id: r for r in records}


def registry_of(*records: RegionRecord):
    return build_registry(records, RACE, SCENES, VENUES)


# ---------------------------------------------------------------------------
# Independent distance oracles


def law_of_cosines_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance via the spherical law of cosines (not haversine)."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    c = math.sin(lat1) * math.sin(lat2) + math.cos(lat1) * math.cos(lat2) * math.cos(
        lon2 - lon1
    )
    return 6371.0 * math.acos(min(1.0, max(-1.0, c)))


# ---------------------------------------------------------------------------
# Split-search oracle (direct enumeration, no prefix sums)


def oracle_best_split(x, g, h, params: GbdtParams):
    """Enumerate every legal midpoint and score it with direct summation.

    Mirrors the documented gain formula term by term; with dyadic-rational
    inputs every intermediate sum is exact, so the comparison against the
    implementation can demand exact float equality.
    """
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    n = x.shape[0]
    msl = params.min_samples_leaf
    lam = params.l2_leaf_reg
    if n < 2 * msl:
        return None
    order = np.argsort(x, kind="stable")
    xs, gs, hs = x[order], g[order], h[order]
    total_g = float(gs.sum())
    total_h = float(hs.sum())
    best = None
    for i in range(msl - 1, n - msl):
        if xs[i] == xs[i + 1]:
            continue
        gl = float(gs[: i + 1].sum())
        hl = float(hs[: i + 1].sum())
        gr = total_g - gl
        hr = total_h - hl
        gain = (
            gl * gl / (hl + lam)
            + gr * gr / (hr + lam)
            - total_g * total_g / (total_h + lam)
        )
        if best is None or gain > best[1]:
            best = (0.5 * (xs[i] + xs[i + 1]), gain)
    if best is None or best[1] < 0.0:
        return None
    return best


def dyadic_split_dataset(rng: np.random.Generator):
    """Random dataset whose values are small multiples of 1/8.

    Dyadic rationals with bounded magnitude make every partial sum exactly
    representable in float64, so prefix-sum and direct-sum accumulation agree
    bit for bit and the oracle comparison needs no tolerance.
    """
    n = int(rng.integers(2, 101))
    d = int(rng.integers(1, 6))
    X = rng.integers(-16, 17, size=(n, d)) / 8.0
    g = rng.integers(-16, 17, size=n) / 8.0
    h = rng.integers(1, 17, size=n) / 8.0
    msl = int(rng.choice([1, 2, 3, 5]))
    lam = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
    params = GbdtParams(min_samples_leaf=msl, l2_leaf_reg=lam)
    return X, g, h, params


# ---------------------------------------------------------------------------
# Tree-walking oracle (naive recursion, unlike the vectorized implementation)


def oracle_raw_score(model, fv) -> float:
    def walk(node, x):
        if node.is_leaf:
            return node.value
        if x[node.feature_index] <= node.threshold:
            return walk(node.left, x)
        return walk(node.right, x)

    x = np.asarray(fv, dtype=np.float64)
    return model.base_score + model.learning_rate * sum(
        walk(t, x) for t in model.trees
    )


# ---------------------------------------------------------------------------
# Local-surrogate oracle: regenerate the documented sampling recipe and solve
# the same weighted system with a different numerical method (QR via lstsq
# instead of normal equations).


def lime_sampling_recipe(instance, background, config):
    d = len(background.feature_names)
    perturb_std = background.safe_std
    rng = np.random.default_rng(config.rng_seed)
    noise = rng.standard_normal((config.n_samples, d))
    samples = instance + noise * perturb_std
    kernel_width = config.resolved_kernel_width(d)
    dist_sq = np.sum(((samples - instance) / perturb_std) ** 2, axis=1)
    weights = np.exp(-dist_sq / kernel_width**2)
    Z = (samples - background.mean) / perturb_std
    return samples, Z, weights


def oracle_wls(Z, y, weights, ridge_lambda=0.0):
    """Weighted least squares with unpenalized intercept, via lstsq."""
    n, d = Z.shape
    A = np.hstack([np.ones((n, 1)), Z])
    sw = np.sqrt(weights)
    rows = [A * sw[:, None]]
    targets = [y * sw]
    if ridge_lambda > 0:
        ridge_rows = np.sqrt(ridge_lambda) * np.eye(d + 1)
        ridge_rows[0, 0] = 0.0
        rows.append(ridge_rows)
        targets.append(np.zeros(d + 1))
    beta, *_ = np.linalg.lstsq(
        np.vstack(rows), np.concatenate(targets), rcond=None
    )
    return beta[1:], float(beta[0])


def attribution_vector(explanation, feature_names) -> np.ndarray:
    """Explanation weights re-ordered into registry feature order."""
    lookup = dict(explanation.attributions)
    return np.asarray([lookup[name] for name in feature_names])


def cosine(u, v) -> float:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


# ---------------------------------------------------------------------------
# Dense-ranking oracle


def oracle_dense_ranks(counts: dict) -> dict:
    """Rank = 1 + number of distinct counts strictly greater than this one."""
    values = set(counts.values())
    return {
        key: 1 + sum(1 for v in values if v > count)
        for key, count in counts.items()
    }


def random_attributes(rng: np.random.Generator) -> RegionAttributes:
    race = rng.dirichlet(np.ones(len(RACE)))
    venues = rng.dirichlet(np.ones(len(VENUES)))
    scenes = rng.uniform(0.05, 2.0, size=len(SCENES))
    return RegionAttributes(
        population=float(rng.uniform(1_000, 5_000_000)),
        median_income=float(rng.uniform(20_000, 150_000)),
        education_rate=float(rng.uniform(0, 1)),
        employment_rate=float(rng.uniform(0, 1)),
        racial_composition=tuple(float(v) for v in race),
        political_leaning=float(rng.uniform(0, 1)),
        scenes_vector=tuple(float(v) for v in scenes),
        venue_type_distribution=tuple(float(v) for v in venues),
        centroid_lat=float(rng.uniform(-89, 89)),
        centroid_lon=float(rng.uniform(-179, 179)),
    )
