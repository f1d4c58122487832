"""Two-stage recommendation pipeline, baselines, and evaluation harness.

Stage one scores every city in the table against the user's liked/disliked
cities; stage two scores the neighborhoods of one chosen destination against
the user's liked/disliked neighborhoods (which live in other cities). Both
stages share one scoring path: featurize the candidate against the liked
(top) and disliked (bottom) sets, score with the trained boosted-tree
model, attach a local surrogate explanation per returned item.

Ties in the score sort resolve by total reviews descending, then region
code ascending, so responses are deterministic for a fixed model and input.

The two reference baselines get the same positive-rate budget as the
classifier's training labels: the popularity baseline marks the globally
most-reviewed regions positive (as many regions as the train positive rate
implies), and the item-based CF baseline thresholds its cosine scores at
the same rate.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import (
    ContractError,
    DimensionRegistry,
    EngineConfig,
    Level,
    ModelIOError,
    ReferentialError,
    RegionId,
    RegionRecord,
    ValidationError,
    feature_names,
)
from .explain import (
    Background,
    Explanation,
    LimeConfig,
    explanation_to_dict,
    finalize_explanation,
    lime_explain,
)
from .gbdt import (
    GbdtModel,
    GbdtParams,
    fit,
    model_from_dict,
    model_to_dict,
    predict_proba_batch,
)
from .ingest import RegionTable, ReviewLog, neighborhoods_of
from .interest import (
    LabeledExample,
    UserProfile,
    build_dataset,
    build_profiles,
    examples_to_matrix,
)
from .simfeat import DistanceCache, aggregate_features

BUNDLE_FORMAT = "regionrec-bundle"
BUNDLE_VERSION = 1

_MAX_CITY_LABELS = 6


@dataclass(frozen=True)
class PreferenceInput:
    """A user's liked/disliked regions, all at one level.

    At the city level at most six regions may be labeled in total; at least
    one label is always required, and recommending additionally requires at
    least one *liked* region (checked at recommendation time).
    """

    liked: tuple[RegionId, ...]
    disliked: tuple[RegionId, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "liked", tuple(self.liked))
        object.__setattr__(self, "disliked", tuple(self.disliked))
        labels = self.liked + self.disliked
        if not labels:
            raise ValidationError("at least one labeled region is required")
        levels = {rid.level for rid in labels}
        if len(levels) > 1:
            raise ValidationError(
                "liked and disliked regions must all be at the same level"
            )
        if len(set(labels)) != len(labels):
            dupes = sorted(
                {rid.code for rid in labels if labels.count(rid) > 1}
            )
            raise ValidationError(
                f"regions labeled more than once (or both liked and "
                f"disliked): {dupes}"
            )
        if self.level is Level.CITY and len(labels) > _MAX_CITY_LABELS:
            raise ValidationError(
                f"at most {_MAX_CITY_LABELS} cities may be labeled, "
                f"got {len(labels)}"
            )

    @property
    def level(self) -> Level:
        return (self.liked + self.disliked)[0].level


@dataclass(frozen=True)
class Recommendation:
    region: RegionId
    name: str
    score: float
    explanation: Explanation
    description: str = ""
    image_url: Optional[str] = None


@dataclass(frozen=True)
class RecommendationResult:
    recommendations: tuple[Recommendation, ...]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ModelBundle:
    """Everything needed to score and explain at one level."""

    level: Level
    model: GbdtModel
    background: Background


# ---------------------------------------------------------------------------
# Training and persistence


def train_bundle(
    train_examples: Sequence[LabeledExample],
    registry: DimensionRegistry,
    level: Level,
    params: Optional[GbdtParams] = None,
) -> ModelBundle:
    X, y = examples_to_matrix(train_examples)
    model = fit(X, y, params)
    background = Background.from_matrix(X, feature_names(registry))
    return ModelBundle(level=level, model=model, background=background)


def bundle_to_dict(bundle: ModelBundle) -> dict:
    return {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "level": bundle.level.value,
        "model": model_to_dict(bundle.model),
        "background": {
            "mean": [repr(float(v)) for v in bundle.background.mean],
            "std": [repr(float(v)) for v in bundle.background.std],
            "feature_names": list(bundle.background.feature_names),
        },
    }


def bundle_from_dict(data: dict) -> ModelBundle:
    if data.get("format") != BUNDLE_FORMAT:
        raise ModelIOError(
            f"expected format {BUNDLE_FORMAT!r}, got {data.get('format')!r}"
        )
    if data.get("version") != BUNDLE_VERSION:
        raise ModelIOError(f"unsupported bundle version {data.get('version')!r}")
    bg = data["background"]
    return ModelBundle(
        level=Level(data["level"]),
        model=model_from_dict(data["model"]),
        background=Background(
            mean=np.asarray([float(v) for v in bg["mean"]]),
            std=np.asarray([float(v) for v in bg["std"]]),
            feature_names=tuple(bg["feature_names"]),
        ),
    )


def save_bundle(path: str | Path, bundle: ModelBundle) -> None:
    try:
        Path(path).write_text(
            json.dumps(bundle_to_dict(bundle), indent=1), encoding="utf-8"
        )
    except OSError as exc:
        raise ModelIOError(f"cannot write bundle to {path}: {exc}") from exc


def load_bundle(path: str | Path) -> ModelBundle:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ModelIOError(f"cannot read bundle from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelIOError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelIOError(f"{path}: expected a JSON object")
    try:
        return bundle_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelIOError(f"{path}: malformed bundle: {exc}") from exc


# ---------------------------------------------------------------------------
# Recommendation


def recommend_cities(
    pref: PreferenceInput,
    bundle: ModelBundle,
    regions: RegionTable,
    registry: DimensionRegistry,
    config: EngineConfig,
    lime_config: Optional[LimeConfig] = None,
) -> RecommendationResult:
    """Score every city outside the labeled set; return the top few, explained."""
    if pref.level is not Level.CITY:
        raise ValidationError("city recommendations need city-level labels")
    _check_recommendable(pref, bundle, Level.CITY, regions)
    labeled = set(pref.liked) | set(pref.disliked)
    candidates = [
        record
        for rid, record in regions.items()
        if rid.level is Level.CITY and rid not in labeled
    ]
    return _score_and_explain(
        candidates, pref, bundle, regions, registry, config, lime_config
    )


def recommend_neighborhoods(
    destination_city: RegionId,
    pref: PreferenceInput,
    bundle: ModelBundle,
    regions: RegionTable,
    registry: DimensionRegistry,
    config: EngineConfig,
    lime_config: Optional[LimeConfig] = None,
) -> RecommendationResult:
    """Score the destination city's neighborhoods against labeled ones."""
    if destination_city.level is not Level.CITY:
        raise ValidationError("destination must be a city")
    if destination_city not in regions:
        raise ReferentialError(f"unknown city code {destination_city.code!r}")
    if pref.level is not Level.NEIGHBORHOOD:
        raise ValidationError(
            "neighborhood recommendations need neighborhood-level labels"
        )
    _check_recommendable(pref, bundle, Level.NEIGHBORHOOD, regions)
    labeled = set(pref.liked) | set(pref.disliked)
    candidates = [
        record
        for record in neighborhoods_of(regions, destination_city.code)
        if record.id not in labeled
    ]
    return _score_and_explain(
        candidates, pref, bundle, regions, registry, config, lime_config
    )


def _check_recommendable(
    pref: PreferenceInput,
    bundle: ModelBundle,
    level: Level,
    regions: RegionTable,
) -> None:
    if not pref.liked:
        raise ValidationError(
            "at least one liked region is required to recommend (the liked "
            "set anchors the similarity features)"
        )
    if bundle.level is not level:
        raise ContractError(
            f"model bundle is for level {bundle.level.value!r}, "
            f"need {level.value!r}"
        )
    for rid in pref.liked + pref.disliked:
        if rid not in regions:
            raise ReferentialError(
                f"unknown {rid.level.value} code {rid.code!r}"
            )


def _score_and_explain(
    candidates: list[RegionRecord],
    pref: PreferenceInput,
    bundle: ModelBundle,
    regions: RegionTable,
    registry: DimensionRegistry,
    config: EngineConfig,
    lime_config: Optional[LimeConfig],
) -> RecommendationResult:
    n_wanted = config.n_city_recs
    if not candidates:
        return RecommendationResult(recommendations=(), flags=("no_candidates",))
    candidates = sorted(candidates, key=lambda r: r.id.code)
    liked_records = [
        regions[rid] for rid in sorted(pref.liked, key=lambda r: r.code)
    ]
    disliked_records = [
        regions[rid] for rid in sorted(pref.disliked, key=lambda r: r.code)
    ]
    cache: DistanceCache = {}
    X = np.stack(
        [
            aggregate_features(c, liked_records, disliked_records, registry, cache)
            for c in candidates
        ]
    )
    scores = predict_proba_batch(bundle.model, X)
    order = sorted(
        range(len(candidates)),
        key=lambda i: (-scores[i], -candidates[i].total_reviews, candidates[i].id.code),
    )

    liked_names = [r.name for r in liked_records]
    disliked_names = [r.name for r in disliked_records]

    def predict_fn(A: np.ndarray) -> np.ndarray:
        return predict_proba_batch(bundle.model, np.atleast_2d(np.asarray(A, float)))

    recommendations = []
    for i in order[:n_wanted]:
        record = candidates[i]
        expl = lime_explain(predict_fn, X[i], bundle.background, lime_config)
        expl = finalize_explanation(
            expl, record.name, liked_names, disliked_names, top_n=3
        )
        recommendations.append(
            Recommendation(
                region=record.id,
                name=record.name,
                score=float(scores[i]),
                explanation=expl,
                description=describe_region(record, registry),
                image_url=record.image_url,
            )
        )
    flags = (
        ("fewer_candidates_than_requested",) if len(candidates) < n_wanted else ()
    )
    return RecommendationResult(
        recommendations=tuple(recommendations), flags=flags
    )


def recommendation_to_dict(rec: Recommendation) -> dict:
    return {
        "code": rec.region.code,
        "level": rec.region.level.value,
        "parent_city": rec.region.parent_city,
        "name": rec.name,
        "score": rec.score,
        "description": rec.description,
        "image_url": rec.image_url,
        "explanation": explanation_to_dict(rec.explanation),
    }


# ---------------------------------------------------------------------------
# Catalog helpers and generated descriptions


def popular_regions(
    regions: RegionTable,
    level: Level,
    n: int,
    city_scope: Optional[str] = None,
) -> list[RegionRecord]:
    """Top-n regions at a level by attached review counts; ties by code."""
    pool = [
        record
        for rid, record in regions.items()
        if rid.level is level
        and (city_scope is None or rid.parent_city == city_scope)
    ]
    pool.sort(key=lambda r: (-r.total_reviews, r.id.code))
    return pool[:n]


def describe_region(record: RegionRecord, registry: DimensionRegistry) -> str:
    """Curated description if present, else a deterministic template."""
    if record.description:
        return record.description
    a = record.attributes
    kind = (
        "neighborhood" if record.id.level is Level.NEIGHBORHOOD else "metro area"
    )
    size = (
        "compact"
        if a.population < 20_000
        else "mid-sized"
        if a.population < 75_000
        else "large"
    )
    venue = registry.venue_categories[
        int(np.argmax(a.venue_type_distribution))
    ]
    scene = registry.scene_names[int(np.argmax(a.scenes_vector))]
    return (
        f"{record.name} is a {size} {kind} of roughly "
        f"{int(round(a.population)):,} residents, strongest on its {venue} "
        f"options and with a culture that leans toward {scene}. Median "
        f"household income is about ${int(round(a.median_income)):,}, and "
        f"{a.education_rate:.0%} of adults hold a bachelor's degree or higher."
    )


def region_description_prompt(
    record: RegionRecord, registry: DimensionRegistry
) -> str:
    """The writing prompt an external language model would receive."""
    a = record.attributes
    venue_mix = ", ".join(
        f"{name} {value:.0%}"
        for name, value in zip(
            registry.venue_categories, a.venue_type_distribution
        )
    )
    scene_mix = ", ".join(
        f"{name} {value:.2f}"
        for name, value in zip(registry.scene_names, a.scenes_vector)
    )
    return (
        f"Write a two-sentence, visitor-friendly description of "
        f"{record.name}.\n"
        f"Use only these facts:\n"
        f"- population: {int(round(a.population)):,}\n"
        f"- median household income: ${int(round(a.median_income)):,}\n"
        f"- share of adults with a bachelor's degree: {a.education_rate:.0%}\n"
        f"- employment rate: {a.employment_rate:.0%}\n"
        f"- political leaning (0 = right, 1 = left): {a.political_leaning:.2f}\n"
        f"- venue mix: {venue_mix}\n"
        f"- cultural profile: {scene_mix}\n"
        f"Do not invent amenities, history, or names."
    )


# ---------------------------------------------------------------------------
# Baselines


def popularity_baseline(
    train_examples: Sequence[LabeledExample],
    test_examples: Sequence[LabeledExample],
    regions: RegionTable,
    profiles: Mapping[str, UserProfile],
) -> np.ndarray:
    """Label 1 iff the region is among the top-P regions by review mass,
    where the mass is accumulated from the train split only.

    A train example contributes its own user's review count for its region;
    test examples contribute nothing, so a test region's rank never rides
    the test user's own reviews. P = round(train positive rate x region
    count at the level), the same positive-label budget the classifier saw
    in training. Ties rank by region code ascending.
    """
    if not train_examples or not test_examples:
        raise ContractError("popularity baseline needs train and test examples")
    level = test_examples[0].region.level
    rate = float(np.mean([e.label for e in train_examples]))
    region_count = sum(1 for rid in regions if rid.level is level)
    p = int(round(rate * region_count))
    if rate > 0:
        p = max(p, 1)
    mass: dict[RegionId, int] = {}
    for e in train_examples:
        count = profiles[e.user_id].counts[level].get(e.region, 0)
        mass[e.region] = mass.get(e.region, 0) + count
    ranked = sorted(mass.items(), key=lambda kv: (-kv[1], kv[0].code))
    popular = {rid for rid, _ in ranked[:p]}
    return np.asarray(
        [1 if e.region in popular else 0 for e in test_examples], dtype=int
    )


def interaction_matrix(
    train_examples: Sequence[LabeledExample],
    test_examples: Sequence[LabeledExample] = (),
) -> tuple[np.ndarray, dict[str, int], dict[RegionId, int]]:
    """Binary user x region visit matrix over the train split.

    Regions appearing only in the test split get all-zero columns so they
    can still be scored (as cold regions).
    """
    users: dict[str, int] = {}
    region_ids: dict[RegionId, int] = {}
    for e in list(train_examples) + list(test_examples):
        users.setdefault(e.user_id, len(users))
        region_ids.setdefault(e.region, len(region_ids))
    M = np.zeros((len(users), len(region_ids)))
    for e in train_examples:
        M[users[e.user_id], region_ids[e.region]] = 1.0
    return M, users, region_ids


def column_cosine_matrix(M: np.ndarray) -> np.ndarray:
    """Cosine similarity between every pair of columns; zero columns give 0."""
    norms = np.linalg.norm(M, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    S = (M.T @ M) / np.outer(safe, safe)
    return S


def icf_baseline(
    train_examples: Sequence[LabeledExample],
    test_examples: Sequence[LabeledExample],
) -> np.ndarray:
    """Item-based CF: score a region by summed column-cosine similarity to
    the user's train-visited regions; threshold at the train positive rate.
    """
    if not train_examples or not test_examples:
        raise ContractError("ICF baseline needs train and test examples")
    M, users, region_ids = interaction_matrix(train_examples, test_examples)
    S = column_cosine_matrix(M)
    visited: dict[int, list[int]] = {}
    for e in train_examples:
        visited.setdefault(users[e.user_id], []).append(region_ids[e.region])
    for idx_list in visited.values():
        idx_list.sort()

    scores = np.empty(len(test_examples))
    for i, e in enumerate(test_examples):
        idx = visited.get(users[e.user_id], [])
        scores[i] = S[region_ids[e.region], idx].sum() if idx else 0.0

    rate = float(np.mean([e.label for e in train_examples]))
    n_positive = int(round(rate * len(test_examples)))
    if n_positive == 0:
        return np.zeros(len(test_examples), dtype=int)
    threshold = np.sort(scores)[::-1][n_positive - 1]
    return (scores >= threshold).astype(int)


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(pairs: Sequence[tuple[int, int]]) -> dict:
    """Recall/precision/F1/support from (predicted, true) label pairs.

    With no positive ground-truth labels, recall and F1 are ``None``
    (undefined), never 0.
    """
    pairs = list(pairs)
    if not pairs:
        raise ContractError("evaluate requires at least one prediction")
    tp = sum(1 for p, t in pairs if p == 1 and t == 1)
    fp = sum(1 for p, t in pairs if p == 1 and t == 0)
    fn = sum(1 for p, t in pairs if p == 0 and t == 1)
    support = tp + fn
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    if support == 0:
        return {
            "recall": None,
            "precision": precision,
            "f1": None,
            "support": 0,
        }
    recall = tp / support
    f1 = (
        0.0
        if precision + recall == 0
        else 2 * precision * recall / (precision + recall)
    )
    return {"recall": recall, "precision": precision, "f1": f1, "support": support}


@dataclass(frozen=True)
class SweepRow:
    level: str
    k: int
    method: str
    recall: Optional[float]
    precision: Optional[float]
    f1: Optional[float]
    support: int


_SWEEP_METHODS = ("model", "popularity", "icf")


def evaluate_sweep(
    regions: RegionTable,
    registry: DimensionRegistry,
    log: ReviewLog,
    config: EngineConfig,
    ks: Sequence[int] = (2, 3, 4, 5),
    params: Optional[GbdtParams] = None,
) -> list[SweepRow]:
    """Model vs. baselines for each k, at both levels; fully deterministic."""
    profiles = build_profiles(log)
    profile_map = {p.user_id: p for p in profiles}
    if params is None:
        params = GbdtParams(
            n_trees=150,
            max_depth=4,
            learning_rate=0.15,
            min_samples_leaf=5,
            rng_seed=config.rng_seed,
        )
    rows: list[SweepRow] = []
    for k in ks:
        cfg = dataclasses.replace(config, k=k)
        for level in (Level.CITY, Level.NEIGHBORHOOD):
            train, test = build_dataset(profiles, regions, registry, cfg, level)
            X_train, y_train = examples_to_matrix(train)
            X_test, y_test = examples_to_matrix(test)
            truth = y_test.astype(int)
            model = fit(X_train, y_train, params)
            predictions = {
                "model": (predict_proba_batch(model, X_test) >= 0.5).astype(int),
                "popularity": popularity_baseline(
                    train, test, regions, profile_map
                ),
                "icf": icf_baseline(train, test),
            }
            for method in _SWEEP_METHODS:
                metrics = evaluate(list(zip(predictions[method], truth)))
                rows.append(
                    SweepRow(
                        level=level.value,
                        k=k,
                        method=method,
                        recall=metrics["recall"],
                        precision=metrics["precision"],
                        f1=metrics["f1"],
                        support=metrics["support"],
                    )
                )
    return rows


def _format_metric(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.6f}"


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    lines = ["level,k,method,recall,precision,f1,support"]
    for r in rows:
        lines.append(
            f"{r.level},{r.k},{r.method},{_format_metric(r.recall)},"
            f"{_format_metric(r.precision)},{_format_metric(r.f1)},{r.support}"
        )
    return "\n".join(lines) + "\n"


def sweep_to_text(rows: Sequence[SweepRow]) -> str:
    header = f"{'level':<14}{'k':>3}  {'method':<12}{'recall':>10}{'precision':>11}{'f1':>10}{'support':>9}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.level:<14}{r.k:>3}  {r.method:<12}"
            f"{_format_metric(r.recall):>10}{_format_metric(r.precision):>11}"
            f"{_format_metric(r.f1):>10}{r.support:>9}"
        )
    return "\n".join(lines) + "\n"
