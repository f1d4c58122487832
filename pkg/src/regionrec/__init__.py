"""Explainable two-stage travel recommender over review-count interest.

The pipeline: load (or synthesize) a region table and review log, build
per-user interest profiles from review counts, turn each user's top/bottom
regions into similarity features, train a boosted-tree classifier per level
(city, then neighborhood), and serve recommendations where every result
carries a local surrogate explanation.
"""

from .core import (
    DIMENSION_ORDER,
    ConfigError,
    ContractError,
    DegenerateInputError,
    Dimension,
    DimensionKind,
    DimensionRegistry,
    EngineConfig,
    Level,
    LoadError,
    ModelIOError,
    ReferentialError,
    RegionAttributes,
    RegionId,
    RegionRecord,
    RegionrecError,
    ValidationError,
    feature_names,
)
from .explain import (
    Background,
    Explanation,
    LimeConfig,
    build_prompt,
    lime_explain,
    render_text,
)
from .gbdt import GbdtModel, GbdtParams, fit, load_model, predict_proba, save_model
from .ingest import (
    ReviewEvent,
    ReviewLog,
    SyntheticSpec,
    filter_tourists,
    generate_synthetic,
    load_regions,
    load_reviews,
)
from .interest import (
    LabeledExample,
    Partition,
    UserProfile,
    build_dataset,
    build_profiles,
    partition_regions,
)
from .recsys import (
    ModelBundle,
    PreferenceInput,
    Recommendation,
    RecommendationResult,
    evaluate,
    evaluate_sweep,
    icf_baseline,
    popular_regions,
    popularity_baseline,
    recommend_cities,
    recommend_neighborhoods,
    train_bundle,
)
from .simfeat import (
    aggregate_features,
    build_registry,
    cosine_distance,
    haversine_km,
    jensen_shannon_distance,
)

__version__ = "0.1.0"

__all__ = [
    "DIMENSION_ORDER",
    "Background",
    "ConfigError",
    "ContractError",
    "DegenerateInputError",
    "Dimension",
    "DimensionKind",
    "DimensionRegistry",
    "EngineConfig",
    "Explanation",
    "GbdtModel",
    "GbdtParams",
    "LabeledExample",
    "Level",
    "LimeConfig",
    "LoadError",
    "ModelBundle",
    "ModelIOError",
    "Partition",
    "PreferenceInput",
    "Recommendation",
    "RecommendationResult",
    "ReferentialError",
    "RegionAttributes",
    "RegionId",
    "RegionRecord",
    "RegionrecError",
    "ReviewEvent",
    "ReviewLog",
    "SyntheticSpec",
    "UserProfile",
    "ValidationError",
    "aggregate_features",
    "build_dataset",
    "build_profiles",
    "build_prompt",
    "build_registry",
    "cosine_distance",
    "evaluate",
    "evaluate_sweep",
    "feature_names",
    "filter_tourists",
    "fit",
    "generate_synthetic",
    "haversine_km",
    "icf_baseline",
    "jensen_shannon_distance",
    "lime_explain",
    "load_model",
    "load_regions",
    "load_reviews",
    "partition_regions",
    "popular_regions",
    "popularity_baseline",
    "predict_proba",
    "recommend_cities",
    "recommend_neighborhoods",
    "render_text",
    "save_model",
    "train_bundle",
    "__version__",
]
