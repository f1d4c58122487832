"""Local surrogate explanations for single predictions, plus text rendering.

The explainer probes the model in a neighborhood of one instance and fits a
proximity-weighted ridge regression as a local stand-in, whose coefficients
become per-feature attributions. The sampling recipe is part of the public
contract so independent checkers can regenerate the exact same perturbations:

    rng = np.random.default_rng(config.rng_seed)
    noise = rng.standard_normal((n_samples, n_features))
    samples = instance + noise * perturb_std

where ``perturb_std`` is the background standard deviation with zeros
replaced by 1e-6. Sample weights are ``exp(-d^2 / kernel_width^2)`` with
``d`` the Euclidean distance from the instance in background-standardized
space, so a perturbation at distance zero weighs exactly 1 and weights
decrease strictly with distance. The ridge fit runs on
background-standardized features with an unpenalized intercept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ConfigError, ContractError, ValidationError

_ZERO_VARIANCE_STD = 1e-6

PredictFn = Callable[[np.ndarray], object]


@dataclass(frozen=True)
class LimeConfig:
    """Knobs for the local surrogate; defaults suit 16-feature instances.

    ``kernel_width`` defaults to 0.75 * sqrt(feature_count), resolved at
    explanation time when left as None.
    """

    n_samples: int = 5000
    kernel_width: Optional[float] = None
    ridge_lambda: float = 1e-3
    rng_seed: int = 7

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigError(f"n_samples must be positive, got {self.n_samples}")
        if self.kernel_width is not None and not (self.kernel_width > 0):
            raise ConfigError(
                f"kernel_width must be positive, got {self.kernel_width}"
            )
        if self.ridge_lambda < 0:
            raise ConfigError(
                f"ridge_lambda must be non-negative, got {self.ridge_lambda}"
            )

    def resolved_kernel_width(self, feature_count: int) -> float:
        if self.kernel_width is not None:
            return self.kernel_width
        return 0.75 * math.sqrt(feature_count)


@dataclass(frozen=True)
class Background:
    """Per-feature training-data statistics the explainer perturbs around."""

    mean: np.ndarray
    std: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        d = len(self.feature_names)
        if self.mean.shape != (d,) or self.std.shape != (d,):
            raise ValidationError(
                f"background mean/std must both have shape ({d},), got "
                f"{self.mean.shape} and {self.std.shape}"
            )
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.std))):
            raise ValidationError("background statistics must be finite")
        if np.any(self.std < 0):
            raise ValidationError("background stddevs must be >= 0")

    @classmethod
    def from_matrix(
        cls, X: np.ndarray, feature_names: Sequence[str]
    ) -> "Background":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(feature_names):
            raise ValidationError(
                f"expected a (n, {len(feature_names)}) matrix, got {X.shape}"
            )
        return cls(
            mean=X.mean(axis=0),
            std=X.std(axis=0),
            feature_names=tuple(feature_names),
        )

    @property
    def safe_std(self) -> np.ndarray:
        return np.where(self.std > 0, self.std, _ZERO_VARIANCE_STD)


@dataclass(frozen=True)
class Explanation:
    """Full attribution payload for one scored candidate."""

    attributions: tuple[tuple[str, float], ...]
    intercept: float
    raw_distances: dict[str, float]
    surrogate_r2: float
    rendered_text: str = ""
    llm_prompt: str = ""


def _evaluate_predict_fn(predict_fn: PredictFn, samples: np.ndarray) -> np.ndarray:
    """Run the model on every perturbation; batch call first, rows as fallback."""
    n = samples.shape[0]
    try:
        batched = np.asarray(predict_fn(samples), dtype=float)
        if batched.shape == (n,):
            return batched
    except Exception:
        pass
    out = np.empty(n)
    for i in range(n):
        try:
            out[i] = float(predict_fn(samples[i]))
        except Exception as exc:
            raise ContractError(
                f"predict_fn failed on perturbation sample {i}: {exc}"
            ) from exc
    return out


def lime_explain(
    predict_fn: PredictFn,
    instance: np.ndarray,
    background: Background,
    config: Optional[LimeConfig] = None,
) -> Explanation:
    """Fit a proximity-weighted linear surrogate around one instance.

    ``predict_fn`` maps a feature vector to a probability; it may also accept
    a (n, d) batch and return (n,) probabilities, which is used when
    available. Deterministic given ``config.rng_seed``. Raises a
    configuration error when ``n_samples < feature_count + 1`` (the ridge
    system would be underdetermined even before weighting).
    """
    config = config or LimeConfig()
    instance = np.asarray(instance, dtype=float)
    d = len(background.feature_names)
    if instance.shape != (d,):
        raise ContractError(
            f"instance has shape {instance.shape}, background declares {d} features"
        )
    if config.n_samples < d + 1:
        raise ConfigError(
            f"n_samples={config.n_samples} is fewer than feature_count+1={d + 1}"
        )
    perturb_std = background.safe_std
    rng = np.random.default_rng(config.rng_seed)
    noise = rng.standard_normal((config.n_samples, d))
    samples = instance + noise * perturb_std

    y = _evaluate_predict_fn(predict_fn, samples)
    if not np.all(np.isfinite(y)):
        raise ContractError("predict_fn produced non-finite outputs")

    kernel_width = config.resolved_kernel_width(d)
    dist_sq = np.sum(((samples - instance) / perturb_std) ** 2, axis=1)
    weights = np.exp(-dist_sq / kernel_width**2)

    Z = (samples - background.mean) / perturb_std
    coefs, intercept, r2 = _weighted_ridge(Z, y, weights, config.ridge_lambda)

    order = np.argsort(-np.abs(coefs), kind="stable")
    attributions = tuple(
        (background.feature_names[i], float(coefs[i])) for i in order
    )
    raw_distances = {
        name: float(instance[i]) for i, name in enumerate(background.feature_names)
    }
    return Explanation(
        attributions=attributions,
        intercept=float(intercept),
        raw_distances=raw_distances,
        surrogate_r2=float(r2),
    )


def _weighted_ridge(
    Z: np.ndarray, y: np.ndarray, weights: np.ndarray, ridge_lambda: float
) -> tuple[np.ndarray, float, float]:
    """Closed-form weighted ridge with an unpenalized intercept.

    Solves (A' W A + P) beta = A' W y for A = [1 | Z], P = lambda*I with
    P[0,0] = 0. Returns (coefficients, intercept, weighted R^2).
    """
    n, d = Z.shape
    A = np.hstack([np.ones((n, 1)), Z])
    sw = np.sqrt(weights)
    Aw = A * sw[:, None]
    yw = y * sw
    gram = Aw.T @ Aw
    penalty = ridge_lambda * np.eye(d + 1)
    penalty[0, 0] = 0.0
    beta = np.linalg.solve(gram + penalty, Aw.T @ yw)

    fitted = A @ beta
    w_sum = weights.sum()
    y_bar = float(weights @ y) / w_sum
    ss_res = float(weights @ (y - fitted) ** 2)
    ss_tot = float(weights @ (y - y_bar) ** 2)
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return beta[1:], float(beta[0]), r2


# ---------------------------------------------------------------------------
# Rendering

_DIMENSION_PHRASES = {
    "geo": "location",
    "population": "population size",
    "income": "income level",
    "education": "education levels",
    "race": "demographic makeup",
    "politics": "political leaning",
    "scenes": "cultural scene",
    "venues": "mix of venues",
    "employment": "employment rate",
}


def _split_feature(feature_name: str) -> tuple[str, str]:
    for suffix in ("_to_top", "_to_bottom"):
        if feature_name.endswith(suffix):
            return feature_name[: -len(suffix)], suffix
    raise ContractError(
        f"feature name {feature_name!r} lacks a _to_top/_to_bottom suffix"
    )


def _direction_phrase(suffix: str, weight: float) -> str:
    reference = "liked" if suffix == "_to_top" else "disliked"
    if weight < 0:
        return f"is similar to your {reference} places"
    return f"differs from your {reference} places"


def render_text(
    expl: Explanation,
    region_name: str,
    liked_names: Sequence[str],
    top_n: int,
) -> str:
    """Deterministic sentences for the strongest attributions.

    One sentence per top-``top_n`` attribution, naming the dimension, the
    similar/dissimilar direction implied by the weight sign and the feature's
    liked/disliked suffix, and the raw distance value.
    """
    if top_n < 0:
        raise ConfigError(f"top_n must be >= 0, got {top_n}")
    if top_n > len(expl.attributions):
        raise ConfigError(
            f"top_n={top_n} exceeds the {len(expl.attributions)} available "
            f"attributions"
        )
    if top_n == 0:
        return (
            f"{region_name} is recommended based on its overall similarity "
            f"profile to your selections."
        )
    liked_part = (
        f" compared with {_join_names(liked_names)}" if liked_names else ""
    )
    sentences = [f"Why {region_name}{liked_part}:"]
    for feature_name, weight in expl.attributions[:top_n]:
        dimension, suffix = _split_feature(feature_name)
        phrase = _DIMENSION_PHRASES.get(dimension, dimension)
        direction = _direction_phrase(suffix, weight)
        distance = expl.raw_distances[feature_name]
        sentences.append(
            f"It {direction} in {phrase} (distance {distance:.3f}, "
            f"weight {weight:+.3f})."
        )
    return " ".join(sentences)


def _join_names(names: Sequence[str]) -> str:
    names = list(names)
    if len(names) == 1:
        return names[0]
    return ", ".join(names[:-1]) + f" and {names[-1]}"


def build_prompt(
    expl: Explanation,
    region_name: str,
    liked_names: Sequence[str],
    disliked_names: Sequence[str],
) -> str:
    """Self-contained prompt for an external writing assistant.

    Embeds every attribution (one line per feature, carrying both the local
    weight and the raw distance), the candidate and reference region names,
    and the writing instruction. The engine never calls any model itself.
    """
    lines = [
        "You are a travel writer. Using the signals below from a",
        "recommendation model, write a short, friendly justification",
        f"(3-4 sentences) for suggesting {region_name} to this traveler.",
        "",
        f"Candidate: {region_name}",
    ]
    if liked_names:
        lines.append(f"Places the traveler liked: {', '.join(liked_names)}")
    if disliked_names:
        lines.append(f"Places the traveler disliked: {', '.join(disliked_names)}")
    lines += [
        f"Local surrogate fit R^2: {expl.surrogate_r2:.4f}",
        "",
        "Signals (weight = local importance, negative favors similarity;",
        "distance = raw dissimilarity between candidate and reference set):",
    ]
    for feature_name, weight in expl.attributions:
        distance = expl.raw_distances[feature_name]
        lines.append(
            f"- {feature_name}: weight {weight:+.6f}, distance {distance:.6f}"
        )
    lines += [
        "",
        "Mention the strongest signals in plain language; do not mention",
        "model internals, weights, or numbers directly.",
    ]
    return "\n".join(lines)


def finalize_explanation(
    expl: Explanation,
    region_name: str,
    liked_names: Sequence[str],
    disliked_names: Sequence[str],
    top_n: int = 3,
) -> Explanation:
    """Fill in the rendered text and exportable prompt on an explanation."""
    return replace(
        expl,
        rendered_text=render_text(expl, region_name, liked_names, top_n),
        llm_prompt=build_prompt(expl, region_name, liked_names, disliked_names),
    )


def explanation_to_dict(expl: Explanation) -> dict:
    return {
        "attributions": [
            {"feature": name, "weight": weight}
            for name, weight in expl.attributions
        ],
        "intercept": expl.intercept,
        "raw_distances": dict(expl.raw_distances),
        "surrogate_r2": expl.surrogate_r2,
        "rendered_text": expl.rendered_text,
        "llm_prompt": expl.llm_prompt,
    }
