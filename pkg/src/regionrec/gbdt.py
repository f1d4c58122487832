"""Gradient-boosted decision trees for binary classification, from scratch.

Boosting runs on the logistic loss with first- and second-order statistics
(g = p - y, h = p(1-p)); trees are grown depth-first with exact greedy
split search over every midpoint between consecutive distinct feature
values, scored by the standard second-order gain

    gain = G_L^2/(H_L + lambda) + G_R^2/(H_R + lambda) - G^2/(H + lambda)

with leaf values -G/(H + lambda). Splits are accepted when the gain is
non-negative: requiring strictly positive gain would make symmetric
interaction patterns (XOR-like data, where every root split has exactly
zero gain) unlearnable at any depth, the same reason library tree growers
split on zero impurity decrease.

The exact greedy search (rather than histogram binning) keeps the split
decision reproducible against a brute-force enumeration oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import ConfigError, ContractError, ModelIOError

MODEL_FORMAT = "regionrec-gbdt"
MODEL_VERSION = 1

# base_score stays within +/-10 log-odds so single-class training sets
# cannot push predictions to exact 0/1.
BASE_SCORE_CLAMP = 10.0

_PROBA_EPS = 1e-12


@dataclass(frozen=True)
class GbdtParams:
    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    l2_leaf_reg: float = 1.0
    subsample: float = 1.0
    rng_seed: int = 7

    def __post_init__(self) -> None:
        if self.n_trees < 0:
            raise ConfigError(f"n_trees must be >= 0, got {self.n_trees}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ConfigError(
                f"learning_rate must lie in (0,1], got {self.learning_rate}"
            )
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.l2_leaf_reg < 0:
            raise ConfigError("l2_leaf_reg must be >= 0")
        if not (0.0 < self.subsample <= 1.0):
            raise ConfigError(f"subsample must lie in (0,1], got {self.subsample}")


@dataclass
class TreeNode:
    """Either an internal split (children set) or a leaf (value only)."""

    value: float = 0.0
    feature_index: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        return {
            "feature": self.feature_index,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeNode":
        if "value" in data:
            return cls(value=float(data["value"]))
        return cls(
            feature_index=int(data["feature"]),
            threshold=float(data["threshold"]),
            left=cls.from_dict(data["left"]),
            right=cls.from_dict(data["right"]),
        )


@dataclass
class GbdtModel:
    """Additive tree ensemble: sigmoid(base_score + lr * sum of tree outputs)."""

    base_score: float
    learning_rate: float
    feature_count: int
    trees: list[TreeNode] = field(default_factory=list)
    params: GbdtParams = field(default_factory=GbdtParams)
    single_class: bool = False


def sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    arr = np.asarray(z, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out[0]) if scalar else out


def logistic_loss(y: np.ndarray, raw: np.ndarray) -> float:
    """Mean negative log-likelihood of labels under raw log-odds scores."""
    y = np.asarray(y, dtype=np.float64)
    raw = np.asarray(raw, dtype=np.float64)
    # log(1 + exp(-|z|)) + max(z, 0) - z*y is the stable form
    return float(np.mean(np.logaddexp(0.0, raw) - raw * y))


def best_split(
    feature_values: Sequence[float],
    gradients: Sequence[float],
    hessians: Sequence[float],
    params: GbdtParams,
) -> Optional[tuple[float, float]]:
    """Exact greedy search for the best threshold on one feature.

    Evaluates every midpoint between consecutive distinct sorted feature
    values, subject to ``min_samples_leaf`` on both sides. Returns the
    (threshold, gain) maximizing the second-order gain, ties broken toward
    the smaller threshold, or ``None`` when no candidate has non-negative
    gain.
    """
    x = np.asarray(feature_values, dtype=np.float64)
    g = np.asarray(gradients, dtype=np.float64)
    h = np.asarray(hessians, dtype=np.float64)
    if not (x.shape == g.shape == h.shape) or x.ndim != 1:
        raise ContractError(
            f"best_split inputs must be equal-length 1-D arrays, "
            f"got shapes {x.shape}/{g.shape}/{h.shape}"
        )
    n = x.shape[0]
    msl = params.min_samples_leaf
    if n < 2 * msl:
        return None

    order = np.argsort(x, kind="stable")
    xs = x[order]
    cg = np.cumsum(g[order])
    ch = np.cumsum(h[order])
    total_g = cg[-1]
    total_h = ch[-1]
    lam = params.l2_leaf_reg

    # split after sorted position i puts i+1 samples on the left
    pos = np.arange(msl - 1, n - msl)
    pos = pos[xs[pos] != xs[pos + 1]]
    if pos.size == 0:
        return None

    gl = cg[pos]
    hl = ch[pos]
    gr = total_g - gl
    hr = total_h - hl
    gains = (
        gl * gl / (hl + lam)
        + gr * gr / (hr + lam)
        - total_g * total_g / (total_h + lam)
    )
    best = int(np.argmax(gains))  # first max = smallest threshold on ties
    if gains[best] < 0.0:
        return None
    i = int(pos[best])
    threshold = 0.5 * (xs[i] + xs[i + 1])
    return float(threshold), float(gains[best])


def _leaf_value(g: np.ndarray, h: np.ndarray, lam: float) -> float:
    return float(-g.sum() / (h.sum() + lam))


def _grow(
    X: np.ndarray, g: np.ndarray, h: np.ndarray, depth: int, params: GbdtParams
) -> TreeNode:
    node = TreeNode(value=_leaf_value(g, h, params.l2_leaf_reg))
    if depth >= params.max_depth or X.shape[0] < 2 * params.min_samples_leaf:
        return node

    best_gain = -np.inf
    best_feature = -1
    best_threshold = 0.0
    for j in range(X.shape[1]):
        found = best_split(X[:, j], g, h, params)
        if found is not None and found[1] > best_gain:
            best_threshold, best_gain = found
            best_feature = j
    if best_feature < 0:
        return node

    mask = X[:, best_feature] <= best_threshold
    node.feature_index = best_feature
    node.threshold = best_threshold
    node.left = _grow(X[mask], g[mask], h[mask], depth + 1, params)
    node.right = _grow(X[~mask], g[~mask], h[~mask], depth + 1, params)
    return node


def _tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack: list[tuple[TreeNode, np.ndarray]] = [(node, np.arange(X.shape[0]))]
    while stack:
        current, idx = stack.pop()
        if current.is_leaf:
            out[idx] = current.value
            continue
        mask = X[idx, current.feature_index] <= current.threshold
        stack.append((current.left, idx[mask]))
        stack.append((current.right, idx[~mask]))
    return out


def fit(X: np.ndarray, y: np.ndarray, params: GbdtParams | None = None) -> GbdtModel:
    """Train the boosted ensemble on a feature matrix and 0/1 labels.

    A single-class training set yields a trivial base-score-only model
    with ``single_class=True``. Deterministic for fixed data, params, and
    seed (row subsampling, when enabled, is the only randomized step).
    """
    if params is None:
        params = GbdtParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ContractError(
            f"fit expects X of shape (n, d) and y of shape (n,), "
            f"got {X.shape} and {y.shape}"
        )
    if X.shape[0] == 0:
        raise ContractError("fit requires at least one example")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ContractError("labels must be 0 or 1")

    prevalence = float(y.mean())
    base_score = _clamped_logit(prevalence)
    model = GbdtModel(
        base_score=base_score,
        learning_rate=params.learning_rate,
        feature_count=X.shape[1],
        params=params,
    )
    if prevalence in (0.0, 1.0):
        model.single_class = True
        return model

    rng = np.random.default_rng(params.rng_seed)
    raw = np.full(X.shape[0], base_score, dtype=np.float64)
    for _ in range(params.n_trees):
        p = sigmoid(raw)
        g = p - y
        h = p * (1.0 - p)
        if params.subsample < 1.0:
            size = max(1, int(round(params.subsample * X.shape[0])))
            rows = rng.permutation(X.shape[0])[:size]
            tree = _grow(X[rows], g[rows], h[rows], 0, params)
        else:
            tree = _grow(X, g, h, 0, params)
        model.trees.append(tree)
        raw += params.learning_rate * _tree_predict(tree, X)
    return model


def _clamped_logit(p: float) -> float:
    if p <= 0.0:
        return -BASE_SCORE_CLAMP
    if p >= 1.0:
        return BASE_SCORE_CLAMP
    z = math.log(p / (1.0 - p))
    return max(-BASE_SCORE_CLAMP, min(BASE_SCORE_CLAMP, z))


def raw_score(model: GbdtModel, fv: Sequence[float]) -> float:
    """Log-odds score base_score + lr * sum of tree outputs for one vector."""
    x = np.asarray(fv, dtype=np.float64)
    if x.shape != (model.feature_count,):
        raise ContractError(
            f"feature vector has length {x.shape}, model expects "
            f"({model.feature_count},)"
        )
    total = 0.0
    for tree in model.trees:
        node = tree
        while not node.is_leaf:
            node = node.left if x[node.feature_index] <= node.threshold else node.right
        total += node.value
    return model.base_score + model.learning_rate * total


def predict_proba(model: GbdtModel, fv: Sequence[float]) -> float:
    """Probability of the high-interest label, strictly inside (0,1)."""
    p = float(sigmoid(raw_score(model, fv)))
    return min(max(p, _PROBA_EPS), 1.0 - _PROBA_EPS)


def predict_proba_batch(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_count:
        raise ContractError(
            f"feature matrix has shape {X.shape}, model expects "
            f"(n, {model.feature_count})"
        )
    raw = np.full(X.shape[0], model.base_score, dtype=np.float64)
    for tree in model.trees:
        raw += model.learning_rate * _tree_predict(tree, X)
    return np.clip(sigmoid(raw), _PROBA_EPS, 1.0 - _PROBA_EPS)


def staged_raw_scores(model: GbdtModel, X: np.ndarray) -> np.ndarray:
    """Raw scores after 0..n_trees boosting steps, shape (n_trees+1, n)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty((len(model.trees) + 1, X.shape[0]), dtype=np.float64)
    out[0] = model.base_score
    for t, tree in enumerate(model.trees):
        out[t + 1] = out[t] + model.learning_rate * _tree_predict(tree, X)
    return out


def model_to_dict(model: GbdtModel) -> dict:
    p = model.params
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": {
            "n_trees": p.n_trees,
            "max_depth": p.max_depth,
            "learning_rate": p.learning_rate,
            "min_samples_leaf": p.min_samples_leaf,
            "l2_leaf_reg": p.l2_leaf_reg,
            "subsample": p.subsample,
            "rng_seed": p.rng_seed,
        },
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "feature_count": model.feature_count,
        "single_class": model.single_class,
        "trees": [tree.to_dict() for tree in model.trees],
    }


def model_from_dict(data: dict) -> GbdtModel:
    if data.get("format") != MODEL_FORMAT:
        raise ModelIOError(f"not a {MODEL_FORMAT} file")
    if data.get("version") != MODEL_VERSION:
        raise ModelIOError(
            f"unsupported model version {data.get('version')!r}, "
            f"expected {MODEL_VERSION}"
        )
    try:
        params = GbdtParams(**data["params"])
        model = GbdtModel(
            base_score=float(data["base_score"]),
            learning_rate=float(data["learning_rate"]),
            feature_count=int(data["feature_count"]),
            trees=[TreeNode.from_dict(t) for t in data["trees"]],
            params=params,
            single_class=bool(data["single_class"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelIOError(f"malformed model file: {exc}") from exc
    return model


def save_model(model: GbdtModel, path: str | Path) -> None:
    """Write the model as versioned JSON; floats round-trip bit-exactly."""
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> GbdtModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelIOError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ModelIOError(f"cannot read model file {path}: not a JSON object")
    return model_from_dict(data)
