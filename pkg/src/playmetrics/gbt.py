"""Gradient-boosted regression trees over one-hot game features.

The model is an additive ensemble: prediction(x) = base_score + lr * sum of
per-round tree outputs, each tree fit to the current residuals by greedy
variance-reduction splits with mean-residual leaves. Implemented from
scratch; the estimator follows the scikit-learn fit/predict/get_params
contract so it composes with that ecosystem.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .aggregate import MergedGameRow
from .errors import EmptyDatasetError, ModelLoadError
from .ingest import GENRE_FLAGS, GameMetadata
from .schema import PriceCategory

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

PRICE_FEATURES: tuple[str, ...] = (
    "Price_Free",
    "Price_Low_Priced_Indie",
    "Price_Mid_Priced_Indie",
    "Price_AA_Games",
    "Price_AAA_Games",
    "Price_Premium_AAA_Games",
)

BINARY_FEATURES: tuple[str, ...] = (
    "Is_VR",
    "Is_3D",
    "Is_Indie",
    "Free_To_Play",
    "Is_Coop",
    "Is_Singleplayer",
    "Is_Multiplayer",
)

FEATURE_NAMES: tuple[str, ...] = PRICE_FEATURES + BINARY_FEATURES + GENRE_FLAGS

_GAIN_EPS = 1e-12


def feature_vector(meta: GameMetadata) -> np.ndarray:
    """30 binary features: price one-hot, platform flags, genre flags."""
    price = np.zeros(len(PRICE_FEATURES))
    price[meta.price_category.ordinal] = 1.0
    flags = np.array([float(getattr(meta, name)) for name in BINARY_FEATURES])
    genres = np.array([float(getattr(meta, name)) for name in GENRE_FLAGS])
    return np.concatenate([price, flags, genres])


@dataclass
class FeatureDataset:
    X: np.ndarray
    y: np.ndarray
    game_ids: list[str]
    dropped_ids: list[str]


def build_feature_matrix(rows: Sequence[MergedGameRow]) -> FeatureDataset:
    """Feature matrix + overall-rating labels; unlabeled rows are dropped."""
    kept: list[MergedGameRow] = []
    dropped: list[str] = []
    for row in rows:
        if row.averages.overall_rating is None:
            dropped.append(row.game_id)
        else:
            kept.append(row)
    if dropped:
        logger.info("%d rows without an overall rating dropped from features", len(dropped))
    if not kept:
        raise EmptyDatasetError("no rows with a defined overall rating")
    X = np.stack([feature_vector(row.meta) for row in kept])
    y = np.array([row.averages.overall_rating for row in kept], dtype=np.float64)
    return FeatureDataset(X=X, y=y, game_ids=[r.game_id for r in kept], dropped_ids=dropped)


def _sse(values: np.ndarray) -> float:
    if len(values) == 0:
        return 0.0
    centered = values - values.mean()
    return float(np.dot(centered, centered))


def _grow_tree(
    X: np.ndarray,
    residual: np.ndarray,
    indices: np.ndarray,
    depth: int,
    max_depth: int,
    min_samples_leaf: int,
) -> dict:
    node_residual = residual[indices]
    leaf = {"value": float(node_residual.mean())}
    if depth >= max_depth or len(indices) < 2 * min_samples_leaf:
        return leaf
    parent_sse = _sse(node_residual)
    if parent_sse <= _GAIN_EPS:
        return leaf

    best_gain = _GAIN_EPS
    best: tuple[int, float, np.ndarray] | None = None
    # Scan features/thresholds in ascending order; strict improvement wins,
    # so ties deterministically break to the lowest feature index.
    for feature in range(X.shape[1]):
        column = X[indices, feature]
        values = np.unique(column)
        if len(values) < 2:
            continue
        for threshold in (values[:-1] + values[1:]) / 2.0:
            left_mask = column < threshold
            n_left = int(left_mask.sum())
            if n_left < min_samples_leaf or len(indices) - n_left < min_samples_leaf:
                continue
            gain = parent_sse - _sse(node_residual[left_mask]) - _sse(node_residual[~left_mask])
            if gain > best_gain:
                best_gain = gain
                best = (feature, float(threshold), left_mask)
    if best is None:
        return leaf
    feature, threshold, left_mask = best
    return {
        "feature": feature,
        "threshold": threshold,
        "left": _grow_tree(X, residual, indices[left_mask], depth + 1, max_depth, min_samples_leaf),
        "right": _grow_tree(X, residual, indices[~left_mask], depth + 1, max_depth, min_samples_leaf),
    }


def tree_predict(tree: dict, X: np.ndarray) -> np.ndarray:
    """Evaluate one tree for every row of X."""
    out = np.empty(len(X), dtype=np.float64)

    def walk(node: dict, idx: np.ndarray) -> None:
        if "value" in node:
            out[idx] = node["value"]
            return
        mask = X[idx, node["feature"]] < node["threshold"]
        walk(node["left"], idx[mask])
        walk(node["right"], idx[~mask])

    walk(tree, np.arange(len(X)))
    return out


class BoostedTreeRegressor(BaseEstimator, RegressorMixin):
    """Additive boosted regression trees with squared-error loss.

    Parameters
    ----------
    n_rounds : number of boosting rounds (trees).
    learning_rate : shrinkage applied to every tree's contribution, in (0, 1].
    max_depth : depth limit per tree.
    min_samples_leaf : minimum rows per leaf.
    seed : kept for API stability; training is fully deterministic (split
        ties break to the lowest feature index, then the lowest threshold).
    """

    def __init__(
        self,
        n_rounds: int = 50,
        learning_rate: float = 0.1,
        max_depth: int = 4,
        min_samples_leaf: int = 2,
        seed: int = 0,
    ):
        self.n_rounds = n_rounds
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed

    def _check_params(self) -> None:
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")

    def fit(self, X, y, feature_names: Sequence[str] | None = None):
        """Fit boosted trees to (X, y); records per-round training MSE.

        Stops early once a round cannot find any split (all remaining
        residual structure exhausted), leaving a base-score-only model in
        the degenerate constant-label case.
        """
        self._check_params()
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if len(y) < 2:
            raise ValueError("need at least 2 training rows")
        self.n_features_in_ = X.shape[1]
        self.feature_names_ = list(feature_names) if feature_names is not None else None
        self.base_score_ = float(y.mean())
        self.trees_: list[dict] = []
        self.training_history_: list[float] = []

        predictions = np.full(len(y), self.base_score_, dtype=np.float64)
        all_rows = np.arange(len(y))
        for _round in range(self.n_rounds):
            residual = y - predictions
            tree = _grow_tree(X, residual, all_rows, 0, self.max_depth, self.min_samples_leaf)
            if "value" in tree:
                break
            self.trees_.append(tree)
            predictions = predictions + self.learning_rate * tree_predict(tree, X)
            self.training_history_.append(float(np.mean((y - predictions) ** 2)))
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "base_score_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, model expects {self.n_features_in_}"
            )
        predictions = np.full(len(X), self.base_score_, dtype=np.float64)
        for tree in self.trees_:
            predictions = predictions + self.learning_rate * tree_predict(tree, X)
        return predictions


def evaluate(model: BoostedTreeRegressor, X, y) -> dict[str, float | None]:
    """Training-style diagnostics: mse, mae, and r2 (None on zero label variance)."""
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise ValueError("need at least one row to evaluate")
    predictions = model.predict(X)
    if len(predictions) != len(y):
        raise ValueError(f"length mismatch: {len(predictions)} vs {len(y)}")
    errors = y - predictions
    mse = float(np.mean(errors**2))
    mae = float(np.mean(np.abs(errors)))
    ss_tot = _sse(y)
    r2 = None if ss_tot == 0.0 else 1.0 - float(np.sum(errors**2)) / ss_tot
    return {"mse": mse, "mae": mae, "r2": r2}


def genre_influence(
    model: BoostedTreeRegressor,
    rows: Sequence[MergedGameRow],
    vr: bool,
) -> list[tuple[str, float]]:
    """Mean model prediction per genre over observed rows of one platform.

    Genres with no matching rows are omitted; the result is sorted by
    predicted rating descending (ties by genre name).
    """
    wanted_flag = 1 if vr else 0
    platform_rows = [row for row in rows if row.meta.Is_VR == wanted_flag]
    results: list[tuple[str, float]] = []
    if not platform_rows:
        return results
    X = np.stack([feature_vector(row.meta) for row in platform_rows])
    predictions = model.predict(X)
    for genre in GENRE_FLAGS:
        mask = np.array([getattr(row.meta, genre) == 1 for row in platform_rows])
        if not mask.any():
            continue
        results.append((genre, float(predictions[mask].mean())))
    results.sort(key=lambda item: (-item[1], item[0]))
    return results


def save_model(model: BoostedTreeRegressor, path: str | Path) -> None:
    check_is_fitted(model, "base_score_")
    names = model.feature_names_
    if names is None:
        names = list(FEATURE_NAMES) if model.n_features_in_ == len(FEATURE_NAMES) else [
            f"x{i}" for i in range(model.n_features_in_)
        ]
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "feature_names": names,
        "base_score": model.base_score_,
        "learning_rate": model.learning_rate,
        "trees": model.trees_,
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _check_tree(node: object, n_features: int) -> None:
    if not isinstance(node, dict):
        raise ModelLoadError(f"tree node must be an object, got {type(node).__name__}")
    if "value" in node:
        if not isinstance(node["value"], (int, float)) or not np.isfinite(node["value"]):
            raise ModelLoadError(f"leaf value {node.get('value')!r} is not a finite number")
        return
    for key in ("feature", "threshold", "left", "right"):
        if key not in node:
            raise ModelLoadError(f"internal node missing {key!r}")
    if not isinstance(node["feature"], int) or not 0 <= node["feature"] < n_features:
        raise ModelLoadError(f"feature index {node['feature']!r} out of range")
    _check_tree(node["left"], n_features)
    _check_tree(node["right"], n_features)


def load_model(path: str | Path) -> BoostedTreeRegressor:
    """Load a saved model; predictions agree exactly with the saved one."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelLoadError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("version") != MODEL_FORMAT_VERSION:
        raise ModelLoadError(
            f"unsupported model version {payload.get('version')!r}"
            if isinstance(payload, dict)
            else "model file is not a JSON object"
        )
    try:
        names = list(payload["feature_names"])
        base_score = float(payload["base_score"])
        learning_rate = float(payload["learning_rate"])
        trees = payload["trees"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelLoadError(f"model file {path} is missing fields: {exc}") from exc
    if not isinstance(trees, list):
        raise ModelLoadError("trees must be a list")
    for tree in trees:
        _check_tree(tree, len(names))

    model = BoostedTreeRegressor(
        n_rounds=max(len(trees), 1), learning_rate=learning_rate
    )
    model.n_features_in_ = len(names)
    model.feature_names_ = names
    model.base_score_ = base_score
    model.trees_ = trees
    model.training_history_ = []
    return model


def price_one_hot(tier: PriceCategory) -> np.ndarray:
    """One-hot vector over the six price features (exactly one bit set)."""
    vec = np.zeros(len(PRICE_FEATURES))
    vec[tier.ordinal] = 1.0
    return vec
