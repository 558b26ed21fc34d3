"""Venue-assignment propensities and inverse-propensity sample weights.

A multinomial logistic model estimates P[t|x] over the venue set.  Its
inverse-regularization C is chosen by stratified k-fold cross-validation
minimizing held-out multiclass log-loss (the model is a nuisance, so it is
tuned on its own task, not on downstream citation error).  Predicted
probabilities are floor-clipped and renormalized so the positivity
assumption holds by construction, which bounds every sample weight by
1/clip_floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dataset import Dataset, FeatureVector, stratified_fold_ids
from .defaults import DEFAULT_CLIP_FLOOR, DEFAULT_CV_FOLDS, HYPERPARAMETER_GRID
from .numeric import MultinomialLogisticModel, fit_multinomial_logistic

_FOLD_SALT = 101


@dataclass(frozen=True)
class PropensityModel:
    """Fitted venue-assignment model plus the clipping floor."""

    logistic: MultinomialLogisticModel
    clip_floor: float
    venues: tuple[str, ...]
    cv_log_loss: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        n_venues = len(self.venues)
        if not 0.0 < self.clip_floor <= 1.0 / n_venues:
            raise ValueError(f"clip_floor must lie in (0, 1/{n_venues}]")
        if self.logistic.class_weights.shape[0] != n_venues:
            raise ValueError("logistic class count does not match venue list")

    @property
    def chosen_c(self) -> float:
        return self.logistic.inverse_regularization


@dataclass(frozen=True)
class SampleWeights:
    """Per-paper IPW weights, bounded by the clipping floor."""

    weights: np.ndarray
    clip_floor: float

    def __post_init__(self):
        self.weights.flags.writeable = False
        w = self.weights
        if w.ndim != 1 or w.shape[0] == 0:
            raise ValueError("weights must be a non-empty vector")
        if w.min() < 1.0 - 1e-9 or w.max() > 1.0 / self.clip_floor + 1e-6:
            raise ValueError("weights outside [1, 1/clip_floor]")

    def __len__(self) -> int:
        return self.weights.shape[0]


def clip_probabilities(p: np.ndarray, floor: float) -> np.ndarray:
    """Floor-clip probability vectors and renormalize, exactly.

    Entries below the floor are pinned to it and the remaining mass is
    rescaled; rescaling can push further entries below the floor, so the
    procedure iterates (at most K rounds).  Output rows lie in [floor, 1],
    sum to 1 within 1e-12, and preserve the argmax.
    """
    P = np.array(p, dtype=np.float64, copy=True)
    squeeze = P.ndim == 1
    P = np.atleast_2d(P)
    n_classes = P.shape[1]
    if not 0.0 < floor <= 1.0 / n_classes:
        raise ValueError(f"floor must lie in (0, 1/{n_classes}]")
    if P.min() < 0.0:
        raise ValueError("probabilities must be non-negative")
    fixed = np.zeros_like(P, dtype=bool)
    for _ in range(n_classes + 1):
        fixed |= (P < floor) & ~fixed
        n_fixed = fixed.sum(axis=1, keepdims=True)
        free_sum = np.where(fixed, 0.0, P).sum(axis=1, keepdims=True)
        target = 1.0 - floor * n_fixed
        scale = np.divide(target, free_sum,
                          out=np.zeros_like(free_sum), where=free_sum > 0.0)
        P = np.where(fixed, floor, P * scale)
        if not ((P < floor) & ~fixed).any():
            break
    return P[0] if squeeze else P


def _feature_matrix(dataset: Dataset):
    return dataset.X


def _held_out_log_loss(model: MultinomialLogisticModel, X, labels: np.ndarray) -> float:
    logits = X @ model.class_weights.T + model.class_intercepts
    logits = np.asarray(logits)
    return float(np.mean(logsumexp(logits, axis=1)
                         - logits[np.arange(labels.shape[0]), labels]))


def fit_propensity(train: Dataset,
                   c_grid=HYPERPARAMETER_GRID,
                   folds: int = DEFAULT_CV_FOLDS,
                   clip_floor: float = DEFAULT_CLIP_FLOOR,
                   seed: int = 0,
                   max_iter: int = 1000) -> PropensityModel:
    """Cross-validated propensity fit.

    C is selected from the grid by k-fold CV on mean held-out log-loss;
    ties break toward the smaller C (stronger regularization).  The final
    model is refit on the full training data with the chosen C.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    grid = sorted(set(float(c) for c in c_grid))
    if not grid or grid[0] <= 0.0:
        raise ValueError("C grid must be non-empty and positive")
    counts = train.venue_counts()
    for venue, count in counts.items():
        if count == 0:
            raise ValueError(f"venue {venue!r} has no training papers")
        if count < folds:
            raise ValueError(
                f"venue {venue!r} has {count} papers, fewer than {folds} CV folds; "
                f"use fewer folds")

    X = _feature_matrix(train)
    labels = train.venue_index
    fold_id = stratified_fold_ids(train, folds, seed, _FOLD_SALT)

    cv_table = []
    best_c, best_loss = None, np.inf
    for c in grid:
        losses = []
        for k in range(folds):
            held = fold_id == k
            model = fit_multinomial_logistic(X[~held], labels[~held], c,
                                             max_iter=max_iter)
            losses.append(_held_out_log_loss(model, X[held], labels[held]))
        mean_loss = float(np.mean(losses))
        cv_table.append((c, mean_loss))
        if mean_loss < best_loss:
            best_c, best_loss = c, mean_loss

    final = fit_multinomial_logistic(X, labels, best_c, max_iter=max_iter)
    if final.class_order != tuple(range(train.n_venues)):
        raise ValueError("training data does not cover every venue")
    return PropensityModel(logistic=final, clip_floor=clip_floor,
                           venues=train.venues, cv_log_loss=tuple(cv_table))


def propensity_matrix(model: PropensityModel, X) -> np.ndarray:
    """Clipped propensities for every row of a feature matrix."""
    return clip_probabilities(model.logistic.predict_proba(X), model.clip_floor)


def propensity_of(model: PropensityModel, x: FeatureVector) -> np.ndarray:
    if x.dim != model.logistic.class_weights.shape[1]:
        raise ValueError("feature dimension does not match the propensity model")
    raw = model.logistic.predict_proba_sparse_row(x.active_indices)
    return clip_probabilities(raw, model.clip_floor)


def ipw_weights(model: PropensityModel, train: Dataset) -> SampleWeights:
    """w_i = 1 / P[t_i | x_i] with clipped propensities."""
    probs = propensity_matrix(model, _feature_matrix(train))
    factual = probs[np.arange(len(train)), train.venue_index]
    weights = np.clip(1.0 / factual, 1.0, 1.0 / model.clip_floor)
    return SampleWeights(weights=weights, clip_floor=model.clip_floor)


def uniform_weights(n: int, clip_floor: float = DEFAULT_CLIP_FLOOR) -> SampleWeights:
    return SampleWeights(weights=np.ones(n), clip_floor=clip_floor)
