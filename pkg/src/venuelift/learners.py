"""Meta-learners over weighted ridge base models.

The T-learner fits one ridge regressor per venue on that venue's papers;
the S-learner fits a single ridge regressor on the pooled data with a
one-hot venue indicator appended to the features.  Targets are log(1+y)
citation counts.  Sample weights come from the inverse estimated
propensities, globally normalized to mean one so that the regularization
grid means the same thing under ipw and uniform weighting; lambda is
chosen per base learner by stratified k-fold CV on held-out weighted
squared error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .dataset import Dataset, FeatureVector, Vocabulary, dataset_fingerprint, \
    stratified_fold_ids
from .defaults import DEFAULT_CLIP_FLOOR, DEFAULT_CV_FOLDS, HYPERPARAMETER_GRID
from .numeric import LinearModel, fit_weighted_ridge
from .propensity import PropensityModel, SampleWeights, fit_propensity, \
    ipw_weights, uniform_weights

_T_FOLD_SALT = 211
_S_FOLD_SALT = 223


@dataclass(frozen=True)
class TrainConfig:
    learner_kind: str = "T"           # "T" (one model per venue) or "S" (pooled)
    weighting: str = "ipw"            # "ipw" or "uniform"
    lambda_grid: tuple[float, ...] = HYPERPARAMETER_GRID
    cv_folds: int = DEFAULT_CV_FOLDS
    target_transform: str = "log1p"
    seed: int = 0
    propensity_c_grid: tuple[float, ...] = HYPERPARAMETER_GRID
    propensity_clip_floor: float = DEFAULT_CLIP_FLOOR

    def __post_init__(self):
        if self.learner_kind not in ("T", "S"):
            raise ValueError("learner_kind must be 'T' or 'S'")
        if self.weighting not in ("ipw", "uniform"):
            raise ValueError("weighting must be 'ipw' or 'uniform'")
        if self.target_transform not in ("log1p", "log"):
            raise ValueError("target_transform must be 'log1p' or 'log'")
        if not self.lambda_grid:
            raise ValueError("lambda_grid must be non-empty")
        if any(lam < 0 for lam in self.lambda_grid):
            raise ValueError("lambda values must be non-negative")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")


@dataclass(frozen=True)
class TrainedModel:
    """Immutable result of `train`, everything needed to score a paper."""

    venues: tuple[str, ...]
    learner_kind: str
    base_learners: tuple[LinearModel, ...]
    propensity: PropensityModel | None
    vocabulary: Vocabulary
    config: TrainConfig
    per_venue_lambda: dict[str, float]
    diagnostics: dict
    dataset_fingerprint: str

    def __post_init__(self):
        expected = len(self.venues) if self.learner_kind == "T" else 1
        if len(self.base_learners) != expected:
            raise ValueError(f"expected {expected} base learners, "
                             f"got {len(self.base_learners)}")
        d = len(self.vocabulary)
        for learner in self.base_learners:
            want = d if self.learner_kind == "T" else d + len(self.venues)
            if learner.weights.shape[0] != want:
                raise ValueError("base learner dimension does not match vocabulary")
        if set(self.per_venue_lambda) != set(self.venues):
            raise ValueError("per_venue_lambda must cover exactly the venues")

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)


@dataclass(frozen=True)
class Recommendation:
    scores: dict[str, float]
    predicted_citations: dict[str, float]
    recommended: str
    ranking: tuple[str, ...]


def transform_targets(name: str, citations: np.ndarray) -> np.ndarray:
    """Outcome-to-target map: log1p for count-like outcomes (defined at 0),
    plain log for strictly positive real-valued ones."""
    y = np.asarray(citations, dtype=np.float64)
    if name == "log1p":
        if y.min() < 0:
            raise ValueError("log1p targets require non-negative outcomes")
        return np.log1p(y)
    if name == "log":
        if y.min() <= 0:
            raise ValueError("log targets require strictly positive outcomes")
        return np.log(y)
    raise ValueError(f"unknown target transform {name!r}")


def inverse_transform(name: str, score: float) -> float:
    """Back-map from target scale to the outcome scale."""
    if name == "log1p":
        return float(np.expm1(score))
    if name == "log":
        return float(np.exp(score))
    raise ValueError(f"unknown target transform {name!r}")


def compute_ipw_loss(residuals: np.ndarray, weights: SampleWeights) -> float:
    """Mean of w_i * residual_i^2 (the weighted squared-error risk)."""
    r = np.asarray(residuals, dtype=np.float64)
    if r.ndim != 1 or r.shape[0] == 0:
        raise ValueError("residuals must be a non-empty vector")
    if r.shape[0] != len(weights):
        raise ValueError("residuals and weights must be aligned")
    return float(np.mean(weights.weights * r * r))


def _append_onehot(X, venue_index: np.ndarray, n_venues: int):
    n = venue_index.shape[0]
    onehot = sp.csr_matrix(
        (np.ones(n), (np.arange(n), venue_index)), shape=(n, n_venues))
    if sp.issparse(X):
        return sp.hstack([X, onehot], format="csr")
    return np.hstack([np.asarray(X), onehot.toarray()])


def _select_lambda(X, y, w, grid, fold_id, folds):
    """CV over the lambda grid: mean held-out weighted MSE per candidate,
    minimum wins, ties to the larger lambda."""
    table = []
    best_lam, best_loss = None, np.inf
    for lam in sorted(set(float(g) for g in grid)):
        losses = []
        for k in range(folds):
            held = fold_id == k
            model = fit_weighted_ridge(X[~held], y[~held], w[~held], lam)
            residuals = y[held] - model.predict(X[held])
            losses.append(float(np.mean(w[held] * residuals ** 2)))
        mean_loss = float(np.mean(losses))
        table.append((lam, mean_loss))
        if mean_loss <= best_loss:
            best_lam, best_loss = lam, mean_loss
    return best_lam, table


def train(train_set: Dataset, config: TrainConfig,
          propensity_model: PropensityModel | None = None) -> TrainedModel:
    """Fit the full pipeline on a training dataset.

    With ipw weighting the propensity model is fitted first (or taken from
    `propensity_model`, e.g. to share one fit across learner variants) and
    sample weights are its clipped inverse factual propensities; with
    uniform weighting every weight is one and no propensity model is kept.
    """
    counts = train_set.venue_counts()
    for venue, count in counts.items():
        if count < config.cv_folds:
            raise ValueError(
                f"venue {venue!r} has {count} training papers, fewer than "
                f"{config.cv_folds} CV folds")

    y = transform_targets(config.target_transform, train_set.citations)

    if config.weighting == "ipw":
        if propensity_model is None:
            propensity_model = fit_propensity(
                train_set,
                c_grid=config.propensity_c_grid,
                folds=config.cv_folds,
                clip_floor=config.propensity_clip_floor,
                seed=config.seed)
        elif propensity_model.venues != train_set.venues:
            raise ValueError("propensity model venues do not match the dataset")
        sample_weights = ipw_weights(propensity_model, train_set)
    else:
        propensity_model = None
        sample_weights = uniform_weights(len(train_set), config.propensity_clip_floor)

    # Global mean-1 normalization: a flat reweighting (constant propensity)
    # then coincides with uniform weighting exactly, and a given lambda has
    # the same strength relative to the data term under both configs.
    raw = sample_weights.weights
    w = raw / raw.mean()

    X = train_set.X
    n_venues = train_set.n_venues
    per_venue_lambda: dict[str, float] = {}
    cv_tables: dict[str, list] = {}

    if config.learner_kind == "T":
        learners = []
        for pos, venue in enumerate(train_set.venues):
            rows = train_set.rows_for_venue(pos)
            rng = np.random.default_rng([config.seed, _T_FOLD_SALT, pos])
            fold_id = np.empty(rows.shape[0], dtype=np.int64)
            fold_id[rng.permutation(rows.shape[0])] = \
                np.arange(rows.shape[0]) % config.cv_folds
            lam, table = _select_lambda(
                X[rows], y[rows], w[rows], config.lambda_grid,
                fold_id, config.cv_folds)
            per_venue_lambda[venue] = lam
            cv_tables[venue] = table
            learners.append(fit_weighted_ridge(X[rows], y[rows], w[rows], lam))
        base_learners = tuple(learners)
        fitted = np.empty(len(train_set))
        for pos in range(n_venues):
            rows = train_set.rows_for_venue(pos)
            fitted[rows] = base_learners[pos].predict(X[rows])
    else:
        X_s = _append_onehot(X, train_set.venue_index, n_venues)
        fold_id = stratified_fold_ids(train_set, config.cv_folds,
                                      config.seed, _S_FOLD_SALT)
        lam, table = _select_lambda(X_s, y, w, config.lambda_grid,
                                    fold_id, config.cv_folds)
        per_venue_lambda = {venue: lam for venue in train_set.venues}
        cv_tables["pooled"] = table
        base_learners = (fit_weighted_ridge(X_s, y, w, lam),)
        fitted = base_learners[0].predict(X_s)

    training_loss = compute_ipw_loss(y - fitted, sample_weights)
    diagnostics = {
        "training_ipw_loss": training_loss,
        "cv_weighted_mse": cv_tables,
        "weight_mean_raw": float(raw.mean()),
        "weight_max_raw": float(raw.max()),
        "n_train": len(train_set),
    }
    return TrainedModel(
        venues=train_set.venues,
        learner_kind=config.learner_kind,
        base_learners=base_learners,
        propensity=propensity_model,
        vocabulary=train_set.vocabulary,
        config=config,
        per_venue_lambda=per_venue_lambda,
        diagnostics=diagnostics,
        dataset_fingerprint=dataset_fingerprint(train_set),
    )


def predict_outcome_matrix(model: TrainedModel, X) -> np.ndarray:
    """n x |venues| matrix of predicted log targets, column per venue."""
    n = X.shape[0]
    K = len(model.venues)
    out = np.empty((n, K))
    if model.learner_kind == "T":
        for pos in range(K):
            out[:, pos] = model.base_learners[pos].predict(X)
    else:
        base = model.base_learners[0]
        d = model.n_features
        shared = _matvec_first_block(X, base.weights, d) + base.intercept
        for pos in range(K):
            out[:, pos] = shared + base.weights[d + pos]
    return out


def _matvec_first_block(X, weights: np.ndarray, d: int) -> np.ndarray:
    result = X @ weights[:d]
    return np.asarray(result).reshape(-1)


def predict_outcomes(model: TrainedModel, x: FeatureVector) -> dict[str, float]:
    """Per-venue predicted log target for one paper."""
    if x.dim != model.n_features:
        raise ValueError(
            f"feature vector has dimension {x.dim}, model expects {model.n_features}")
    scores = {}
    if model.learner_kind == "T":
        for pos, venue in enumerate(model.venues):
            scores[venue] = model.base_learners[pos].predict_sparse_row(x.active_indices)
    else:
        base = model.base_learners[0]
        for pos, venue in enumerate(model.venues):
            active = tuple(x.active_indices) + (model.n_features + pos,)
            scores[venue] = base.predict_sparse_row(active)
    return scores


def recommend(model: TrainedModel, x: FeatureVector) -> Recommendation:
    """Argmax venue by predicted log target; ties break by venue order."""
    scores = predict_outcomes(model, x)
    order = {venue: pos for pos, venue in enumerate(model.venues)}
    ranking = tuple(sorted(scores, key=lambda v: (-scores[v], order[v])))
    transform = model.config.target_transform
    return Recommendation(
        scores=scores,
        predicted_citations={v: inverse_transform(transform, s)
                             for v, s in scores.items()},
        recommended=ranking[0],
        ranking=ranking,
    )


def recommend_matrix(model: TrainedModel, X) -> np.ndarray:
    """Recommended venue index per row (argmax, first venue wins ties)."""
    return np.argmax(predict_outcome_matrix(model, X), axis=1)


def coefficients(model: TrainedModel, venue: str,
                 top_k: int) -> list[tuple[str, float]]:
    """Top feature coefficients of a venue's base learner, largest first.

    For the S-learner the shared feature block is reported (identical for
    every venue); the venue indicator weights are available separately via
    `venue_offsets`.
    """
    if top_k <= 0:
        raise ValueError("top_k must be positive")
    if venue not in model.venues:
        raise ValueError(f"unknown venue {venue!r}")
    if model.learner_kind == "T":
        weights = model.base_learners[model.venues.index(venue)].weights
    else:
        weights = model.base_learners[0].weights[:model.n_features]
    order = np.argsort(-weights, kind="stable")[:top_k]
    return [(model.vocabulary.field_at(int(j)), float(weights[j])) for j in order]


def venue_offsets(model: TrainedModel) -> dict[str, float]:
    """S-learner venue indicator weights; empty for the T-learner."""
    if model.learner_kind != "S":
        return {}
    base = model.base_learners[0]
    d = model.n_features
    return {venue: float(base.weights[d + pos])
            for pos, venue in enumerate(model.venues)}
