"""Factual evaluation: rank agreement between scores and citation counts.

Counterfactual quality cannot be measured on real data, so each method is
scored by Spearman correlation between its predicted score at the paper's
*factual* venue and the paper's observed citations, per venue and overall.
A suite repeats this over several stratified splits and reports mean and
spread; hyperparameters are re-tuned from scratch inside every run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dataset import Dataset, FeatureVector, stratified_split
from .defaults import DEFAULT_CLIP_FLOOR, DEFAULT_CV_FOLDS, \
    DEFAULT_TRAIN_FRACTION, HYPERPARAMETER_GRID
from .learners import TrainConfig, predict_outcome_matrix, train
from .numeric import MultinomialLogisticModel
from .propensity import fit_propensity, propensity_matrix

EVAL_METHODS = (
    "tlearner-ipw",
    "tlearner-uniform",
    "slearner-ipw",
    "logistic-association",
)

MIN_VENUE_TEST_PAPERS = 3


def score_association(model: MultinomialLogisticModel, x: FeatureVector,
                      venue_pos: int) -> float:
    """Predicted probability that the paper lands at the given venue."""
    if x.dim != model.class_weights.shape[1]:
        raise ValueError("feature dimension does not match the model")
    if not 0 <= venue_pos < model.class_weights.shape[0]:
        raise ValueError(f"venue position {venue_pos} out of range")
    return float(model.predict_proba_sparse_row(x.active_indices)[venue_pos])


def spearman(a: np.ndarray, b: np.ndarray) -> float:
    """Spearman rho; 0.0 when undefined because one side is constant.

    Perfect agreement or reversal is detected on the rank vectors and
    returns exactly +/-1.0; the generic rank-correlation arithmetic can
    land one ulp short on such pairs.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if a.shape[0] < 2 or np.all(a == a[0]) or np.all(b == b[0]):
        return 0.0
    rank_a = stats.rankdata(a)
    rank_b = stats.rankdata(b)
    if np.array_equal(rank_a, rank_b):
        return 1.0
    # rank_b == (n + 1) - rank_a exactly when one ranking mirrors the other
    if np.array_equal(rank_a + rank_b, np.full(a.shape, a.shape[0] + 1.0)):
        return -1.0
    return float(stats.spearmanr(a, b).statistic)


@dataclass(frozen=True)
class FactualEvaluation:
    """Single-split result: rho per venue (where measurable) and overall."""

    per_venue_rho: dict[str, float]
    total_rho: float
    omitted_venues: dict[str, str]
    n_test: int

    def __post_init__(self):
        for venue, rho in self.per_venue_rho.items():
            if not -1.0 <= rho <= 1.0:
                raise ValueError(f"rho for {venue!r} outside [-1, 1]")
        if not -1.0 <= self.total_rho <= 1.0:
            raise ValueError("total rho outside [-1, 1]")


def evaluate_factual(scores: np.ndarray, test: Dataset) -> FactualEvaluation:
    """Correlate factual-venue scores with citations, per venue and total.

    `scores[i]` must be the model's score for test paper i at its factual
    venue.  Venues with fewer than MIN_VENUE_TEST_PAPERS test papers are
    omitted from the per-venue map and flagged instead.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(test),):
        raise ValueError("need exactly one score per test paper")
    per_venue: dict[str, float] = {}
    omitted: dict[str, str] = {}
    for pos, venue in enumerate(test.venues):
        rows = test.rows_for_venue(pos)
        if rows.shape[0] < MIN_VENUE_TEST_PAPERS:
            omitted[venue] = f"only {rows.shape[0]} test papers"
            continue
        per_venue[venue] = spearman(scores[rows], test.citations[rows])
    return FactualEvaluation(
        per_venue_rho=per_venue,
        total_rho=spearman(scores, test.citations),
        omitted_venues=omitted,
        n_test=len(test),
    )


def factual_score_matrix_entry(matrix: np.ndarray, test: Dataset) -> np.ndarray:
    """Pick each test paper's score at its factual venue from an n x K matrix."""
    matrix = np.asarray(matrix)
    if matrix.shape != (len(test), test.n_venues):
        raise ValueError("score matrix shape does not match the test set")
    return matrix[np.arange(len(test)), test.venue_index]


def evaluate_split(dataset: Dataset, seed: int,
                   train_fraction: float = DEFAULT_TRAIN_FRACTION,
                   lambda_grid=HYPERPARAMETER_GRID,
                   c_grid=HYPERPARAMETER_GRID,
                   cv_folds: int = DEFAULT_CV_FOLDS,
                   clip_floor: float = DEFAULT_CLIP_FLOOR,
                   methods=EVAL_METHODS) -> dict[str, FactualEvaluation]:
    """One split, every method trained from scratch and scored on the test side.

    The fitted propensity model doubles as the association baseline, so it
    is trained once and shared with the ipw learner variants.
    """
    train_set, test_set = stratified_split(dataset, train_fraction, seed)
    unknown = set(methods) - set(EVAL_METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")

    needs_propensity = {"tlearner-ipw", "slearner-ipw", "logistic-association"}
    propensity = None
    if needs_propensity & set(methods):
        propensity = fit_propensity(train_set, c_grid=c_grid, folds=cv_folds,
                                    clip_floor=clip_floor, seed=seed)

    results: dict[str, FactualEvaluation] = {}
    for method in methods:
        if method == "logistic-association":
            probs = propensity_matrix(propensity, test_set.X)
            scores = factual_score_matrix_entry(probs, test_set)
        else:
            kind = "S" if method.startswith("slearner") else "T"
            weighting = "uniform" if method.endswith("uniform") else "ipw"
            config = TrainConfig(learner_kind=kind, weighting=weighting,
                                 lambda_grid=tuple(lambda_grid),
                                 cv_folds=cv_folds, seed=seed,
                                 propensity_c_grid=tuple(c_grid),
                                 propensity_clip_floor=clip_floor)
            model = train(train_set, config,
                          propensity_model=propensity if weighting == "ipw" else None)
            matrix = predict_outcome_matrix(model, test_set.X)
            scores = factual_score_matrix_entry(matrix, test_set)
        results[method] = evaluate_factual(scores, test_set)
    return results


@dataclass(frozen=True)
class EvalReport:
    """Mean and spread of rho over seeds for one method."""

    method: str
    seeds: tuple[int, ...]
    per_venue_rho: dict[str, tuple[float, float]]
    total_rho: tuple[float, float]
    omitted_venues: dict[str, str]

    def __post_init__(self):
        for venue, (mean, std) in self.per_venue_rho.items():
            if not -1.0 <= mean <= 1.0 or std < 0.0:
                raise ValueError(f"bad aggregate for venue {venue!r}")
        if self.total_rho[1] < 0.0 or not -1.0 <= self.total_rho[0] <= 1.0:
            raise ValueError("bad total aggregate")


def _aggregate(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def evaluate_suite(dataset: Dataset, seeds=range(10),
                   train_fraction: float = DEFAULT_TRAIN_FRACTION,
                   lambda_grid=HYPERPARAMETER_GRID,
                   c_grid=HYPERPARAMETER_GRID,
                   cv_folds: int = DEFAULT_CV_FOLDS,
                   clip_floor: float = DEFAULT_CLIP_FLOOR,
                   methods=EVAL_METHODS) -> dict[str, EvalReport]:
    """Repeat `evaluate_split` over seeds and aggregate per method.

    Stratified splits put the same per-venue counts on the test side every
    seed, so a venue is either measurable in all runs or omitted in all.
    """
    seeds = tuple(sorted(seeds))
    if not seeds:
        raise ValueError("no seeds given")
    per_seed = {seed: evaluate_split(dataset, seed,
                                     train_fraction=train_fraction,
                                     lambda_grid=lambda_grid, c_grid=c_grid,
                                     cv_folds=cv_folds, clip_floor=clip_floor,
                                     methods=methods)
                for seed in seeds}
    reports: dict[str, EvalReport] = {}
    for method in methods:
        runs = [per_seed[seed][method] for seed in seeds]
        venues = set(runs[0].per_venue_rho)
        per_venue = {
            venue: _aggregate([run.per_venue_rho[venue] for run in runs])
            for venue in sorted(venues)
        }
        reports[method] = EvalReport(
            method=method,
            seeds=seeds,
            per_venue_rho=per_venue,
            total_rho=_aggregate([run.total_rho for run in runs]),
            omitted_venues=dict(runs[0].omitted_venues),
        )
    return reports


def eval_payload(reports: dict[str, EvalReport]) -> dict:
    return {
        "methods": list(reports),
        "seeds": list(next(iter(reports.values())).seeds) if reports else [],
        "retuned_per_seed": True,
        "results": {
            method: {
                "per_venue_rho": {v: {"mean": m, "std": s}
                                  for v, (m, s) in report.per_venue_rho.items()},
                "total_rho": {"mean": report.total_rho[0],
                              "std": report.total_rho[1]},
                "omitted_venues": report.omitted_venues,
            }
            for method, report in reports.items()
        },
    }


def format_eval_table(reports: dict[str, EvalReport]) -> str:
    """Rank-agreement table: venues as columns, `*` marks every method whose
    mean is within one stddev of the best mean in that column."""
    if not reports:
        raise ValueError("no reports to format")
    venues = sorted({v for r in reports.values() for v in r.per_venue_rho})
    columns = venues + ["total"]

    def cell_value(report: EvalReport, column: str):
        if column == "total":
            return report.total_rho
        return report.per_venue_rho.get(column)

    thresholds = {}
    for column in columns:
        pairs = [p for p in (cell_value(r, column) for r in reports.values())
                 if p is not None]
        best_mean = max(p[0] for p in pairs)
        best_std = max(p[1] for p in pairs if p[0] == best_mean)
        thresholds[column] = best_mean - best_std

    width = max(len(m) for m in reports) + 2
    lines = ["method".ljust(width) + "  ".join(f"{c:>16}" for c in columns)]
    for method, report in reports.items():
        cells = []
        for column in columns:
            pair = cell_value(report, column)
            if pair is None:
                cells.append("-")
                continue
            star = "*" if pair[0] >= thresholds[column] else " "
            cells.append(f"{pair[0]:+.3f} ± {pair[1]:.3f}{star}")
        lines.append(method.ljust(width) + "  ".join(f"{c:>16}" for c in cells))
    return "\n".join(lines)
