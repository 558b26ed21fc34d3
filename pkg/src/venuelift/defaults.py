"""Shared default settings: hyperparameter grids, venue sets, alias table."""

from __future__ import annotations

# 45 log-spaced values, 1..9 at each decade from 1e-3 to 9e1.  Used both for
# the ridge regularization strength and for the logistic inverse
# regularization C.  Parsed from decimal strings so the values are the
# canonical doubles for 0.001, 0.002, ... 90.
HYPERPARAMETER_GRID: tuple[float, ...] = tuple(
    float(f"{m}e{e}") for e in range(-3, 2) for m in range(1, 10)
)

DEFAULT_TRAIN_FRACTION = 0.7
DEFAULT_CV_FOLDS = 5
DEFAULT_CLIP_FLOOR = 1e-3
DEFAULT_PERMUTATIONS = 1000
DEFAULT_ALPHA = 0.01

DEFAULT_VENUES: tuple[str, ...] = ("AAAI", "IJCAI", "KDD", "NeurIPS", "ICML")

# Raw venue spellings seen in bibliographic dumps, mapped to canonical names.
# Unknown raw names are filtered out during ingestion.
DEFAULT_VENUE_ALIASES: dict[str, str] = {
    "NIPS": "NeurIPS",
    "Neural Information Processing Systems": "NeurIPS",
    "Advances in Neural Information Processing Systems": "NeurIPS",
    "AAAI Conference on Artificial Intelligence": "AAAI",
    "National Conference on Artificial Intelligence": "AAAI",
    "International Joint Conference on Artificial Intelligence": "IJCAI",
    "International Conference on Machine Learning": "ICML",
    "Knowledge Discovery and Data Mining": "KDD",
    "ACM SIGKDD International Conference on Knowledge Discovery and Data Mining": "KDD",
}
