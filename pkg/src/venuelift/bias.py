"""Selection-bias diagnostics between per-venue covariate distributions.

The unbiased MMD^2 U-statistic (within-sample sums exclude the diagonal,
the cross sum runs over all pairs) measures how far two venues' feature
distributions are apart; significance comes from a label-permutation test
with the Gaussian kernel bandwidth fixed once on the pooled sample by the
median heuristic.  The pairwise report covers every unordered venue pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from hashlib import sha256

import numpy as np
import scipy.sparse as sp

from .dataset import Dataset
from .defaults import DEFAULT_ALPHA, DEFAULT_PERMUTATIONS
from .numeric import KernelSpec, median_heuristic_bandwidth

_PERM_SALT = 307


@dataclass(frozen=True)
class MmdResult:
    venue_pair: tuple[str, str]
    mmd2: float
    p_value: float
    permutations: int
    bandwidth: float
    degenerate_bandwidth: bool = False

    def __post_init__(self):
        if not 0.0 < self.p_value <= 1.0:
            raise ValueError("p_value must lie in (0, 1]")
        if self.p_value < 1.0 / (self.permutations + 1) - 1e-15:
            raise ValueError("p_value below the permutation floor")


@dataclass(frozen=True)
class MmdReport:
    venues: tuple[str, ...]
    results: tuple[MmdResult, ...]
    alpha: float

    def result_for(self, s: str, t: str) -> MmdResult:
        want = frozenset((s, t))
        for result in self.results:
            if frozenset(result.venue_pair) == want:
                return result
        raise KeyError(f"no result for pair ({s}, {t})")


def _content_key(points) -> tuple:
    if sp.issparse(points):
        csr = points.tocsr()
        digest = sha256()
        digest.update(csr.data.tobytes())
        digest.update(csr.indices.tobytes())
        digest.update(csr.indptr.tobytes())
        return (points.shape[0], digest.hexdigest())
    arr = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
    return (arr.shape[0], sha256(arr.tobytes()).hexdigest())


def _canonical_pool(a, b):
    """Stack the two point sets in a content-determined order, so every
    statistic derived from the pooled matrix is exactly symmetric in
    (a, b)."""
    if _content_key(a) <= _content_key(b):
        first, second = a, b
    else:
        first, second = b, a
    if sp.issparse(first) or sp.issparse(second):
        pooled = sp.vstack([sp.csr_matrix(first), sp.csr_matrix(second)], format="csr")
    else:
        pooled = np.vstack([np.atleast_2d(first), np.atleast_2d(second)])
    return pooled, first.shape[0], second.shape[0]


def _stat_from_gram(K: np.ndarray, first_idx: np.ndarray,
                    second_idx: np.ndarray) -> float:
    m = first_idx.shape[0]
    n = second_idx.shape[0]
    block_aa = K[np.ix_(first_idx, first_idx)]
    block_bb = K[np.ix_(second_idx, second_idx)]
    block_ab = K[np.ix_(first_idx, second_idx)]
    term_aa = (block_aa.sum() - np.trace(block_aa)) / (m * (m - 1))
    term_bb = (block_bb.sum() - np.trace(block_bb)) / (n * (n - 1))
    term_ab = 2.0 * block_ab.sum() / (m * n)
    return float(term_aa + term_bb - term_ab)


def _validate_sizes(a, b):
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("each point set needs at least 2 points")


def mmd2_unbiased(a, b, kernel: KernelSpec) -> float:
    """Unbiased MMD^2 between two point sets (rows are points).

    The estimate is a U-statistic and may be negative.  Exactly symmetric
    under swapping the inputs.
    """
    _validate_sizes(a, b)
    pooled, m, n = _canonical_pool(a, b)
    K = kernel.gram(pooled, pooled)
    return _stat_from_gram(K, np.arange(m), np.arange(m, m + n))


def mmd_permutation_test(a, b, permutations: int = DEFAULT_PERMUTATIONS,
                         seed: int = 0,
                         pair: tuple[str, str] = ("a", "b")) -> MmdResult:
    """Permutation test of the null "same distribution".

    The kernel bandwidth is the median heuristic on the pooled sample and
    stays fixed across permutations, so only the labeling varies.  Each
    replicate draws from its own seed substream, making the p-value
    independent of evaluation order.  p = (1 + #{perm >= observed}) / (B+1).
    """
    if permutations < 100:
        raise ValueError("need at least 100 permutations")
    _validate_sizes(a, b)
    pooled, m, n = _canonical_pool(a, b)
    total = m + n
    estimate = median_heuristic_bandwidth(pooled)
    kernel = KernelSpec(bandwidth=estimate.sigma)
    K = kernel.gram(pooled, pooled)
    observed = _stat_from_gram(K, np.arange(m), np.arange(m, total))
    exceed = 0
    for b_idx in range(permutations):
        rng = np.random.default_rng([seed, _PERM_SALT, b_idx])
        perm = rng.permutation(total)
        stat = _stat_from_gram(K, perm[:m], perm[m:])
        if stat >= observed:
            exceed += 1
    return MmdResult(
        venue_pair=pair,
        mmd2=observed,
        p_value=(1 + exceed) / (permutations + 1),
        permutations=permutations,
        bandwidth=estimate.sigma,
        degenerate_bandwidth=estimate.is_fallback,
    )


def pairwise_bias_report(dataset: Dataset,
                         permutations: int = DEFAULT_PERMUTATIONS,
                         alpha: float = DEFAULT_ALPHA,
                         seed: int = 0) -> MmdReport:
    """MMD permutation test for every unordered venue pair."""
    if dataset.n_venues < 2:
        raise ValueError("need at least 2 venues")
    for venue, count in dataset.venue_counts().items():
        if count < 2:
            raise ValueError(f"venue {venue!r} has {count} papers; need >= 2")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    results = []
    for i in range(dataset.n_venues):
        a = dataset.X[dataset.rows_for_venue(i)]
        for j in range(i + 1, dataset.n_venues):
            b = dataset.X[dataset.rows_for_venue(j)]
            pair_seed = int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])
            results.append(mmd_permutation_test(
                a, b, permutations, pair_seed,
                pair=(dataset.venues[i], dataset.venues[j])))
    return MmdReport(venues=dataset.venues, results=tuple(results), alpha=alpha)


def report_payload(report: MmdReport) -> dict:
    """JSON-ready view of a pairwise report."""
    return {
        "alpha": report.alpha,
        "venues": list(report.venues),
        "pairs": [
            {
                "venues": list(r.venue_pair),
                "mmd2": r.mmd2,
                "mmd2_scaled_1e3": r.mmd2 * 1e3,
                "p_value": r.p_value,
                "permutations": r.permutations,
                "bandwidth": r.bandwidth,
                "degenerate_bandwidth": r.degenerate_bandwidth,
                "significant": r.p_value < report.alpha,
            }
            for r in report.results
        ],
    }


def format_report_table(report: MmdReport) -> str:
    """Aligned lower-triangle text table, MMD^2 x 10^3 with one decimal,
    '*' marking p < alpha."""
    venues = report.venues
    width = max(len(v) for v in venues) + 2
    cell = max(width, 9)
    lines = ["MMD^2 (x 10^3) between venues, '*' = p < "
             f"{report.alpha:g} ({report.results[0].permutations} permutations)"]
    header = " " * cell + "".join(f"{v:>{cell}}" for v in venues[:-1])
    lines.append(header)
    for i in range(1, len(venues)):
        row = [f"{venues[i]:<{cell}}"]
        for j in range(i):
            r = report.result_for(venues[i], venues[j])
            mark = "*" if r.p_value < report.alpha else ""
            row.append(f"{r.mmd2 * 1e3:>{cell - len(mark)}.1f}{mark}")
        lines.append("".join(row))
    return "\n".join(lines)
