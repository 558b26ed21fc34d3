"""Self-contained numeric primitives.

Everything downstream is built on four operations implemented here:

* weighted ridge regression solved exactly through its normal equations,
* L2-regularized multinomial logistic regression with an analytic gradient,
* Gaussian kernels with a median-heuristic bandwidth,
* Spearman rank correlation with average ranks for ties.

Feature matrices may be dense ``numpy`` arrays or ``scipy.sparse`` matrices;
all fitted models are immutable and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

# Above this feature dimension the ridge normal equations are solved by
# conjugate gradients instead of a dense Cholesky factorization.
DENSE_SOLVER_MAX_DIM = 4096

CG_TOLERANCE = 1e-10


class UndefinedCorrelationError(ValueError):
    """Raised when a rank correlation is requested for a constant vector."""


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _check_matrix_finite(X) -> None:
    data = X.data if sp.issparse(X) else X
    if not np.all(np.isfinite(data)):
        raise ValueError("feature matrix contains non-finite entries")


def _matvec(X, v: np.ndarray) -> np.ndarray:
    out = X @ v
    return np.asarray(out).ravel()


@dataclass(frozen=True)
class LinearModel:
    """Linear regressor ``x -> weights . x + intercept``.

    ``regularization`` records the L2 strength the model was fit with; the
    intercept is never penalized.  ``singular`` flags a rank-deficient
    unregularized fit resolved by the minimum-norm solution.
    """

    weights: np.ndarray
    intercept: float
    regularization: float
    solver: str = "cholesky"
    singular: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def predict(self, X) -> np.ndarray:
        """Evaluate on an ``n x d`` matrix (dense or sparse)."""
        return _matvec(X, self.weights) + self.intercept

    def predict_row(self, x: np.ndarray) -> float:
        return float(np.dot(self.weights, x) + self.intercept)

    def predict_sparse_row(self, active_indices) -> float:
        """Evaluate a binary row given only its active feature indices."""
        idx = np.asarray(active_indices, dtype=np.intp)
        return float(self.weights[idx].sum() + self.intercept)


def _weighted_gram(X, w: np.ndarray, lam: float):
    """Dense ``(d+1) x (d+1)`` normal-equation matrix with a free intercept,
    for the system ``G [theta; b] = rhs``."""
    if sp.issparse(X):
        Xw = X.multiply(w[:, None]).tocsr()
        XtWX = (X.T @ Xw).toarray()
        XtW1 = np.asarray(Xw.sum(axis=0)).ravel()
    else:
        Xw = X * w[:, None]
        XtWX = X.T @ Xw
        XtW1 = Xw.sum(axis=0)
    d = X.shape[1]
    G = np.empty((d + 1, d + 1))
    G[:d, :d] = XtWX
    G[:d, :d][np.diag_indices(d)] += lam
    G[:d, d] = XtW1
    G[d, :d] = XtW1
    G[d, d] = w.sum()
    return G


def _ridge_rhs(X, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    wy = w * y
    rhs = np.empty(X.shape[1] + 1)
    rhs[:-1] = _matvec(X.T, wy)
    rhs[-1] = wy.sum()
    return rhs


def fit_weighted_ridge(X, y, w, lam: float) -> LinearModel:
    """Exact minimizer of ``sum_i w_i (y_i - theta.x_i - b)^2 + lam ||theta||^2``.

    The intercept ``b`` is not penalized.  For feature dimensions up to
    ``DENSE_SOLVER_MAX_DIM`` the normal equations are factorized densely;
    above that a Jacobi-preconditioned conjugate-gradient solve is used so
    large sparse vocabularies never materialize a dense Gram matrix.

    A singular unregularized system (``lam == 0`` with rank-deficient
    features) falls back to the minimum-norm least-squares solution and is
    flagged via ``singular=True``.
    """
    _check_matrix_finite(X)
    y = _as_float_array(y, "y")
    w = _as_float_array(w, "w")
    n, d = X.shape
    if n < 1:
        raise ValueError("need at least one sample")
    if y.shape != (n,) or w.shape != (n,):
        raise ValueError("X, y, w row counts disagree")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    if lam < 0:
        raise ValueError("regularization must be non-negative")

    rhs = _ridge_rhs(X, y, w)

    if d <= DENSE_SOLVER_MAX_DIM:
        G = _weighted_gram(X, w, lam)
        try:
            c, low = scipy.linalg.cho_factor(G)
            if lam == 0.0:
                # LAPACK can factor an exactly singular matrix with a tiny
                # positive pivot; treat those as rank-deficient.
                pivots = np.abs(np.diag(c))
                if (pivots.min() / pivots.max()) ** 2 < G.shape[0] * np.finfo(np.float64).eps:
                    raise scipy.linalg.LinAlgError("effectively singular system")
            sol = scipy.linalg.cho_solve((c, low), rhs)
            solver, singular = "cholesky", False
        except scipy.linalg.LinAlgError:
            # Rank-deficient and unpenalized: minimum-norm solution of the
            # weighted least-squares problem.
            sw = np.sqrt(w)
            Xd = X.toarray() if sp.issparse(X) else np.asarray(X, dtype=np.float64)
            A = np.concatenate([Xd * sw[:, None], sw[:, None]], axis=1)
            sol, *_ = np.linalg.lstsq(A, sw * y, rcond=None)
            solver, singular = "lstsq", True
    else:
        diag = _column_weight_diag(X, w, lam)

        def apply(v):
            t = w * (_matvec(X, v[:-1]) + v[-1])
            out = np.empty(d + 1)
            out[:-1] = _matvec(X.T, t) + lam * v[:-1]
            out[-1] = t.sum()
            return out

        op = LinearOperator((d + 1, d + 1), matvec=apply)
        precond = LinearOperator((d + 1, d + 1), matvec=lambda v: v / diag)
        sol, info = cg(op, rhs, rtol=CG_TOLERANCE, atol=0.0, M=precond,
                       maxiter=10 * (d + 1))
        if info != 0:
            raise ValueError(f"conjugate-gradient ridge solve did not converge (info={info})")
        solver, singular = "cg", False

    return LinearModel(weights=sol[:-1], intercept=float(sol[-1]),
                       regularization=float(lam), solver=solver, singular=singular)


def _column_weight_diag(X, w: np.ndarray, lam: float) -> np.ndarray:
    """Diagonal of the augmented normal-equation matrix, clamped positive."""
    if sp.issparse(X):
        col = np.asarray(X.power(2).T @ w).ravel()
    else:
        col = (X ** 2 * w[:, None]).sum(axis=0)
    diag = np.concatenate([col + lam, [w.sum()]])
    return np.maximum(diag, np.finfo(np.float64).tiny)


def weighted_ridge_objective(X, y, w, lam: float, model: LinearModel) -> float:
    resid = y - model.predict(X)
    return float(np.sum(w * resid ** 2) + lam * np.sum(model.weights ** 2))


@dataclass(frozen=True)
class MultinomialLogisticModel:
    """Softmax classifier with per-class weight rows and free intercepts."""

    class_weights: np.ndarray       # (n_classes, d)
    class_intercepts: np.ndarray    # (n_classes,)
    inverse_regularization: float
    class_order: tuple
    achieved_grad_norm: float
    converged: bool
    n_iter: int

    def __post_init__(self):
        for name in ("class_weights", "class_intercepts"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_classes(self) -> int:
        return self.class_weights.shape[0]

    @property
    def dim(self) -> int:
        return self.class_weights.shape[1]

    def decision_function(self, X) -> np.ndarray:
        logits = X @ self.class_weights.T
        return np.asarray(logits) + self.class_intercepts

    def predict_proba(self, X) -> np.ndarray:
        """Row-stochastic probability matrix; rows sum to 1 exactly after
        renormalizing the stabilized softmax."""
        logits = self.decision_function(X)
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        return p

    def predict_proba_row(self, x: np.ndarray) -> np.ndarray:
        return self.predict_proba(np.asarray(x, dtype=np.float64)[None, :])[0]

    def predict_proba_sparse_row(self, active_indices) -> np.ndarray:
        """Class probabilities for a binary row given its active indices."""
        idx = np.asarray(active_indices, dtype=np.intp)
        logits = self.class_weights[:, idx].sum(axis=1) + self.class_intercepts
        logits -= logits.max()
        p = np.exp(logits)
        return p / p.sum()


def multinomial_nll_and_grad(theta: np.ndarray, X, class_idx: np.ndarray,
                             n_classes: int, C: float):
    """Objective ``NLL + ||W||^2 / (2C)`` and its gradient, packed flat.

    ``theta`` stacks the ``(n_classes, d)`` weight matrix row-major followed
    by the ``n_classes`` intercepts.  Intercepts are not penalized.
    """
    n, d = X.shape
    W = theta[: n_classes * d].reshape(n_classes, d)
    b = theta[n_classes * d:]

    logits = np.asarray(X @ W.T) + b
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    rows = np.arange(n)
    nll = float(log_norm.sum() - logits[rows, class_idx].sum())
    value = nll + float(np.sum(W ** 2)) / (2.0 * C)

    P = np.exp(logits - log_norm[:, None])
    P[rows, class_idx] -= 1.0
    if sp.issparse(X):
        grad_W = np.asarray((X.T @ P).T) + W / C
    else:
        grad_W = P.T @ X + W / C
    grad_b = P.sum(axis=0)
    return value, np.concatenate([grad_W.ravel(), grad_b])


def fit_multinomial_logistic(X, labels, C: float, *, grad_tol: float = 1e-6,
                             max_iter: int = 1000) -> MultinomialLogisticModel:
    """Fit a multinomial logistic model minimizing ``NLL + ||W||^2/(2C)``.

    Optimized full-batch from analytic gradients (L-BFGS line-search
    iterations); the contract is the stopping rule: gradient infinity-norm
    below ``grad_tol`` or ``max_iter`` iterations, with the achieved gradient
    norm recorded on the returned model.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    _check_matrix_finite(X)
    labels = np.asarray(labels)
    classes, class_idx = np.unique(labels, return_inverse=True)
    if classes.shape[0] < 2:
        raise ValueError("need at least two distinct classes")
    n, d = X.shape
    k = classes.shape[0]

    result = scipy.optimize.minimize(
        multinomial_nll_and_grad,
        np.zeros(k * d + k),
        args=(X, class_idx, k, C),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": grad_tol, "ftol": 1e-14,
                 "maxfun": 20 * max_iter},
    )
    _, grad = multinomial_nll_and_grad(result.x, X, class_idx, k, C)
    gnorm = float(np.max(np.abs(grad)))
    return MultinomialLogisticModel(
        class_weights=result.x[: k * d].reshape(k, d),
        class_intercepts=result.x[k * d:],
        inverse_regularization=float(C),
        class_order=tuple(classes.tolist()),
        achieved_grad_norm=gnorm,
        converged=gnorm < grad_tol,
        n_iter=int(result.nit),
    )


@dataclass(frozen=True)
class KernelSpec:
    """Kernel description; only the Gaussian kernel is supported."""

    kind: str = "gaussian"
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported kernel kind: {self.kind!r}")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def gram(self, A, B) -> np.ndarray:
        return np.exp(-pairwise_sq_dists(A, B) / (2.0 * self.bandwidth ** 2))


def pairwise_sq_dists(A, B) -> np.ndarray:
    """Squared Euclidean distances between the rows of A and B.

    Uses the inner-product expansion so sparse inputs never densify beyond
    the output matrix; numerical negatives are clipped to zero.
    """
    def row_sq_norms(M):
        if sp.issparse(M):
            return np.asarray(M.power(2).sum(axis=1)).ravel()
        return (np.asarray(M, dtype=np.float64) ** 2).sum(axis=1)

    a2 = row_sq_norms(A)
    b2 = row_sq_norms(B)
    cross = A @ B.T
    if sp.issparse(cross):
        cross = cross.toarray()
    cross = np.asarray(cross, dtype=np.float64)
    return np.maximum(a2[:, None] + b2[None, :] - 2.0 * cross, 0.0)


class BandwidthEstimate(NamedTuple):
    sigma: float
    is_fallback: bool


def median_heuristic_bandwidth(samples_a, samples_b=None) -> BandwidthEstimate:
    """Median of pairwise Euclidean distances over the pooled sample.

    Self-pairs are excluded; zero distances between distinct points are kept.
    If every pairwise distance is zero the bandwidth falls back to 1 and the
    estimate is flagged.
    """
    if samples_b is not None:
        pooled = sp.vstack([samples_a, samples_b]) \
            if sp.issparse(samples_a) or sp.issparse(samples_b) \
            else np.vstack([np.atleast_2d(samples_a), np.atleast_2d(samples_b)])
    else:
        pooled = samples_a
    n = pooled.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs a pooled sample of size >= 2")
    sq = pairwise_sq_dists(pooled, pooled)
    iu = np.triu_indices(n, k=1)
    med = float(np.median(np.sqrt(sq[iu])))
    if med <= 0.0:
        return BandwidthEstimate(1.0, True)
    return BandwidthEstimate(med, False)


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values receive the mean of their rank span."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.shape[0], dtype=np.float64)
    i = 0
    while i < v.shape[0]:
        j = i
        while j + 1 < v.shape[0] and v[order[j + 1]] == v[order[i]]:
            j += 1
        # positions i..j (0-based) share the mean rank
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(a, b) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks."""
    a = _as_float_array(a, "a")
    b = _as_float_array(b, "b")
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be equal-length vectors")
    if a.shape[0] < 2:
        raise ValueError("need at least two observations")
    ra = average_ranks(a)
    rb = average_ranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = np.sqrt(np.sum(ra ** 2) * np.sum(rb ** 2))
    if denom == 0.0:
        raise UndefinedCorrelationError("rank variance is zero in at least one input")
    return float(np.sum(ra * rb) / denom)
