"""Dimension estimates for sampled measures and closed-form dimension expressions.

Two estimators are always reported side by side: a pair-correlation slope
and a k-nearest-neighbour maximum-likelihood local dimension.  Points in C^n
are treated as points of R^{2n}.  Both estimate correlation/local dimension,
which equals the dimension of the measure only for exact-dimensional
measures.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import linregress

from . import rng

MIN_PAIRS = 10
MIN_POINTS = 2000
DEFAULT_WINDOW_PAIRS = 100
N_SCALES = 12
N_BOOT = 200


class InsufficientDataError(ValueError):
    pass


def as_real(points):
    X = np.asarray(points)
    if np.iscomplexobj(X):
        X = X.reshape(X.shape[0], -1)
        X = np.stack([X.real, X.imag], axis=-1).reshape(X.shape[0], -1)
    X = np.asarray(X, dtype=float)
    return X.reshape(X.shape[0], -1)


def diameter(X, block=2048):
    """Exact Euclidean diameter by blocked pairwise distances."""
    best = 0.0
    sq = np.sum(X ** 2, axis=1)
    for a in range(0, X.shape[0], block):
        D2 = sq[a:a + block, None] + sq[None, :] - 2 * X[a:a + block] @ X.T
        best = max(best, float(D2.max()))
    return math.sqrt(max(best, 0.0))


def default_radii(X, min_pairs=DEFAULT_WINDOW_PAIRS):
    """(r_lo, r_hi) = (1e-3, 0.1) * diam, with r_lo raised until ~min_pairs pairs lie below it."""
    diam = diameter(X)
    r_lo, r_hi = 1e-3 * diam, 0.1 * diam
    nn = np.sort(cKDTree(X).query(X, k=2)[0][:, 1])
    j = min(2 * min_pairs, nn.size - 1)
    r_lo = max(r_lo, float(nn[j]))
    return r_lo, max(r_hi, 10 * r_lo)


def correlation_dimension(points, r_lo=None, r_hi=None, n_scales=N_SCALES):
    """Slope of log C(r) against log r over geometric radii in [r_lo, r_hi].

    C(r) is the exact fraction of pairs closer than r (kd-tree counts).
    Returns ``(estimate, stderr)``.
    """
    X = as_real(points)
    N = X.shape[0]
    if N < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} points, have {N}")
    if r_lo is None or r_hi is None:
        lo, hi = default_radii(X)
        r_lo = lo if r_lo is None else r_lo
        r_hi = hi if r_hi is None else r_hi
    if not 0 < r_lo < r_hi:
        raise ValueError("need 0 < r_lo < r_hi")
    radii = np.geomspace(r_lo, r_hi, n_scales)
    tree = cKDTree(X)
    pairs = (tree.count_neighbors(tree, radii) - N) / 2.0
    if pairs[0] < MIN_PAIRS:
        raise InsufficientDataError(
            f"only {int(pairs[0])} pairs within r_lo={r_lo:.3g}; radii too small for sample size"
        )
    C = pairs / (N * (N - 1) / 2.0)
    fit = linregress(np.log(radii), np.log(C))
    return float(fit.slope), float(fit.stderr)


def _knn_logsums(X, k):
    d, _ = cKDTree(X).query(X, k=k + 1)
    T = d[:, 1:]
    return np.sum(np.log(T[:, -1:] / T[:, :-1]), axis=1)


def knn_local_dimension(points, k=10, n_boot=N_BOOT, seed=0):
    """Levina-Bickel maximum-likelihood dimension from k-NN distance ratios.

    Per-point mean log-ratios log(T_k/T_j), j < k, are averaged over points
    and inverted (the pooled form, which is stable when a few points have
    tiny log-ratio sums).  Duplicate points are merged first.  The stderr is
    a bootstrap over points.  Returns ``(estimate, stderr)``.
    """
    if k < 4:
        raise ValueError("k must be >= 4")
    X = np.unique(as_real(points), axis=0)
    N = X.shape[0]
    if N < 100 * k:
        raise InsufficientDataError(f"need at least {100 * k} distinct points, have {N}")
    S = _knn_logsums(X, k) / (k - 1)
    est = 1.0 / S.mean()
    g = rng.generator(seed, 0, rng.TAG_VERIFY)
    boots = np.array([1.0 / S[g.integers(0, N, N)].mean() for _ in range(n_boot)])
    return float(est), float(boots.std(ddof=1))


@dataclass(frozen=True)
class DimensionReport:
    correlation_dim: float
    correlation_stderr: float
    knn_dim: float
    knn_stderr: float
    radii_range: tuple
    k: int
    n_points: int

    @property
    def unreliable(self):
        """Estimators disagree by more than 3 combined sigma."""
        s = math.hypot(self.correlation_stderr, self.knn_stderr)
        return abs(self.correlation_dim - self.knn_dim) > 3 * s

    def to_dict(self):
        out = asdict(self)
        out["radii_range"] = list(self.radii_range)
        out["unreliable"] = self.unreliable
        return out


def estimate_dimension(points, r_lo=None, r_hi=None, n_scales=N_SCALES, k=10, seed=0):
    X = as_real(points)
    if r_lo is None or r_hi is None:
        lo, hi = default_radii(X)
        r_lo = lo if r_lo is None else r_lo
        r_hi = hi if r_hi is None else r_hi
    cd, cs = correlation_dimension(X, r_lo, r_hi, n_scales)
    kd, ks = knn_local_dimension(X, k=k, seed=seed)
    return DimensionReport(cd, cs, kd, ks, (float(r_lo), float(r_hi)), int(k), int(X.shape[0]))


# --- closed forms ---------------------------------------------------------------

def mane_formula(d, L):
    """log d / L: dimension of the maximal-entropy measure of a degree-d polynomial on C."""
    if d < 2:
        raise ValueError("degree must be >= 2")
    if not L > 0:
        raise ValueError("Lyapunov exponent must be positive")
    return math.log(d) / L


def conjecture2_formula(d, exponents):
    """log d * sum(1/lambda_i), Lyapunov exponents repeated with multiplicity."""
    lam = np.asarray(exponents, dtype=float)
    if lam.size == 0 or np.any(lam <= 0):
        raise ValueError("exponents must be positive")
    return float(math.log(d) * np.sum(1.0 / lam))


def theorem_bound(d, lambda_max, n):
    """Upper bound 2n - 2 + log d / max(log d, lambda_max); never exceeds 2n - 1."""
    if d < 2:
        raise ValueError("degree must be >= 2")
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")
    logd = math.log(d)
    return 2 * n - 2 + logd / max(logd, lambda_max)
