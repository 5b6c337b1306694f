"""Sampling the measure of maximal entropy by randomized backward iteration.

Every orbit starts from a common base point on the sphere of radius R and
walks backwards through uniformly chosen elements of the fiber
F^{-1}(x) (with multiplicity).  Orbits are independent and keyed by index,
so a sample is a pure function of ``(map, n_points, burn_in, seed)``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .endomorphism import branch_preimage, check_regularity, evaluate, jacobian
from .greens import escape_radius

DEFAULT_BURN_IN = 40
CRITICAL_TOL = 1e-12
MAX_REDRAWS = 10
MAX_BASE_RETRIES = 10
CHUNK = 1024


class CriticalLocusError(RuntimeError):
    """Backward orbit kept landing on the critical locus."""


@dataclass(frozen=True, eq=False)
class MeasureSample:
    points: np.ndarray
    seed: int
    burn_in: int
    map_id: str
    base_point: np.ndarray = field(repr=False)
    thinning: str = "independent"

    def __len__(self):
        return self.points.shape[0]

    def real_coords(self):
        """Points as rows of R^{2n}: (re z_1, im z_1, re z_2, ...)."""
        P = self.points
        return np.stack([P.real, P.imag], axis=-1).reshape(P.shape[0], -1)


@dataclass(frozen=True, eq=False)
class OrbitWindow:
    """States (x_{-m}, ..., x_{-1}, x_0) with F(x_{-i}) = x_{-i+1}."""

    states: np.ndarray

    @property
    def m(self):
        return self.states.shape[0] - 1

    @property
    def x0(self):
        return self.states[-1]

    def state(self, i):
        """x_{-i}."""
        return self.states[self.m - i]


def _abs_det(F, X):
    J = jacobian(F, X)
    return np.abs(np.linalg.det(J)) if F.n > 1 else np.abs(J[:, 0, 0])


def _supported(F):
    if not F.supports_inverse:
        raise NotImplementedError(f"sampling is not available for {F.kind!r} maps")
    if not check_regularity(F).regular:
        raise ValueError("map is not regular")


def _step(F, Z, U):
    """One backward step for a batch; U has shape (B, MAX_REDRAWS + 1)."""
    X = branch_preimage(F, Z, U[:, 0])
    bad = _abs_det(F, X) <= CRITICAL_TOL
    for r in range(1, U.shape[1]):
        if not bad.any():
            break
        X[bad] = branch_preimage(F, Z[bad], U[bad, r])
        bad[bad] = _abs_det(F, X[bad]) <= CRITICAL_TOL
    if bad.any():
        raise CriticalLocusError(f"{int(bad.sum())} orbit(s) stuck on the critical locus")
    return X


def _run(F, Z, U, keep=False):
    """Backward run of U.shape[1] steps; optionally keep every state."""
    states = [Z] if keep else None
    for s in range(U.shape[1]):
        Z = _step(F, Z, U[:, s])
        if keep:
            states.append(Z)
    if keep:
        return np.stack(states[::-1], axis=1)  # (B, steps+1, n), oldest first
    return Z


def backward_step(F, z, generator):
    """One element of F^{-1}(z), uniform over the fiber counted with multiplicity.

    No critical-locus redraw happens here; that guard belongs to orbit
    construction, so a double root is returned like any other element.
    """
    _supported(F)
    Z = np.asarray(z, dtype=complex).reshape(1, F.n)
    return branch_preimage(F, Z, generator.random(1))[0]


def base_point(F, seed, attempt=0):
    """A random point on the sphere of radius R (the escape radius)."""
    g = rng.generator(seed, attempt, rng.TAG_BASE)
    v = g.normal(size=F.n) + 1j * g.normal(size=F.n)
    return escape_radius(F) * v / np.linalg.norm(v)


def _chunks(n, size):
    return [np.arange(a, min(a + size, n)) for a in range(0, n, size)]


def _map_chunks(fn, idx_chunks, workers):
    if workers and workers > 1 and len(idx_chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(fn, idx_chunks))
    else:
        parts = [fn(c) for c in idx_chunks]
    return np.concatenate(parts, axis=0)


def sample_measure(F, n_points, burn_in=DEFAULT_BURN_IN, seed=0, workers=1):
    """Terminal points of ``n_points`` independent backward orbits of length ``burn_in``."""
    _supported(F)
    if n_points < 1 or burn_in < 0:
        raise ValueError("need n_points >= 1 and burn_in >= 0")
    for attempt in range(MAX_BASE_RETRIES):
        b = base_point(F, seed, attempt)

        def work(idx):
            U = rng.orbit_uniforms(seed, idx, (burn_in, MAX_REDRAWS + 1))
            return _run(F, np.tile(b, (idx.size, 1)), U)

        try:
            pts = _map_chunks(work, _chunks(n_points, CHUNK), workers)
        except CriticalLocusError:
            continue
        return MeasureSample(pts, int(seed), int(burn_in), F.map_id, b)
    raise CriticalLocusError("base point resampling exhausted; postcritical base point?")


def backward_orbit(F, m, seed=0, burn_in=DEFAULT_BURN_IN):
    """A window (x_{-m}, ..., x_0) of one burn-in-prefixed backward orbit."""
    _supported(F)
    if m < 1:
        raise ValueError("window length must be >= 1")
    for attempt in range(MAX_BASE_RETRIES):
        b = base_point(F, seed, attempt)
        U = rng.orbit_uniforms(seed, [0], (burn_in + m, MAX_REDRAWS + 1))
        try:
            states = _run(F, b[None], U, keep=True)[0]
        except CriticalLocusError:
            continue
        return OrbitWindow(states[: m + 1].copy())
    raise CriticalLocusError("persistent critical-locus hits along the backward orbit")


def extend_backward(F, points, m, seed=0, workers=1):
    """Backward windows of length m ending at each given point, shape (N, m+1, n)."""
    _supported(F)
    P = np.asarray(points, dtype=complex).reshape(-1, F.n)

    def work(idx):
        U = rng.orbit_uniforms(seed, idx, (m, MAX_REDRAWS + 1), tag=rng.TAG_EXTEND)
        return _run(F, P[idx], U, keep=True)

    return _map_chunks(work, _chunks(P.shape[0], CHUNK), workers)


# --- diagnostics -------------------------------------------------------------

def _as_real(X):
    X = np.asarray(X)
    if np.iscomplexobj(X):
        X = np.stack([X.real, X.imag], axis=-1).reshape(X.shape[0], -1)
    return np.asarray(X, dtype=float).reshape(X.shape[0], -1)


def energy_test(X, Y, n_perm=199, seed=0, block=1000):
    """Two-sample energy-distance statistic and its permutation p-value.

    All permutations are evaluated against one blocked pass over the pooled
    distance matrix.
    """
    X, Y = _as_real(X), _as_real(Y)
    Z = np.concatenate([X, Y])
    nx, N = X.shape[0], Z.shape[0]
    g = rng.generator(seed, 0, rng.TAG_VERIFY)
    labels = np.empty((N, n_perm + 2))
    labels[:, 0] = np.arange(N) < nx
    for k in range(1, n_perm + 1):
        labels[:, k] = g.permutation(labels[:, 0])
    labels[:, -1] = 1.0
    DS = np.empty_like(labels)
    sq = np.sum(Z ** 2, axis=1)
    for a in range(0, N, block):
        blk = Z[a:a + block]
        D2 = sq[a:a + block, None] + sq[None, :] - 2.0 * blk @ Z.T
        DS[a:a + block] = np.sqrt(np.maximum(D2, 0.0)) @ labels
    grand = DS[:, -1].sum()                             # 1' D 1
    total = DS[:, :-1].sum(axis=0)                      # 1' D s
    xx = np.sum(labels[:, :-1] * DS[:, :-1], axis=0)    # s' D s
    xy = total - xx
    yy = grand - 2 * total + xx
    ny = N - nx
    stat = 2 * xy / (nx * ny) - xx / nx ** 2 - yy / ny ** 2
    p = (1 + np.sum(stat[1:] >= stat[0])) / (n_perm + 1)
    return float(stat[0]), float(p)


def pushforward_invariance(F, sample, reference, n_perm=199, seed=0):
    """Energy test of F_* mu (from ``sample``) against an independent ``reference``."""
    return energy_test(evaluate(F, sample.points), reference.points, n_perm=n_perm, seed=seed)
