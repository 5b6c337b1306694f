"""Monte Carlo checks of the inverse-branch estimates behind the dimension bound.

Three experiments are provided:

* ``verify_inverse_branch``: one-step inverse branch of a map g near a
  noncritical point, with explicit radius r(x) and Lipschitz/determinant
  control.
* ``verify_preimage_scaling``: how the branch of F^{-m} along a backward
  window shrinks balls (inner radius) and volumes.
* ``covering_statistics``: growth of mesh-cube counts covering backward
  iterates of a sample.

All norms are Euclidean on C^n with the induced operator norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .endomorphism import NORM, _partial, evaluate, fiber_batch, jacobian
from .greens import escape_radius
from .sampler import extend_backward

CRITICAL_DET = 1e-12
MIN_RADIUS = 1e-14
N_MATRIX_CHECK = 10_000
ROUNDOFF = 1e-9
AMBIGUITY_TOL = 1e-10
MAX_HALVINGS = 5
N_DIRECTIONS = 200
N_VOLUME = 2000
RATE_TOL = 0.3
COVER_SLACK = 1.2
MIN_CUBES = 100
MAX_FILL = 0.5


class CriticalPointError(ValueError):
    pass


class BranchAmbiguityError(RuntimeError):
    pass


@dataclass(frozen=True)
class VerificationReport:
    experiment: str
    passed: bool
    measured: dict
    tolerances: dict
    checks: dict = field(default_factory=dict)
    norm: str = NORM

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "pass": bool(self.passed),
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "measured": _plain(self.measured),
            "tolerances": _plain(self.tolerances),
            "norm": self.norm,
        }


def _plain(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = _plain(v)
        elif isinstance(v, (list, tuple, np.ndarray)):
            out[k] = [float(x) for x in np.ravel(v)]
        elif isinstance(v, (bool, np.bool_)):
            out[k] = bool(v)
        elif isinstance(v, (int, np.integer)):
            out[k] = int(v)
        else:
            out[k] = float(v)
    return out


# --- determinant constant and C^2 bounds --------------------------------------

def default_cn(n):
    return float(n * 2 ** n)


def validate_cn(c_n, n, n_matrices=N_MATRIX_CHECK, seed=0):
    """Worst ratio |det A - 1| / ((c_n/2) ||A - I||) over random A with ||A - I|| in (0, 1).

    Returns ``(ok, worst_ratio)``; the sample includes scalar and rank-one
    perturbations, where the ratio is largest.
    """
    g = rng.generator(seed, n, rng.TAG_VERIFY)
    E = g.normal(size=(n_matrices, n, n)) + 1j * g.normal(size=(n_matrices, n, n))
    third = n_matrices // 3
    E[:third] = np.eye(n) * (g.normal(size=(third, 1, 1)) + 1j * g.normal(size=(third, 1, 1)))
    u = g.normal(size=(third, n, 1)) + 1j * g.normal(size=(third, n, 1))
    v = g.normal(size=(third, 1, n)) + 1j * g.normal(size=(third, 1, n))
    E[third:2 * third] = u @ v
    E /= np.linalg.norm(E, ord=2, axis=(1, 2))[:, None, None]
    E *= g.uniform(0, 1, size=(n_matrices, 1, 1))
    A = np.eye(n) + E
    lhs = np.abs(np.linalg.det(A) - 1)
    rhs = 0.5 * c_n * np.linalg.norm(E, ord=2, axis=(1, 2))
    worst = float(np.max(lhs / rhs))
    return bool(worst <= 1 + ROUNDOFF), worst


def _sup_on_ball(P, grid, radius):
    """Upper bound of |P| on the polydisc-containing ball of ``radius``, per leading index."""
    a = np.abs(P).reshape(P.shape[0], -1)
    return a @ (radius ** grid.ravel().astype(float))


def c2_bound(F, radius):
    """Coefficient upper bound on sup|g| + sup||Dg|| + sup||D^2 g|| over the ball of ``radius``.

    Monomials are bounded by radius^|alpha| and Frobenius norms stand in
    for operator norms, so every term is an upper bound.
    """
    n, grid = F.n, F.degree_grid
    S = F._stack
    J = F._jstack
    H = np.stack([_partial(J[i], a) for i in range(n * n) for a in range(n)])
    g0 = np.linalg.norm(_sup_on_ball(S, grid, radius))
    g1 = np.linalg.norm(_sup_on_ball(J, grid, radius))
    g2 = np.linalg.norm(_sup_on_ball(H, grid, radius))
    return float(g0 + g1 + g2)


@dataclass(frozen=True)
class Lemma1Config:
    eps: float
    omega_radius: float
    c2_norm: float
    c_n: float
    n: int
    n_test_points: int = 10_000
    cn_worst_ratio: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        if not 0 < self.eps < 3:
            raise ValueError("eps must lie in (0, 3)")
        if self.omega_radius <= 0 or self.c2_norm <= 0 or self.c_n <= 0:
            raise ValueError("omega_radius, c2_norm and c_n must be positive")
        if self.n_test_points < 2:
            raise ValueError("n_test_points must be >= 2")
        ok, worst = validate_cn(self.c_n, self.n)
        if not ok:
            raise ValueError(f"c_n={self.c_n} violates the determinant bound (ratio {worst:.4g})")
        object.__setattr__(self, "cn_worst_ratio", worst)

    @classmethod
    def for_map(cls, F, eps, omega_radius=None, c_n=None, n_test_points=10_000):
        R = 2.0 * escape_radius(F) if omega_radius is None else float(omega_radius)
        cn = default_cn(F.n) if c_n is None else float(c_n)
        return cls(float(eps), R, c2_bound(F, R), cn, F.n, int(n_test_points))

    @property
    def M(self):
        return self.c_n * (self.c2_norm + 1.0)


def inverse_branch_radius(cfg, inv_norm):
    """r(x) = (1 - e^{-eps/3}) / (2 M ||(D_x g)^{-1}||^2)."""
    return (1 - math.exp(-cfg.eps / 3)) / (2 * cfg.M * inv_norm ** 2)


def injectivity_radius(cfg, inv_norm):
    """rho = (e^{eps/3} - 1) / (M ||(D_x g)^{-1}||)."""
    return (math.exp(cfg.eps / 3) - 1) / (cfg.M * inv_norm)


def _uniform_ball(g, N, n, centre, radius):
    """Uniform points in the Euclidean ball of R^{2n} identified with C^n."""
    v = g.normal(size=(N, 2 * n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= radius * g.uniform(size=(N, 1)) ** (1.0 / (2 * n))
    return centre + v[:, :n] + 1j * v[:, n:]


def _pair_ratios(A, B, g, n_pairs):
    i = g.integers(0, A.shape[0], n_pairs)
    j = g.integers(0, A.shape[0], n_pairs)
    keep = i != j
    num = np.linalg.norm(A[i[keep]] - A[j[keep]], axis=1)
    den = np.linalg.norm(B[i[keep]] - B[j[keep]], axis=1)
    return float(np.max(num / den))


def verify_inverse_branch(F, x, cfg, seed=0):
    """Check existence, Lipschitz and determinant control of the local inverse of F at x."""
    x = np.asarray(x, dtype=complex).reshape(F.n)
    Dx = jacobian(F, x)
    det_x = abs(np.linalg.det(Dx))
    if det_x <= CRITICAL_DET:
        raise CriticalPointError("critical point")
    inv_norm = float(np.linalg.norm(np.linalg.inv(Dx), ord=2))
    d_norm = float(np.linalg.norm(Dx, ord=2))
    r = inverse_branch_radius(cfg, inv_norm)
    if r < MIN_RADIUS:
        raise ValueError(f"r(x)={r:.3g} below {MIN_RADIUS:g}; conditioning too poor to test")
    rho = injectivity_radius(cfg, inv_norm)
    if np.linalg.norm(x) + rho > cfg.omega_radius:
        raise ValueError("the injectivity ball around x leaves the domain")

    g = rng.generator(seed, 0, rng.TAG_VERIFY)
    gx = evaluate(F, x)
    T = _uniform_ball(g, cfg.n_test_points, F.n, gx, r)
    fibers = fiber_batch(F, T)                                     # (N, d^n, n)
    dist = np.linalg.norm(fibers - x, axis=-1)
    inside = dist < rho
    counts = inside.sum(axis=1)
    Y = fibers[np.arange(T.shape[0]), np.argmin(dist, axis=1)]    # g^{-1}(T) on B_1

    grow = math.exp(cfg.eps / 3)
    JY = jacobian(F, Y)
    lip_g = max(_pair_ratios(T, Y, g, cfg.n_test_points),
                float(np.max(np.linalg.norm(JY, ord=2, axis=(1, 2)))))
    lip_inv = max(_pair_ratios(Y, T, g, cfg.n_test_points),
                  float(np.max(1.0 / np.linalg.svd(JY, compute_uv=False)[:, -1])))
    det_min = float(np.min(np.abs(np.linalg.det(JY))))

    tol = 1 + ROUNDOFF
    checks = {
        "a_well_defined": bool(np.all(counts == 1)),
        "b_lipschitz_g": lip_g <= d_norm * grow * tol,
        "c_lipschitz_inverse": lip_inv <= inv_norm * grow * tol,
        "d_determinant": bool(det_min * tol >= det_x / grow),
    }
    measured = {
        "r": r, "rho": rho, "M": cfg.M, "c2_norm": cfg.c2_norm, "c_n": cfg.c_n,
        "cn_worst_ratio": cfg.cn_worst_ratio,
        "norm_Dg": d_norm, "norm_Dg_inv": inv_norm, "det_Dg": det_x,
        "lipschitz_g": lip_g, "lipschitz_inverse": lip_inv, "min_det": det_min,
        "min_preimages_in_rho": int(counts.min()), "max_preimages_in_rho": int(counts.max()),
    }
    tolerances = {
        "eps": cfg.eps, "omega_radius": cfg.omega_radius, "n_test_points": cfg.n_test_points,
        "lipschitz_g_max": d_norm * grow, "lipschitz_inverse_max": inv_norm * grow,
        "min_det_required": det_x / grow, "roundoff": ROUNDOFF,
    }
    return VerificationReport("lemma1", all(checks.values()), measured, tolerances, checks)


# --- backward-window scaling -------------------------------------------------

def _track(F, states, Y):
    """Pull Y back along the window by nearest-preimage continuation.

    Returns the chain (N, m+1, n) ordered like ``states`` (oldest first)
    and whether any step was ambiguous.
    """
    m = states.shape[0] - 1
    chain = [Y]
    ambiguous = False
    for i in range(1, m + 1):
        fib = fiber_batch(F, chain[-1])
        dist = np.linalg.norm(fib - states[m - i], axis=-1)
        order = np.sort(dist, axis=1)
        if fib.shape[1] > 1:
            ambiguous |= bool(np.any(order[:, 1] - order[:, 0] < AMBIGUITY_TOL))
        chain.append(fib[np.arange(Y.shape[0]), np.argmin(dist, axis=1)])
    return np.stack(chain[::-1], axis=1), ambiguous


def _iterate(F, Z, k):
    for _ in range(k):
        Z = evaluate(F, Z)
    return Z


def _inner_radius(F, centre, target, s, k, directions, t0):
    """Smallest exit radius of F^k(centre + t v) from B(target, s) over directions v."""
    def outside(t):
        return np.linalg.norm(_iterate(F, centre + t[:, None] * directions, k) - target, axis=1) >= s

    lo = np.zeros(directions.shape[0])
    hi = np.full(directions.shape[0], t0)
    for _ in range(200):
        o = outside(hi)
        if o.all():
            break
        lo = np.where(o, lo, hi)
        hi = np.where(o, hi, hi * 1.25)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        o = outside(mid)
        hi = np.where(o, mid, hi)
        lo = np.where(o, lo, mid)
    return float(lo.min())


def ball_volume(n, r):
    """Lebesgue volume of a ball of radius r in C^n = R^{2n}."""
    return math.pi ** n * r ** (2 * n) / math.factorial(n)


def _log_slope(y):
    k = np.arange(len(y), dtype=float)
    return float(np.polyfit(k, np.log(y), 1)[0])


def verify_preimage_scaling(F, window, r, eps, lyap, seed=0):
    """Inner-radius and volume scaling of the branch of F^{-m} along ``window``.

    Radii and volumes are measured for every k = 0..m, giving per-step decay
    rates, and a distortion constant kappa >= 1 is fitted so that the
    containment and volume inequalities hold at every k.
    """
    states = np.asarray(window.states if hasattr(window, "states") else window, dtype=complex)
    m = states.shape[0] - 1
    if m < 1:
        raise ValueError("window length must be >= 1")
    n = F.n
    x0 = states[-1]
    g = rng.generator(seed, 0, rng.TAG_VERIFY)
    Y = _uniform_ball(g, N_VOLUME, n, x0, 1.0)  # unit ball, rescaled below
    dirs = g.normal(size=(N_DIRECTIONS, 2 * n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = dirs[:, :n] + 1j * dirs[:, n:]

    halvings = 0
    while True:
        chain, ambiguous = _track(F, states, x0 + r * (Y - x0))
        if not ambiguous:
            break
        if halvings == MAX_HALVINGS:
            raise BranchAmbiguityError("inverse branch ambiguous after repeated shrinking of r")
        r *= 0.5
        halvings += 1

    # |det D F^k| along each tracked chain, k steps back from x_0
    dets = np.abs(np.linalg.det(jacobian(F, chain[:, :-1].reshape(-1, n)).reshape(-1, m, n, n)))
    cum = np.cumprod(dets[:, ::-1], axis=1)               # column k-1: |det DF^k(y_{-k})|
    vol0 = ball_volume(n, r)
    volumes = np.concatenate([[vol0], vol0 * np.mean(cum ** -2.0, axis=0)])

    radii = [r]
    for k in range(1, m + 1):
        xk = states[m - k]
        Dk = np.eye(n, dtype=complex)
        for j in range(k, 0, -1):
            Dk = jacobian(F, states[m - j]) @ Dk
        t0 = 0.5 * r / float(np.linalg.norm(Dk, ord=2))
        radii.append(_inner_radius(F, xk, x0, r, k, dirs, t0))
    radii = np.array(radii)

    ks = np.arange(m + 1)
    lam_max, Lam = lyap.lambda_max, lyap.lambda_sum
    kappa_a = float(np.max(r * np.exp(-ks * (lam_max + eps)) / radii))
    kappa_b = float(np.max(volumes / np.exp(-ks * (2 * Lam - eps))))
    kappa = max(1.0, kappa_a, kappa_b)

    # independent containment check at the kappa-scaled radius
    s_m = (r / kappa) * math.exp(-m * (lam_max + eps))
    U = states[0] + s_m * dirs
    contained = bool(np.all(np.linalg.norm(_iterate(F, U, m) - x0, axis=1) < r))
    volume_ok = bool(volumes[-1] <= kappa * math.exp(-m * (2 * Lam - eps)) * (1 + ROUNDOFF))

    vol_rate = _log_slope(volumes)
    rad_rate = _log_slope(radii)
    checks = {
        "a_inner_ball": contained,
        "b_volume": volume_ok,
        "volume_rate": abs(vol_rate + 2 * Lam) <= RATE_TOL,
        "radius_rate": abs(rad_rate + lam_max) <= RATE_TOL,
    }
    measured = {
        "m": m, "r": r, "halvings": halvings, "kappa": kappa,
        "kappa_inner": kappa_a, "kappa_volume": kappa_b,
        "volumes": volumes, "inner_radii": radii,
        "log_volume_rate": vol_rate, "log_radius_rate": rad_rate,
        "volume_decay_factor": math.exp(vol_rate), "radius_decay_factor": math.exp(rad_rate),
        "lambda_max": lam_max, "lambda_sum": Lam,
    }
    tolerances = {
        "eps": eps, "rate_tol": RATE_TOL,
        "expected_log_volume_rate": -2 * Lam, "expected_log_radius_rate": -lam_max,
        "n_directions": N_DIRECTIONS, "n_volume_points": N_VOLUME,
    }
    return VerificationReport("lemma2", all(checks.values()), measured, tolerances, checks)


# --- mesh-cube covering ------------------------------------------------------

def cube_count(points, edge):
    """Number of axis-aligned grid cubes of side ``edge`` in R^{2n} that contain a point."""
    P = np.asarray(points)
    X = np.concatenate([P.real, P.imag], axis=1)
    return int(np.unique(np.floor(X / edge).astype(np.int64), axis=0).shape[0])


def covering_statistics(F, sample, m_range, r0, eps, lyap, kappa0=1.0, seed=0, workers=1):
    """Growth factor of mesh-cube counts over backward iterates A_m of a sample."""
    ms = sorted(set(int(m) for m in m_range))
    if len(ms) < 2:
        raise ValueError("growth factor needs >= 2 scales")
    if ms[0] < 1 or ms[-1] > 12:
        raise ValueError("m_range must lie in [1, 12]")
    pts = sample.points if hasattr(sample, "points") else np.asarray(sample)
    pts = np.asarray(pts, dtype=complex).reshape(-1, F.n)
    N, n, d = pts.shape[0], F.n, F.d
    if N < 5000:
        raise ValueError("covering statistics need at least 5000 sample points")

    M = ms[-1]
    W = extend_backward(F, pts, M, seed=seed, workers=workers)   # W[:, M - m] = x_{-m}
    lam0 = max(lyap.lambda_max, math.log(d))
    c = r0 / (4 * kappa0 * math.sqrt(2 * n))
    edges = np.array([c * math.exp(-m * (lam0 + eps)) for m in ms])
    counts = np.array([cube_count(W[:, M - m], e) for m, e in zip(ms, edges)])

    usable = (counts >= MIN_CUBES) & (counts <= MAX_FILL * N)
    if usable.sum() < 2:
        raise ValueError(
            f"insufficient points per cube scale: need >= 2 scales with {MIN_CUBES} to "
            f"{int(MAX_FILL * N)} occupied cubes, counts {counts.tolist()}"
        )
    slope = float(np.polyfit(np.array(ms, dtype=float)[usable], np.log(counts[usable]), 1)[0])
    growth = math.exp(slope)
    bound = d * math.exp(2 * (n - 1) * lam0) * math.exp((2 * n + 1) * eps) * COVER_SLACK

    measured = {
        "growth_factor": growth, "lambda_0": lam0, "c": c, "kappa_0": kappa0, "r0": r0,
        "m": ms, "edges": edges, "cube_counts": counts, "usable_scales": usable.astype(float),
        "n_points": N,
    }
    tolerances = {"growth_bound": bound, "slack": COVER_SLACK, "eps": eps,
                  "min_cubes": MIN_CUBES, "max_fill": MAX_FILL}
    checks = {"growth": growth <= bound}
    return VerificationReport("covering", growth <= bound, measured, tolerances, checks)
