"""Escape rate (dynamical Green's function) and filled-Julia-set membership."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .endomorphism import check_regularity, evaluate, evaluate_scaled, leading_form_min

LOG_SWITCH = math.log(1e100)
LOG_MAX = math.log(1e300)
SAMPLED_MARGIN = 0.99


class NotRegularError(ValueError):
    pass


def _norm(Z):
    """Euclidean row norms without overflow of the intermediate squares."""
    a = np.abs(Z)
    s = a.max(axis=1)
    safe = np.where(s > 0, s, 1.0)
    return s * np.sqrt(np.sum((a / safe[:, None]) ** 2, axis=1))


def _require_regular(F):
    if not check_regularity(F).regular:
        raise NotRegularError("map is not regular: leading form vanishes on the sphere")


def escape_radius(F):
    """Radius R with ||z|| > R  =>  ||F(z)|| >= 2 ||z||.

    Uses R = max(1, (2 + S) / m), S the sum of |lower-order coefficients|
    and m the minimum of the leading form on the unit sphere.
    """
    _require_regular(F)
    m, sampled = leading_form_min(F)
    if sampled:
        m *= SAMPLED_MARGIN
    if m <= 0:
        raise NotRegularError("leading form vanishes on the sphere")
    _, low = F.coefficient_sums
    return max(1.0, (2.0 + low) / m)


def log_distortion(F):
    """C with |log||F(z)|| - d log||z||| <= C whenever ||z|| >= R."""
    m, sampled = leading_form_min(F)
    if sampled:
        m *= SAMPLED_MARGIN
    top, low = F.coefficient_sums
    return max(0.0, math.log(top + low), math.log((2.0 + low) / (2.0 * m)))


@dataclass(frozen=True)
class EscapeParams:
    escape_radius: float
    max_iter: int = 1000
    tol: float = 1e-9

    def __post_init__(self):
        if not self.escape_radius > 0:
            raise ValueError("escape_radius must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @classmethod
    def for_map(cls, F, **kw):
        return cls(escape_radius(F), **kw)


def _params(F, params):
    return EscapeParams.for_map(F) if params is None else params


def escape_rate(F, z, params=None):
    """G_F(z) = lim d^{-m} log+ ||F^m(z)||, accurate to ``params.tol``.

    Accepts one point (shape (n,)) or a batch (N, n).
    """
    _require_regular(F)
    p = _params(F, params)
    Z = np.asarray(z, dtype=complex)
    single = Z.ndim <= 1
    Z = Z.reshape(1, -1) if single else Z.copy()
    N = Z.shape[0]
    d = F.d
    logd = math.log(d)
    C = log_distortion(F)
    # total step count k after which C d^{-k} / (d-1) < tol
    k_need = 0 if C == 0 else max(0, math.ceil(math.log(C / ((d - 1) * p.tol)) / logd))
    logR = math.log(p.escape_radius)
    top, _ = F.coefficient_sums
    switch = min(LOG_SWITCH, (LOG_MAX - math.log(max(top, 1.0) * 4)) / d)

    out = np.zeros(N)
    step = np.zeros(N, dtype=np.int64)
    escaped = np.zeros(N, dtype=bool)
    live = np.ones(N, dtype=bool)  # still iterated in plain coordinates
    logn = np.full(N, -np.inf)
    U = np.zeros_like(Z)
    with np.errstate(divide="ignore"):
        logn[:] = np.log(_norm(Z))
    escaped |= logn > logR

    # plain iteration
    for _ in range(p.max_iter + k_need + 1):
        go = live & ((~escaped & (step < p.max_iter)) | (escaped & (step < k_need)))
        go &= logn <= switch
        if not go.any():
            break
        Z[go] = evaluate(F, Z[go])
        step[go] += 1
        with np.errstate(divide="ignore"):
            logn[go] = np.log(_norm(Z[go]))
        escaped |= logn > logR

    # (direction, log-norm) continuation for orbits beyond the overflow guard
    big = escaped & (logn > switch) & (step < k_need)
    if big.any():
        U[big] = Z[big] / np.exp(logn[big])[:, None]
        live[big] = False
        while True:
            go = big & (step < k_need)
            if not go.any():
                break
            V = evaluate_scaled(F, U[go], logn[go])
            nv = _norm(V)
            U[go] = V / nv[:, None]
            logn[go] = d * logn[go] + np.log(nv)
            step[go] += 1

    esc = escaped & np.isfinite(logn) & (logn > 0)
    out[esc] = np.exp(np.log(logn[esc]) - step[esc] * logd)
    return float(out[0]) if single else out


def in_filled_julia(F, z, params=None):
    """True iff the orbit stays within the escape radius for max_iter steps.

    A True verdict can be a false positive for slowly escaping points;
    False is certain.
    """
    _require_regular(F)
    p = _params(F, params)
    Z = np.asarray(z, dtype=complex)
    single = Z.ndim <= 1
    Z = Z.reshape(1, -1) if single else Z.copy()
    inside = np.linalg.norm(Z, axis=1) <= p.escape_radius
    for _ in range(p.max_iter):
        if not inside.any():
            break
        Z[inside] = evaluate(F, Z[inside])
        inside &= np.linalg.norm(Z, axis=1) <= p.escape_radius
    return bool(inside[0]) if single else inside


def green_grid(F, re_range, im_range, shape, base=None, params=None):
    """Escape rate on a rectangular grid in the first coordinate plane.

    Remaining coordinates are fixed at ``base[1:]``. Returns (points, values).
    """
    nx, ny = shape
    xs = np.linspace(re_range[0], re_range[1], nx)
    ys = np.linspace(im_range[0], im_range[1], ny)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    pts = np.zeros((nx * ny, F.n), dtype=complex)
    if base is not None:
        pts[:] = np.asarray(base, dtype=complex)
    pts[:, 0] = (X + 1j * Y).ravel()
    return pts, escape_rate(F, pts, params)
