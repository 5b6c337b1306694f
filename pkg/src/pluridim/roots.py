"""Batched Aberth-Ehrlich root finding for univariate complex polynomials.

Coefficients are stored in ascending order, ``c[..., k]`` multiplies ``x**k``,
matching the convention used everywhere else in the package.
"""

from __future__ import annotations

import numpy as np

EPS = np.finfo(float).eps
MAX_ITER = 200
TOL = 1e-12
CLUSTER_TOL = 1e-8
MAX_RESTARTS = 4


class RootFindError(RuntimeError):
    """Aberth iteration failed to converge for at least one polynomial."""


def _horner_with_derivative(c, z):
    """Value, derivative and rounding-error scale of each polynomial at each z.

    c has shape (B, d+1); z has shape (B, k).
    """
    d = c.shape[-1] - 1
    lead = c[:, d:d + 1]
    p = np.broadcast_to(lead, z.shape).astype(complex)
    dp = np.zeros_like(p)
    az = np.abs(z)
    scale = np.broadcast_to(np.abs(lead), z.shape).astype(float)
    for k in range(d - 1, -1, -1):
        dp = dp * z + p
        p = p * z + c[:, k:k + 1]
        scale = scale * az + np.abs(c[:, k:k + 1])
    return p, dp, scale


# Fixed per-root angular jitter so that results do not depend on batch layout.
_JITTER = np.random.default_rng(0x5EED).uniform(-0.15, 0.15, size=64)


def _initial_guesses(c, attempt):
    d = c.shape[-1] - 1
    mon = c / c[:, -1:]
    center = -mon[:, d - 1] / d
    # Fujiwara-type radius about the origin, widened by the centre offset.
    k = np.arange(1, d + 1)
    rad = 2.0 * np.max(np.abs(mon[:, d - k]) ** (1.0 / k), axis=1)
    rad = np.maximum(rad + np.abs(center), 1e-3)
    theta0 = 0.4 + 1.1 * attempt
    ang = 2 * np.pi * np.arange(d) / d + theta0 + _JITTER[np.arange(d) % 64]
    shrink = 1.0 - 0.1 * attempt / (MAX_RESTARTS + 1)
    return center[:, None] + (shrink * rad)[:, None] * np.exp(1j * ang)[None, :]


def _aberth_pass(c, z, max_iter, tol):
    B, d = z.shape
    done = np.zeros(B, dtype=bool)
    eye = np.eye(d, dtype=bool)
    for _ in range(max_iter):
        act = ~done
        if not act.any():
            break
        ca, za = c[act], z[act]
        p, dp, scale = _horner_with_derivative(ca, za)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dp != 0, p / dp, p)
            diff = za[:, :, None] - za[:, None, :]
            inv = np.where(eye, 0.0, 1.0 / np.where(eye, 1.0, diff))
            s = inv.sum(axis=-1)
            denom = 1.0 - ratio * s
            w = np.where(np.isfinite(denom) & (denom != 0), ratio / denom, ratio)
        w = np.where(np.isfinite(w), w, 0.0)
        small_step = np.abs(w) <= tol * (1.0 + np.abs(za))
        at_noise = np.abs(p) <= 8 * EPS * scale
        settled = np.all(small_step | at_noise, axis=1)
        za = np.where((small_step | at_noise), za, za - w)
        z[act] = za
        idx = np.flatnonzero(act)
        done[idx[settled]] = True
    return z, done


def _cluster(c, z, tol=CLUSTER_TOL):
    """Merge approximations of a multiple root into repeated centroids.

    Two roots are merged when they lie within ``tol`` (relative to 1+|z|), or
    within ``sqrt(tol)`` while their centroid still evaluates to rounding
    level; the latter catches double roots, which double precision only resolves to
    about sqrt(eps).
    """
    B, d = z.shape
    if d < 2:
        return z
    diff = np.abs(z[:, :, None] - z[:, None, :])
    rel = 1.0 + np.abs(z[:, :, None])
    close = diff <= tol * rel
    maybe = diff <= np.sqrt(tol) * rel
    rows = np.flatnonzero(maybe.sum(axis=(1, 2)) > d)
    out = z.copy()
    for b in rows:
        unvisited = list(range(d))
        while unvisited:
            i = unvisited.pop(0)
            members = [i]
            for j in list(unvisited):
                if close[b, i, j]:
                    members.append(j)
                elif maybe[b, i, j]:
                    mid = z[b, [i, j]].mean()
                    p, _, scale = _horner_with_derivative(c[b:b + 1], np.array([[mid]]))
                    if abs(p[0, 0]) <= 64 * EPS * scale[0, 0]:
                        members.append(j)
            unvisited = [j for j in unvisited if j not in members]
            out[b, members] = z[b, members].mean()
    return out


def polyroots(coeffs, tol=TOL, max_iter=MAX_ITER):
    """All roots of each polynomial in a batch, listed with multiplicity.

    Parameters
    ----------
    coeffs : array_like, shape (d+1,) or (B, d+1)
        Ascending complex coefficients; the leading one must be nonzero.

    Returns
    -------
    ndarray, shape (d,) or (B, d)
        Roots; clustered (multiple) roots are reported as repeated values.
    """
    c = np.asarray(coeffs, dtype=complex)
    single = c.ndim == 1
    c = np.atleast_2d(c)
    d = c.shape[-1] - 1
    if d < 1:
        raise ValueError("polynomial must have degree >= 1")
    if np.any(c[:, -1] == 0):
        raise ValueError("leading coefficient must be nonzero")
    if d == 1:
        roots = (-c[:, 0] / c[:, 1])[:, None]
        return roots[0] if single else roots

    roots = np.empty((c.shape[0], d), dtype=complex)
    pending = np.arange(c.shape[0])
    for attempt in range(MAX_RESTARTS + 1):
        z0 = _initial_guesses(c[pending], attempt)
        z, done = _aberth_pass(c[pending], z0, max_iter, tol)
        roots[pending[done]] = z[done]
        pending = pending[~done]
        if pending.size == 0:
            break
    else:
        # Accept stalled batches whose residuals are still at rounding level.
        p, _, scale = _horner_with_derivative(c[pending], z[~done])
        ok = np.all(np.abs(p) <= 1e-6 * scale, axis=1)
        if not ok.all():
            raise RootFindError(
                f"Aberth iteration did not converge for {int((~ok).sum())} polynomial(s)"
            )
        roots[pending] = z[~done]

    roots = _cluster(c, roots)
    return roots[0] if single else roots
