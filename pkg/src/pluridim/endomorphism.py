"""Polynomial endomorphisms of C^n: construction, evaluation, derivatives, fibers.

Every map carries a dense coefficient representation: component ``k`` is an
array ``P`` of shape ``(d+1,)*n`` where ``P[i1, ..., in]`` multiplies
``z1**i1 * ... * zn**in``.  The closed families (one-variable, product, skew
product) additionally keep their univariate factors, from which exact fibers
``F^{-1}(t)`` are obtained by univariate root finding.

Norms on C^n are Euclidean throughout; matrix norms are the induced operator
norms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import least_squares

from .roots import RootFindError, polyroots

__all__ = [
    "PolyMap",
    "Regularity",
    "RootFindError",
    "one_d",
    "product",
    "skew2d",
    "dense",
    "from_spec",
    "to_spec",
    "evaluate",
    "jacobian",
    "is_regular",
    "check_regularity",
    "leading_form_min",
    "preimages",
    "fiber_batch",
    "branch_preimage",
]

NORM = "euclidean"
COMMON_ZERO_TOL = 1e-10
COMPENSATE_SPAN = 1e8


def _as_poly1d(coeffs):
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    if c.ndim != 1:
        raise ValueError("univariate coefficients must be a flat sequence")
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise ValueError("zero polynomial")
    c = c[: nz[-1] + 1]
    if c.size - 1 < 2:
        raise ValueError("degree must be >= 2")
    return c


def _partial(P, axis):
    """Dense-array partial derivative, keeping the array shape."""
    P = np.moveaxis(P, axis, -1)
    k = np.arange(1, P.shape[-1])
    D = np.zeros_like(P)
    D[..., :-1] = P[..., 1:] * k
    return np.moveaxis(D, -1, axis)


def _degree_grid(n, d):
    return np.sum(np.indices((d + 1,) * n), axis=0)


@dataclass(frozen=True, eq=False)
class PolyMap:
    """A polynomial self-map of C^n of common degree ``d >= 2``.

    Build instances with :func:`one_d`, :func:`product`, :func:`skew2d` or
    :func:`dense` rather than directly.
    """

    kind: str
    n: int
    d: int
    components: tuple
    factors: tuple = ()
    fiber: np.ndarray | None = None
    _stack: np.ndarray = field(init=False, repr=False)
    _jstack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        stack = np.stack([np.asarray(P, dtype=complex) for P in self.components])
        jac = np.stack([_partial(stack[k], a) for k in range(self.n) for a in range(self.n)])
        object.__setattr__(self, "_stack", stack)
        object.__setattr__(self, "_jstack", jac)

    @property
    def supports_inverse(self):
        return self.kind in ("oned", "product", "skew2d")

    @cached_property
    def degree_grid(self):
        return _degree_grid(self.n, self.d)

    @cached_property
    def compensated(self):
        a = np.abs(self._stack[self._stack != 0])
        return bool(a.max() / a.min() > COMPENSATE_SPAN)

    @cached_property
    def coefficient_sums(self):
        """(sum of |top-degree coeffs|, sum of |lower-degree coeffs|) over all components."""
        a = np.abs(self._stack)
        top = self.degree_grid == self.d
        return float(a[:, top].sum()), float(a[:, ~top].sum())

    @cached_property
    def map_id(self):
        blob = json.dumps(to_spec(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __call__(self, z):
        return evaluate(self, z)


def one_d(coeffs):
    """The map z -> c_0 + c_1 z + ... + c_d z^d."""
    c = _as_poly1d(coeffs)
    return PolyMap("oned", 1, c.size - 1, (c,), factors=(c,))


def product(*polys):
    """Product map (z_1, ..., z_n) -> (p_1(z_1), ..., p_n(z_n)), all of equal degree."""
    cs = [_as_poly1d(p) for p in polys]
    if len(cs) < 1:
        raise ValueError("product needs at least one factor")
    d = cs[0].size - 1
    if any(c.size - 1 != d for c in cs):
        raise ValueError("product factors must share a common degree")
    n = len(cs)
    comps = []
    for k, c in enumerate(cs):
        P = np.zeros((d + 1,) * n, dtype=complex)
        idx = [0] * n
        for i in range(d + 1):
            idx[k] = i
            P[tuple(idx)] = c[i]
        comps.append(P)
    return PolyMap("product", n, d, tuple(comps), factors=tuple(cs))


def skew2d(p, q):
    """Skew product (z, w) -> (p(z), q(z, w)).

    ``q[i][j]`` multiplies ``z**i * w**j``; q must have total degree
    ``deg p`` and no monomials above it.
    """
    pc = _as_poly1d(p)
    d = pc.size - 1
    qa = np.atleast_2d(np.asarray(q, dtype=complex))
    table = np.zeros((d + 1, d + 1), dtype=complex)
    deg = _degree_grid(2, max(qa.shape) - 1)[: qa.shape[0], : qa.shape[1]]
    if np.any((deg > d) & (qa != 0)):
        raise ValueError("q has monomials above the degree of p")
    if not np.any((deg == d) & (qa != 0)):
        raise ValueError("q must have total degree equal to deg p")
    r, s = min(qa.shape[0], d + 1), min(qa.shape[1], d + 1)
    table[:r, :s] = qa[:r, :s]
    P0 = np.zeros((d + 1, d + 1), dtype=complex)
    P0[:, 0] = pc
    return PolyMap("skew2d", 2, d, (P0, table), factors=(pc,), fiber=table)


def dense(components):
    """General map from n dense coefficient arrays of common total degree."""
    arrs = [np.asarray(P, dtype=complex) for P in components]
    n = len(arrs)
    if n < 1 or any(P.ndim != n for P in arrs):
        raise ValueError("need n component arrays, each n-dimensional")
    degs = []
    for P in arrs:
        nz = np.argwhere(P != 0)
        if nz.size == 0:
            raise ValueError("zero component")
        degs.append(int(nz.sum(axis=1).max()))
    d = degs[0]
    if any(g != d for g in degs):
        raise ValueError("components must share a common total degree")
    if d < 2:
        raise ValueError("degree must be >= 2")
    comps = []
    for P in arrs:
        Q = np.zeros((d + 1,) * n, dtype=complex)
        sl = tuple(slice(0, min(s, d + 1)) for s in P.shape)
        Q[sl] = P[sl]
        comps.append(Q)
    return PolyMap("dense", n, d, tuple(comps))


# --- map definition records -------------------------------------------------

def _pairs(c):
    return [[float(v.real), float(v.imag)] for v in np.asarray(c, dtype=complex).ravel()]


def _unpairs(seq):
    a = np.asarray(seq, dtype=float)
    if a.ndim == 1 and a.size == 2:
        a = a[None]
    if a.shape[-1] != 2:
        raise ValueError("coefficients must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def to_spec(F):
    """Serialise a map to its definition record (JSON-compatible dict)."""
    if F.kind == "oned":
        coeffs = _pairs(F.factors[0])
    elif F.kind == "product":
        coeffs = [_pairs(c) for c in F.factors]
    elif F.kind == "skew2d":
        coeffs = {"p": _pairs(F.factors[0]), "q": [_pairs(row) for row in F.fiber]}
    else:
        coeffs = []
        for P in F.components:
            terms = [[list(map(int, idx)), [float(P[tuple(idx)].real), float(P[tuple(idx)].imag)]]
                     for idx in np.argwhere(P != 0)]
            coeffs.append(terms)
    variant = {"oned": "one_d", "product": "product", "skew2d": "skew2d", "dense": "dense"}[F.kind]
    return {"variant": variant, "degree": F.d, "coefficients": coeffs}


def from_spec(spec):
    """Build a map from a definition record ``{variant, degree, coefficients}``."""
    variant = spec["variant"]
    coeffs = spec["coefficients"]
    if variant == "one_d":
        F = one_d(_unpairs(coeffs))
    elif variant == "product":
        F = product(*[_unpairs(c) for c in coeffs])
    elif variant == "skew2d":
        q = np.array([_unpairs(row) for row in coeffs["q"]])
        F = skew2d(_unpairs(coeffs["p"]), q)
    elif variant == "dense":
        n = len(coeffs)
        deg = int(spec.get("degree", 0))
        top = max([deg] + [sum(t[0]) for comp in coeffs for t in comp])
        comps = []
        for comp in coeffs:
            P = np.zeros((top + 1,) * n, dtype=complex)
            for idx, (re, im) in comp:
                if len(idx) != n:
                    raise ValueError("monomial exponent length must equal n")
                P[tuple(idx)] += re + 1j * im
            comps.append(P)
        F = dense(comps)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if "degree" in spec and int(spec["degree"]) != F.d:
        raise ValueError(f"declared degree {spec['degree']} does not match coefficients (degree {F.d})")
    return F


# --- evaluation --------------------------------------------------------------

def _horner_dense(P, Z):
    """Evaluate stacked dense arrays P (K, (d+1)^n) at points Z (N, n) -> (N, K)."""
    N, n = Z.shape
    C = np.broadcast_to(P, (N,) + P.shape)
    for a in range(n - 1, -1, -1):
        x = Z[:, a].reshape((N,) + (1,) * (C.ndim - 2))
        acc = C[..., -1]
        for i in range(C.shape[-1] - 2, -1, -1):
            acc = acc * x + C[..., i]
        C = acc
    return C


_SPLITTER = 134217729.0


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _two_prod(a, b):
    p = a * b
    t = _SPLITTER * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLITTER * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _horner_dense_compensated(P, Z):
    """Compensated (error-free transformation) variant of :func:`_horner_dense`."""
    N, n = Z.shape
    Cr = np.broadcast_to(P.real, (N,) + P.shape)
    Ci = np.broadcast_to(P.imag, (N,) + P.shape)
    Er = np.zeros_like(Cr)
    Ei = np.zeros_like(Ci)
    for a in range(n - 1, -1, -1):
        shape = (N,) + (1,) * (Cr.ndim - 2)
        xr = Z[:, a].real.reshape(shape)
        xi = Z[:, a].imag.reshape(shape)
        sr, si = Cr[..., -1], Ci[..., -1]
        er, ei = Er[..., -1], Ei[..., -1]
        for k in range(Cr.shape[-1] - 2, -1, -1):
            p1, e1 = _two_prod(sr, xr)
            p2, e2 = _two_prod(si, xi)
            re, e3 = _two_sum(p1, -p2)
            p3, e4 = _two_prod(sr, xi)
            p4, e5 = _two_prod(si, xr)
            im, e6 = _two_sum(p3, p4)
            sr, e7 = _two_sum(re, Cr[..., k])
            si, e8 = _two_sum(im, Ci[..., k])
            er, ei = (er * xr - ei * xi + (e1 - e2 + e3 + e7 + Er[..., k]),
                      er * xi + ei * xr + (e4 + e5 + e6 + e8 + Ei[..., k]))
        Cr, Ci, Er, Ei = sr, si, er, ei
    return (Cr + Er) + 1j * (Ci + Ei)


def _points(F, z):
    Z = np.asarray(z, dtype=complex)
    single = Z.ndim <= 1
    Z = Z.reshape(1, -1) if single else Z
    if Z.ndim != 2 or Z.shape[-1] != F.n:
        raise ValueError(f"point dimension {Z.shape[-1]} does not match map dimension {F.n}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("points must be finite")
    return Z, single


def evaluate(F, z):
    """F(z) for a point of shape (n,) or a batch of shape (N, n)."""
    Z, single = _points(F, z)
    out = _horner_dense_compensated(F._stack, Z) if F.compensated else _horner_dense(F._stack, Z)
    return out[0] if single else out


def evaluate_scaled(F, U, log_norm):
    """e^{-d L} F(e^{L} u) for unit directions U (N, n) and log-norms L (N,).

    Lets orbits be continued in (direction, log-norm) form long after the
    plain coordinates would overflow.
    """
    gap = F.degree_grid - F.d
    w = np.exp(np.multiply.outer(log_norm, np.minimum(gap, 0))) * (gap <= 0)
    C = F._stack[None] * w[:, None]
    N, n = U.shape
    for a in range(n - 1, -1, -1):
        x = U[:, a].reshape((N,) + (1,) * (C.ndim - 2))
        acc = C[..., -1]
        for i in range(C.shape[-1] - 2, -1, -1):
            acc = acc * x + C[..., i]
        C = acc
    return C


def jacobian(F, z):
    """Complex Jacobian DF(z), shape (n, n) or (N, n, n)."""
    Z, single = _points(F, z)
    J = _horner_dense(F._jstack, Z).reshape(-1, F.n, F.n)
    return J[0] if single else J


# --- regularity ----------------------------------------------------------------

@dataclass(frozen=True)
class Regularity:
    regular: bool
    sampled: bool
    leading_min: float


def _top_stack(F):
    return F._stack * (F.degree_grid == F.d)


def _sampled_sphere_min(F, n_samples=20000, n_refine=8):
    top = _top_stack(F)
    n = F.n
    rng = np.random.default_rng(0xC0FFEE)
    U = rng.normal(size=(n_samples, n)) + 1j * rng.normal(size=(n_samples, n))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    vals = np.linalg.norm(_horner_dense(top, U), axis=1)
    best = float(vals.min())

    def resid(x):
        u = (x[:n] + 1j * x[n:])
        u = u / np.linalg.norm(u)
        h = _horner_dense(top, u[None])[0]
        return np.concatenate([h.real, h.imag])

    for i in np.argsort(vals)[:n_refine]:
        x0 = np.concatenate([U[i].real, U[i].imag])
        sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=2000)
        best = min(best, float(np.linalg.norm(resid(sol.x))))
    return best


def leading_form_min(F):
    """Cached wrapper of :func:`_leading_form_min`."""
    cache = F.__dict__.setdefault("_cache", {})
    if "lead" not in cache:
        cache["lead"] = _leading_form_min(F)
    return cache["lead"]


def _leading_form_min(F):
    """min over the unit sphere of ||H(u)||, H the top-degree homogeneous part.

    Returns ``(value, sampled)``; the value is exact for one-variable and
    product maps and obtained by sphere sampling plus local refinement
    otherwise.
    """
    if F.kind == "oned":
        return float(abs(F.factors[0][-1])), False
    if F.kind == "product":
        a = np.array([abs(c[-1]) for c in F.factors])
        if F.d == 1:
            return float(a.min()), False
        # minimise sum a_k^2 t_k^d subject to sum t_k = 1, t_k = |z_k|^2
        t = a ** (-2.0 / (F.d - 1))
        t /= t.sum()
        return float(np.sqrt(np.sum(a ** 2 * t ** F.d))), False
    return _sampled_sphere_min(F), True


def check_regularity(F):
    """Decide whether F extends holomorphically to CP^n."""
    cache = F.__dict__.setdefault("_cache", {})
    if "reg" not in cache:
        cache["reg"] = _check_regularity(F)
    return cache["reg"]


def _check_regularity(F):
    if F.kind == "oned":
        return Regularity(True, False, leading_form_min(F)[0])
    if F.kind == "product":
        return Regularity(all(c.size - 1 == F.d for c in F.factors), False, leading_form_min(F)[0])
    if F.kind == "skew2d":
        ok = F.fiber[0, F.d] != 0
        return Regularity(bool(ok), False, leading_form_min(F)[0] if ok else 0.0)
    m = leading_form_min(F)[0]
    return Regularity(m > COMMON_ZERO_TOL, True, m)


def is_regular(F):
    return check_regularity(F).regular


# --- fibers --------------------------------------------------------------------

def _fiber_poly_w(F, z, t2):
    """Coefficients in w of q(z, w) - t2 for each z (N,) -> (N, d+1)."""
    q = F.fiber
    d = F.d
    b = np.zeros((z.size, d + 1), dtype=complex)
    for j in range(d + 1):
        b[:, j] = np.polynomial.polynomial.polyval(z, q[:, j])
    b[:, 0] -= t2
    return b


def _shifted(c, t):
    C = np.broadcast_to(c, (t.size, c.size)).copy()
    C[:, 0] -= t
    return C


def _require_inverse(F):
    if not F.supports_inverse:
        raise NotImplementedError(f"inverse branches are not available for {F.kind!r} maps")
    if F.kind == "skew2d" and F.fiber[0, F.d] == 0:
        raise ValueError("skew product is not regular: fibers are not of full degree")


def _check_residual(F, X, T):
    R = np.abs(evaluate(F, X.reshape(-1, F.n)) - np.repeat(T, X.shape[0] // T.shape[0], axis=0))
    res = np.linalg.norm(R, axis=-1)
    lim = 1e-8 * (1 + np.linalg.norm(np.repeat(T, X.shape[0] // T.shape[0], axis=0), axis=-1))
    if np.any(res >= lim):
        raise RootFindError("preimage residual exceeds tolerance; coefficients ill-conditioned")


def fiber_batch(F, targets):
    """All d^n preimages of each target; shape (N, d^n, n)."""
    _require_inverse(F)
    T = np.atleast_2d(np.asarray(targets, dtype=complex))
    N, d, n = T.shape[0], F.d, F.n
    if F.kind in ("oned", "product"):
        per = [polyroots(_shifted(F.factors[k], T[:, k])) for k in range(n)]  # each (N, d)
        grids = np.meshgrid(*[np.arange(d)] * n, indexing="ij")
        X = np.stack([per[k][:, grids[k].ravel()] for k in range(n)], axis=-1)
    else:
        zr = polyroots(_shifted(F.factors[0], T[:, 0]))  # (N, d)
        wr = polyroots(_fiber_poly_w(F, zr.ravel(), np.repeat(T[:, 1], d))).reshape(N, d, d)
        X = np.stack([np.repeat(zr, d, axis=1), wr.reshape(N, d * d)], axis=-1)
    _check_residual(F, X.reshape(-1, n), T)
    return X


def preimages(F, target):
    """All solutions of F(x) = target listed with multiplicity, shape (d^n, n)."""
    T = np.asarray(target, dtype=complex).reshape(1, -1)
    if T.shape[1] != F.n:
        raise ValueError("target dimension does not match map dimension")
    return fiber_batch(F, T)[0]


def branch_preimage(F, targets, u):
    """The preimage of each target with multiset index floor(u * d^n).

    ``u`` holds uniforms in [0, 1), one per target; index digits (base d)
    pick the root in each successive univariate solve, so every element of
    the fiber (with multiplicity) is chosen with probability d^{-n}.
    """
    _require_inverse(F)
    T = np.atleast_2d(np.asarray(targets, dtype=complex))
    N, d, n = T.shape[0], F.d, F.n
    idx = np.minimum((np.asarray(u) * d ** n).astype(np.int64), d ** n - 1)
    digits = [(idx // d ** (n - 1 - k)) % d for k in range(n)]
    rows = np.arange(N)
    X = np.empty((N, n), dtype=complex)
    if F.kind in ("oned", "product"):
        for k in range(n):
            X[:, k] = polyroots(_shifted(F.factors[k], T[:, k]))[rows, digits[k]]
    else:
        z = polyroots(_shifted(F.factors[0], T[:, 0]))[rows, digits[0]]
        w = polyroots(_fiber_poly_w(F, z, T[:, 1]))[rows, digits[1]]
        X[:, 0], X[:, 1] = z, w
    _check_residual(F, X, T)
    return X
