"""Deterministic tensor quadrature on the half-space, its boundary and spheres.

Each half-line coordinate is compactified by ``x = u / (1 - u)``; the
compact variable is graded towards the far end, ``u = 1 - (1 - s)^m``, and
``s`` carries Gauss-Legendre nodes.  Grading pushes the corner singularities
produced by slowly (polynomially) decaying integrands down to the point where
Gauss-Legendre converges quickly.  Full lines are split at the origin so that
kinks of the form ``|x|^k`` sit on a panel boundary.

Refinement walks the node table ``LEVEL_NODES``; the error estimate of level
L is ``|I_L - I_{L-1}| / |I_L|``, taken component-wise and maximised for
vector integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "QuadratureError",
    "NonConvergenceError",
    "IntegrabilityError",
    "LEVEL_NODES",
    "DEFAULT_TOL",
    "QuadratureScheme",
    "QuadResult",
    "default_scheme",
    "halfline_rule",
    "line_rule",
    "halfspace_nodes",
    "halfspace_integrate",
    "boundary_integrate",
    "integrate_at_level",
    "sphere_rule",
    "sphere_integrate",
]


class QuadratureError(ArithmeticError):
    """Integrand produced a non-finite value at a node."""


class NonConvergenceError(QuadratureError):
    def __init__(self, msg: str, value, err: float):
        super().__init__(msg)
        self.value = value
        self.err = err


class IntegrabilityError(ValueError):
    """Declared decay does not make the integral absolutely convergent."""


LEVEL_NODES = (8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256)

DEFAULT_TOL = {1: 1e-10, 2: 1e-8, 3: 1e-6, 4: 1e-4}
_DEFAULT_LEVEL = {1: 5, 2: 5, 3: 5, 4: 2}
_DEFAULT_MAX = {1: 10, 2: 10, 3: 8, 4: 5}

_CHUNK = 1 << 19


@dataclass(frozen=True)
class QuadratureScheme:
    level: int
    tol_rel: float
    max_level: int
    grading: int = 4
    scale: float = 1.0

    def __post_init__(self):
        if not 1 <= self.level <= self.max_level < len(LEVEL_NODES):
            raise ValueError(f"need 1 <= level <= max_level < {len(LEVEL_NODES)}")
        if self.scale <= 0 or self.grading < 1:
            raise ValueError("scale must be positive and grading >= 1")

    def nodes_at(self, level: int) -> int:
        return LEVEL_NODES[level]

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "tol_rel": self.tol_rel,
            "max_level": self.max_level,
            "grading": self.grading,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuadratureScheme":
        return cls(**d)


def default_scheme(n: int, **overrides) -> QuadratureScheme:
    """Default scheme for an n-dimensional half-space."""
    base = QuadratureScheme(
        level=_DEFAULT_LEVEL[n], tol_rel=DEFAULT_TOL[n], max_level=_DEFAULT_MAX[n]
    )
    return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | float
    err: float
    level: int
    nodes: int

    def __iter__(self):
        yield self.value
        yield self.err


@lru_cache(maxsize=64)
def halfline_rule(N: int, grading: int = 4, scale: float = 1.0):
    """Nodes and weights on [0, inf)."""
    s, w = leggauss(N)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    one_minus_u = (1.0 - s) ** grading
    u = 1.0 - one_minus_u
    du = grading * (1.0 - s) ** (grading - 1)
    x = u / one_minus_u
    dx = du / one_minus_u**2
    x = scale * x
    wx = scale * w * dx
    x.flags.writeable = False
    wx.flags.writeable = False
    return x, wx


@lru_cache(maxsize=64)
def line_rule(N: int, grading: int = 4, scale: float = 1.0):
    """Nodes and weights on the real line, split at the origin."""
    x, w = halfline_rule(N, grading, scale)
    xs = np.concatenate([-x[::-1], x])
    ws = np.concatenate([w[::-1], w])
    xs.flags.writeable = False
    ws.flags.writeable = False
    return xs, ws


def halfspace_nodes(
    n: int, N: int, grading: int = 4, scale: float = 1.0, boundary: bool = False, chunk: int | None = None
):
    """Yield (Z, W) chunks covering the tensor grid.

    For ``boundary=True`` the grid lives on {t = 0} and Z still has n
    columns (first column zero).
    """
    if n < 1 or n > 4:
        raise ValueError("dimension must be in 1..4")
    x, wx = line_rule(N, grading, scale)
    if boundary:
        tax, wt = np.zeros(1), np.ones(1)
    else:
        tax, wt = halfline_rule(N, grading, scale)
    m = n - 1
    if m == 0:
        yield tax[:, None].copy(), wt.copy()
        return
    # x-block of the tensor grid, shared by every t slice
    xs = np.meshgrid(*([x] * m), indexing="ij")
    ws = np.meshgrid(*([wx] * m), indexing="ij")
    X = np.stack([g.ravel() for g in xs], axis=-1)
    WX = np.prod(np.stack([g.ravel() for g in ws], axis=-1), axis=-1)
    per = max(1, (chunk or _CHUNK) // len(X))
    for i0 in range(0, len(tax), per):
        tt = tax[i0 : i0 + per]
        Z = np.empty((len(tt), len(X), n))
        Z[:, :, 0] = tt[:, None]
        Z[:, :, 1:] = X[None, :, :]
        W = wt[i0 : i0 + per, None] * WX[None, :]
        yield Z.reshape(-1, n), W.ravel()


def _integrate_level(func, n, N, scheme, boundary, chunk=None):
    total = None
    for Z, W in halfspace_nodes(n, N, scheme.grading, scheme.scale, boundary, chunk):
        vals = np.asarray(func(Z), dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals.reshape(len(Z), -1)))[0, 0]
            raise QuadratureError(f"integrand is not finite at node {Z[bad].tolist()}")
        part = np.tensordot(W, vals, axes=(0, 0))
        total = part if total is None else total + part
    return total


def _rel_err(cur, prev, scale=None) -> float:
    """Largest component-wise relative change.

    ``scale`` overrides the per-component reference magnitude (or maps the
    current estimate to one); components whose reference is zero must not
    change at all.
    """
    cur = np.atleast_1d(cur)
    prev = np.atleast_1d(prev)
    if callable(scale):
        scale = scale(cur)
    ref = np.abs(cur) if scale is None else np.broadcast_to(np.abs(np.asarray(scale, float)), cur.shape)
    diff = np.abs(cur - prev)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(ref > 0, diff / np.where(ref > 0, ref, 1.0), np.where(diff == 0, 0.0, np.inf))
    return float(np.max(rel))


def _check_decay(decay, dim, what):
    if decay is None:
        return
    decay = np.atleast_1d(np.asarray(decay, dtype=float))
    if np.any(decay <= dim):
        raise IntegrabilityError(
            f"{what}: declared decay {decay.min():g} does not exceed dimension {dim}"
        )


def _shifted(func, n, center):
    """func with the x-grid moved to ``center``; exact since the x-integral runs over all of R^{n-1}."""
    if center is None:
        return func
    shift = np.zeros(n)
    shift[1:] = np.asarray(center, float).reshape(n - 1)
    if not shift.any():
        return func
    return lambda Z: func(Z + shift)


def _adaptive(func, n, scheme, boundary, dim, err_scale=None, chunk=None):
    if not scheme.tol_rel > 0:
        raise NonConvergenceError("tol_rel must be positive", None, math.inf)
    L = scheme.level
    prev = _integrate_level(func, n, scheme.nodes_at(L - 1), scheme, boundary, chunk)
    cur = _integrate_level(func, n, scheme.nodes_at(L), scheme, boundary, chunk)
    err = _rel_err(cur, prev, err_scale)
    while err > scheme.tol_rel and L < scheme.max_level:
        L += 1
        prev, cur = cur, _integrate_level(func, n, scheme.nodes_at(L), scheme, boundary, chunk)
        err = _rel_err(cur, prev, err_scale)
    N = scheme.nodes_at(L)
    nodes = (2 * N) ** (n - 1) * (1 if boundary else N)
    if err > scheme.tol_rel:
        raise NonConvergenceError(
            f"{dim}-dimensional integral did not reach tol {scheme.tol_rel:g} "
            f"(err {err:.3g} at level {L})",
            cur,
            err,
        )
    value = float(cur) if np.ndim(cur) == 0 else cur
    return QuadResult(value, err, L, nodes)


def halfspace_integrate(
    func: Callable[[np.ndarray], np.ndarray],
    n: int,
    scheme: QuadratureScheme | None = None,
    decay=None,
    err_scale=None,
    chunk: int | None = None,
    center=None,
) -> QuadResult:
    """Integrate ``func`` over {(t, x): t >= 0, x in R^{n-1}}.

    ``func`` maps an (N, n) array of points to (N,) or (N, k) values.
    ``decay`` is the declared polynomial decay rate of |func| (scalar or
    one per component); it must exceed n.  Errors are relative per
    component unless ``err_scale`` supplies reference magnitudes.  ``chunk``
    caps the nodes per call of ``func`` (wide integrands want smaller chunks).
    ``center`` moves the x-grid, and with it the panel split, onto a point
    where the integrand is symmetric or kinked.
    """
    scheme = scheme or default_scheme(n)
    _check_decay(decay, n, "half-space integrand")
    return _adaptive(_shifted(func, n, center), n, scheme, False, n, err_scale, chunk)


def integrate_at_level(
    func: Callable[[np.ndarray], np.ndarray],
    n: int,
    level: int,
    scheme: QuadratureScheme | None = None,
    boundary: bool = False,
    chunk: int | None = None,
    center=None,
):
    """Single-level tensor sum (no error estimate); for iterations that need a fixed discretisation."""
    scheme = scheme or default_scheme(n)
    return _integrate_level(_shifted(func, n, center), n, LEVEL_NODES[level], scheme, boundary, chunk)


def boundary_integrate(
    func: Callable[[np.ndarray], np.ndarray],
    n: int,
    scheme: QuadratureScheme | None = None,
    decay=None,
    err_scale=None,
    center=None,
) -> QuadResult:
    """Integrate ``func`` over the boundary {t = 0}, a copy of R^{n-1}.

    Points are passed with n columns, first column zero.
    """
    if n < 2:
        raise ValueError("boundary of the half-line is a point")
    scheme = scheme or default_scheme(n)
    _check_decay(decay, n - 1, "boundary integrand")
    return _adaptive(_shifted(func, n, center), n, scheme, True, n - 1, err_scale)


# ---------------------------------------------------------------------------
# spheres

_CIRCLE_NODES = (16, 32, 64, 128, 256, 512, 1024, 2048)
_LEBEDEV_DEGREES = (11, 17, 23, 29, 35, 41, 47, 53, 59, 65, 71, 77, 83)
_S3_NODES = (4, 6, 8, 12, 16, 24, 32, 48)


@lru_cache(maxsize=64)
def sphere_rule(m: int, level: int = 3):
    """Nodes (k, m+1) and weights of a rule on the unit sphere S^m.

    S^0 uses counting measure on {-1, +1}; S^1 the trapezoid rule; S^2 a
    Lebedev rule (a spherical t-design family); S^3 a product rule in
    hyperspherical coordinates.
    """
    if m == 0:
        U, w = np.array([[1.0], [-1.0]]), np.ones(2)
    elif m == 1:
        N = _CIRCLE_NODES[level]
        phi = 2.0 * np.pi * np.arange(N) / N
        U = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        w = np.full(N, 2.0 * np.pi / N)
    elif m == 2:
        from scipy.integrate import lebedev_rule

        x, w = lebedev_rule(_LEBEDEV_DEGREES[level])
        U, w = np.ascontiguousarray(x.T), np.asarray(w, dtype=float)
    elif m == 3:
        k = _S3_NODES[level]
        # psi in [0, pi] with weight sin^2, theta via cos-Gauss, phi trapezoid
        # sin^2 psi dpsi = sqrt(1 - c^2) dc: Gauss-Chebyshev of the second kind
        j = np.arange(1, 2 * k + 1)
        psi = j * np.pi / (2 * k + 1)
        wpsi = np.pi / (2 * k + 1) * np.sin(psi) ** 2
        ct, wt = leggauss(2 * k)
        st = np.sqrt(1.0 - ct**2)
        phi = 2.0 * np.pi * np.arange(4 * k) / (4 * k)
        wphi = np.full(4 * k, 2.0 * np.pi / (4 * k))
        P, T, F = np.meshgrid(np.arange(2 * k), np.arange(2 * k), np.arange(4 * k), indexing="ij")
        sp = np.sin(psi)[P]
        U = np.stack(
            [
                np.cos(psi)[P],
                sp * ct[T],
                sp * st[T] * np.cos(phi)[F],
                sp * st[T] * np.sin(phi)[F],
            ],
            axis=-1,
        ).reshape(-1, 4)
        w = (wpsi[P] * wt[T] * wphi[F]).ravel()
    else:
        raise ValueError(f"unsupported sphere S^{m}")
    U.flags.writeable = False
    w.flags.writeable = False
    return U, w


def sphere_levels(m: int) -> int:
    return {0: 1, 1: len(_CIRCLE_NODES), 2: len(_LEBEDEV_DEGREES), 3: len(_S3_NODES)}[m]


def sphere_integrate(
    func: Callable[[np.ndarray], np.ndarray],
    m: int,
    level: int = 3,
    tol_rel: float = 1e-10,
    max_level: int | None = None,
) -> QuadResult:
    """Integrate ``func`` over S^m with level doubling."""
    if m not in (0, 1, 2, 3):
        raise ValueError(f"unsupported sphere S^{m}")
    if m == 0:
        U, w = sphere_rule(0)
        val = np.tensordot(w, np.asarray(func(U), dtype=float), axes=(0, 0))
        return QuadResult(float(val) if np.ndim(val) == 0 else val, 0.0, 0, 2)
    top = sphere_levels(m) - 1 if max_level is None else max_level
    level = max(1, min(level, top))

    def at(L):
        U, w = sphere_rule(m, L)
        vals = np.asarray(func(U), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("sphere integrand is not finite at a node")
        return np.tensordot(w, vals, axes=(0, 0))

    prev, cur = at(level - 1), at(level)
    err = _rel_err(cur, prev)
    L = level
    while err > tol_rel and L < top:
        L += 1
        prev, cur = cur, at(L)
        err = _rel_err(cur, prev)
    if err > tol_rel:
        raise NonConvergenceError(f"sphere integral err {err:.3g} > {tol_rel:g}", cur, err)
    return QuadResult(float(cur) if np.ndim(cur) == 0 else cur, err, L, len(sphere_rule(m, L)[1]))
