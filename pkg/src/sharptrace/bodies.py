"""Origin-symmetric convex bodies: gauges, support functions, polars,
volumes and L_p centroid bodies.

Three representations are supported:

``ellipsoid``    {x : x^T M x <= 1}, M symmetric positive definite.
``polytope``     convex hull of a vertex list closed under negation.
``gauge_table``  radial function sampled on the nodes of a sphere rule,
                 optionally with support values at the same nodes and
                 exact gauge/support callables for in-process use.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import roots_jacobi

from .constants import centroid_const, omega
from .quadrature import sphere_rule

__all__ = [
    "BodyError",
    "ConvexBody",
    "table_rule",
    "volume",
    "centroid_body",
    "centroid_support",
    "support_to_radial",
]


class BodyError(ValueError):
    pass


# gauge_table resolution per dimension: sphere (m, level)
_TABLE_RULE = {1: (0, 0), 2: (1, 4), 3: (2, 7), 4: (3, 4)}


def table_rule(dim: int):
    """Default table directions and weights (256 on S^1, 974 Lebedev nodes on S^2)."""
    m, level = _TABLE_RULE[dim]
    return sphere_rule(m, level)


def _as_rows(X, dim):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != dim:
        raise BodyError(f"expected vectors of length {dim}, got shape {X.shape}")
    return X


class _TrigInterp:
    """Trigonometric interpolation of samples on equispaced circle nodes."""

    def __init__(self, U, values):
        phi = np.arctan2(U[:, 1], U[:, 0])
        order = np.argsort(np.mod(phi, 2 * np.pi))
        phi = np.mod(phi[order], 2 * np.pi)
        N = len(phi)
        if not np.allclose(phi, phi[0] + 2 * np.pi * np.arange(N) / N, atol=1e-9):
            raise BodyError("circle table must be equispaced")
        self.phi0 = phi[0]
        self.coef = np.fft.rfft(np.asarray(values, dtype=float)[order]) / N
        self.N = N

    def __call__(self, V):
        psi = np.arctan2(V[..., 1], V[..., 0]) - self.phi0
        k = np.arange(len(self.coef))
        c = self.coef.copy()
        if self.N % 2 == 0:
            c[-1] *= 0.5
        c[1:] *= 2.0
        return np.real(np.exp(1j * np.multiply.outer(psi, k)) @ c)


class _SphHarmInterp:
    """Spherical-harmonic projection of samples on a Lebedev rule."""

    def __init__(self, U, w, values, degree):
        self.L = degree
        Y = self._basis(U)
        self.coef = np.einsum("lmk,k->lm", np.conj(Y), w * np.asarray(values, dtype=float))

    def _basis(self, V):
        from scipy.special import sph_harm_y_all

        th, ph = self._angles(V)
        L = self.L
        Y = sph_harm_y_all(L, L, th, ph)
        # entries with |m| > l are not harmonics
        l = np.arange(L + 1)[:, None]
        m = np.arange(2 * L + 1)[None, :]
        m = np.where(m > L, m - (2 * L + 1), m)
        return np.where((np.abs(m) <= l)[..., None], Y, 0.0)

    @staticmethod
    def _angles(V):
        r = np.linalg.norm(V, axis=-1)
        th = np.arccos(np.clip(V[..., 2] / r, -1.0, 1.0))
        ph = np.arctan2(V[..., 1], V[..., 0])
        return th, ph

    def __call__(self, V):
        V = np.asarray(V, dtype=float)
        flat = V.reshape(-1, 3)
        out = np.empty(len(flat))
        step = max(1, (1 << 22) // ((self.L + 1) * (2 * self.L + 1)))
        for i0 in range(0, len(flat), step):
            Y = self._basis(flat[i0 : i0 + step])
            out[i0 : i0 + step] = np.einsum("lm,lmk->k", self.coef, Y).real
        return out.reshape(V.shape[:-1])


def _make_interp(U, w, values):
    dim = U.shape[1]
    if dim == 1:
        v = dict(zip(U[:, 0].tolist(), np.asarray(values, dtype=float).tolist()))
        return lambda V: np.where(V[..., 0] >= 0, v.get(1.0, v[max(v)]), v.get(-1.0, v[min(v)]))
    if dim == 2:
        return _TrigInterp(U, values)
    if dim == 3:
        # exact projection needs 2L <= rule degree
        deg = {len(sphere_rule(2, k)[1]): d for k, d in enumerate((11, 17, 23, 29, 35, 41, 47, 53, 59, 65, 71, 77, 83))}
        L = deg.get(len(U), 29) // 2
        return _SphHarmInterp(U, w, values, L)
    raise BodyError(f"no table interpolation in dimension {dim}")


class ConvexBody:
    """Origin-symmetric convex body in R^dim (immutable)."""

    def __init__(
        self,
        dim: int,
        kind: str,
        *,
        matrix=None,
        vertices=None,
        directions=None,
        radii=None,
        weights=None,
        support_values=None,
        gauge_fn: Callable | None = None,
        support_fn: Callable | None = None,
    ):
        self.dim = int(dim)
        self.kind = kind
        self._gauge_fn = gauge_fn
        self._support_fn = support_fn
        if kind == "ellipsoid":
            M = np.array(matrix, dtype=float).reshape(dim, dim)
            if not np.allclose(M, M.T, atol=1e-12 * np.abs(M).max()):
                raise BodyError("ellipsoid matrix must be symmetric")
            evals = np.linalg.eigvalsh(M)
            if evals.min() <= 0:
                raise BodyError("ellipsoid matrix must be positive definite")
            self.matrix = M
            self._Minv = np.linalg.inv(M)
        elif kind == "polytope":
            V = np.array(vertices, dtype=float).reshape(-1, dim)
            V = np.unique(np.round(np.concatenate([V, -V]), 15), axis=0)
            self.vertices = V
            if dim == 1:
                self._facets = np.array([[1.0], [-1.0]]) / np.abs(V).max()
                self._hull = None
            else:
                hull = ConvexHull(V)
                off = hull.equations[:, -1]
                if np.any(off >= -1e-12):
                    raise BodyError("origin must be an interior point of the polytope")
                self._facets = hull.equations[:, :-1] / (-off[:, None])
                self._hull = hull
        elif kind == "gauge_table":
            U = np.array(directions, dtype=float).reshape(-1, dim)
            U = U / np.linalg.norm(U, axis=1, keepdims=True)
            rho = np.array(radii, dtype=float).ravel()
            if len(rho) != len(U) or np.any(~np.isfinite(rho)) or np.any(rho <= 0):
                raise BodyError("gauge table radii must be positive and finite, one per direction")
            self.directions = U
            self.radii = rho
            self.weights = None if weights is None else np.array(weights, dtype=float).ravel()
            self.support_values = (
                None if support_values is None else np.array(support_values, dtype=float).ravel()
            )
            self._rad_interp = None
            self._sup_interp = None
        else:
            raise BodyError(f"unknown body kind {kind!r}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def ellipsoid(cls, M) -> "ConvexBody":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls(M.shape[0], "ellipsoid", matrix=M)

    @classmethod
    def ball(cls, dim: int, radius: float = 1.0) -> "ConvexBody":
        return cls.ellipsoid(np.eye(dim) / radius**2)

    @classmethod
    def polytope(cls, vertices) -> "ConvexBody":
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        return cls(V.shape[1], "polytope", vertices=V)

    @classmethod
    def from_support(cls, support_fn: Callable, dim: int, *, gauge_fn=None, rule=None) -> "ConvexBody":
        """Tabulate a body given by an exact (vectorised) support function."""
        U, w = rule if rule is not None else table_rule(dim)
        hv = np.asarray(support_fn(U), dtype=float)
        rho = support_to_radial(support_fn, U, hv) if gauge_fn is None else 1.0 / gauge_fn(U)
        return cls(
            dim,
            "gauge_table",
            directions=U,
            radii=rho,
            weights=w,
            support_values=hv,
            gauge_fn=gauge_fn,
            support_fn=support_fn,
        )

    @classmethod
    def from_gauge(cls, gauge_fn: Callable, dim: int, *, support=True, rule=None) -> "ConvexBody":
        """Tabulate a body given by an exact (vectorised) gauge."""
        U, w = rule if rule is not None else table_rule(dim)
        rho = 1.0 / np.asarray(gauge_fn(U), dtype=float)
        body = cls(dim, "gauge_table", directions=U, radii=rho, weights=w, gauge_fn=gauge_fn)
        if support:
            hv = 1.0 / support_to_radial(gauge_fn, U, 1.0 / rho, polar=True)
            body.support_values = hv
        return body

    # -- evaluation -------------------------------------------------------

    def gauge(self, X) -> np.ndarray:
        """Minkowski functional ||x||_K, vectorised over rows."""
        X = _as_rows(X, self.dim)
        if self.kind == "ellipsoid":
            return np.sqrt(np.maximum(((X @ self.matrix) * X).sum(axis=-1), 0.0))
        if self.kind == "polytope":
            return np.max(X @ self._facets.T, axis=-1)
        if self._gauge_fn is not None:
            return np.asarray(self._gauge_fn(X), dtype=float)
        r = np.linalg.norm(X, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        U = X / safe[..., None]
        out = r / self._radial_table(U)
        return np.where(r > 0, out, 0.0)

    def support(self, Y, exact: bool = True) -> np.ndarray:
        """Support function h_K(y), vectorised over rows."""
        Y = _as_rows(Y, self.dim)
        if self.kind == "ellipsoid":
            return np.sqrt(np.maximum(((Y @ self._Minv) * Y).sum(axis=-1), 0.0))
        if self.kind == "polytope":
            return np.max(Y @ self.vertices.T, axis=-1)
        if exact and self._support_fn is not None:
            return np.asarray(self._support_fn(Y), dtype=float)
        if self.support_values is None:
            raise BodyError("gauge table has no support values")
        if self._sup_interp is None:
            self._sup_interp = _make_interp(self.directions, self.weights, self.support_values)
        r = np.linalg.norm(Y, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        return np.where(r > 0, r * self._sup_interp(Y / safe[..., None]), 0.0)

    def radial(self, U) -> np.ndarray:
        """Radial function 1/||u||_K on unit vectors."""
        return 1.0 / self.gauge(U)

    def _radial_table(self, U):
        if self._rad_interp is None:
            self._rad_interp = _make_interp(self.directions, self.weights, np.log(self.radii))
        return np.exp(self._rad_interp(U))

    def _table_radial_of_polar(self, U):
        return 1.0 / self.support(U)

    # -- transformations --------------------------------------------------

    def polar(self) -> "ConvexBody":
        """Polar body K° = {x : <x, y> <= 1 for all y in K}."""
        if self.kind == "ellipsoid":
            return ConvexBody.ellipsoid(self._Minv)
        if self.kind == "polytope":
            return ConvexBody.polytope(self._facets)
        if self.support_values is None:
            raise BodyError("polar of a gauge table needs support values")
        return ConvexBody(
            self.dim,
            "gauge_table",
            directions=self.directions,
            radii=1.0 / self.support_values,
            weights=self.weights,
            support_values=1.0 / self.radii,
            gauge_fn=self._support_fn,
            support_fn=self._gauge_fn,
        )

    def linear_image(self, A) -> "ConvexBody":
        """The body A K for invertible A (ellipsoids and polytopes)."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        Ai = np.linalg.inv(A)
        if self.kind == "ellipsoid":
            return ConvexBody.ellipsoid(Ai.T @ self.matrix @ Ai)
        if self.kind == "polytope":
            return ConvexBody.polytope(self.vertices @ A.T)
        g, h = self._gauge_fn, self._support_fn
        gauge_fn = None if g is None else (lambda X: g(X @ Ai.T))
        support_fn = None if h is None else (lambda Y: h(Y @ A))
        if gauge_fn is not None:
            return ConvexBody.from_gauge(gauge_fn, self.dim, rule=(self.directions, self.weights))
        if support_fn is not None:
            return ConvexBody.from_support(support_fn, self.dim, rule=(self.directions, self.weights))
        raise BodyError("linear image of a bare gauge table is not supported")

    def scaled(self, c: float) -> "ConvexBody":
        """The dilate c K, c > 0."""
        if c <= 0:
            raise BodyError("scale must be positive")
        if self.kind == "ellipsoid":
            return ConvexBody.ellipsoid(self.matrix / c**2)
        if self.kind == "polytope":
            return ConvexBody.polytope(self.vertices * c)
        g, h = self._gauge_fn, self._support_fn
        return ConvexBody(
            self.dim,
            "gauge_table",
            directions=self.directions,
            radii=self.radii * c,
            weights=self.weights,
            support_values=None if self.support_values is None else self.support_values * c,
            gauge_fn=None if g is None else (lambda X: g(X) / c),
            support_fn=None if h is None else (lambda Y: h(Y) * c),
        )

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "ellipsoid":
            rep = {"kind": "ellipsoid", "matrix": self.matrix.tolist()}
        elif self.kind == "polytope":
            rep = {"kind": "polytope", "vertices": self.vertices.tolist()}
        else:
            rep = {
                "kind": "gauge_table",
                "directions": self.directions.tolist(),
                "radii": self.radii.tolist(),
            }
            if self.weights is not None:
                rep["weights"] = self.weights.tolist()
            if self.support_values is not None:
                rep["support"] = self.support_values.tolist()
        return {"dim": self.dim, "repr": rep}

    @classmethod
    def from_dict(cls, d: dict) -> "ConvexBody":
        rep = d["repr"]
        kind = rep["kind"]
        if kind == "ellipsoid":
            return cls(d["dim"], kind, matrix=rep["matrix"])
        if kind == "polytope":
            return cls(d["dim"], kind, vertices=rep["vertices"])
        return cls(
            d["dim"],
            kind,
            directions=rep["directions"],
            radii=rep["radii"],
            weights=rep.get("weights"),
            support_values=rep.get("support"),
        )

    def __repr__(self):
        return f"ConvexBody(dim={self.dim}, kind={self.kind!r})"


# ---------------------------------------------------------------------------
# support -> radial conversion


def _tangent_basis(W):
    """Orthonormal bases (k, d, d-1) of the tangent spaces at unit vectors W."""
    k, d = W.shape
    M = np.concatenate([W[:, :, None], np.broadcast_to(np.eye(d), (k, d, d))], axis=2)
    Q, _ = np.linalg.qr(M)
    return Q[:, :, 1:d]


def support_to_radial(h: Callable, U, h_at_U=None, polar: bool = False, iters: int = 8) -> np.ndarray:
    """Radial function of K at unit vectors U from its support function h.

    ||u||_K = max_w <u, w> / h(w); the max is located on a candidate set and
    polished by batched Newton steps with finite-difference derivatives in
    tangent coordinates.  With ``polar=True`` the roles of gauge and support
    are swapped (the same maximisation yields h from a gauge).
    """
    U = np.asarray(U, dtype=float)
    k, d = U.shape
    if d == 1:
        # on S^0 both conversions reduce to the identity: rho_K = h_K and 1/h_K = ||.||_K
        return np.asarray(h(U), dtype=float)
    if h_at_U is None:
        h_at_U = np.asarray(h(U), dtype=float)
    # candidates: the directions themselves plus a denser rule
    m, level = _TABLE_RULE[d]
    C, _ = sphere_rule(m, min(level + 1, {1: 7, 2: 10, 3: 6}[m]))
    hc = np.asarray(h(C), dtype=float)
    cand = np.concatenate([U, C])
    hcand = np.concatenate([h_at_U, hc])
    best = np.empty(k)
    W = np.empty((k, d))
    for i0 in range(0, k, 512):
        G = (U[i0 : i0 + 512] @ cand.T) / hcand[None, :]
        j = np.argmax(G, axis=1)
        best[i0 : i0 + 512] = G[np.arange(len(j)), j]
        W[i0 : i0 + 512] = cand[j]

    def g(Wt):
        return np.einsum("ij,ij->i", U, Wt) / np.asarray(h(Wt), dtype=float)

    delta = 2e-3
    for it in range(iters):
        T = _tangent_basis(W)
        m1 = d - 1

        def at(alpha):
            Wt = W + np.einsum("kij,kj->ki", T, alpha)
            return Wt / np.linalg.norm(Wt, axis=1, keepdims=True)

        g0 = g(W)
        grad = np.empty((k, m1))
        hess = np.empty((k, m1, m1))
        E = np.eye(m1) * delta
        plus, minus = [], []
        for i in range(m1):
            gp = g(at(np.broadcast_to(E[i], (k, m1))))
            gm = g(at(np.broadcast_to(-E[i], (k, m1))))
            plus.append(gp)
            minus.append(gm)
            grad[:, i] = (gp - gm) / (2 * delta)
            hess[:, i, i] = (gp - 2 * g0 + gm) / delta**2
        for i in range(m1):
            for j in range(i + 1, m1):
                gpp = g(at(np.broadcast_to(E[i] + E[j], (k, m1))))
                gmm = g(at(np.broadcast_to(-E[i] - E[j], (k, m1))))
                gpm = g(at(np.broadcast_to(E[i] - E[j], (k, m1))))
                gmp = g(at(np.broadcast_to(-E[i] + E[j], (k, m1))))
                hess[:, i, j] = hess[:, j, i] = (gpp + gmm - gpm - gmp) / (4 * delta**2)
        # Newton step where the Hessian is negative definite, else a short ascent step
        step = np.zeros((k, m1))
        evals = np.linalg.eigvalsh(hess)
        ok = evals.max(axis=1) < 0
        if np.any(ok):
            step[ok] = -np.linalg.solve(hess[ok], grad[ok][..., None])[..., 0]
        step[~ok] = delta * grad[~ok] / np.maximum(np.linalg.norm(grad[~ok], axis=1, keepdims=True), 1e-300)
        nrm = np.linalg.norm(step, axis=1, keepdims=True)
        step = np.where(nrm > 0.1, step * 0.1 / np.maximum(nrm, 1e-300), step)
        Wn = at(step)
        gn = g(Wn)
        improve = gn >= g0
        W = np.where(improve[:, None], Wn, W)
        best = np.maximum(best, np.where(improve, gn, g0))
        if np.max(np.abs(step)) < 1e-9:
            break
        if it >= 2:
            delta = 2e-4
    return 1.0 / best


# ---------------------------------------------------------------------------
# volume


def _polytope_cones(body: ConvexBody):
    """Facet simplices (vertex arrays) of a polytope, with distances to the origin."""
    if body.dim == 1:
        r = np.abs(body.vertices).max()
        return [np.array([[r]]), np.array([[-r]])], np.array([r, r])
    hull = body._hull
    simplices = [hull.points[s] for s in hull.simplices]
    dist = -hull.equations[:, -1]
    return simplices, dist


def _simplex_measure(S):
    """(d-1)-dimensional measure of a simplex with d vertices in R^d."""
    d = S.shape[0]
    if d == 1:
        return 1.0
    E = (S[1:] - S[0]).T
    G = E.T @ E
    return math.sqrt(max(np.linalg.det(G), 0.0)) / math.factorial(d - 1)


def volume(body: ConvexBody, with_error: bool = False):
    """Volume from the radial integral (1/n) int_S ||y||_K^{-n} dy.

    Ellipsoids return omega_n / sqrt(det M); the radial integral's disagreement is the error.
    Polytopes integrate each facet cone exactly (cone volume = h_F |F| / n).
    """
    n = body.dim
    err = 0.0
    if body.kind == "polytope":
        simplices, dist = _polytope_cones(body)
        vol = sum(h * _simplex_measure(S) / n for S, h in zip(simplices, dist))
    else:
        if body.kind == "ellipsoid":
            U, w = table_rule(n)
            closed = omega(n) / math.sqrt(np.linalg.det(body.matrix))
        else:
            U, w = body.directions, body.weights
            closed = None
            if w is None:
                raise BodyError("gauge table without quadrature weights")
        f = body.radial(U) ** n / n
        vol = float(w @ f)
        if n == 2 and len(w) % 2 == 0:
            coarse = float(2 * w[::2] @ f[::2]) if body.kind == "gauge_table" else vol
            err = abs(vol - coarse) / vol
        if closed is not None:
            # the table rule under-resolves elongated ellipsoids; keep its disagreement as the error
            err = abs(vol - closed) / closed
            vol = closed
    return (vol, err) if with_error else vol


# ---------------------------------------------------------------------------
# L_p centroid bodies


def _abs_pow_linear_piece(lo, hi, dlo, dhi, p):
    """int_lo^hi |s|^p d(s) ds for linear d with d(lo)=dlo, d(hi)=dhi; lo, hi same sign."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    neg = (lo + hi) < 0
    a = np.where(neg, -hi, lo)
    b = np.where(neg, -lo, hi)
    da = np.where(neg, dhi, dlo)
    db = np.where(neg, dlo, dhi)
    width = b - a
    scale = np.maximum(np.abs(b), 1e-300)
    tiny = width <= 1e-7 * scale
    wsafe = np.where(tiny, 1.0, width)
    beta = (db - da) / wsafe
    alpha = da - beta * a

    def prim(c):
        c = np.maximum(c, 0.0)
        return alpha * c ** (p + 1) / (p + 1) + beta * c ** (p + 2) / (p + 2)

    exact = prim(b) - prim(a)
    mid = 0.5 * (a + b)
    approx = width * mid**p * 0.5 * (da + db)
    return np.where(tiny, approx, exact)


def _abs_pow_linear(lo, hi, dlo, dhi, p):
    """Same as the piece version, splitting at s = 0 when needed."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    cross = (lo < 0) & (hi > 0)
    frac = np.where(cross, -lo / np.where(hi - lo > 0, hi - lo, 1.0), 0.0)
    d0 = dlo + (dhi - dlo) * frac
    split = _abs_pow_linear_piece(lo, np.zeros_like(lo), dlo, d0, p) + _abs_pow_linear_piece(
        np.zeros_like(hi), hi, d0, dhi, p
    )
    whole = _abs_pow_linear_piece(lo, hi, dlo, dhi, p)
    return np.where(cross, split, whole)


def _polytope_moment(body: ConvexBody, Y, p):
    """int_K |<y, x>|^p dx for each row y, exactly (facet-cone decomposition)."""
    n = body.dim
    simplices, dist = _polytope_cones(body)
    total = np.zeros(len(Y))
    for S, hF in zip(simplices, dist):
        meas = _simplex_measure(S)
        ell = Y @ S.T  # values of <y, .> at the facet vertices
        if n == 1:
            face = np.abs(ell[:, 0]) ** p * meas
        elif n == 2:
            lo = np.min(ell, axis=1)
            hi = np.max(ell, axis=1)
            w = hi - lo
            flat = w <= 1e-12 * np.maximum(np.abs(hi), 1e-300)
            dens = meas / np.where(flat, 1.0, w)
            face = np.where(flat, meas * np.abs(0.5 * (lo + hi)) ** p, _abs_pow_linear(lo, hi, dens, dens, p))
        elif n == 3:
            e = np.sort(ell, axis=1)
            l1, l2, l3 = e[:, 0], e[:, 1], e[:, 2]
            w = l3 - l1
            flat = w <= 1e-12 * np.maximum(np.abs(l3), 1e-300)
            peak = 2.0 * meas / np.where(flat, 1.0, w)
            face = _abs_pow_linear(l1, l2, 0.0 * peak, peak, p) + _abs_pow_linear(l2, l3, peak, 0.0 * peak, p)
            face = np.where(flat, meas * np.abs(0.5 * (l1 + l3)) ** p, face)
        else:
            raise BodyError("polytope moments are implemented for dim <= 3")
        total += hF / (n + p) * face
    return total


def _aligned_rule(dim: int, p: float, order: int):
    """Nodes (c, s-direction) for int_{S^{dim-1}} |<u, w>|^p g(w) dw, folded to the half c > 0.

    Returns (c, wc, phi-part) where w = c u + sqrt(1-c^2) v and v runs over a
    rule on the unit sphere of u-perp.  Weight c^p is built into wc.
    """
    if dim == 2:
        # w = cos(th) u + sin(th) u_perp, th in (-pi/2, pi/2); weight cos^p via Jacobi in th
        x, wx = roots_jacobi(order, p, p)
        th = 0.5 * np.pi * x
        # cos(pi x / 2) / (1 - x^2) is smooth on [-1, 1]
        wt = wx * (0.5 * np.pi) * (np.cos(th) ** p) / (1 - x**2) ** p
        return np.cos(th), np.sin(th)[:, None], wt
    if dim == 3:
        x, wx = roots_jacobi(order, 0.0, p)
        c = 0.5 * (x + 1.0)
        wc = wx * 0.5 ** (p + 1)  # c^p dc
        k = 2 * order
        phi = 2 * np.pi * np.arange(k) / k
        C = np.repeat(c, k)
        V = np.stack([np.cos(phi), np.sin(phi)], -1)
        V = np.tile(V, (order, 1))
        W = np.repeat(wc, k) * (2 * np.pi / k)
        return C, np.sqrt(1 - C**2)[:, None] * V, W
    raise BodyError(f"aligned sphere rule not available in dimension {dim}")


def _radial_moment(radial: Callable, Y, p, n_exp, order=32):
    """int_{S^{d-1}} rho(w)^{n_exp} |<y, w>|^p dw for rows y (symmetric rho)."""
    Y = np.asarray(Y, dtype=float)
    k, d = Y.shape
    r = np.linalg.norm(Y, axis=1)
    if d == 1:
        return r**p * (radial(np.array([[1.0]]))[0] ** n_exp + radial(np.array([[-1.0]]))[0] ** n_exp)
    U = Y / np.where(r > 0, r, 1.0)[:, None]
    C, S, Wt = _aligned_rule(d, p, order)
    T = _tangent_basis(U)  # (k, d, d-1)
    out = np.empty(k)
    step = max(1, 200000 // len(C))
    for i0 in range(0, k, step):
        Ub = U[i0 : i0 + step]
        Tb = T[i0 : i0 + step]
        Wdir = C[None, :, None] * Ub[:, None, :] + np.matmul(Tb, S.T).transpose(0, 2, 1)
        vals = radial(Wdir.reshape(-1, d)).reshape(len(Ub), -1) ** n_exp
        out[i0 : i0 + step] = vals @ Wt
    # both hemispheres (origin symmetry)
    return 2.0 * out * r**p


def centroid_support(body: ConvexBody, p: float, order: int = 32) -> Callable:
    """Exact (quadrature) support function of Gamma_p K as a vectorised callable."""
    if p < 1:
        raise BodyError("L_p centroid bodies need p >= 1")
    n = body.dim
    vol = volume(body)
    norm = 1.0 / (centroid_const(n, p) * vol)
    if body.kind == "polytope":
        mom = lambda Y: _polytope_moment(body, Y, p)
    else:
        mom = lambda Y: _radial_moment(body.radial, Y, p, n + p, order) / (n + p)

    def h(Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return (norm * np.maximum(mom(Y), 0.0)) ** (1.0 / p)

    return h


def centroid_body(body: ConvexBody, p: float, rule=None) -> ConvexBody:
    """L_p centroid body Gamma_p K as a gauge table."""
    return ConvexBody.from_support(centroid_support(body, p), body.dim, rule=rule)
