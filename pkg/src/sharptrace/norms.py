"""Norms on R^n with their duals and gradients.

Four kinds are available:

``lq``              (sum |z_i|^q)^(1/q), 1 < q < inf
``ellipsoid``       sqrt(z^T M z)
``polytope_gauge``  gauge of a symmetric polytope
``split_q``         (|t|^q + ||x + t a||_K^q)^(1/q) on R x R^{n-1}

All evaluators are vectorised over the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bodies import ConvexBody, support_to_radial

__all__ = [
    "NormError",
    "NonsmoothError",
    "NormSpec",
    "norm_eval",
    "dual_norm_eval",
    "dual_norm_numeric",
    "norm_gradient",
    "dual_exponent",
]

GRADIENT_TOL = 1e-10


class NormError(ValueError):
    pass


class NonsmoothError(NormError):
    """The norm has no unique gradient at the requested point."""


def dual_exponent(q: float) -> float:
    return q / (q - 1.0)


@dataclass(frozen=True, eq=False)
class NormSpec:
    kind: str
    dim: int
    q: float | None = None
    matrix: np.ndarray | None = None
    body: ConvexBody | None = None
    tilt: np.ndarray | None = field(default=None)

    @classmethod
    def lq(cls, q: float, dim: int) -> "NormSpec":
        q = float(q)
        if not 1.0 < q < np.inf:
            raise NormError(f"lq norm needs 1 < q < inf, got {q}")
        return cls("lq", int(dim), q=q)

    @classmethod
    def euclidean(cls, dim: int) -> "NormSpec":
        return cls.lq(2.0, dim)

    @classmethod
    def ellipsoid(cls, M) -> "NormSpec":
        body = ConvexBody.ellipsoid(M)
        return cls("ellipsoid", body.dim, matrix=body.matrix, body=body)

    @classmethod
    def polytope_gauge(cls, vertices) -> "NormSpec":
        body = ConvexBody.polytope(vertices)
        return cls("polytope_gauge", body.dim, body=body)

    @classmethod
    def split_q(cls, q: float, body: ConvexBody | int, tilt=None) -> "NormSpec":
        """(|t|^q + ||x + t*tilt||_K^q)^(1/q); an integer body means the Euclidean ball of R^body."""
        q = float(q)
        if not 1.0 < q < np.inf:
            raise NormError(f"split norm needs 1 < q < inf, got {q}")
        if isinstance(body, (int, np.integer)):
            body = ConvexBody.ball(int(body))
        m = body.dim
        a = np.zeros(m) if tilt is None else np.asarray(tilt, dtype=float).reshape(m)
        return cls("split_q", m + 1, q=q, body=body, tilt=a)

    @property
    def smooth(self) -> bool:
        if self.kind == "polytope_gauge":
            return False
        if self.kind == "split_q":
            return self.body.kind != "polytope"
        return True

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim}
        if self.q is not None:
            d["q"] = self.q
        if self.kind == "ellipsoid":
            d["matrix"] = self.matrix.tolist()
        if self.kind in ("polytope_gauge", "split_q"):
            d["body"] = self.body.to_dict()
        if self.tilt is not None:
            d["tilt"] = self.tilt.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NormSpec":
        kind = d["kind"]
        if kind == "lq":
            return cls.lq(d["q"], d["dim"])
        if kind == "ellipsoid":
            return cls.ellipsoid(d["matrix"])
        if kind == "polytope_gauge":
            return cls.polytope_gauge(ConvexBody.from_dict(d["body"]).vertices)
        if kind == "split_q":
            return cls.split_q(d["q"], ConvexBody.from_dict(d["body"]), d.get("tilt"))
        raise NormError(f"unknown norm kind {kind!r}")

    def __repr__(self):
        extra = f", q={self.q:g}" if self.q is not None else ""
        return f"NormSpec({self.kind!r}, dim={self.dim}{extra})"


def _rows(spec: NormSpec, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.shape[-1] != spec.dim:
        raise NormError(f"{spec!r} expects vectors of length {spec.dim}, got {Z.shape}")
    return Z


def _lq(Z, q):
    A = np.abs(Z)
    m = A.max(axis=-1)
    safe = np.where(m > 0, m, 1.0)
    return np.where(m > 0, safe * ((A / safe[..., None]) ** q).sum(-1) ** (1.0 / q), 0.0)


def _shift(spec: NormSpec, Z):
    """(t, x + t a): the split norm is the plain q-sum after this shear."""
    return Z[..., 0], Z[..., 1:] + Z[..., :1] * spec.tilt


def norm_eval(spec: NormSpec, Z) -> np.ndarray:
    Z = _rows(spec, Z)
    if spec.kind == "lq":
        return _lq(Z, spec.q)
    if spec.kind in ("ellipsoid", "polytope_gauge"):
        return spec.body.gauge(Z)
    t, y = _shift(spec, Z)
    g = spec.body.gauge(y)
    return _lq(np.stack([t, g], axis=-1), spec.q)


def dual_norm_eval(spec: NormSpec, Z) -> np.ndarray:
    """||z||_* = sup{z . y : ||y|| <= 1}."""
    Z = _rows(spec, Z)
    if spec.kind == "lq":
        return _lq(Z, dual_exponent(spec.q))
    if spec.kind in ("ellipsoid", "polytope_gauge"):
        return spec.body.support(Z)
    # dual of (t, x) -> (t, x + t a) composed with the q-sum
    s = Z[..., 0] - Z[..., 1:] @ spec.tilt
    h = spec.body.support(Z[..., 1:])
    return _lq(np.stack([s, h], axis=-1), dual_exponent(spec.q))


def dual_norm_numeric(spec: NormSpec, Z) -> np.ndarray:
    """Dual norm by direct maximisation of z . y / ||y|| over the unit sphere.

    A dense sphere rule supplies the starting points; batched Newton steps in
    tangent coordinates polish them.  Used as an independent check of the
    closed forms.
    """
    Z = np.atleast_2d(_rows(spec, Z))
    r = np.linalg.norm(Z, axis=1)
    if np.any(r == 0):
        raise NormError("dual norm of the zero vector requested")
    U = Z / r[:, None]
    inv = support_to_radial(lambda W: norm_eval(spec, W), U, polar=True)
    return r / inv


def _lq_grad(Z, q, nrm):
    return np.sign(Z) * (np.abs(Z) / nrm[..., None]) ** (q - 1.0)


def _body_gauge_grad(body: ConvexBody, Y, g):
    if body.kind == "ellipsoid":
        return (Y @ body.matrix) / np.where(g > 0, g, 1.0)[..., None]
    if body.kind == "polytope":
        vals = Y @ body._facets.T
        top = np.sort(vals, axis=-1)
        tie = top[..., -1] - top[..., -2] <= 1e-12 * np.maximum(np.abs(top[..., -1]), 1e-300)
        if np.any(tie & (g > 0)):
            raise NonsmoothError("polytope gauge is not differentiable off facet interiors")
        return body._facets[np.argmax(vals, axis=-1)]
    raise NonsmoothError("gradient of a tabulated gauge is not available")


def _raw_gradient(spec: NormSpec, Z):
    nrm = norm_eval(spec, Z)
    if np.any(nrm <= 0):
        raise NormError("norm gradient at the zero vector")
    if spec.kind == "lq":
        return _lq_grad(Z, spec.q, nrm)
    if spec.kind in ("ellipsoid", "polytope_gauge"):
        return _body_gauge_grad(spec.body, Z, nrm)
    t, y = _shift(spec, Z)
    g = spec.body.gauge(y)
    q = spec.q
    dt = np.sign(t) * (np.abs(t) / nrm) ** (q - 1.0)
    safe = np.where((g > 0)[..., None], y, 1.0)
    dy = np.where(
        (g > 0)[..., None],
        ((g / nrm) ** (q - 1.0))[..., None] * _body_gauge_grad(spec.body, safe, np.where(g > 0, g, 1.0)),
        0.0,
    )
    # chain rule through the shear: d/dt picks up a . dy
    return np.concatenate([(dt + dy @ spec.tilt)[..., None], dy], axis=-1)


def norm_gradient(spec: NormSpec, Z, check: bool = True) -> np.ndarray:
    """z* = grad ||.|| at z, with ||z*||_* = 1 and z . z* = ||z|| verified."""
    Z = _rows(spec, Z)
    G = _raw_gradient(spec, Z)
    if check:
        nrm = norm_eval(spec, Z)
        d1 = np.abs(dual_norm_eval(spec, G) - 1.0)
        d2 = np.abs(np.einsum("...i,...i->...", Z, G) - nrm) / nrm
        worst = max(float(np.max(d1, initial=0.0)), float(np.max(d2, initial=0.0)))
        if worst > GRADIENT_TOL:
            raise NonsmoothError(f"gradient identities fail by {worst:.2e}")
    return G

