"""Closed-form test functions on the half-space {(t, x) : t >= 0}.

Every function carries an analytic gradient and a tail exponent so that the
quadrature layer can refuse integrands that would not converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import Params
from .norms import NonsmoothError, NormSpec, norm_eval, norm_gradient

__all__ = [
    "SGLMatrix",
    "TestFunction",
    "ExtremalProfile",
    "Transformed",
    "PerturbedExtremal",
    "RationalBump",
    "FiniteSum",
    "PowerSumProfile",
    "hp",
    "dilate",
    "orbit_apply",
    "translate",
    "function_from_dict",
]


@dataclass(frozen=True, eq=False)
class SGLMatrix:
    """Block matrix [[lam, 0], [a_vec, B]] acting on (t, x)."""

    lam: float
    a_vec: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        a = np.asarray(self.a_vec, dtype=float).reshape(B.shape[0])
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if B.shape[0] != B.shape[1] or abs(np.linalg.det(B)) < 1e-14:
            raise ValueError("B must be square and invertible")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "a_vec", a)
        object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def identity(cls, n: int) -> "SGLMatrix":
        return cls(1.0, np.zeros(n - 1), np.eye(n - 1))

    @classmethod
    def scaling(cls, n: int, lam: float) -> "SGLMatrix":
        return cls(lam, np.zeros(n - 1), lam * np.eye(n - 1))

    @classmethod
    def random(cls, n: int, rng, spread: float = 0.5) -> "SGLMatrix":
        """A well-conditioned random element (rng is an XorShift64Star)."""
        m = n - 1
        lam = math.exp(rng.uniform(-spread, spread))
        a = rng.uniform(-spread, spread, size=m)
        B = np.eye(m) + rng.uniform(-spread, spread, size=(m, m)) * 0.6
        if np.linalg.det(B) < 0:
            B[0] = -B[0]
        return cls(lam, a, B)

    @property
    def n(self) -> int:
        return self.B.shape[0] + 1

    @property
    def matrix(self) -> np.ndarray:
        M = np.zeros((self.n, self.n))
        M[0, 0] = self.lam
        M[1:, 0] = self.a_vec
        M[1:, 1:] = self.B
        return M

    @property
    def det_B(self) -> float:
        return float(np.linalg.det(self.B))

    @property
    def is_gl(self) -> bool:
        return bool(np.all(self.a_vec == 0))

    def apply(self, Z) -> np.ndarray:
        return Z @ self.matrix.T

    def to_dict(self) -> dict:
        return {"lam": self.lam, "a_vec": self.a_vec.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SGLMatrix":
        return cls(d["lam"], d["a_vec"], d["B"])


class TestFunction:
    """Base class: a function on the closed half-space with analytic gradient."""

    __test__ = False  # keep pytest from collecting the class
    n: int
    decay: float

    def __call__(self, Z) -> np.ndarray:
        raise NotImplementedError

    def grad(self, Z) -> np.ndarray:
        raise NotImplementedError

    def value_and_grad(self, Z):
        return self(Z), self.grad(Z)

    def tail(self, power: float, weight: float = 0.0, gradient: bool = False) -> float:
        """Exponent d with |f|^power ||z||^weight ~ ||z||^-d (|grad f| if gradient)."""
        d = self.decay + (1.0 if gradient else 0.0)
        return d * power - weight

    @property
    def quadrature_center(self) -> np.ndarray:
        """Point of the boundary the integration grid is centred on: an axis of symmetry, if known."""
        return np.zeros(self.n - 1)

    def to_dict(self) -> dict:
        raise NotImplementedError


class ExtremalProfile(TestFunction):
    """h_p(z) = ||z + e||^-((a-p)/(p-1)), e = (1, 0, ..., 0)."""

    family = "extremal"

    def __init__(self, params: Params, norm: NormSpec):
        if norm.dim != params.n:
            raise ValueError(f"norm dimension {norm.dim} does not match n = {params.n}")
        if not norm.smooth:
            raise NonsmoothError("the extremal profile needs a differentiable norm")
        self.params = params
        self.norm = norm
        self.n = params.n
        self.k = params.decay
        self.decay = self.k
        self._e = np.zeros(self.n)
        self._e[0] = 1.0

    def __call__(self, Z):
        return norm_eval(self.norm, np.asarray(Z, float) + self._e) ** (-self.k)

    def grad(self, Z):
        W = np.asarray(Z, float) + self._e
        r = norm_eval(self.norm, W)
        return (-self.k * r ** (-self.k - 1.0))[..., None] * norm_gradient(self.norm, W)

    def to_dict(self):
        return {"family": "extremal", "norm": self.norm.to_dict()}


class PowerSumProfile(TestFunction):
    """((lam t + delta)^s + |A (x - x0)|_2^s)^(-(n-p)/(p(p-1))); the exponent s defaults to p."""

    family = "power_sum"

    def __init__(self, params: Params, lam=1.0, delta=1.0, A=None, x0=None, s: float | None = None):
        n, p = params.n, params.p
        self.params = params
        self.n = n
        self.lam, self.delta = float(lam), float(delta)
        self.A = np.eye(n - 1) if A is None else np.atleast_2d(np.asarray(A, float))
        self.x0 = np.zeros(n - 1) if x0 is None else np.asarray(x0, float)
        self.s = p if s is None else float(s)
        self.e = -(n - p) / (p * (p - 1))
        self.decay = -self.e * self.s

    def _parts(self, Z):
        Z = np.asarray(Z, float)
        u = self.lam * Z[..., 0] + self.delta
        y = (Z[..., 1:] - self.x0) @ self.A.T
        ny = np.linalg.norm(y, axis=-1)
        return u, y, ny, u**self.s + ny**self.s

    def __call__(self, Z):
        return self._parts(Z)[3] ** self.e

    def grad(self, Z):
        u, y, ny, S = self._parts(Z)
        c = self.e * S ** (self.e - 1.0) * self.s
        gt = c * u ** (self.s - 1.0) * self.lam
        safe = np.where(ny > 0, ny, 1.0)
        gy = (c * safe ** (self.s - 2.0))[..., None] * y
        return np.concatenate([gt[..., None], gy @ self.A], axis=-1)

    def to_dict(self):
        return {
            "family": "power_sum",
            "lam": self.lam,
            "delta": self.delta,
            "A": self.A.tolist(),
            "x0": self.x0.tolist(),
            "s": self.s,
        }


class Transformed(TestFunction):
    """g(t, x) = c f(A (t, x - x0))."""

    def __init__(self, base: TestFunction, c: float, A: SGLMatrix, x0=None):
        if A.n != base.n:
            raise ValueError("SGL matrix dimension does not match the function")
        self.base = base
        self.c = float(c)
        self.A = A
        self.n = base.n
        self.x0 = np.zeros(self.n - 1) if x0 is None else np.asarray(x0, float).reshape(self.n - 1)
        self._shift = np.concatenate([[0.0], self.x0])
        self._M = A.matrix
        self.decay = base.decay
        self.family = getattr(base, "family", "transformed")

    def _inner(self, Z):
        return (np.asarray(Z, float) - self._shift) @ self._M.T

    def __call__(self, Z):
        return self.c * self.base(self._inner(Z))

    def grad(self, Z):
        return self.c * self.base.grad(self._inner(Z)) @ self._M

    def value_and_grad(self, Z):
        W = self._inner(Z)
        v, g = self.base.value_and_grad(W)
        return self.c * v, self.c * g @ self._M

    def tail(self, power, weight=0.0, gradient=False):
        return self.base.tail(power, weight, gradient)

    def to_dict(self):
        return {
            "family": "orbit",
            "base": self.base.to_dict(),
            "c": self.c,
            "A": self.A.to_dict(),
            "x0": self.x0.tolist(),
        }


def _bump(Z, center, radius):
    """rho = exp(-|z - c|^2 / R^2) and its gradient."""
    D = (np.asarray(Z, float) - center) / radius
    rho = np.exp(-np.einsum("...i,...i->...", D, D))
    drho = (-2.0 * rho)[..., None] * D / radius
    return rho, drho


class PerturbedExtremal(TestFunction):
    """base * (1 + eps * rho) with rho a Gaussian bump."""

    family = "perturbed_extremal"

    def __init__(self, base: TestFunction, center, radius: float, eps: float):
        self.base = base
        self.n = base.n
        self.center = np.asarray(center, float).reshape(self.n)
        self.radius = float(radius)
        self.eps = float(eps)
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")
        self.decay = base.decay

    def __call__(self, Z):
        rho, _ = _bump(Z, self.center, self.radius)
        return self.base(Z) * (1.0 + self.eps * rho)

    def value_and_grad(self, Z):
        v, g = self.base.value_and_grad(Z)
        rho, drho = _bump(Z, self.center, self.radius)
        fac = 1.0 + self.eps * rho
        return v * fac, g * fac[..., None] + (self.eps * v)[..., None] * drho

    def grad(self, Z):
        return self.value_and_grad(Z)[1]

    def tail(self, power, weight=0.0, gradient=False):
        return self.base.tail(power, weight, gradient)

    def to_dict(self):
        return {
            "family": "perturbed_extremal",
            "base": self.base.to_dict(),
            "center": self.center.tolist(),
            "radius": self.radius,
            "eps": self.eps,
        }


class RationalBump(TestFunction):
    """(1 + t)^-alpha (1 + |x - x0|^2)^(-beta/2)."""

    family = "rational_bump"

    def __init__(self, n: int, alpha: float, beta: float, x0=None, params: Params | None = None):
        self.n = int(n)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.x0 = np.zeros(self.n - 1) if x0 is None else np.asarray(x0, float).reshape(self.n - 1)
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("rational bump exponents must be positive")
        self.decay = min(self.alpha, self.beta)
        if params is not None:
            validate_membership(self, params)

    @property
    def quadrature_center(self) -> np.ndarray:
        return self.x0

    def __call__(self, Z):
        Z = np.asarray(Z, float)
        y = Z[..., 1:] - self.x0
        return (1.0 + Z[..., 0]) ** (-self.alpha) * (1.0 + np.einsum("...i,...i->...", y, y)) ** (-0.5 * self.beta)

    def value_and_grad(self, Z):
        Z = np.asarray(Z, float)
        y = Z[..., 1:] - self.x0
        s = 1.0 + np.einsum("...i,...i->...", y, y)
        v = (1.0 + Z[..., 0]) ** (-self.alpha) * s ** (-0.5 * self.beta)
        gt = -self.alpha * v / (1.0 + Z[..., 0])
        gx = (-self.beta * v / s)[..., None] * y
        return v, np.concatenate([gt[..., None], gx], axis=-1)

    def grad(self, Z):
        return self.value_and_grad(Z)[1]

    def tail(self, power, weight=0.0, gradient=False):
        # separable: integrable iff the t part beats 1 and the x part beats n-1;
        # report the isotropic exponent n * min(t_excess, x_excess) with the same threshold
        g = 1.0 if gradient else 0.0
        t_part = (self.alpha + g) * power - weight
        x_part = ((self.beta + g) * power - weight) / (self.n - 1)
        return self.n * min(t_part, x_part)

    def to_dict(self):
        return {"family": "rational_bump", "alpha": self.alpha, "beta": self.beta, "x0": self.x0.tolist()}


class FiniteSum(TestFunction):
    """sum_i c_i f_i."""

    family = "finite_sum"

    def __init__(self, components, coeffs=None):
        self.components = list(components)
        if not self.components:
            raise ValueError("finite sum needs at least one component")
        self.n = self.components[0].n
        if any(c.n != self.n for c in self.components):
            raise ValueError("components live in different dimensions")
        self.coeffs = np.ones(len(self.components)) if coeffs is None else np.asarray(coeffs, float)
        self.decay = min(c.decay for c in self.components)

    def __call__(self, Z):
        return sum(c * f(Z) for c, f in zip(self.coeffs, self.components))

    def value_and_grad(self, Z):
        v = 0.0
        g = 0.0
        for c, f in zip(self.coeffs, self.components):
            fv, fg = f.value_and_grad(Z)
            v = v + c * fv
            g = g + c * fg
        return v, g

    def grad(self, Z):
        return self.value_and_grad(Z)[1]

    def tail(self, power, weight=0.0, gradient=False):
        return min(f.tail(power, weight, gradient) for f in self.components)

    def to_dict(self):
        return {
            "family": "finite_sum",
            "coeffs": self.coeffs.tolist(),
            "components": [f.to_dict() for f in self.components],
        }


def validate_membership(f: TestFunction, params: Params) -> None:
    """Raise unless |grad f|^p and |f|^(p(a-1)/(a-p)) are integrable on the half-space."""
    n = params.n
    if f.tail(params.trace_exp) <= n or f.tail(params.p, gradient=True) <= n:
        raise ValueError(
            f"{f.family} decays too slowly for the energy space at (n, p, a) = ({n}, {params.p}, {params.a})"
        )


def hp(params: Params, norm: NormSpec | None = None) -> ExtremalProfile:
    """The extremal profile for the given norm (Euclidean by default)."""
    return ExtremalProfile(params, norm if norm is not None else NormSpec.euclidean(params.n))


def orbit_apply(f: TestFunction, c: float, A: SGLMatrix, x0=None) -> Transformed:
    return Transformed(f, c, A, x0)


def dilate(f: TestFunction, lam: float, params: Params) -> Transformed:
    """f_lam(z) = lam^(n(a-p)/(ap)) f(lam z)."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    n, p, a = params.n, params.p, params.a
    return Transformed(f, lam ** (n * (a - p) / (a * p)), SGLMatrix.scaling(n, lam))


def translate(f: TestFunction, x0) -> Transformed:
    return Transformed(f, 1.0, SGLMatrix.identity(f.n), x0)


def function_from_dict(d: dict, params: Params) -> TestFunction:
    """Rebuild a TestFunction from its JSON description."""
    fam = d["family"]
    if fam == "extremal":
        norm = NormSpec.from_dict(d["norm"]) if "norm" in d else NormSpec.euclidean(params.n)
        base = ExtremalProfile(params, norm)
        if "A" in d or "c" in d or "x0" in d:
            A = SGLMatrix.from_dict(d["A"]) if "A" in d else SGLMatrix.identity(params.n)
            return Transformed(base, d.get("c", 1.0), A, d.get("x0"))
        return base
    if fam == "orbit":
        return Transformed(function_from_dict(d["base"], params), d["c"], SGLMatrix.from_dict(d["A"]), d["x0"])
    if fam == "perturbed_extremal":
        return PerturbedExtremal(function_from_dict(d["base"], params), d["center"], d["radius"], d["eps"])
    if fam == "rational_bump":
        return RationalBump(params.n, d["alpha"], d["beta"], d.get("x0"), params)
    if fam == "finite_sum":
        return FiniteSum([function_from_dict(c, params) for c in d["components"]], d.get("coeffs"))
    if fam == "power_sum":
        return PowerSumProfile(params, d["lam"], d["delta"], d["A"], d["x0"], d.get("s"))
    raise ValueError(f"unknown function family {fam!r}")
