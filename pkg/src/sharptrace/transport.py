"""Discrete quadratic-cost transport and the mass-transport proof of the dual inequality.

The continuous argument transports f^s dz onto g^s dz (s = ap/(a-p)) by the
gradient of a convex function phi and bounds each resulting term.  Here each
link is evaluated numerically: in full mode for affine maps z -> Lz + (0, v)
with L = diag(lam, B), B symmetric positive definite, where every quantity has
a closed form; in restricted mode, for arbitrary pairs, only the links that do
not involve the map.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constants import Params
from .extremals import SGLMatrix, TestFunction, Transformed, hp
from .functionals import energy_terms, _guard
from .norms import NormSpec, norm_eval
from .quadrature import QuadratureScheme, boundary_integrate, default_scheme, halfspace_integrate
from .report import Case, Report

__all__ = [
    "TransportError",
    "DiscreteMeasure",
    "TransportPlan",
    "AffineMap",
    "grid_measure",
    "solve_discrete_ot",
    "fit_affine_map",
    "pushforward_check",
    "monge_ampere_residual",
    "cyclic_monotonicity",
    "ag_check",
    "proof_chain_report",
    "brenier_pair",
    "MAX_NODES",
    "PLAN_FORMAT",
]

MAX_NODES = 2048
MASS_TOL = 1e-12
PLAN_FORMAT = "sharptrace-plan/1"


class TransportError(ValueError):
    pass


# ---------------------------------------------------------------------------
# measures and plans


@dataclass
class DiscreteMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    spacing: float | None = None

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if len(self.nodes) != len(self.weights):
            raise TransportError("one weight per node required")
        if np.any(~np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise TransportError("weights must be finite and nonnegative")
        if not self.total > 0:
            raise TransportError("measure has zero mass")

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def translated(self, v) -> "DiscreteMeasure":
        return DiscreteMeasure(self.nodes + np.asarray(v, float), self.weights.copy(), self.spacing)

    def mapped(self, fn) -> "DiscreteMeasure":
        """Push-forward by a point map (weights move with their nodes)."""
        return DiscreteMeasure(np.asarray(fn(self.nodes), float), self.weights.copy(), None)

    def normalized(self, mass: float = 1.0) -> "DiscreteMeasure":
        return DiscreteMeasure(self.nodes, self.weights * (mass / self.total), self.spacing)

    def to_dict(self) -> dict:
        return {"nodes": self.nodes.tolist(), "weights": self.weights.tolist(), "spacing": self.spacing}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteMeasure":
        return cls(d["nodes"], d["weights"], d.get("spacing"))


def grid_measure(density, n: int, per_axis: int, T: float, R: float) -> DiscreteMeasure:
    """Cell-midpoint discretisation of density dz on [0, T] x [-R, R]^(n-1).

    ``per_axis`` cells along t and 2*per_axis along each x axis, so all axes
    share one spacing when T = R.
    """
    ht = T / per_axis
    hx = 2.0 * R / (2 * per_axis)
    t = (np.arange(per_axis) + 0.5) * ht
    x = -R + (np.arange(2 * per_axis) + 0.5) * hx
    axes = np.meshgrid(t, *([x] * (n - 1)), indexing="ij")
    Z = np.stack([a.ravel() for a in axes], axis=-1)
    w = np.asarray(density(Z), float) * ht * hx ** (n - 1)
    return DiscreteMeasure(Z, w, spacing=max(ht, hx))


@dataclass
class TransportPlan:
    source: DiscreteMeasure
    target: DiscreteMeasure
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    cost: float
    potentials: tuple = field(default_factory=tuple)
    iterations: int = 0
    backend: str = ""

    @property
    def map_estimate(self) -> np.ndarray:
        """Barycentric projection: the mean target of each source node."""
        k, n = self.source.nodes.shape
        acc = np.zeros((k, n))
        np.add.at(acc, self.rows, self.mass[:, None] * self.target.nodes[self.cols])
        w = np.zeros(k)
        np.add.at(w, self.rows, self.mass)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = acc / w[:, None]
        return np.where(w[:, None] > 0, out, np.nan)

    def coupling(self) -> np.ndarray:
        X = np.zeros((len(self.source.weights), len(self.target.weights)))
        np.add.at(X, (self.rows, self.cols), self.mass)
        return X

    def marginal_error(self) -> float:
        a = np.zeros(len(self.source.weights))
        b = np.zeros(len(self.target.weights))
        np.add.at(a, self.rows, self.mass)
        np.add.at(b, self.cols, self.mass)
        scale = self.source.total
        return float(max(np.abs(a - self.source.weights).max(), np.abs(b - self.target.weights).max()) / scale)

    def duality_gap(self) -> float:
        """Primal cost minus the dual objective of the final potentials (0 at optimality)."""
        u, v = self.potentials
        return float(self.cost - (u @ self.source.weights + v @ self.target.weights))

    def to_dict(self) -> dict:
        keep = self.mass > 0
        return {
            "format": PLAN_FORMAT,
            "rows": self.rows[keep].tolist(),
            "cols": self.cols[keep].tolist(),
            "mass": self.mass[keep].tolist(),
            "cost": self.cost,
            "iterations": self.iterations,
            "backend": self.backend,
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "TransportPlan":
        if d.get("format") != PLAN_FORMAT:
            raise TransportError(f"unknown plan format {d.get('format')!r}")
        return cls(
            DiscreteMeasure.from_dict(d["source"]),
            DiscreteMeasure.from_dict(d["target"]),
            np.asarray(d["rows"], dtype=np.int64),
            np.asarray(d["cols"], dtype=np.int64),
            np.asarray(d["mass"], dtype=float),
            float(d["cost"]),
            (),
            int(d.get("iterations", 0)),
            d.get("backend", ""),
        )

    @classmethod
    def from_json(cls, s: str) -> "TransportPlan":
        return cls.from_dict(json.loads(s))


def solve_discrete_ot(
    mu: DiscreteMeasure, nu: DiscreteMeasure, max_iter: int | None = None, backend: str | None = None
) -> TransportPlan:
    """Exact quadratic-cost Kantorovich optimiser by the transportation simplex."""
    if mu.dim != nu.dim:
        raise TransportError("measures live in different dimensions")
    m, n = len(mu.weights), len(nu.weights)
    if m > MAX_NODES or n > MAX_NODES:
        raise TransportError(f"at most {MAX_NODES} nodes per measure")
    if abs(mu.total - nu.total) > MASS_TOL * max(mu.total, nu.total):
        raise TransportError(f"total masses differ: {mu.total!r} vs {nu.total!r}")
    # order both sides along a common direction so the northwest start is near optimal
    d = np.ones(mu.dim) / math.sqrt(mu.dim)
    oi = np.argsort(mu.nodes @ d, kind="stable")
    oj = np.argsort(nu.nodes @ d, kind="stable")
    X, Y = mu.nodes[oi], nu.nodes[oj]
    C = np.einsum("id,id->i", X, X)[:, None] + np.einsum("jd,jd->j", Y, Y)[None, :] - 2.0 * X @ Y.T
    C = np.maximum(C, 0.0)
    a = mu.weights[oi].copy()
    b = nu.weights[oj] * (mu.total / nu.total)
    b[-1] += a.sum() - b.sum()
    if b[-1] < 0:
        raise TransportError("mass balancing produced a negative weight")
    tol = 1e-12 * max(float(C.max()), 1e-300)
    impl = kernels.backend(backend)
    max_iter = max_iter or 50 * (m + n) * max(1, int(math.log2(m + n)))
    try:
        bi, bj, bf, u, v, it = impl.transport_simplex(C, a, b, int(max_iter), float(tol))
    except RuntimeError as exc:
        raise TransportError(str(exc)) from exc
    rows, cols = oi[np.asarray(bi)], oj[np.asarray(bj)]
    mass = np.maximum(np.asarray(bf), 0.0)
    cost = float(mass @ C[bi, bj])
    uu = np.empty(m)
    vv = np.empty(n)
    uu[oi], vv[oj] = u, v
    name = backend or kernels.BACKEND
    return TransportPlan(mu, nu, rows, cols, mass, cost, (uu, vv), int(it), name)


def cyclic_monotonicity(plan: TransportPlan, rng, cycles: int = 1000, length: int = 3) -> float:
    """Largest sum_k <x_(k+1) - x_k, y_k> over sampled cycles of support pairs (<= 0 when optimal)."""
    keep = np.nonzero(plan.mass > 0)[0]
    X = plan.source.nodes[plan.rows[keep]]
    Y = plan.target.nodes[plan.cols[keep]]
    worst = -np.inf
    for _ in range(cycles):
        idx = rng.integers(0, len(keep), size=length)
        Xs, Ys = X[idx], Y[idx]
        s = float(np.einsum("kd,kd->", np.roll(Xs, -1, axis=0) - Xs, Ys))
        worst = max(worst, s)
    return worst


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class AffineMap:
    """z -> L z + shift."""

    L: np.ndarray
    shift: np.ndarray

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(np.eye(n), np.zeros(n))

    @classmethod
    def dilation(cls, n: int, lam: float) -> "AffineMap":
        return cls(lam * np.eye(n), np.zeros(n))

    @classmethod
    def translation(cls, v) -> "AffineMap":
        v = np.asarray(v, float)
        return cls(np.eye(len(v)), v)

    def __call__(self, Z):
        return np.asarray(Z, float) @ self.L.T + self.shift

    def jacobian(self, Z):
        Z = np.atleast_2d(Z)
        return np.broadcast_to(self.L, (len(Z),) + self.L.shape)

    @property
    def is_brenier(self) -> bool:
        """Gradient of a convex function that keeps the half-space and its boundary orientation."""
        L = self.L
        sym = np.allclose(L, L.T, atol=1e-12 * max(1.0, np.abs(L).max()))
        psd = sym and np.linalg.eigvalsh(0.5 * (L + L.T)).min() > 0
        keeps = np.allclose(L[0, 1:], 0.0) and abs(self.shift[0]) <= 1e-14
        return bool(psd and keeps)


def fit_affine_map(plan: TransportPlan) -> AffineMap:
    """Weighted least-squares affine fit to the barycentric map."""
    X = plan.source.nodes
    T = plan.map_estimate
    w = plan.source.weights
    ok = np.all(np.isfinite(T), axis=1) & (w > 0)
    A = np.concatenate([X[ok], np.ones((ok.sum(), 1))], axis=1) * np.sqrt(w[ok])[:, None]
    sol, *_ = np.linalg.lstsq(A, T[ok] * np.sqrt(w[ok])[:, None], rcond=None)
    return AffineMap(sol[:-1].T.copy(), sol[-1].copy())


def brenier_pair(f: TestFunction, phi: AffineMap, params: Params) -> Transformed:
    """The g whose g^s dz is the push-forward of f^s dz by phi (s = ap/(a-p))."""
    if not phi.is_brenier:
        raise TransportError("map is not a half-space preserving Brenier map")
    s = params.conformal_exp
    L = phi.L
    det = float(np.linalg.det(L))
    Li = np.linalg.inv(L)
    # g(y) = det^(-1/s) f(L^-1 (y - shift)); shift has zero t-part
    A = SGLMatrix(Li[0, 0], Li[1:, 0], Li[1:, 1:])
    return Transformed(f, det ** (-1.0 / s), A, phi.shift[1:])


# ---------------------------------------------------------------------------
# checks


def pushforward_check(plan: TransportPlan, b, label: str = "b", tol: float | None = None) -> Report:
    """|int b dnu - int b(T) dmu| with T the barycentric map."""
    lhs = float(plan.target.weights @ np.asarray(b(plan.target.nodes), float))
    T = plan.map_estimate
    ok = plan.source.weights > 0
    rhs = float(plan.source.weights[ok] @ np.asarray(b(T[ok]), float))
    scale = max(abs(lhs), abs(rhs), 1e-300)
    h = plan.source.spacing or 0.0
    tol = tol if tol is not None else max(1e-10, h)
    rep = Report("pushforward")
    rep.add(Case(f"pushforward_{label}", gap=abs(lhs - rhs) / scale, tol=tol, kind="equality",
                 terms={"target_side": lhs, "source_side": rhs, "spacing": h}))
    return rep


def monge_ampere_residual(phi, F, G, sample, tol: float = 1e-12) -> Report:
    """max |F(z) - G(phi(z)) det D phi(z)| / F(z) over the sample points."""
    jac = getattr(phi, "jacobian", None)
    if jac is None:
        raise TransportError("map must provide a jacobian")
    Z = np.atleast_2d(np.asarray(sample, float))
    Fz = np.asarray(F(Z), float)
    J = np.asarray(jac(Z), float)
    det = np.linalg.det(J)
    if np.any(det <= 0):
        raise TransportError("map is not orientation preserving on the sample")
    res = np.abs(Fz - np.asarray(G(phi(Z)), float) * det)
    keep = Fz > 0
    rel = float(np.max(res[keep] / Fz[keep])) if np.any(keep) else 0.0
    rep = Report("monge_ampere")
    rep.add(Case("monge_ampere_residual", gap=rel, tol=tol, kind="equality", terms={"samples": len(Z)}))
    return rep


def _random_psd(n, rng, count):
    out = np.empty((count, n))
    for k in range(count):
        A = rng.normal(size=(n, n))
        Q, _ = np.linalg.qr(A)
        out[k] = np.exp(rng.uniform(-2.0, 2.0, size=n))
        # the eigenvalues are what enter det and trace; Q only checks invariance
        M = (Q * out[k]) @ Q.T
        out[k] = np.linalg.eigvalsh(0.5 * (M + M.T))
    return out


def ag_check(params: Params, rng, samples: int = 10_000, tol: float = 1e-12) -> Report:
    """det(M)^(1/a) <= (tr M + a - n)/a on random positive definite M, tight only at M = I."""
    n, a = params.n, params.a
    eigs = _random_psd(n, rng, samples)
    gaps = np.asarray(kernels.ag_gaps(eigs, a))
    at_id = float(kernels.ag_gaps(np.ones((1, n)), a)[0])
    rep = Report("ag", params=params.to_dict())
    rep.add(Case("ag_samples", gap=float(gaps.min()), tol=tol, terms={"samples": samples}))
    rep.add(Case("ag_identity", gap=at_id, tol=tol, kind="equality"))
    if a > n:
        dist = np.abs(eigs - 1.0).max(axis=1)
        # strictness away from the identity: gap is at least a fixed fraction of dist^2 near it
        rep.add(Case("ag_strict", gap=float(np.min(gaps[dist > 1e-3])), tol=0.0,
                     terms={"note": "strictly positive off the identity"}))
        rep.cases[-1].passed = bool(np.all(gaps[dist > 1e-3] > 0))
    return rep


# ---------------------------------------------------------------------------
# proof chain


def _lambda_bound(B, V, G, A, params: Params):
    """min over lam of lam^-1 (a-n) V + lam^gamma Bc G^((a-1)/(a-p)), and the minimiser."""
    n, p, a = params.n, params.p, params.a
    Bc = ((p - 1.0) / ((a - p) * A ** (1.0 / a))) ** (a * (p - 1.0) / (a - p))
    gamma = (a - n) * (p - 1.0) / (a - p)
    C = Bc * G ** ((a - 1.0) / (a - p))
    if a == n:
        return C, 1.0, Bc
    lam = ((a - n) * V / (gamma * C)) ** (1.0 / (gamma + 1.0))
    return (a - n) * V / lam + lam**gamma * C, lam, Bc


def proof_chain_report(
    f: TestFunction,
    g: TestFunction,
    norm: NormSpec,
    params: Params,
    scheme: QuadratureScheme | None = None,
    phi: AffineMap | None = None,
    tol: float = 2e-5,
) -> Report:
    """Termwise gaps of the transport proof; gaps are scaled by int h_p^r.

    With ``phi`` (an affine Brenier map pushing f^s onto g^s) every link is
    evaluated; without it the report is restricted to the links that do not
    involve the map.
    """
    n, p, a = params.n, params.p, params.a
    r, s, q = params.trace_exp, params.conformal_exp, params.q
    scheme = scheme or default_scheme(n)
    e = np.zeros(n)
    e[0] = 1.0
    H = hp(params, norm)
    th = energy_terms(H, norm, params, scheme)
    A = th.bulk_norm
    tf = energy_terms(f, norm, params, scheme)
    tg = energy_terms(g, norm, params, scheme)
    cf = (th.conformal_norm / tf.conformal_norm) ** (1.0 / s)
    cg = (th.conformal_norm / tg.conformal_norm) ** (1.0 / s)
    tf, tg = tf.scaled(cf, params), tg.scaled(cg, params)
    B, V, G = tf.boundary_norm, tf.bulk_norm, tf.grad_energy
    Vg, Wg = tg.bulk_norm, tg.weighted_mass
    kappa = (a - 1.0) * (p - 1.0) ** (p - 1.0) / (a - p) ** p
    rep = Report("transport_chain", params=params.to_dict())
    rep.environment["mode"] = "full" if phi is not None else "restricted"

    def add(cid, gap, kind="inequality", **terms):
        rep.add(Case(cid, gap=gap / A, tol=tol, kind=kind, terms=terms))

    if phi is not None:
        if not phi.is_brenier:
            raise TransportError("full mode needs a half-space preserving Brenier map")
        L = phi.L
        det = float(np.linalg.det(L))
        tr = float(np.trace(L))
        # the map must push f^s onto g^s: compare g with the exact push-forward
        gp = brenier_pair(f, phi, params)
        Zs = np.random.default_rng(0).uniform(-1.5, 1.5, size=(256, n))
        Zs[:, 0] = np.abs(Zs[:, 0])
        mismatch = float(np.max(np.abs(cg * g(Zs) - cf * gp(Zs)) / (cf * np.abs(gp(Zs)))))
        # cf and cg come from integrals known only to the scheme tolerance
        rep.add(Case("map_pushes_f_onto_g", gap=mismatch, tol=max(1e-10, scheme.tol_rel), kind="equality"))
        # (i) int g^r = int f^r det(D phi)^(1/a)
        add("use_brenier", Vg - V * det ** (1.0 / a), kind="equality", lhs=Vg, rhs=V * det ** (1.0 / a))
        # (ii) arithmetic-geometric step, pointwise and integrated
        ag = (tr + a - n) / a - det ** (1.0 / a)
        rep.add(Case("ag_pointwise", gap=ag, tol=tol, terms={"det": det, "trace": tr}))
        add("alek_laplacian", (a - n) * V + tr * V - a * Vg, lhs=a * Vg, rhs=(a - n) * V + tr * V)
        # (iii) integration by parts with psi = phi + e.z; laplacian of psi is tr L
        Lf, shift = L, phi.shift

        def ibp(Z):
            v, gr = f.value_and_grad(Z)
            v = cf * v
            gr = cf * gr
            av = np.abs(v)
            dpsi = Z @ Lf.T + shift + e
            return np.stack(
                [
                    av ** (r - 1.0) * np.sign(v) * np.einsum("ij,ij->i", gr, dpsi),
                    norm_eval(norm, dpsi) ** q * av**s,
                ],
                axis=-1,
            )

        tails = _guard(f, params)
        decay = f.tail(r - 1.0) + f.tail(1.0, gradient=True) - 1.0
        res = halfspace_integrate(ibp, n, scheme, decay=[decay, tails["||z+e||^q |f|^s"]],
                                  center=f.quadrature_center)
        I, Wpsi = (float(x) for x in res.value)
        bres = boundary_integrate(
            lambda Z: np.abs(cf * f(Z)) ** r * (Z @ Lf.T + shift + e)[:, 0], n, scheme, decay=f.tail(r),
            center=f.quadrature_center,
        )
        lap_int = tr * V
        add("ibp_identity", lap_int - (-r * I - float(bres.value)), kind="equality",
            lhs=lap_int, rhs=-r * I - float(bres.value))
        add("ibp_bound", (-r * I - B) - lap_int, lhs=lap_int, rhs=-r * I - B)
        # (iv) Hoelder, then the push-forward identity for the weighted mass
        holder_rhs = G ** (1.0 / p) * Wpsi ** (1.0 / q)
        add("holder", holder_rhs - (-I), lhs=-I, rhs=holder_rhs)
        add("pushforward_weighted", Wpsi - Wg, kind="equality", lhs=Wpsi, rhs=Wg)
    else:
        # Hoelder for the identity field z + e applied to f alone
        def ibp_id(Z):
            v, gr = f.value_and_grad(Z)
            v, gr = cf * v, cf * gr
            av = np.abs(v)
            return av ** (r - 1.0) * np.sign(v) * np.einsum("ij,ij->i", gr, Z + e)

        decay = f.tail(r - 1.0) + f.tail(1.0, gradient=True) - 1.0
        I = float(halfspace_integrate(ibp_id, n, scheme, decay=decay, center=f.quadrature_center).value)
        holder_rhs = G ** (1.0 / p) * tf.weighted_mass ** (1.0 / q)
        add("holder_identity_field", holder_rhs - (-I), lhs=-I, rhs=holder_rhs)
    # map-free consequence
    mixed = r * G ** (1.0 / p) * Wg ** (1.0 / q)
    add("transport_bound", -B + (a - n) * V + mixed - a * Vg, lhs=a * Vg, rhs=-B + (a - n) * V + mixed)
    # (v) Young, the dual inequality, and the non-homogeneous forms
    young1 = (a - p) / p * Wg + (p - 1.0) ** (p - 1.0) / (p * (a - p) ** (p - 1.0)) * G
    add("young1", young1 - G ** (1.0 / p) * Wg ** (1.0 / q), lhs=G ** (1.0 / p) * Wg ** (1.0 / q), rhs=young1)
    rhs_dual = (a - n) * V + kappa * G - B
    lhs_dual = a * Vg - (a - 1.0) * Wg
    add("dual", rhs_dual - lhs_dual, lhs=lhs_dual, rhs=rhs_dual)
    add("nonhomo1", (a - n) * V + kappa * G - A - B, rhs=(a - n) * V + kappa * G - A, lhs=B)
    lam_val, lam_opt, Bc = _lambda_bound(B, V, G, A, params)
    y2 = A + Bc * G ** ((a - 1.0) / (a - p))
    add("young2", y2 - kappa * G, lhs=kappa * G, rhs=y2)
    nh2 = (a - n) * V + Bc * G ** ((a - 1.0) / (a - p))
    add("nonhomo2", nh2 - B, lhs=B, rhs=nh2)
    add("lambda_bound", lam_val - B, lhs=B, rhs=lam_val, lambda_opt=lam_opt)
    rep.environment["scale_A"] = A
    return rep


# ---------------------------------------------------------------------------
# grids and the dilation refinement study

_MAX_PER_AXIS = {2: 32, 3: 8, 4: 4}


def per_axis_for_level(n: int, level: int) -> int:
    """Cells along t at grid level 1..3 (level 3 uses the full node budget)."""
    if level not in (1, 2, 3):
        raise ValueError("grid level must be 1, 2 or 3")
    return max(2, _MAX_PER_AXIS[n] >> (3 - level))


def extremal_density(params: Params, norm: NormSpec | None = None):
    H = hp(params, norm)
    s = params.conformal_exp
    return lambda Z: np.abs(H(Z)) ** s


def truncated_mass(measure: DiscreteMeasure, exact_total: float) -> float:
    """Relative mass missing from the grid (negative values are midpoint-rule excess)."""
    return 1.0 - measure.total / exact_total


def dilation_study(
    params: Params,
    lam: float = 1.25,
    levels=(2, 3),
    box: float = 6.0,
    scheme: QuadratureScheme | None = None,
    backend: str | None = None,
) -> Report:
    """Discrete plans between h_p^s and its push-forward by z -> lam z on two grids.

    Checks the barycentric map against lam*z on nodes whose image lies in the
    inner half of the box (the two densities lose different tail mass to the
    box, which bends the discrete map near its edge), and the Monge-Ampere
    residual of the fitted affine map on both grids.
    """
    n = params.n
    s = params.conformal_exp
    H = hp(params)
    phi = AffineMap.dilation(n, lam)
    g = brenier_pair(H, phi, params)
    F = extremal_density(params)
    G = lambda Z: np.abs(g(Z)) ** s
    S = energy_terms(H, NormSpec.euclidean(n), params, scheme).conformal_norm
    rep = Report("transport_dilation", params=params.to_dict())
    residuals = []
    for level in levels:
        N = per_axis_for_level(n, level)
        mu = grid_measure(F, n, N, box, box)
        nu = grid_measure(G, n, N, box, box).normalized(mu.total)
        plan = solve_discrete_ot(mu, nu, backend=backend)
        inside = np.all(np.abs(lam * mu.nodes) <= box / 2, axis=1)
        nodal = np.abs(plan.map_estimate[inside] - lam * mu.nodes[inside]).max(axis=1)
        err = float(nodal.max())
        h = mu.spacing
        rep.add(Case(f"barycentric_error_level{level}", gap=h - err, tol=0.0,
                     terms={"error": err, "mean_error": float(np.average(nodal, weights=mu.weights[inside])),
                            "spacing": h, "nodes": len(mu.weights),
                            "truncated_mass": truncated_mass(mu, S), "pivots": plan.iterations}))
        fit = fit_affine_map(plan)
        core = mu.nodes[np.all(np.abs(mu.nodes) <= box / (2 * lam), axis=1)]
        det = float(np.linalg.det(fit.L))
        res = float(np.max(np.abs(F(core) - G(fit(core)) * det) / F(core)))
        residuals.append(res)
        rep.environment[f"fitted_map_level{level}"] = {"L": fit.L.tolist(), "shift": fit.shift.tolist()}
        rep.add(Case(f"fitted_residual_level{level}", gap=res, tol=1.0, kind="equality",
                     terms={"residual": res}))
    # with fewer than 4 cells along t the fitted map is not yet in the refinement regime
    if per_axis_for_level(n, levels[0]) >= 4:
        rep.add(Case("fitted_residual_decreases", gap=residuals[0] - residuals[-1], tol=0.0,
                     terms={"coarse": residuals[0], "fine": residuals[-1]}))
    else:
        rep.environment["fitted_residuals"] = residuals
    # target discretised on the dilated grid: equal cell masses, so the plan is the exact matching
    N = per_axis_for_level(n, levels[-1])
    mu = grid_measure(F, n, N, box, box)
    nu = grid_measure(G, n, N, lam * box, lam * box)
    rep.add(Case("dilated_grid_masses", gap=float(np.max(np.abs(nu.weights - mu.weights)) / mu.weights.max()),
                 tol=1e-12, kind="equality"))
    plan = solve_discrete_ot(mu, nu, backend=backend)
    # node i of mu and node i of nu are the same grid cell, so the exact plan is diagonal;
    # rounding in the simplex leaves O(eps) mass elsewhere, large only relative to tiny cells
    off = float(plan.mass[plan.rows != plan.cols].sum()) / plan.mass.sum()
    err = float(np.abs(plan.map_estimate - lam * mu.nodes).max())
    rep.add(Case("dilated_grid_exact_map", gap=off, tol=1e-12, kind="equality",
                 terms={"off_matching_mass": off, "max_nodal_error": err, "nodes": len(mu.weights),
                        "pivots": plan.iterations}))
    return rep
