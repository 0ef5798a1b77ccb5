"""Named verification suites behind the command line.

Each builder returns a Report whose cases are in a fixed order and whose
random inputs come from a seeded xorshift64* stream, so equal arguments
give equal reports apart from wall time.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .bodies import ConvexBody, centroid_body, centroid_support, volume
from .constants import Params, affine_sharp_constant, normalization_constants
from .extremals import (
    FiniteSum,
    PerturbedExtremal,
    RationalBump,
    SGLMatrix,
    TestFunction,
    Transformed,
    dilate,
    hp,
    orbit_apply,
    translate,
)
from .functionals import (
    affine_gn_quotient,
    ap_functional,
    chain_dominance,
    direction_min,
    dual_gap,
    energy_terms,
    gn_quotient,
    kp_bodies,
    kp_body_identities,
    split_volume_check,
)
from .norms import NormSpec, dual_norm_eval, norm_eval
from .quadrature import LEVEL_NODES, QuadratureError, QuadratureScheme, integrate_at_level
from .report import Case, Report
from .rng import XorShift64Star
from .search import SearchConfig, default_norm, optimize_family, perturbation_test
from . import transport as tr

__all__ = [
    "random_sgl",
    "random_function",
    "random_polytope",
    "random_ellipsoid",
    "constants_suite",
    "gn_suite",
    "dual_suite",
    "affine_suite",
    "centroid_suite",
    "transport_suite",
    "search_suite",
    "hierarchy_check",
    "quadrature_budget",
    "doubling_sequence",
]


def _rel(x: float, ref: float) -> float:
    return (x - ref) / abs(ref)


def _guarded(rep: Report, cid: str, fn, prefix: str = "", inputs: dict | None = None):
    """Extend rep by fn(); a quadrature failure becomes a failing case instead of an exception."""
    try:
        sub = fn()
    except QuadratureError as exc:
        rep.add(Case(cid, gap=math.nan, tol=0.0, inputs=inputs or {}, terms={"error": str(exc)}))
        return None
    if isinstance(sub, Report):
        rep.extend(sub, prefix=prefix)
    else:
        rep.add(sub)
    return sub


def _env(scheme: QuadratureScheme | None, seed: int | None, **extra) -> dict:
    env = {"seed": seed, "scheme": scheme.to_dict() if scheme is not None else None, "kernels": kernels.BACKEND}
    env.update(extra)
    return env


# ---------------------------------------------------------------------------
# random inputs


def random_sgl(n: int, rng: XorShift64Star, spread: float = 0.4) -> SGLMatrix:
    return SGLMatrix.random(n, rng, spread)


def _bump_exponent_floor(params: Params) -> float:
    """Smallest isotropic decay for which every energy term is finite."""
    n, p, r, s, q = params.n, params.p, params.trace_exp, params.conformal_exp, params.q
    return max(n / r, n / p - 1.0, (n + q) / s, (n - 1) / r)


def random_function(params: Params, rng: XorShift64Star, norm: NormSpec | None = None) -> TestFunction:
    """One of: an orbit image of h_p, a rational bump, a bump-perturbed orbit image, a positive sum."""
    n = params.n
    kind = rng.integers(0, 4)
    H = hp(params, norm)

    def orbit():
        x0 = rng.uniform(-0.5, 0.5, size=n - 1)
        return orbit_apply(H, math.exp(rng.uniform(-0.3, 0.3)), random_sgl(n, rng), x0)

    if kind == 0:
        return orbit()
    if kind == 1:
        # a unit margin over the threshold keeps the tails within reach of the graded rule
        lo = _bump_exponent_floor(params) + 1.0
        return RationalBump(n, rng.uniform(lo, lo + 2.0), rng.uniform(lo, lo + 2.0),
                            rng.uniform(-0.5, 0.5, size=n - 1), params)
    if kind == 2:
        c = rng.uniform(-1.0, 1.0, size=n)
        c[0] = abs(c[0])
        # small wide bumps: no critical points, where |grad f|^p would be kinked
        return PerturbedExtremal(orbit(), c, rng.uniform(0.6, 1.2), rng.uniform(-0.15, 0.15))
    return FiniteSum([orbit(), orbit()], [1.0, rng.uniform(0.2, 1.0)])


def random_polytope(dim: int, rng: XorShift64Star, count: int | None = None) -> ConvexBody:
    """Symmetric hull of random points around a random ellipsoidal shape."""
    count = count or (4 if dim == 2 else 7)
    while True:
        V = rng.normal(size=(count, dim))
        V *= rng.uniform(0.5, 1.5, size=(count, 1)) / np.linalg.norm(V, axis=1, keepdims=True)
        try:
            return ConvexBody.polytope(V)
        except Exception:
            continue


def random_ellipsoid(dim: int, rng: XorShift64Star) -> ConvexBody:
    A = np.eye(dim) + rng.uniform(-0.5, 0.5, size=(dim, dim))
    return ConvexBody.ellipsoid(A @ A.T + 0.1 * np.eye(dim))


# ---------------------------------------------------------------------------
# suites


def constants_suite(params: Params) -> Report:
    C = normalization_constants(params)
    rep = Report("constants", params=params.to_dict())
    rep.environment.update({"constants": C.to_dict(), "trace_exp": params.trace_exp,
                            "conformal_exp": params.conformal_exp, "decay": params.decay})
    rep.add(Case("sharp_affine_constant_positive", gap=C.D_affine, tol=0.0, terms={"D_affine": C.D_affine}))
    return rep


def gn_suite(params: Params, norm: NormSpec, scheme: QuadratureScheme, seed: int = 0, tol: float = 1e-6,
             samples: int = 5) -> Report:
    """Gradient identity and equality at h_p, invariances, and random functions below the constant."""
    rng = XorShift64Star(seed)
    rep = Report("gn", params=params.to_dict(), environment=_env(scheme, seed, norm=norm.to_dict()))
    H = hp(params, norm)
    th = energy_terms(H, norm, params, scheme)
    k = params.decay
    rep.add(Case("gradient_identity", gap=_rel(th.grad_energy, k**params.p * th.bulk_norm), tol=1e-4,
                 kind="equality", terms=th.fragments()))
    D = gn_quotient(H, norm, params, terms=th)
    rep.environment["sharp_constant"] = D
    lam = math.exp(rng.uniform(-0.5, 0.5))
    x0 = rng.uniform(-1.0, 1.0, size=params.n - 1)
    c = rng.uniform(0.3, 3.0)
    for cid, g in (("dilation", dilate(H, lam, params)), ("translation", translate(H, x0)),
                   ("scalar", Transformed(H, c, SGLMatrix.identity(params.n)))):
        rep.add(Case(f"invariance_{cid}", gap=_rel(gn_quotient(g, norm, params, scheme), D), tol=tol,
                     kind="equality", inputs={"f": g.to_dict()}))
    rep.extend(quadrature_budget(th, scheme), prefix="quadrature_extremal_")
    rep.extend(doubling_sequence(H, norm, params, scheme), prefix="quadrature_extremal_")
    for i in range(samples):
        f = random_function(params, rng, norm)
        _guarded(rep, f"random_below_constant_{i}", lambda: _below(f, norm, params, scheme, D, tol, i),
                 inputs={"f": f.to_dict()})
        _guarded(rep, f"quadrature_random{i}",
                 lambda: quadrature_budget(energy_terms(f, norm, params, scheme), scheme), f"quadrature_random{i}_",
                 {"f": f.to_dict()})
    return rep


def quadrature_budget(terms, scheme: QuadratureScheme) -> Report:
    """Each doubling error estimate of an energy evaluation against the scheme tolerance."""
    rep = Report("quadrature")
    for frag in terms.fragments():
        rep.add(Case(f"{frag['term']}_err", gap=scheme.tol_rel - frag["err"], tol=0.0,
                     terms={"err": frag["err"], "tol_rel": scheme.tol_rel}))
    return rep


# differences this small are rounding, not discretisation
_ROUNDING_FLOOR = 1e-13


def doubling_sequence(f: TestFunction, norm: NormSpec, params: Params, scheme: QuadratureScheme,
                      extra: int = 2) -> Report:
    """Successive-level differences of the bulk energy integrals never grow."""
    n, p, r = params.n, params.p, params.trace_exp

    def bulk(Z):
        v, g = f.value_and_grad(Z)
        return np.stack([np.abs(v) ** r, dual_norm_eval(norm, g) ** p], axis=-1)

    top = min(scheme.max_level, scheme.level + extra, len(LEVEL_NODES) - 1)
    vals = [np.asarray(integrate_at_level(bulk, n, L, scheme)) for L in range(scheme.level - 1, top + 1)]
    errs = [float(np.max(np.abs(b - a) / np.abs(b))) for a, b in zip(vals, vals[1:])]
    rep = Report("doubling")
    for k in range(1, len(errs)):
        prev, cur = max(errs[k - 1], _ROUNDING_FLOOR), max(errs[k], _ROUNDING_FLOOR)
        rep.add(Case(f"doubling_level{scheme.level + k}", gap=prev - cur, tol=0.0,
                     terms={"previous_err": errs[k - 1], "err": errs[k]}))
    return rep


def _below(f, norm, params, scheme, D, tol, i) -> Case:
    Q = gn_quotient(f, norm, params, scheme)
    return Case(f"random_below_constant_{i}", gap=-_rel(Q, D), tol=tol, inputs={"f": f.to_dict()},
                terms={"quotient": Q, "sharp": D})


def dual_suite(params: Params, norm: NormSpec, scheme: QuadratureScheme, seed: int = 0, tol: float = 2e-5,
               pairs: int = 50) -> Report:
    rng = XorShift64Star(seed)
    rep = Report("dual", params=params.to_dict(), environment=_env(scheme, seed, norm=norm.to_dict()))
    cache: dict = {}
    H = hp(params, norm)
    rep.extend(dual_gap(H, H, norm, params, scheme, tol, expect_equality=True, cache=cache), prefix="extremal_")
    for i in range(pairs):
        f = random_function(params, rng, norm)
        g = random_function(params, rng, norm)
        _guarded(rep, f"pair{i}_dual_gap", lambda: dual_gap(f, g, norm, params, scheme, tol, cache=cache), f"pair{i}_",
                 {"f": f.to_dict(), "g": g.to_dict()})
    return rep


def affine_law(params: Params, c: float, A: SGLMatrix) -> float:
    """Factor by which A_p changes under f -> c f(A(t, x - x0))."""
    n, p, a = params.n, params.p, params.a
    return abs(c) * abs(A.det_B) ** (-(a - p) / (p * (a - 1))) * A.lam ** ((p - 1) * (a - n) / (p * (a - 1)))


def affine_suite(params: Params, scheme: QuadratureScheme, lam_mix: float = 0.5, seed: int = 0,
                 tol: float = 1e-3, actions: int = 3, samples: int = 1, shears: int = 2) -> Report:
    rng = XorShift64Star(seed)
    rep = Report("affine", params=params.to_dict(), environment=_env(scheme, seed, lam_mix=lam_mix))
    H = hp(params, default_norm("affine", params))
    D = affine_sharp_constant(params)
    Q, at, _ = affine_gn_quotient(H, params, lam_mix, scheme, detail=True)
    rep.add(Case("equality_at_extremal", gap=_rel(Q, D), tol=tol, kind="equality",
                 terms={"quotient": Q, "closed_form": D}))
    rep.add(Case("lambda0_at_extremal", gap=at.lambda0 - 1.0, tol=1e-4, kind="equality"))
    rep.add(Case("tilt_at_extremal", gap=float(np.abs(at.a0).max()), tol=1e-6, kind="equality",
                 terms={"a0": at.a0}))
    for i in range(actions):
        A = random_sgl(params.n, rng)
        c = math.exp(rng.uniform(-0.3, 0.3))
        g = orbit_apply(H, c, A, rng.uniform(-0.5, 0.5, size=params.n - 1))
        Qg, ag, _ = affine_gn_quotient(g, params, lam_mix, scheme, detail=True)
        rep.add(Case(f"orbit_invariance_{i}", gap=_rel(Qg, Q), tol=1e-4, kind="equality", inputs={"f": g.to_dict()}))
        law = affine_law(params, c, A) * at.ap_val
        rep.add(Case(f"orbit_transform_law_{i}", gap=_rel(ag.ap_val, law), tol=1e-4, kind="equality",
                     terms={"ap": ag.ap_val, "predicted": law}))
    for i in range(shears):
        abar = rng.uniform(-0.5, 0.5, size=params.n - 1)
        g = Transformed(H, 1.0, SGLMatrix(1.0, abar, np.eye(params.n - 1)))
        a0 = direction_min(g, params, scheme).a0
        rep.add(Case(f"shear_recovery_{i}", gap=float(np.abs(a0 - abar).max()), tol=1e-5, kind="equality",
                     inputs={"shear": abar}, terms={"a0": a0}))
    for i in range(samples):
        f = random_function(params, rng)
        _guarded(rep, f"random{i}_hierarchy", lambda: hierarchy_check(f, params, scheme, lam_mix), f"random{i}_",
                 {"f": f.to_dict()})
    return rep


def hierarchy_check(f: TestFunction, params: Params, scheme: QuadratureScheme, lam_mix: float = 0.5,
                    tol: float = 1e-4) -> Report:
    """E_p^p <= int |grad_x f|^p, A_p^p <= int |d_t f|^p + |grad_x f|^p, and the split-norm chain."""
    p = params.p
    at = ap_functional(f, params, lam_mix, scheme)
    rep = Report("hierarchy", params=params.to_dict())
    inputs = {"f": f.to_dict()}
    rep.add(Case("ep_below_x_energy", gap=(at.dx_p - at.ep**p) / at.dx_p, tol=tol, inputs=inputs,
                 terms={"ep_p": at.ep**p, "x_energy": at.dx_p}))
    full = at.dt_p + at.dx_p
    rep.add(Case("ap_below_full_energy", gap=(full - at.ap_val**p) / full, tol=tol, inputs=inputs,
                 terms={"ap_p": at.ap_val**p, "full_energy": full}))
    rep.extend(chain_dominance(f, params, scheme=scheme, tol=tol, terms=at))
    return rep


def centroid_suite(params: Params, scheme: QuadratureScheme, seed: int = 0, tol: float = 1e-4,
                   polytopes: int = 4, ellipsoids: int = 2) -> Report:
    """Gamma_p of the ball, centroid volume inequality, and the body identities at h_p."""
    rng = XorShift64Star(seed)
    p = params.p
    rep = Report("centroid", params=params.to_dict(), environment=_env(scheme, seed))
    for dim in sorted({2, 3, params.n - 1} - {1}):
        B = ConvexBody.ball(dim)
        U = rng.normal(size=(16, dim))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        hv = centroid_support(B, p)(U)
        rep.add(Case(f"ball_fixed_dim{dim}", gap=float(np.abs(hv - 1.0).max()), tol=1e-6, kind="equality"))
        for i in range(polytopes):
            K = random_polytope(dim, rng)
            vK, vG = volume(K), volume(centroid_body(K, p))
            rep.add(Case(f"volume_increase_dim{dim}_{i}", gap=vG - vK, tol=1e-6, terms={"vol_K": vK, "vol_GK": vG}))
        for i in range(ellipsoids):
            E = random_ellipsoid(dim, rng)
            vE, vG = volume(E), volume(centroid_body(E, p))
            rep.add(Case(f"volume_equality_ellipsoid_dim{dim}_{i}", gap=_rel(vG, vE), tol=1e-3, kind="equality"))
    H = hp(params)
    kb = kp_bodies(H, params, scheme)
    rep.extend(kp_body_identities(H, params, scheme, tol, bodies=kb))
    at = ap_functional(H, params, 0.5, scheme)
    rep.add(split_volume_check(kb, params, at.a0, tol))
    return rep


def transport_suite(params: Params, norm: NormSpec, scheme: QuadratureScheme, grid_level: int = 2,
                    seed: int = 0, tol: float = 2e-5, lam: float = 1.25) -> Report:
    rng = XorShift64Star(seed)
    n = params.n
    rep = Report("transport", params=params.to_dict(), environment=_env(scheme, seed, grid_level=grid_level))
    H = hp(params, norm)
    # continuous chain: identity, dilation, and a random pair without a map
    rep.extend(tr.proof_chain_report(H, H, norm, params, scheme, tr.AffineMap.identity(n), tol), "identity_")
    phi = tr.AffineMap.dilation(n, lam)
    g = tr.brenier_pair(H, phi, params)
    # unlike f = g = h_p, the dilated pair has no exact cancellation below the quadrature tolerance
    dil = tr.proof_chain_report(H, g, norm, params, scheme, phi, max(tol, scheme.tol_rel))
    rep.extend(dil, "dilation_")
    ag = next(c for c in dil.cases if c.id == "ag_pointwise")
    if params.a > n:
        rep.add(Case("dilation_ag_strict", gap=ag.gap, tol=0.0, terms={"ag_gap": ag.gap}))
        rep.cases[-1].passed = ag.gap > 0
    f1, g1 = random_function(params, rng, norm), random_function(params, rng, norm)
    _guarded(rep, "random_chain", lambda: tr.proof_chain_report(f1, g1, norm, params, scheme, None, tol), "random_",
             {"f": f1.to_dict(), "g": g1.to_dict()})
    rep.extend(tr.ag_check(params, np.random.default_rng(seed)))
    # discrete plans
    N = tr.per_axis_for_level(n, grid_level)
    box = 6.0
    F = tr.extremal_density(params, norm)
    mu = tr.grid_measure(F, n, N, box, box)
    h = mu.spacing
    ident = tr.solve_discrete_ot(mu, mu)
    rep.add(Case("plan_identity_cost", gap=ident.cost, tol=1e-14, kind="equality"))
    rep.add(Case("plan_identity_map", gap=float(np.abs(ident.map_estimate - mu.nodes).max()), tol=h, kind="equality"))
    v = np.zeros(n)
    v[1:] = rng.uniform(-0.5, 0.5, size=n - 1)
    nu = mu.translated(v)
    sh = tr.solve_discrete_ot(mu, nu)
    rep.add(Case("plan_translation_map", gap=float(np.abs(sh.map_estimate - (mu.nodes + v)).max()), tol=h,
                 kind="equality", inputs={"v": v}))
    rep.add(Case("plan_translation_marginals", gap=sh.marginal_error(), tol=1e-10, kind="equality"))
    rep.add(Case("plan_translation_cyclic_monotone", gap=-tr.cyclic_monotonicity(sh, np.random.default_rng(seed)),
                 tol=1e-12))
    rep.extend(tr.pushforward_check(sh, lambda Z: np.ones(len(Z)), "constant", tol=1e-14))
    rep.extend(tr.pushforward_check(sh, lambda Z: Z @ np.arange(1.0, n + 1.0), "linear", tol=1e-10))
    W = energy_terms(H, norm, params, scheme)
    b = lambda Z: norm_eval(norm, Z + np.eye(n)[0]) ** params.q
    pw = tr.pushforward_check(ident, b, "weighted", tol=h)
    c = pw.cases[0]
    grid_avg = c.terms["target_side"] / mu.total
    rep.add(Case("weighted_mass_vs_quadrature", gap=_rel(grid_avg, W.weighted_mass / W.conformal_norm), tol=h,
                 kind="equality", terms={"grid_average": grid_avg, "spacing": h}))
    Fd = tr.extremal_density(params, norm)
    s = params.conformal_exp
    Gd = lambda Z: np.abs(g(Z)) ** s
    sample = np.abs(rng.normal(size=(64, n)))
    rep.extend(tr.monge_ampere_residual(tr.AffineMap.identity(n), Fd, Fd, sample), "identity_")
    rep.extend(tr.monge_ampere_residual(phi, Fd, Gd, sample), "dilation_")
    levels = (max(1, grid_level - 1), grid_level) if grid_level > 1 else (1, 2)
    rep.extend(tr.dilation_study(params, lam, levels, box, scheme))
    return rep


def search_suite(params: Params, quotient: str, scheme: QuadratureScheme, seed: int = 0, directions: int = 50,
                 eps_list=(0.05, 0.1), config: SearchConfig | None = None, tol: float = 1e-6,
                 lam_mix: float = 0.5, norm: NormSpec | None = None):
    """Perturbations at h_p, then a family search; returns (report, search result)."""
    norm = default_norm(quotient, params, norm)
    rep = Report("search", params=params.to_dict(), environment=_env(scheme, seed, quotient=quotient))
    H = hp(params, norm)
    rep.extend(perturbation_test(H, quotient, params, directions, eps_list, norm, scheme, seed, tol, lam_mix))
    zero = perturbation_test(H, quotient, params, 1, (0.0,), norm, scheme, seed, 0.0, lam_mix)
    rep.add(Case("zero_perturbation", gap=zero.cases[0].gap, tol=0.0, kind="equality"))
    config = config or SearchConfig("extremal_orbit", [(-1.0, 1.0)] * (params.n + 1), max_evals=150, seed=seed,
                                    quotient=quotient)
    res = optimize_family(config, quotient, params, norm, scheme, lam_mix)
    rep.environment["search"] = {"config": config.to_dict(), "best_params": res.best_params,
                                 "best_value": res.best_value, "evaluations": res.evaluations,
                                 "exhausted": res.exhausted, "sharp": res.sharp}
    if config.family == "extremal_orbit":
        rep.add(Case("orbit_plateau", gap=_rel(res.best_value, res.sharp), tol=1e-5, kind="equality"))
    else:
        rep.add(Case(f"{config.family}_below_constant", gap=-_rel(res.best_value, res.sharp), tol=1e-4))
    return rep, res
