"""Perturbative extremality tests and derivative-free maximisation of quotients.

Both drivers are deterministic given their seed: random directions and
initial simplices come from the xorshift64* stream in ``rng``, and
Nelder-Mead itself is deterministic.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .constants import Params, affine_sharp_constant
from .extremals import PerturbedExtremal, RationalBump, SGLMatrix, TestFunction, Transformed, hp
from .functionals import affine_gn_quotient, gn_quotient, sharp_constant_gn
from .norms import NormSpec
from .quadrature import IntegrabilityError, QuadratureError, QuadratureScheme
from .report import Case, Report
from .rng import XorShift64Star

__all__ = [
    "QUOTIENTS",
    "FAMILIES",
    "SearchConfig",
    "SearchResult",
    "quotient_value",
    "sharp_value",
    "default_norm",
    "family_member",
    "perturbation_test",
    "optimize_family",
]

QUOTIENTS = ("gn", "affine")
FAMILIES = ("extremal_orbit", "rational_bump", "fixed")


def default_norm(which: str, params: Params, norm: NormSpec | None = None) -> NormSpec:
    """The norm whose h_p is extremal for the quotient: Euclidean for gn, split for affine."""
    if norm is not None:
        return norm
    if which == "affine":
        return NormSpec.split_q(params.q, params.n - 1)
    return NormSpec.euclidean(params.n)


def quotient_value(
    f: TestFunction,
    which: str,
    params: Params,
    norm: NormSpec | None = None,
    scheme: QuadratureScheme | None = None,
    lam_mix: float = 0.5,
) -> float:
    if which == "gn":
        return gn_quotient(f, default_norm(which, params, norm), params, scheme)
    if which == "affine":
        return affine_gn_quotient(f, params, lam_mix, scheme)
    raise ValueError(f"unknown quotient {which!r}")


def sharp_value(which: str, params: Params, norm: NormSpec | None = None, scheme=None) -> float:
    if which == "gn":
        return sharp_constant_gn(default_norm(which, params, norm), params, scheme)
    if which == "affine":
        return affine_sharp_constant(params)
    raise ValueError(f"unknown quotient {which!r}")


# ---------------------------------------------------------------------------
# perturbations


def _direction(rng: XorShift64Star, n: int):
    """Random bump: center in the unit half-ball region, radius in [0.3, 1.2]."""
    c = rng.uniform(-1.0, 1.0, size=n)
    c[0] = abs(c[0]) * 0.8
    return c, rng.uniform(0.3, 1.2), rng.choice_sign()


def perturbation_test(
    f: TestFunction,
    quotient: str,
    params: Params,
    directions: int = 50,
    eps_list=(0.05, 0.1),
    norm: NormSpec | None = None,
    scheme: QuadratureScheme | None = None,
    seed: int = 0,
    tol: float = 1e-6,
    lam_mix: float = 0.5,
) -> Report:
    """Q(f (1 + eps rho)) - Q(f) for random Gaussian bumps rho.

    At a maximiser every delta is <= tol; the ratio of deltas between the two
    largest eps values is reported against the quadratic prediction.
    """
    rng = XorShift64Star(seed)
    q0 = quotient_value(f, quotient, params, norm, scheme, lam_mix)
    rep = Report("perturbation", params=params.to_dict())
    rep.environment.update({"seed": seed, "quotient": quotient, "base_value": q0})
    eps_list = sorted(float(e) for e in eps_list)
    skipped = 0
    for k in range(directions):
        center, radius, sign = _direction(rng, params.n)
        deltas = []
        for eps in eps_list:
            if eps == 0.0:
                deltas.append(0.0)
                continue
            g = PerturbedExtremal(f, center, radius, sign * eps)
            try:
                deltas.append(quotient_value(g, quotient, params, norm, scheme, lam_mix) - q0)
            except (IntegrabilityError, QuadratureError) as exc:
                deltas.append(math.nan)
                rep.environment.setdefault("skipped", []).append({"direction": k, "eps": eps, "error": str(exc)})
                skipped += 1
        inputs = {"center": center.tolist(), "radius": radius, "sign": sign, "eps": eps_list}
        terms = {"deltas": deltas}
        if len(eps_list) >= 2 and eps_list[-2] > 0 and all(math.isfinite(d) for d in deltas[-2:]) and deltas[-2] != 0:
            terms["ratio"] = deltas[-1] / deltas[-2]
            terms["quadratic_ratio"] = (eps_list[-1] / eps_list[-2]) ** 2
        worst = max((d for d in deltas if math.isfinite(d)), default=-math.inf)
        if not math.isfinite(worst):
            continue
        # the base is a maximiser iff every delta is nonpositive
        rep.add(Case(f"direction_{k}", gap=-worst, tol=tol, inputs=inputs, terms=terms))
    rep.environment["skipped_count"] = skipped
    return rep


# ---------------------------------------------------------------------------
# family search


@dataclass
class SearchConfig:
    family: str
    bounds: list
    max_evals: int = 400
    seed: int = 0
    tol: float = 1e-10
    start: list | None = None
    restarts: int = 3
    quotient: str = "gn"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]
        if not all(math.isfinite(lo) and math.isfinite(hi) and lo <= hi for lo, hi in self.bounds):
            raise ValueError("bounds must be finite with lo <= hi")
        if self.start is not None:
            self.start = [float(x) for x in self.start]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, s: str) -> "SearchConfig":
        return cls.from_dict(json.loads(s))


def family_member(family: str, x, params: Params, norm: NormSpec | None = None) -> TestFunction:
    """Decode a parameter vector.

    extremal_orbit: (log c, log lam, x0...) acting on h_p by scaling and translation.
    rational_bump:  (alpha, beta, x0...).
    fixed:          the extremal itself; x is empty.
    """
    n = params.n
    x = np.asarray(x, float)
    if family == "extremal_orbit":
        c, lam = math.exp(x[0]), math.exp(x[1])
        return Transformed(hp(params, norm), c, SGLMatrix.scaling(n, lam), x[2:2 + n - 1])
    if family == "rational_bump":
        return RationalBump(n, x[0], x[1], x[2:2 + n - 1] if len(x) > 2 else None, params)
    if family == "fixed":
        return hp(params, norm)
    raise ValueError(f"unknown family {family!r}")


@dataclass
class SearchResult:
    best_params: list
    best_value: float
    evaluations: int
    exhausted: bool
    trace: list = field(default_factory=list)
    sharp: float | None = None

    def __iter__(self):
        yield self.best_params
        yield self.best_value

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = len(self.best_params)
        w.writerow(["eval"] + [f"x{i}" for i in range(dim)] + ["value"])
        for row in self.trace:
            w.writerow([row[0]] + [repr(float(v)) for v in row[1]] + [repr(float(row[2]))])
        return buf.getvalue()


class _Budget(Exception):
    pass


def optimize_family(
    config: SearchConfig,
    quotient: str | None = None,
    params: Params | None = None,
    norm: NormSpec | None = None,
    scheme: QuadratureScheme | None = None,
    lam_mix: float = 0.5,
) -> SearchResult:
    """Nelder-Mead maximisation of a quotient over a parametric family with restarts."""
    if params is None:
        raise ValueError("params required")
    quotient = quotient or config.quotient
    norm = default_norm(quotient, params, norm)
    bounds = config.bounds
    dim = len(bounds)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    trace: list = []
    best = {"x": None, "v": -math.inf}

    def value(x):
        if len(trace) >= config.max_evals:
            raise _Budget
        x = np.clip(np.asarray(x, float), lo, hi)
        try:
            v = quotient_value(family_member(config.family, x, params, norm), quotient, params, norm, scheme, lam_mix)
        except (ValueError, IntegrabilityError, QuadratureError, ZeroDivisionError):
            v = -math.inf
        trace.append((len(trace), x.tolist(), v))
        if v > best["v"]:
            best["x"], best["v"] = x.tolist(), v
        return -v if math.isfinite(v) else math.inf

    start = np.array(config.start, float) if config.start is not None else 0.5 * (lo + hi)
    exhausted = False
    if dim == 0:
        value(start)
    else:
        rng = XorShift64Star(config.seed)
        width = np.where(hi > lo, 0.1 * (hi - lo), 0.0)
        x0 = start
        for k in range(1 + config.restarts):
            jitter = 1.0 if k == 0 else rng.uniform(0.5, 1.5, size=dim)
            simplex = [x0]
            for i in range(dim):
                v = x0.copy()
                step = width[i] * (jitter if k == 0 else jitter[i])
                v[i] = v[i] + step if v[i] + step <= hi[i] else v[i] - step
                simplex.append(v)
            try:
                minimize(
                    value,
                    x0,
                    method="Nelder-Mead",
                    bounds=list(zip(lo, hi)),
                    options={"initial_simplex": np.array(simplex), "xatol": 1e-8, "fatol": config.tol,
                             "maxfev": config.max_evals},
                )
            except _Budget:
                exhausted = True
                break
            if best["x"] is None:
                break
            x0 = np.array(best["x"])
    sharp = None
    try:
        sharp = sharp_value(quotient, params, norm, scheme)
    except QuadratureError:
        pass
    return SearchResult(best["x"] if best["x"] is not None else start.tolist(), best["v"], len(trace),
                        exhausted, trace, sharp)
