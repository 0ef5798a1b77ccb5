"""Acceptance run: one PASS/FAIL line per criterion, printed as it is graded.

The n = 4 set runs with reduced sample counts unless pytest is given
--full-acceptance; the printed line says which counts were used.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest

from sharptrace import suites
from sharptrace.constants import affine_sharp_constant, make_params
from sharptrace.extremals import SGLMatrix, Transformed, dilate, hp, translate
from sharptrace.functionals import affine_gn_quotient, energy_terms, gn_quotient
from sharptrace.norms import NormSpec
from sharptrace.quadrature import default_scheme
from sharptrace.search import SearchConfig, default_norm, optimize_family, perturbation_test

SETS = [(3, 2.0, 3.0), (3, 2.0, 4.0), (2, 1.5, 2.0), (4, 2.0, 4.5)]
LOW = [s for s in SETS if s[0] <= 3]

FULL = {"pairs": 50, "actions": 20, "samples": 20, "directions": 50, "evals": 150}
# a single random-function hierarchy evaluation costs about 100 s at n = 4
REDUCED_N4 = {"pairs": 5, "actions": 3, "samples": 2, "directions": 5, "evals": 20}
# an affine quotient evaluation costs about 3 s at n = 3
AFFINE_N3_DIRECTIONS = 10


def _counts(n, full):
    return FULL if (n < 4 or full) else REDUCED_N4


def _scope(full):
    return "spec counts at every set" if full else f"n=4 reduced to {REDUCED_N4}"


@pytest.fixture
def announce(capsys):
    def emit(k, ok, text):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k}: {text}")
    return emit


def _params(s):
    return make_params(*s)


def _worst(cases):
    """Largest violation; NaN gaps (guarded failures) dominate."""
    out = -math.inf
    for c in cases:
        if not math.isfinite(c.gap):
            return math.nan
        out = max(out, abs(c.gap) if c.kind == "equality" else -c.gap)
    return out


def _failed(cases):
    return [c.id for c in cases if not c.passed]


@lru_cache(maxsize=None)
def _affine(s, full):
    P = _params(s)
    k = _counts(P.n, full)
    t0 = time.perf_counter()
    rep = suites.affine_suite(P, default_scheme(P.n), 0.5, seed=0, actions=k["actions"], samples=k["samples"],
                              shears=5)
    return rep, time.perf_counter() - t0


def test_criterion_1_affine_constant(announce):
    rows, ok = [], True
    for s in SETS:
        P = _params(s)
        t0 = time.perf_counter()
        Q = affine_gn_quotient(hp(P, default_norm("affine", P)), P, 0.5, default_scheme(P.n))
        dt = time.perf_counter() - t0
        D = affine_sharp_constant(P)
        rel = abs(Q - D) / D
        budget = 120.0 if P.n <= 3 else 900.0
        good = rel <= 1e-3 and dt < budget
        ok &= good
        rows.append(f"{s}: rel {rel:.1e} in {dt:.0f}s/{budget:.0f}s")
    announce(1, ok, "; ".join(rows))
    assert ok


def test_criterion_2_gradient_identity(announce):
    rows, ok = [], True
    for s in SETS:
        P = _params(s)
        n = P.n
        norms = {"l2": NormSpec.euclidean(n), "l3": NormSpec.lq(3.0, n), "split": NormSpec.split_q(P.q, n - 1)}
        worst = 0.0
        for name, norm in norms.items():
            th = energy_terms(hp(P, norm), norm, P, default_scheme(n))
            ref = P.decay**P.p * th.bulk_norm
            rel = abs(th.grad_energy - ref) / ref
            worst = max(worst, rel)
            ok &= rel <= 1e-4
        rows.append(f"{s}: worst {worst:.1e}")
    announce(2, ok, "norms l2, l3, split; " + "; ".join(rows))
    assert ok


def test_criterion_3_dual_principle(announce, full_acceptance):
    rows, ok = [], True
    for s in SETS:
        P = _params(s)
        pairs = _counts(P.n, full_acceptance)["pairs"]
        rep = suites.dual_suite(P, NormSpec.euclidean(P.n), default_scheme(P.n), seed=0, pairs=pairs)
        eq = [c for c in rep.cases if c.id.startswith("extremal_")]
        rnd = [c for c in rep.cases if not c.id.startswith("extremal_")]
        ok &= rep.passed
        low = -_worst(rnd)
        rows.append(f"{s}: |gap(h_p)| {_worst(eq):.1e}, min pair gap {low:.1e} over {pairs} pairs"
                    + (f", failed {_failed(rep.cases)}" if not rep.passed else ""))
    announce(3, ok, "; ".join(rows) + f" ({_scope(full_acceptance)})")
    assert ok


def test_criterion_4_invariance(announce, full_acceptance):
    rows, ok = [], True
    rng = np.random.default_rng(4)
    for s in SETS:
        P = _params(s)
        n, scheme = P.n, default_scheme(P.n)
        norm = NormSpec.euclidean(n)
        H = hp(P, norm)
        D = gn_quotient(H, norm, P, scheme)
        moved = [dilate(H, 1.7, P), translate(H, rng.uniform(-1, 1, n - 1)),
                 Transformed(H, 2.3, SGLMatrix.identity(n))]
        gn_rel = max(abs(gn_quotient(g, norm, P, scheme) - D) / D for g in moved)
        rep, _ = _affine(s, full_acceptance)
        orbit = [c for c in rep.cases if c.id.startswith(("orbit_invariance_", "orbit_transform_law_"))]
        good = gn_rel <= 1e-6 and all(c.passed for c in orbit)
        ok &= good
        rows.append(f"{s}: gn {gn_rel:.1e}, orbit/law worst {_worst(orbit):.1e} over {len(orbit) // 2} actions")
    announce(4, ok, "; ".join(rows) + f" ({_scope(full_acceptance)})")
    assert ok


def test_criterion_5_convex_geometry(announce):
    rows, ok = [], True
    for s in SETS:
        P = _params(s)
        many = s == (3, 2.0, 4.0)
        rep = suites.centroid_suite(P, default_scheme(P.n), seed=0, polytopes=15 if many else 0,
                                    ellipsoids=5 if many else 0)
        ok &= rep.passed
        poly = [c for c in rep.cases if c.id.startswith("volume_increase_")]
        ell = [c for c in rep.cases if c.id.startswith("volume_equality_")]
        rest = [c for c in rep.cases if c not in poly and c not in ell]
        text = f"{s}: ball/body identities/volume worst {_worst(rest):.1e}"
        if many:
            text += f", {len(poly)} polytopes min slack {min(c.gap for c in poly):.1e}, " \
                    f"{len(ell)} ellipsoids worst {_worst(ell):.1e}"
        if not rep.passed:
            text += f", failed {_failed(rep.cases)}"
        rows.append(text)
    announce(5, ok, "; ".join(rows))
    assert ok


def test_criterion_6_hierarchy(announce, full_acceptance):
    rows, ok = [], True
    for s in SETS:
        rep, _ = _affine(s, full_acceptance)
        cases = [c for c in rep.cases if c.id.startswith("random")]
        good = all(c.passed for c in cases)
        ok &= good
        count = len({c.id.split("_")[0] for c in cases})
        low = -_worst(cases)
        rows.append(f"{s}: {count} functions, min slack {low:.1e}" + ("" if good else f", failed {_failed(cases)}"))
    announce(6, ok, "; ".join(rows) + f" ({_scope(full_acceptance)})")
    assert ok


def test_criterion_7_tilt(announce, full_acceptance):
    rows, ok = [], True
    for s in SETS:
        rep, _ = _affine(s, full_acceptance)
        get = {c.id: c for c in rep.cases}
        shear = [c for c in rep.cases if c.id.startswith("shear_recovery_")]
        cases = [get["tilt_at_extremal"], get["lambda0_at_extremal"]] + shear
        ok &= all(c.passed for c in cases)
        rows.append(f"{s}: tilt {get['tilt_at_extremal'].gap:.1e}, lambda0-1 {get['lambda0_at_extremal'].gap:.1e}, "
                    f"shear worst {_worst(shear):.1e}")
    announce(7, ok, "; ".join(rows))
    assert ok


def test_criterion_8_transport(announce):
    rows, ok, notes = [], True, []
    for s in SETS:
        P = _params(s)
        rep = suites.transport_suite(P, NormSpec.euclidean(P.n), default_scheme(P.n), grid_level=3, seed=0)
        # the fitted-map residual trend is an extra sanity diagnostic, reported but not graded here
        diag = [c for c in rep.cases if "fitted_residual" in c.id]
        graded = [c for c in rep.cases if c not in diag]
        good = all(c.passed for c in graded)
        ok &= good
        rows.append(f"{s}: {len(graded)} cases" + ("" if good else f", failed {_failed(graded)}"))
        notes += [f"{s} {c.id} {'ok' if c.passed else 'off'} ({c.gap:.2e} vs {c.tol:.1e})" for c in diag]
    announce(8, ok, "grid level 3; " + "; ".join(rows))
    if notes:
        announce(8, ok, "diagnostics (ungraded): " + "; ".join(notes))
    assert ok


def _bump_bounds(P):
    lo = suites._bump_exponent_floor(P) + 0.5
    return [(lo, lo + 4.0)] * 2


def test_criterion_9_extremality(announce, full_acceptance):
    rows, ok = [], True
    for s in SETS:
        P = _params(s)
        k = _counts(P.n, full_acceptance)
        scheme = default_scheme(P.n)
        for which in ("gn", "affine") if (P.n <= 3 or full_acceptance) else ("gn",):
            dirs, evals = k["directions"], k["evals"]
            if which == "affine" and P.n == 3 and not full_acceptance:
                dirs, evals = AFFINE_N3_DIRECTIONS, 40
            norm = default_norm(which, P)
            pert = perturbation_test(hp(P, norm), which, P, dirs, (0.05, 0.1), norm, scheme, seed=0)
            skipped = pert.environment["skipped_count"]
            worst = max((-c.gap for c in pert.cases), default=math.nan)
            orbit = optimize_family(SearchConfig("extremal_orbit", [(-1.0, 1.0)] * (P.n + 1), max_evals=evals,
                                                 quotient=which), which, P, norm, scheme)
            plateau = abs(orbit.best_value - orbit.sharp) / orbit.sharp
            bump_cfg = SearchConfig("rational_bump", _bump_bounds(P), max_evals=min(evals, 40), quotient=which)
            bump = optimize_family(bump_cfg, which, P, norm, scheme)
            below = math.isfinite(bump.best_value) and bump.best_value < bump.sharp
            good = pert.passed and skipped == 0 and plateau <= 1e-5 and below
            ok &= good
            rows.append(f"{s} {which}: max delta {worst:.1e} over {dirs}x2"
                        + (f" ({skipped} uncertified)" if skipped else "")
                        + f", plateau {plateau:.1e}, bump {bump.best_value / bump.sharp:.4f} of sharp")
    announce(9, ok, "; ".join(rows) + f" ({_scope(full_acceptance)}; by default the affine quotient runs at n<=3 with "
                            f"{AFFINE_N3_DIRECTIONS} directions and 40 orbit evaluations at n=3)")
    assert ok


def test_criterion_10_quadrature(announce):
    rows, ok = [], True
    for s in LOW:
        P = _params(s)
        rep = suites.gn_suite(P, NormSpec.euclidean(P.n), default_scheme(P.n), seed=0, samples=5)
        quad = [c for c in rep.cases if c.id.startswith("quadrature_")]
        good = all(c.passed for c in quad)
        ok &= good
        margin = min(c.gap for c in quad if c.id.endswith("_err"))
        rows.append(f"{s}: {len(quad)} estimates, min margin {margin:.1e}"
                    + ("" if good else f", failed {_failed(quad)}"))
    announce(10, ok, "; ".join(rows))
    assert ok
