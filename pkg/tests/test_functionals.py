import numpy as np
import pytest

from sharptrace.constants import affine_sharp_constant, make_params, normalization_constants
from sharptrace.extremals import RationalBump, SGLMatrix, Transformed, dilate, hp, translate
from sharptrace.functionals import (
    affine_gn_quotient,
    ap_functional,
    chain_dominance,
    direction_min,
    dual_gap,
    energy_terms,
    ep_functional,
    gn_quotient,
    holder_young_check,
    kp_bodies,
    kp_body_identities,
    sharp_constant_gn,
    split_dual_check,
    split_volume_check,
)
from sharptrace.norms import NormSpec
from sharptrace.quadrature import default_scheme
from sharptrace.rng import XorShift64Star
from sharptrace.suites import hierarchy_check, random_function

P2 = make_params(2, 1.5, 2)
P3 = make_params(3, 2, 4)


def split(P):
    return NormSpec.split_q(P.q, P.n - 1)


@pytest.mark.parametrize("norm", [NormSpec.euclidean(2), NormSpec.lq(3.0, 2), split(P2)], ids=["l2", "l3", "split"])
def test_gradient_energy_identity(norm):
    t = energy_terms(hp(P2, norm), norm, P2)
    k = (P2.a - P2.p) / (P2.p - 1)
    assert t.grad_energy == pytest.approx(k**P2.p * t.bulk_norm, rel=1e-6)


def test_dual_gap_vanishes_at_extremal_and_is_nonnegative():
    norm = NormSpec.euclidean(2)
    H = hp(P2, norm)
    rep = dual_gap(H, H, norm, P2, expect_equality=True)
    assert rep.passed and abs(rep.cases[0].gap) < 1e-7
    rng = XorShift64Star(3)
    cache = {}
    for _ in range(4):
        f, g = random_function(P2, rng, norm), random_function(P2, rng, norm)
        assert dual_gap(f, g, norm, P2, cache=cache).passed


def test_gn_quotient_invariances_and_bound():
    norm = NormSpec.euclidean(2)
    H = hp(P2, norm)
    D = sharp_constant_gn(norm, P2)
    for g in (dilate(H, 1.6, P2), translate(H, [0.7]), Transformed(H, 2.5, SGLMatrix.identity(2))):
        assert gn_quotient(g, norm, P2) == pytest.approx(D, rel=1e-6)
    assert gn_quotient(RationalBump(2, 4.0, 4.0, None, P2), norm, P2) < D


def test_affine_quotient_at_split_extremal_matches_closed_form():
    Q = affine_gn_quotient(hp(P2, split(P2)), P2)
    assert Q == pytest.approx(affine_sharp_constant(P2), rel=1e-6)


def test_affine_constant_equals_split_norm_gn_constant():
    # at the split-norm extremal the affine energy and the split-norm energy coincide
    assert sharp_constant_gn(split(P2), P2) == pytest.approx(affine_sharp_constant(P2), rel=1e-6)


def test_ep_moment_matrix_route_matches_sphere_route():
    f = Transformed(hp(P3), 1.0, SGLMatrix(1.2, [0.3, -0.2], [[1.1, 0.4], [-0.1, 0.8]]))
    fast = ep_functional(f, P3, fast=True, detail=True)
    slow = ep_functional(f, P3, fast=False, detail=True)
    assert fast.route != slow.route
    assert fast.value == pytest.approx(slow.value, rel=1e-6)


def test_kp_bodies_ellipsoid_route_matches_tabulated_route():
    f = Transformed(hp(P3), 1.0, SGLMatrix(1.0, [0.0, 0.0], [[1.3, 0.2], [0.0, 0.7]]))
    a = kp_bodies(f, P3, fast=True)
    b = kp_bodies(f, P3, fast=False)
    assert a.vol_Bp == pytest.approx(b.vol_Bp, rel=1e-5)
    assert a.vol_Kp == pytest.approx(b.vol_Kp, rel=1e-5)
    U = np.array([[1.0, 0.0], [0.6, 0.8], [-0.28, 0.96]])
    assert np.allclose(a.Kbar.support(U), b.Kbar.support(U, exact=False), rtol=1e-4)


def test_kp_body_identities():
    rep = kp_body_identities(hp(P3), P3)
    assert rep.passed, rep.summary_lines()


def test_tilt_at_extremal_and_shear_recovery():
    Hs = hp(P3, split(P3))
    assert np.abs(direction_min(Hs, P3).a0).max() < 1e-6
    abar = np.array([0.3, -0.15])
    g = Transformed(Hs, 1.0, SGLMatrix(1.0, abar, np.eye(2)))
    assert np.allclose(direction_min(g, P3).a0, abar, atol=1e-5)


def test_tilt_generic_route_at_p_not_two():
    P = make_params(2, 1.5, 2.5)
    abar = np.array([0.25])
    g = Transformed(hp(P, split(P)), 1.0, SGLMatrix(1.0, abar, np.eye(1)))
    assert np.allclose(direction_min(g, P).a0, abar, atol=1e-5)


def test_lambda0_and_hierarchy_at_extremal():
    at = ap_functional(hp(P3, split(P3)), P3)
    assert at.lambda0 == pytest.approx(1.0, abs=1e-4)
    assert at.ep**P3.p <= at.dx_p * (1 + 1e-6)
    assert at.ap_val**P3.p <= (at.dt_p + at.dx_p) * (1 + 1e-6)


def test_chain_dominance_off_the_extremal():
    # the Euclidean extremal is not extremal for the affine quotient; its tilted derivative keeps one sign
    f = Transformed(hp(P2), 1.0, SGLMatrix(1.3, [0.4], [[0.8]]))
    rep = chain_dominance(f, P2)
    assert rep.passed, rep.summary_lines()


def test_hierarchy_of_off_centre_bump_matches_centred_bump():
    # the kink of |d_u f|^p follows the bump centre; the grid follows it too
    alpha, beta = 3.5716112546992314, 3.2378200143122147
    moved = hierarchy_check(RationalBump(2, alpha, beta, [0.3768], P2), P2, default_scheme(2))
    centred = hierarchy_check(RationalBump(2, alpha, beta, None, P2), P2, default_scheme(2))
    assert moved.passed and centred.passed
    for a, b in zip(moved.cases, centred.cases):
        assert a.gap == pytest.approx(b.gap, abs=1e-7)


def test_split_ball_volume_and_dual_norm():
    kb = kp_bodies(hp(P3, split(P3)), P3)
    assert split_volume_check(kb, P3, [0.1, -0.2]).passed
    Z = np.random.default_rng(0).normal(size=(8, 3))
    assert split_dual_check(kb, P3, [0.1, -0.2], Z).passed


def test_holder_young():
    rng = np.random.default_rng(1)
    X, Y = rng.normal(size=(200, 3)), rng.normal(size=(200, 3))
    rep = holder_young_check(X, Y, np.full(200, 0.01), NormSpec.lq(3.0, 3), 1.7)
    assert rep.passed


def test_constants_match_quadrature_at_a_equal_n():
    C = normalization_constants(make_params(3, 2, 3))
    assert C.D_affine == pytest.approx(affine_gn_quotient(hp(C.params, split(C.params)), C.params), rel=1e-3)
