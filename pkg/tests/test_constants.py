import math

import pytest

from sharptrace.constants import (
    DomainError,
    affine_sharp_constant,
    centroid_const,
    gamma,
    make_params,
    normalization_constants,
    omega,
    split_ball_volume,
)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 1.5, 2.75, 7.0, 20.5, 49.0])
def test_gamma_matches_libm(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)


def test_omega_low_dimensions():
    assert omega(1) == pytest.approx(2.0, rel=1e-14)
    assert omega(2) == pytest.approx(math.pi, rel=1e-14)
    assert omega(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-14)
    assert omega(4) == pytest.approx(math.pi**2 / 2.0, rel=1e-14)


def test_exponents():
    P = make_params(3, 2, 4)
    assert P.q == 2.0
    assert P.theta == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert P.trace_exp == pytest.approx(2 * 3 / 2)
    assert P.conformal_exp == pytest.approx(4.0)
    assert P.decay == pytest.approx(2.0)


@pytest.mark.parametrize("n,p,a", [(3, 3, 4), (3, 1, 4), (3, 2, 2.5), (5, 2, 6), (2.5, 1.5, 3)])
def test_domain_errors(n, p, a):
    with pytest.raises(DomainError):
        make_params(n, p, a)


def test_theta_is_one_at_a_equal_n():
    # the trace inequality degenerates to the pure Sobolev trace form
    assert make_params(3, 2, 3).theta == pytest.approx(1.0)


@pytest.mark.parametrize("k,p", [(1, 1.5), (2, 2.0), (3, 2.5)])
def test_centroid_constant_normalises_ball(k, p):
    # h_{Gamma_p B}(e1)^p = int_B |x_1|^p dx / (a_{k,p} vol(B)), moment in polar form
    moment = k * omega(k) / (k + p) * gamma((p + 1) / 2) * gamma(k / 2) / (math.sqrt(math.pi) * gamma((k + p) / 2))
    assert moment / (centroid_const(k, p) * omega(k)) == pytest.approx(1.0, rel=1e-12)


def test_split_ball_volume_is_disk_and_ball():
    assert split_ball_volume(2, 2.0, 2.0) == pytest.approx(math.pi, rel=1e-13)
    assert split_ball_volume(3, 2.0, math.pi) == pytest.approx(4 * math.pi / 3, rel=1e-13)


def test_constant_set_positive_and_consistent():
    C = normalization_constants(make_params(3, 2, 4))
    d = C.to_dict()
    assert d["theta"] == pytest.approx(2 / 3)
    assert C.D_affine == affine_sharp_constant(C.params)
    for key in ("c_np", "c_n1p", "c_npa", "a_np", "B_np", "D_affine"):
        assert d[key] > 0 and math.isfinite(d[key])
