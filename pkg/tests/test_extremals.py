import json

import numpy as np
import pytest

from sharptrace.constants import make_params
from sharptrace.extremals import (
    PowerSumProfile,
    FiniteSum,
    PerturbedExtremal,
    RationalBump,
    SGLMatrix,
    Transformed,
    dilate,
    function_from_dict,
    hp,
    translate,
    validate_membership,
)
from sharptrace.norms import NormSpec
from sharptrace.rng import XorShift64Star

P3 = make_params(3, 2, 4)
rng = np.random.default_rng(2)


def members():
    H = hp(P3)
    Hs = hp(P3, NormSpec.split_q(P3.q, 2, tilt=[0.2, -0.1]))
    A = SGLMatrix.random(3, XorShift64Star(4))
    orbit = Transformed(H, 1.3, A, [0.2, -0.4])
    return {
        "extremal": H,
        "split_extremal": Hs,
        "orbit": orbit,
        "perturbed": PerturbedExtremal(orbit, [0.5, 0.1, -0.2], 0.8, 0.1),
        "bump": RationalBump(3, 4.0, 5.0, [0.3, 0.0], P3),
        "sum": FiniteSum([H, orbit], [1.0, 0.5]),
        "power_sum": PowerSumProfile(make_params(3, 2, 3), 1.2, 0.8, [[1.0, 0.2], [0.0, 0.9]], [0.1, 0.1]),
    }


@pytest.mark.parametrize("name", list(members()))
def test_gradient_matches_differences(name):
    f = members()[name]
    Z = np.abs(rng.normal(size=(25, 3))) * [1, 1.5, 1.5] * [1, np.sign(rng.normal()), 1]
    G = f.grad(Z)
    h = 1e-6
    for i in range(3):
        E = np.zeros(3)
        E[i] = h
        fd = (f(Z + E) - f(Z - E)) / (2 * h)
        assert np.allclose(G[:, i], fd, rtol=1e-6, atol=1e-9)
    v, g = f.value_and_grad(Z)
    assert np.allclose(v, f(Z)) and np.allclose(g, G)


@pytest.mark.parametrize("name", list(members()))
def test_json_roundtrip(name):
    f = members()[name]
    params = make_params(3, 2, 3) if name == "power_sum" else P3
    g = function_from_dict(json.loads(json.dumps(f.to_dict())), params)
    Z = np.abs(rng.normal(size=(10, 3)))
    assert np.allclose(f(Z), g(Z), rtol=1e-14)


def test_extremal_formula():
    Z = np.abs(rng.normal(size=(10, 3)))
    k = (P3.a - P3.p) / (P3.p - 1)
    expected = ((1 + Z[:, 0]) ** 2 + (Z[:, 1:] ** 2).sum(1)) ** (-k / 2)
    assert np.allclose(hp(P3)(Z), expected, rtol=1e-14)


def test_power_sum_profile_agrees_with_extremal_when_p_is_two_and_a_is_n():
    P = make_params(3, 2, 3)
    Z = np.abs(rng.normal(size=(10, 3)))
    assert np.allclose(PowerSumProfile(P)(Z), hp(P)(Z), rtol=1e-14)


def test_sgl_matrix():
    A = SGLMatrix(2.0, [0.5, -1.0], [[1.0, 0.3], [0.0, 2.0]])
    M = A.matrix
    assert M[0, 1] == 0 and M[0, 2] == 0 and M[0, 0] == 2.0
    assert A.det_B == pytest.approx(2.0)
    with pytest.raises(ValueError):
        SGLMatrix(-1.0, [0, 0], np.eye(2))
    with pytest.raises(ValueError):
        SGLMatrix(1.0, [0, 0], np.zeros((2, 2)))
    assert SGLMatrix.from_dict(A.to_dict()).matrix.tolist() == M.tolist()


def test_orbit_maps_half_space_to_itself():
    A = SGLMatrix.random(3, XorShift64Star(9))
    Z = np.abs(rng.normal(size=(100, 3)))
    assert np.all(A.apply(Z)[:, 0] >= 0)


def test_dilation_and_translation():
    H = hp(P3)
    Z = np.abs(rng.normal(size=(5, 3)))
    lam = 1.7
    expected = lam ** (3 * (P3.a - P3.p) / (P3.a * P3.p)) * H(lam * Z)
    assert np.allclose(dilate(H, lam, P3)(Z), expected)
    assert np.allclose(translate(H, [1.0, 2.0])(Z + [0, 1.0, 2.0]), H(Z))


def test_membership_guard():
    validate_membership(hp(P3), P3)
    with pytest.raises(ValueError):
        validate_membership(RationalBump(3, 0.5, 0.5), P3)
