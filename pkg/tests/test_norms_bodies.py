import math

import numpy as np
import pytest

from sharptrace.bodies import BodyError, ConvexBody, centroid_body, centroid_support, volume
from sharptrace.constants import omega
from sharptrace.norms import (
    NonsmoothError,
    NormError,
    NormSpec,
    dual_norm_eval,
    dual_norm_numeric,
    norm_eval,
    norm_gradient,
)

rng = np.random.default_rng(5)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0, 7.0])
def test_lq_norm_and_dual(q):
    Z = rng.normal(size=(50, 3))
    spec = NormSpec.lq(q, 3)
    assert np.allclose(norm_eval(spec, Z), np.linalg.norm(Z, ord=q, axis=1), rtol=1e-14)
    qs = q / (q - 1)
    assert np.allclose(dual_norm_eval(spec, Z), np.linalg.norm(Z, ord=qs, axis=1), rtol=1e-14)


def ellipsoid_spec():
    A = np.array([[2.0, 0.3, 0.0], [0.3, 1.0, -0.2], [0.0, -0.2, 0.7]])
    return NormSpec.ellipsoid(A)


@pytest.mark.parametrize(
    "spec",
    [
        NormSpec.lq(3.0, 3),
        ellipsoid_spec(),
        NormSpec.split_q(1.5, 2),
        NormSpec.split_q(3.0, 2, tilt=[0.4, -0.3]),
        NormSpec.split_q(2.0, ConvexBody.ellipsoid([[1.5, 0.2], [0.2, 0.8]]), tilt=[0.1, 0.2]),
    ],
    ids=["l3", "ellipsoid", "split1.5", "split3-tilted", "split-ellipsoid"],
)
def test_dual_norm_closed_form_vs_maximisation(spec):
    Z = rng.normal(size=(20, 3))
    assert np.allclose(dual_norm_eval(spec, Z), dual_norm_numeric(spec, Z), rtol=1e-8)


@pytest.mark.parametrize("spec", [NormSpec.lq(3.0, 3), ellipsoid_spec(), NormSpec.split_q(1.5, 2, tilt=[0.3, 0.1])])
def test_norm_gradient_by_differences(spec):
    Z = rng.normal(size=(10, 3))
    G = norm_gradient(spec, Z)
    h = 1e-6
    for i in range(3):
        E = np.zeros(3)
        E[i] = h
        fd = (norm_eval(spec, Z + E) - norm_eval(spec, Z - E)) / (2 * h)
        assert np.allclose(G[:, i], fd, atol=1e-7)


def test_norm_homogeneity_and_triangle():
    spec = NormSpec.split_q(1.5, 2, tilt=[0.5, -0.2])
    X, Y = rng.normal(size=(100, 3)), rng.normal(size=(100, 3))
    assert np.allclose(norm_eval(spec, -2.5 * X), 2.5 * norm_eval(spec, X))
    assert np.all(norm_eval(spec, X + Y) <= norm_eval(spec, X) + norm_eval(spec, Y) + 1e-12)


def test_polytope_gauge_is_nonsmooth():
    spec = NormSpec.polytope_gauge([[1, 0], [0, 1]])
    assert not spec.smooth
    with pytest.raises(NonsmoothError):
        norm_gradient(spec, np.array([[1.0, 0.0]]))


def test_norm_validation_and_json():
    with pytest.raises(NormError):
        NormSpec.lq(1.0, 3)
    spec = NormSpec.split_q(3.0, 2, tilt=[0.1, 0.2])
    back = NormSpec.from_dict(spec.to_dict())
    Z = rng.normal(size=(5, 3))
    assert np.allclose(norm_eval(back, Z), norm_eval(spec, Z))


def test_body_support_identities():
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    E = ConvexBody.ellipsoid(M)
    Y = rng.normal(size=(30, 2))
    # h_E(y) = sqrt(y M^-1 y) and h_K = ||.||_{K polar}
    assert np.allclose(E.support(Y), np.sqrt(np.einsum("ij,jk,ik->i", Y, np.linalg.inv(M), Y)))
    U = Y / np.linalg.norm(Y, axis=1, keepdims=True)
    assert np.allclose(E.support(U), E.polar().gauge(U))
    P = ConvexBody.polytope([[1.0, 0.2], [-0.3, 1.0], [0.8, 0.9]])
    assert np.allclose(P.support(U), P.polar().gauge(U))
    assert np.allclose(P.gauge(P.vertices), 1.0)


def test_volumes():
    assert volume(ConvexBody.ball(2)) == pytest.approx(math.pi, rel=1e-12)
    assert volume(ConvexBody.ball(3)) == pytest.approx(4 * math.pi / 3, rel=1e-10)
    square = ConvexBody.polytope([[1, 1], [1, -1]])
    assert volume(square) == pytest.approx(4.0, rel=1e-14)
    assert volume(square.polar()) == pytest.approx(2.0, rel=1e-14)
    cube = ConvexBody.polytope([[1, 1, 1], [1, -1, 1], [1, 1, -1], [1, -1, -1]])
    assert volume(cube) == pytest.approx(8.0, rel=1e-14)
    M = np.diag([4.0, 1.0, 0.25])
    vol, err = volume(ConvexBody.ellipsoid(M), with_error=True)
    assert vol == pytest.approx(omega(3) / math.sqrt(np.linalg.det(M)), rel=1e-14)
    # radial integral on the table rule agrees with the closed form
    assert err < 1e-8
    # a gauge table of the same ellipsoid goes through the radial integral alone
    table = ConvexBody.from_gauge(ConvexBody.ellipsoid(M).gauge, 3, support=False)
    assert volume(table) == pytest.approx(vol, rel=1e-8)


def test_linear_image_volume():
    P = ConvexBody.polytope([[1.0, 0.2], [-0.3, 1.0], [0.8, 0.9]])
    A = np.array([[1.5, 0.3], [-0.2, 0.7]])
    assert volume(P.linear_image(A)) == pytest.approx(abs(np.linalg.det(A)) * volume(P), rel=1e-12)


def test_invalid_bodies():
    with pytest.raises(BodyError):
        ConvexBody.ellipsoid([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(BodyError):
        ConvexBody.ball(2).scaled(-1.0)


@pytest.mark.parametrize("dim,p", [(2, 1.5), (2, 2.0), (3, 2.0), (3, 3.0)])
def test_centroid_of_ball_is_ball(dim, p):
    U = rng.normal(size=(20, dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    assert np.allclose(centroid_support(ConvexBody.ball(dim), p)(U), 1.0, atol=1e-10)


def test_centroid_commutes_with_linear_maps():
    # Gamma_p(A K) = A Gamma_p(K): h_{Gamma_p AK}(y) = h_{Gamma_p K}(A^T y)
    P = ConvexBody.polytope([[1.0, 0.2], [-0.3, 1.0], [0.8, 0.9]])
    A = np.array([[1.5, 0.3], [-0.2, 0.7]])
    Y = rng.normal(size=(10, 2))
    lhs = centroid_support(P.linear_image(A), 2.5)(Y)
    rhs = centroid_support(P, 2.5)(Y @ A)
    assert np.allclose(lhs, rhs, rtol=1e-10)


def test_centroid_volume_inequality_and_ellipsoid_equality():
    P = ConvexBody.polytope([[1.0, 0.2], [-0.3, 1.0], [0.8, 0.9]])
    assert volume(centroid_body(P, 2.0)) >= volume(P)
    E = ConvexBody.ellipsoid([[2.0, 0.5], [0.5, 1.0]])
    assert volume(centroid_body(E, 1.7)) == pytest.approx(volume(E), rel=1e-3)
