import numpy as np
import pytest
from scipy.optimize import linprog

from sharptrace.constants import make_params
from sharptrace.extremals import hp
from sharptrace.norms import NormSpec
from sharptrace.transport import (
    MAX_NODES,
    AffineMap,
    DiscreteMeasure,
    TransportError,
    TransportPlan,
    ag_check,
    brenier_pair,
    cyclic_monotonicity,
    dilation_study,
    extremal_density,
    fit_affine_map,
    grid_measure,
    monge_ampere_residual,
    per_axis_for_level,
    proof_chain_report,
    pushforward_check,
    solve_discrete_ot,
)

P2 = make_params(2, 1.5, 2)
P3 = make_params(3, 2, 4)


def random_measure(rng, k, dim=2):
    return DiscreteMeasure(rng.normal(size=(k, dim)), rng.uniform(0.1, 1.0, size=k))


def lp_cost(mu, nu):
    """Kantorovich optimum from scipy's LP solver, used only as an oracle."""
    m, n = len(mu.weights), len(nu.weights)
    C = ((mu.nodes[:, None, :] - nu.nodes[None, :, :]) ** 2).sum(-1)
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1
    for j in range(n):
        A[m + j, j::n] = 1
    b = np.concatenate([mu.weights, nu.weights])
    return linprog(C.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs").fun


@pytest.mark.parametrize("backend", ["python", "cython"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_optimal_cost_matches_lp(backend, seed):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, 12)
    nu = random_measure(rng, 9).normalized(mu.total)
    plan = solve_discrete_ot(mu, nu, backend=backend)
    assert plan.cost == pytest.approx(lp_cost(mu, nu), rel=1e-9)
    assert plan.marginal_error() < 1e-12
    assert abs(plan.duality_gap()) < 1e-10 * max(plan.cost, 1.0)
    assert cyclic_monotonicity(plan, rng, cycles=200) > -1e-12


def test_identity_and_translation_are_exact():
    rng = np.random.default_rng(4)
    mu = random_measure(rng, 40)
    plan = solve_discrete_ot(mu, mu)
    assert np.allclose(plan.map_estimate, mu.nodes, atol=1e-12)
    assert plan.cost == pytest.approx(0.0, abs=1e-14)
    v = np.array([0.3, -1.1])
    plan = solve_discrete_ot(mu, mu.translated(v))
    assert np.allclose(plan.map_estimate, mu.nodes + v, atol=1e-10)
    assert plan.cost == pytest.approx(v @ v * mu.total, rel=1e-12)
    fit = fit_affine_map(plan)
    assert np.allclose(fit.L, np.eye(2), atol=1e-9) and np.allclose(fit.shift, v, atol=1e-9)


def test_plan_json_roundtrip():
    rng = np.random.default_rng(5)
    mu = random_measure(rng, 10)
    nu = random_measure(rng, 7).normalized(mu.total)
    plan = solve_discrete_ot(mu, nu)
    back = TransportPlan.from_json(plan.to_json())
    assert np.allclose(back.coupling(), plan.coupling())
    assert back.cost == plan.cost


def test_measure_validation():
    with pytest.raises(TransportError):
        DiscreteMeasure(np.zeros((3, 2)), np.zeros(3))
    with pytest.raises(TransportError):
        DiscreteMeasure(np.zeros((3, 2)), [1.0, -1.0, 1.0])
    rng = np.random.default_rng(6)
    with pytest.raises(TransportError):
        solve_discrete_ot(random_measure(rng, 3), DiscreteMeasure(rng.normal(size=(3, 2)), [5.0, 5.0, 5.0]))
    big = DiscreteMeasure(np.zeros((MAX_NODES + 1, 1)), np.ones(MAX_NODES + 1))
    with pytest.raises(TransportError):
        solve_discrete_ot(big, big)


def test_grid_measure_mass():
    mu = grid_measure(lambda Z: np.ones(len(Z)), 3, 4, 2.0, 2.0)
    assert len(mu.weights) == 4 * 8 * 8
    assert mu.total == pytest.approx(2.0 * 4.0 * 4.0)
    assert mu.spacing == pytest.approx(0.5)
    assert per_axis_for_level(2, 3) == 32 and per_axis_for_level(4, 1) == 2


def test_affine_map_and_brenier_pair_mass():
    phi = AffineMap(np.diag([1.3, 0.8]), np.zeros(2))
    assert phi.is_brenier
    assert not AffineMap(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2)).is_brenier
    H = hp(P2)
    g = brenier_pair(H, phi, P2)
    s = P2.conformal_exp
    rep = monge_ampere_residual(phi, lambda Z: H(Z) ** s, lambda Z: np.abs(g(Z)) ** s,
                                np.abs(np.random.default_rng(0).normal(size=(50, 2))))
    assert rep.passed


def test_pushforward_of_constants_and_linears():
    rng = np.random.default_rng(7)
    mu = random_measure(rng, 20)
    plan = solve_discrete_ot(mu, mu.translated([1.0, 0.5]))
    assert pushforward_check(plan, lambda Y: np.ones(len(Y)), tol=1e-12).passed
    assert pushforward_check(plan, lambda Y: Y[:, 0] - 2 * Y[:, 1], tol=1e-10).passed


def test_ag_inequality():
    rep = ag_check(P3, np.random.default_rng(8), samples=2000)
    assert rep.passed
    assert {c.id for c in rep.cases} == {"ag_samples", "ag_identity", "ag_strict"}
    rep_eq = ag_check(make_params(3, 2, 3), np.random.default_rng(8), samples=500)
    assert "ag_strict" not in {c.id for c in rep_eq.cases}


@pytest.mark.parametrize("P", [P2, P3], ids=["n2", "n3"])
def test_proof_chain_is_tight_at_extremal(P):
    H = hp(P)
    rep = proof_chain_report(H, H, NormSpec.euclidean(P.n), P)
    assert rep.passed, rep.summary_lines()
    assert max(abs(c.gap) for c in rep.cases) < 2e-5


def test_proof_chain_slack_under_dilation():
    H = hp(P3)
    phi = AffineMap.dilation(3, 1.3)
    rep = proof_chain_report(H, brenier_pair(H, phi, P3), NormSpec.euclidean(3), P3, phi=phi)
    assert rep.passed, rep.summary_lines()
    assert max(c.gap for c in rep.cases) > 1e-4


def test_dilation_study_exact_grid():
    rep = dilation_study(P2, levels=(1, 2))
    by = {c.id: c for c in rep.cases}
    assert by["dilated_grid_masses"].passed and by["dilated_grid_exact_map"].passed
    assert by["barycentric_error_level2"].passed


def test_extremal_density_is_hp_power():
    F = extremal_density(P2)
    Z = np.abs(np.random.default_rng(1).normal(size=(5, 2)))
    assert np.allclose(F(Z), hp(P2)(Z) ** P2.conformal_exp)
