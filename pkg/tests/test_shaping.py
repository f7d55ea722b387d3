import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import projected_gradient, random_instance
from phshape.closed_loop import assemble_reduced
from phshape.discretize import build_Ji
from phshape.errors import (ConfigurationError, DimensionError, ParameterError, ParseError,
                            SingularityError, WrongSolverError)
from phshape.experiment import string_discretization
from phshape.shaping import (Controller, ShapingProblem, build_patch_map, casimir_init,
                             casimir_value, choose_Bc_Qc_under, design_controller, fit_damping,
                             residual_f, solve_fully_actuated, solve_under_actuated)

A_SMALL = np.array([[1.5], [0.5]])


def test_patch_maps():
    np.testing.assert_array_equal(build_patch_map(4, 2).M, [[1, 0], [1, 0], [0, 1], [0, 1]])
    pm = build_patch_map(6, 6)
    assert pm.fully_actuated
    np.testing.assert_array_equal(pm.M, np.eye(6))
    pm = build_patch_map(50, 10)
    assert pm.k == 5
    np.testing.assert_array_equal(pm.M.T @ pm.M, 5 * np.eye(10))
    for bad in [(50, 7), (4, 0), (0, 1)]:
        with pytest.raises(ConfigurationError):
            build_patch_map(*bad)


def test_small_problem_A():
    pr = ShapingProblem.from_plant(_tiny_plant(), build_patch_map(2, 1), Qm=np.eye(2))
    np.testing.assert_allclose(pr.A, A_SMALL, rtol=1e-15)


def _tiny_plant():
    from phshape.discretize import discretize
    from phshape.model import string_plant
    return discretize(string_plant(), 2, 0.5)


def test_residual_examples():
    pr = ShapingProblem(A=A_SMALL, Qm=np.eye(2))
    assert residual_f([[0.4]], pr) == pytest.approx(1.0, rel=1e-12)
    assert residual_f([[0.0]], pr) == pytest.approx(np.sqrt(2.0))
    pr2 = ShapingProblem(A=A_SMALL, Qm=A_SMALL @ [[3.0]] @ A_SMALL.T)
    assert residual_f([[3.0]], pr2) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DimensionError):
        residual_f(np.eye(2), pr)


def test_fully_actuated_small():
    Ji = build_Ji(2, 0.5)
    pr = ShapingProblem(A=np.linalg.inv(Ji).T, Qm=np.eye(2))
    d = solve_fully_actuated(pr, Ji)
    np.testing.assert_allclose(d.Xhat, [[20, -8], [-8, 4]], atol=1e-12)
    assert d.residual <= 1e-12
    np.testing.assert_array_equal(d.Bc, Ji)


def test_fully_actuated_zero_target():
    Ji = build_Ji(3, 0.5)
    d = solve_fully_actuated(ShapingProblem(A=np.linalg.inv(Ji).T, Qm=np.zeros((3, 3))), Ji)
    assert not d.Qc.any() and d.residual == 0.0


def test_wrong_solver():
    with pytest.raises(WrongSolverError):
        solve_fully_actuated(ShapingProblem(A=A_SMALL, Qm=np.eye(2)), build_Ji(2, 0.5))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.floats(0.1, 0.9), st.integers(0, 2**32 - 1))
def test_fully_actuated_exact(p, g, seed):
    rng = np.random.default_rng(seed)
    Ji = build_Ji(p, g)
    G = rng.standard_normal((p, p))
    pr = ShapingProblem(A=np.linalg.inv(Ji).T, Qm=G @ G.T)
    d = solve_fully_actuated(pr, Ji)
    # round-off scales with the size of the terms in A X A^T
    scale = np.linalg.norm(pr.A, 2) ** 2 * np.linalg.norm(d.Xhat) + np.linalg.norm(pr.Qm)
    assert d.residual <= 1e-9 * scale


def test_under_actuated_small():
    sol = solve_under_actuated(ShapingProblem(A=A_SMALL, Qm=np.eye(2)))
    np.testing.assert_allclose(sol.Xhat, [[0.4]], rtol=1e-12)
    assert sol.residual == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(sol.Sigma0, [[np.sqrt(2.5)]], rtol=1e-14)
    np.testing.assert_allclose(np.abs(sol.U1[:, 0]), A_SMALL[:, 0] / np.sqrt(2.5), rtol=1e-12)
    T2, T3 = sol.split_residual(np.eye(2))
    assert abs(T2).max() <= 1e-15
    assert T3[0, 0] == pytest.approx(1.0, rel=1e-12)


def test_svd_path_matches_exact_path():
    Ji = build_Ji(6, 0.5)
    Qm = np.diag(np.arange(1.0, 7.0))
    pr = ShapingProblem(A=np.linalg.inv(Ji).T, Qm=Qm)
    a = solve_under_actuated(pr).Xhat
    b = solve_fully_actuated(pr, Ji).Xhat
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-9 * np.abs(b).max())


def test_under_actuated_zero_target():
    sol = solve_under_actuated(ShapingProblem(A=A_SMALL, Qm=np.zeros((2, 2))))
    assert not sol.Xhat.any() and sol.residual == 0.0


def test_rank_deficient():
    A = np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])
    with pytest.raises(SingularityError, match="singular values"):
        solve_under_actuated(ShapingProblem(A=A, Qm=np.eye(3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_svd_residual_identity(seed):
    rng = np.random.default_rng(seed)
    A, Qm, *_ = random_instance(rng)
    sol = solve_under_actuated(ShapingProblem(A=A, Qm=Qm))
    T2, T3 = sol.split_residual(Qm)
    f2 = sol.residual ** 2
    rhs = 2 * np.linalg.norm(T2) ** 2 + np.linalg.norm(T3) ** 2
    assert abs(f2 - rhs) <= 1e-9 * max(f2, rhs, 1e-300) + 1e-14


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_psd_outputs(seed):
    rng = np.random.default_rng(seed)
    A, Qm, p, m, g = random_instance(rng)
    sol = solve_under_actuated(ShapingProblem(A=A, Qm=Qm))
    _, Qc = choose_Bc_Qc_under(sol.Xhat, build_Ji(m, g))
    for X in (sol.Xhat, Qc):
        assert np.linalg.eigvalsh(X).min() >= -1e-10 * max(np.linalg.norm(X, 2), 1e-300)
        assert np.array_equal(X, X.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1))
def test_convexity(seed, t):
    rng = np.random.default_rng(seed)
    A, Qm, p, m, _ = random_instance(rng)
    pr = ShapingProblem(A=A, Qm=Qm)
    G1, G2 = rng.standard_normal((2, m, m))
    X1, X2 = G1 @ G1.T, G2 @ G2.T
    lhs = residual_f(t * X1 + (1 - t) * X2, pr)
    assert lhs <= t * residual_f(X1, pr) + (1 - t) * residual_f(X2, pr) + 1e-12


def test_svd_sign_invariance(rng):
    A, Qm, *_ = random_instance(rng)
    pr = ShapingProblem(A=A, Qm=Qm)
    X1 = solve_under_actuated(pr).Xhat
    # flipping the sign of A's columns flips matching SVD factors
    S = np.diag(np.where(np.arange(A.shape[1]) % 2, -1.0, 1.0))
    X2 = S @ solve_under_actuated(ShapingProblem(A=A @ S, Qm=Qm)).Xhat @ S
    np.testing.assert_allclose(X1, X2, rtol=1e-10, atol=1e-12)


def test_optimality_against_oracle(rng):
    for _ in range(5):
        A, Qm, *_ = random_instance(rng)
        f_hat = solve_under_actuated(ShapingProblem(A=A, Qm=Qm)).residual
        assert projected_gradient(A, Qm, restarts=100, iters=200, rng=rng) >= f_hat - 1e-8


def test_choose_split():
    Bc, Qc = choose_Bc_Qc_under([[0.4]], [[2.0]])
    np.testing.assert_allclose(Qc, [[0.1]], rtol=1e-15)
    _, Qc = choose_Bc_Qc_under(np.zeros((3, 3)), build_Ji(3, 0.5))
    assert not Qc.any()
    with pytest.raises(SingularityError):
        choose_Bc_Qc_under(np.eye(2), np.zeros((2, 2)))


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1))
def test_split_reconstructs(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    G = rng.standard_normal((m, m))
    X = G @ G.T
    Bc, Qc = choose_Bc_Qc_under(X, build_Ji(m, 0.5))
    np.testing.assert_allclose(Bc.T @ Qc @ Bc, X, rtol=1e-9, atol=1e-9 * np.abs(X).max())


def test_fit_damping():
    np.testing.assert_allclose(fit_damping(4000, build_patch_map(50, 50), 0.04), 160 * np.eye(50))
    np.testing.assert_allclose(fit_damping(4000, build_patch_map(50, 10), 0.04), 32 * np.eye(10))
    for a in (0.0, -1.0):
        with pytest.raises(ParameterError):
            fit_damping(a, build_patch_map(4, 2), 0.5)


def test_fit_damping_is_projection(rng):
    pm = build_patch_map(12, 3)
    Dc = fit_damping(10.0, pm, 0.2)
    base = np.linalg.norm(pm.M @ Dc @ pm.M.T - 2.0 * np.eye(12))
    for _ in range(20):
        D = Dc + np.diag(rng.normal(0, 0.05, 3))
        assert np.linalg.norm(pm.M @ D @ pm.M.T - 2.0 * np.eye(12)) >= base - 1e-12


def test_casimir_full_actuation(plant50, rng):
    pm = build_patch_map(50, 50)
    x1, xc = rng.standard_normal((2, 50))
    C = casimir_value(plant50.Ji, pm, plant50.B0d, plant50.Ji, x1, xc)
    np.testing.assert_allclose(C, x1 - xc, atol=1e-12)
    np.testing.assert_allclose(casimir_init(plant50.Ji, pm, plant50.B0d, plant50.Ji, x1), x1,
                               atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([1, 2, 5, 10, 25, 50]), st.integers(0, 2**32 - 1))
def test_casimir_init_zero_leaf(m, seed):
    rng = np.random.default_rng(seed)
    plant = string_discretization(50)
    pm = build_patch_map(50, m)
    Bc = build_Ji(m, 0.5)
    x1 = rng.standard_normal(50)
    xc = casimir_init(Bc, pm, plant.B0d, plant.Ji, x1)
    C = casimir_value(Bc, pm, plant.B0d, plant.Ji, x1, xc)
    assert np.abs(C).max() <= 1e-12 * max(1.0, np.abs(xc).max())
    assert not casimir_init(Bc, pm, plant.B0d, plant.Ji, np.zeros(50)).any()
    assert not casimir_value(Bc, pm, plant.B0d, plant.Ji, np.zeros(50), np.zeros(m)).any()


def test_casimir_singular_Ji():
    pm = build_patch_map(2, 2)
    with pytest.raises(SingularityError):
        casimir_init(np.eye(2), pm, np.eye(2), np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))


def test_string_full_design(plant50):
    ctrl = design_controller(plant50, 50, 4000, beta=5e6)
    assert ctrl.residual <= 1e-9 * np.linalg.norm(5e6 / 0.04 * np.eye(50))
    red = assemble_reduced(plant50, ctrl)
    np.testing.assert_allclose(red.Q1_tilde, plant50.Q1 + 5e6 / 0.04 * np.eye(50),
                               rtol=1e-10, atol=1e-10 * 1.6e8)
    np.testing.assert_allclose(ctrl.Dc, 160 * np.eye(50))


def test_patch_design_has_residual(plant50):
    ctrl = design_controller(plant50, 10, 4000, beta=5e6)
    assert ctrl.residual > 0
    np.testing.assert_array_equal(ctrl.Bc, build_Ji(10, 0.5))


def test_design_argument_errors(plant50):
    with pytest.raises(ParameterError):
        design_controller(plant50, 50, -1.0, beta=1.0)
    with pytest.raises(ParameterError):
        design_controller(plant50, 50, 1.0, beta=-1.0)
    with pytest.raises(ParameterError):
        ShapingProblem.from_plant(plant50, build_patch_map(50, 50), beta=1.0, Qm=np.eye(50))
    with pytest.raises(ConfigurationError):
        design_controller(plant50, 7, 1.0, beta=1.0)


def test_zero_damping_warns(plant50):
    with pytest.warns(RuntimeWarning):
        ctrl = design_controller(plant50, 10, 0.0, beta=5e6)
    assert not ctrl.Dc.any()


def test_controller_validation():
    pm = build_patch_map(2, 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ParameterError):
            Controller(np.eye(2), -np.eye(2), np.eye(2), pm)
        with pytest.raises(SingularityError):
            Controller(np.zeros((2, 2)), np.eye(2), np.eye(2), pm)
        with pytest.raises(DimensionError):
            Controller(np.eye(3), np.eye(3), np.eye(3), pm)


def test_controller_json(plant50):
    ctrl = design_controller(plant50, 10, 4000, beta=5e6)
    back = Controller.from_json(ctrl.to_json())
    np.testing.assert_array_equal(back.Qc, ctrl.Qc)
    np.testing.assert_array_equal(back.patch.M, ctrl.patch.M)
    assert back.residual == ctrl.residual
    with pytest.raises(ParseError):
        Controller.from_dict({"m": 2})
