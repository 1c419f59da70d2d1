import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.services.cones import ConeSpec, inclusion_residual
from app.services.errors import DegenerateDirectionError, NotRegularError, OrderTooLowError
from app.services.multilinear import SymTensor
from app.services.pfactor import (
    approximation_delta,
    build_p_factor,
    degeneracy_profile,
    invert,
    robinson_check,
    solve_affine_inclusion,
    strong_regularity_estimate,
)
from app.services.problems import builtin, parse_problem


@pytest.fixture
def op1(example1):
    return build_p_factor(example1.p_tensor(), np.array([1.0, 1.0]), example1.cone, example1.p)


def test_p_factor_matrix(op1):
    assert_allclose(op1.A, [[2.0, -2.0], [1.0, 1.0]])


def test_zero_direction_is_rejected(example1):
    with pytest.raises(DegenerateDirectionError):
        build_p_factor(example1.p_tensor(), np.zeros(2), example1.cone, 2)


def test_invert_at_image_of_direction(op1):
    result = invert(op1, np.array([0.0, 2.0]))
    assert result.regular
    assert len(result.points) == 1
    assert_allclose(result.points.points[0], [0.0, 0.0], atol=1e-12)


def test_affine_inclusion_on_orthant():
    # b - A w in N(w): w = max(b, 0) for A = I
    result = solve_affine_inclusion(np.eye(2), np.array([1.0, -1.0]), ConeSpec.nonneg(2))
    assert len(result.points) == 1
    assert_allclose(result.points.points[0], [1.0, 0.0])


def test_degeneracy_profile_example2(example2):
    profile = degeneracy_profile(example2)
    assert profile.method == "exact"
    assert profile.norms[0] == 0.0 and profile.norms[1] == 0.0
    assert profile.norms[2] > 0.0
    assert profile.completely_degenerate


def test_degeneracy_profile_reports_nonzero_jacobian():
    spec = parse_problem("dims 0 1\ncone F\norder 2\nf1 = y1 + y1^2\n")
    assert not degeneracy_profile(spec).completely_degenerate


def test_degeneracy_profile_fd_path(example1):
    profile = degeneracy_profile(example1, method="fd")
    assert profile.method == "fd"
    assert profile.completely_degenerate


@pytest.mark.parametrize("name", ["example1", "example2"])
def test_finite_difference_profile_matches_exact(name):
    problem = builtin(name)
    fd = degeneracy_profile(problem, method="fd")
    exact = degeneracy_profile(problem, method="exact")
    assert fd.completely_degenerate
    assert max(fd.norms[:-1]) <= 1e-6
    assert fd.norms[-1] == pytest.approx(exact.norms[-1], rel=1e-6)


def test_order_too_low():
    spec = parse_problem("dims 0 1\ncone F\norder 2\nf1 = y1^3\n")
    with pytest.raises(OrderTooLowError):
        degeneracy_profile(spec)


def test_robinson_fails_for_degenerate_examples(example1, example2):
    assert not robinson_check(example1)
    assert not robinson_check(example2)


def test_robinson_holds_for_regular_problem():
    spec = parse_problem("dims 0 1\ncone P\norder 2\nf1 = y1 + y1^2\n")
    assert robinson_check(spec)


def test_robinson_holds_for_identity_on_free_line():
    spec = parse_problem("dims 1 1\ncone F\norder 2\nf1 = y1 - x1\n")
    assert robinson_check(spec)


def test_strong_regularity_of_p_matrix_operator(op1):
    report = strong_regularity_estimate(op1, samples=50, seed=3)
    assert report.regular
    assert report.failures == 0
    assert 0.0 < report.c_estimate < math.inf
    assert report.median_ratio <= report.c_estimate
    again = strong_regularity_estimate(op1, samples=50, seed=3)
    assert again.c_estimate == report.c_estimate


def test_strong_regularity_fails_for_zero_operator():
    op = build_p_factor(SymTensor.zeros(2, 2, 2), np.array([1.0, 0.0]), ConeSpec.free(2), 2)
    with pytest.raises(NotRegularError):
        strong_regularity_estimate(op, samples=10)


def test_quadratic_problem_has_exact_p_factor_approximation(example1):
    delta = approximation_delta(example1, np.zeros(2), radius=0.1, samples=50)
    assert delta <= 1e-12


def test_regularity_constant_is_not_dominated_by_outliers(op1):
    report = strong_regularity_estimate(op1, samples=1000, seed=0, radius=0.1)
    assert math.isfinite(report.c_estimate)
    assert report.c_estimate / report.median_ratio <= 10.0


def _monotone_instance(rng: np.random.Generator):
    n = int(rng.choice([2, 3]))
    G = rng.standard_normal((n, n))
    sym = G @ G.T
    sym = 3.0 * sym / np.linalg.eigvalsh(sym)[-1] + np.eye(n)
    K = 0.5 * rng.standard_normal((n, n))
    A = sym + (K - K.T) / 2.0
    cone = ConeSpec.from_string("".join(rng.choice(["F", "P"], n)))
    return A, rng.uniform(-1.0, 1.0, n), cone


def _natural_residual(A, b, cone, points):
    """||w - proj_C(w - (A w - b))|| row by row."""
    stepped = points - (points @ A.T - b)
    nonneg = list(cone.nonneg_indices)
    stepped[:, nonneg] = np.maximum(stepped[:, nonneg], 0.0)
    return np.linalg.norm(points - stepped, axis=1)


def test_affine_inclusion_agrees_with_grid_search():
    # b - A w in N_C(w) is a strongly monotone VI here: dist(w, w*) <= (1 + L) / mu * natural residual
    rng = np.random.default_rng(2024)
    for _ in range(100):
        A, b, cone = _monotone_instance(rng)
        n = cone.dim
        assert np.linalg.cond(A) <= 1e3
        result = solve_affine_inclusion(A, b, cone)
        assert len(result.points) == 1
        w = result.points.points[0]
        slack = b - A @ w
        assert inclusion_residual(cone, w, -slack) <= 1e-9

        lipschitz = np.linalg.norm(A, 2)
        modulus = np.linalg.eigvalsh((A + A.T) / 2.0)[0]
        factor = (1.0 + lipschitz) / modulus
        step = 1e-2 if n == 2 else 5e-2
        axis = np.linspace(-2.0, 2.0, int(round(4.0 / step)) + 1)
        grid = np.stack(np.meshgrid(*[axis] * n, indexing="ij"), axis=-1).reshape(-1, n)
        residual = _natural_residual(A, b, cone, grid)
        hits = grid[residual <= 2e-2 / factor]
        if len(hits):
            assert np.max(np.linalg.norm(hits - w, axis=1)) <= 2e-2
        nearest = np.argmin(np.linalg.norm(grid - w, axis=1))
        assert residual[nearest] <= (2.0 + lipschitz) * step * math.sqrt(n)
