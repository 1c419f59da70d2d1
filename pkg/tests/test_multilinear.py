import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from app.services.errors import DimensionError, EmptySetError, EvalError
from app.services.multilinear import (
    PointSet,
    SymTensor,
    apply_form,
    as_vector,
    contract,
    fd_derivative_tensor,
    hausdorff,
)

# second derivative of (y1^2 - y2^2, y1*y2)
QUADRATIC = np.array([[[2.0, 0.0], [0.0, -2.0]], [[0.0, 1.0], [1.0, 0.0]]])


def test_construction_symmetrizes_input_axes():
    T = SymTensor(np.array([[[0.0, 1.0], [0.0, 0.0]]]))
    assert_array_equal(T.coefficients, [[[0.0, 0.5], [0.5, 0.0]]])
    assert T.order == 2
    assert (T.out_dim, T.in_dim) == (1, 2)


def test_construction_rejects_mixed_input_dimensions():
    with pytest.raises(DimensionError):
        SymTensor(np.zeros((2, 2, 3)))


def test_apply_form_evaluates_quadratic_form():
    T = SymTensor(QUADRATIC)
    h = np.array([1.0, 1.0])
    assert_allclose(apply_form(T, [h, h]), [0.0, 2.0])
    assert_allclose(apply_form(T, [np.array([1.0, 0.0]), np.array([0.0, 1.0])]), [0.0, 1.0])


def test_apply_form_checks_arity():
    with pytest.raises(DimensionError):
        apply_form(SymTensor(QUADRATIC), [np.ones(2)])


def test_contract_leaves_matrix():
    T = SymTensor(QUADRATIC)
    M = contract(T, np.array([1.0, 1.0]), 1)
    assert M.order == 1
    assert_allclose(M.as_matrix(), [[2.0, -2.0], [1.0, 1.0]])
    with pytest.raises(DimensionError):
        contract(T, np.ones(2), 2)


def test_fd_tensor_matches_exact_third_derivative_of_cubic():
    def evaluator(y):
        return np.array([y[0] ** 3 + y[0] * y[1] ** 2])

    T = fd_derivative_tensor(evaluator, [0.3, -0.2], 3)
    expected = np.zeros((1, 2, 2, 2))
    expected[0, 0, 0, 0] = 6.0
    for idx in [(0, 1, 1), (1, 0, 1), (1, 1, 0)]:
        expected[(0,) + idx] = 2.0
    assert_allclose(T.coefficients, expected, atol=1e-6)


def test_fd_tensor_wraps_evaluator_failure():
    def evaluator(y):
        raise ZeroDivisionError("boom")

    with pytest.raises(EvalError):
        fd_derivative_tensor(evaluator, [0.0], 1)


def test_as_vector_rejects_non_finite():
    with pytest.raises(DimensionError):
        as_vector([1.0, float("nan")])


def test_point_set_merges_close_points():
    points = PointSet.from_points([np.zeros(2), np.array([1e-12, 0.0]), np.ones(2)])
    assert len(points) == 2


def test_nearest_breaks_ties_lexicographically():
    points = PointSet.from_points([np.array([1.0, 0.0]), np.array([-1.0, 0.0])])
    assert_array_equal(points.nearest(np.zeros(2)), [-1.0, 0.0])
    assert_array_equal(points.nearest(np.array([0.9, 0.0])), [1.0, 0.0])


def test_nearest_of_empty_set_raises():
    with pytest.raises(EmptySetError):
        PointSet.from_points([]).nearest(np.zeros(2))


def test_hausdorff_distance():
    S1 = PointSet.from_points([np.zeros(2)])
    S2 = PointSet.from_points([np.zeros(2), np.array([3.0, 4.0])])
    assert hausdorff(S1, S2) == pytest.approx(5.0)
    assert hausdorff(S2, S1) == pytest.approx(5.0)
    assert hausdorff(S2, S2) == 0.0


def test_hausdorff_rejects_empty_sets():
    with pytest.raises(EmptySetError):
        hausdorff(PointSet.from_points([]), PointSet.from_points([np.zeros(1)]))


def _random_tensor(rng, out_dim=2, in_dim=3, order=3):
    return SymTensor(rng.standard_normal((out_dim,) + (in_dim,) * order))


def test_apply_form_is_symmetric_and_multilinear():
    rng = np.random.default_rng(1)
    for _ in range(20):
        T = _random_tensor(rng)
        a, b, c, d = rng.standard_normal((4, 3))
        alpha, beta = rng.standard_normal(2)
        value = apply_form(T, [a, b, c])
        for perm in ([b, a, c], [c, b, a], [a, c, b]):
            assert_allclose(apply_form(T, perm), value, atol=1e-12)
        assert_allclose(
            apply_form(T, [alpha * a + beta * d, b, c]),
            alpha * value + beta * apply_form(T, [d, b, c]),
            atol=1e-12,
        )


def test_contract_agrees_with_apply_form():
    rng = np.random.default_rng(2)
    for _ in range(20):
        T = _random_tensor(rng)
        h, u, v = rng.standard_normal((3, 3))
        assert_allclose(apply_form(contract(T, h, 1), [u, v]), apply_form(T, [h, u, v]), atol=1e-12)
        assert_allclose(apply_form(contract(T, h, 2), [u]), apply_form(T, [h, h, u]), atol=1e-12)


def test_hausdorff_is_a_metric_on_random_sets():
    rng = np.random.default_rng(3)
    for _ in range(20):
        A, B, C = (PointSet(rng.standard_normal((int(rng.integers(1, 6)), 2))) for _ in range(3))
        assert hausdorff(A, B) == pytest.approx(hausdorff(B, A))
        assert hausdorff(A, A) == 0.0
        assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12
