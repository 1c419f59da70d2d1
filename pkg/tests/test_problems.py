import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.services.cones import ConeSpec, inclusion_residual
from app.services.errors import InvalidBasePoint, ProblemSyntaxError, UnknownFixtureError
from app.services.problems import (
    Polynomial,
    builtin,
    from_kkt,
    from_ncp,
    parse_ncp,
    parse_nlp,
    parse_problem,
    serialize_problem,
)


def test_builtin_example1_header(example1):
    assert (example1.m, example1.n, example1.p) == (2, 2, 2)
    assert str(example1.cone) == "PP"
    assert example1.is_polynomial


def test_builtin_example2_header(example2):
    assert (example2.m, example2.n, example2.p) == (1, 4, 3)
    assert str(example2.cone) == "FFPP"


def test_evaluate_example1(example1):
    assert_allclose(example1.evaluate(np.array([0.0, 2.0]), np.array([1.0, 1.0])), [0.0, -1.0])


def test_unknown_builtin():
    with pytest.raises(UnknownFixtureError):
        builtin("example9")


def test_unknown_variable_reports_position():
    with pytest.raises(ProblemSyntaxError) as info:
        parse_problem("dims 1 1\ncone P\norder 2\nf1 = y1^2 + z\n")
    assert info.value.line == 4


def test_order_below_two_is_rejected():
    with pytest.raises(ProblemSyntaxError) as info:
        parse_problem("dims 0 1\ncone P\norder 1\nf1 = y1^2\n")
    assert info.value.line == 3


def test_missing_cone_is_rejected():
    with pytest.raises(ProblemSyntaxError):
        parse_problem("dims 0 1\norder 2\nf1 = y1^2\n")


def test_non_polynomial_expression_is_rejected():
    with pytest.raises(ProblemSyntaxError):
        parse_problem("dims 0 1\ncone F\norder 2\nf1 = 1/y1\n")


def test_statements_may_share_a_line():
    spec = parse_problem("dims 0 1; cone P; order 2  # comment\nf1 = y1^2\n")
    assert spec.n == 1


def test_base_point_must_solve_the_inclusion():
    with pytest.raises(InvalidBasePoint):
        parse_problem("dims 0 1\ncone F\norder 2\nbase x y 1\nf1 = y1^2\n")


def test_serialized_problem_parses_back(example2):
    again = parse_problem(serialize_problem(example2), name="example2")
    assert again.f == example2.f
    assert again.cone == example2.cone
    assert again.p == example2.p


def test_exact_and_fd_tensors_agree(example1):
    exact = example1.derivative_tensor(2, "exact")
    fd = example1.derivative_tensor(2, "fd")
    assert_allclose(fd.coefficients, exact.coefficients, atol=1e-6)


def test_from_ncp_infers_order(example1):
    spec = from_ncp(example1.f)
    assert spec.p == 2
    assert str(spec.cone) == "PP"


def test_parse_ncp_without_cone_and_order():
    spec = parse_ncp("dims 2 2\nf1 = y1^2 - y2^2 - x1\nf2 = y1*y2 - x2\n")
    assert spec.p == 2
    assert str(spec.cone) == "PP"


def test_from_kkt_stacks_lagrangian_and_constraints():
    nlp = parse_nlp("dims 0 1\nobjective = y1^4\ng1 = -y1\n", name="quartic")
    spec = from_kkt(nlp)
    assert str(spec.cone) == "FP"
    assert spec.p == 1
    # L = y1^4 - y2*y1
    assert_allclose(spec.evaluate(np.zeros(0), np.array([1.0, 2.0])), [2.0, 1.0])


@pytest.mark.parametrize("name", ["example1", "example2", "example3"])
@pytest.mark.parametrize("order", [1, 2, 3])
def test_symbolic_and_fd_derivatives_agree(name, order):
    problem = builtin(name)
    exact = problem.derivative_tensor(order, "exact").coefficients
    fd = problem.derivative_tensor(order, "fd").coefficients
    assert_allclose(fd, exact, atol=1e-6)


def _linear_components(M, q):
    n = len(q)
    unit = np.eye(n, dtype=int)
    return [
        Polynomial(0, n, tuple((M[i, j], tuple(unit[j])) for j in range(n)) + ((q[i], (0,) * n),))
        for i in range(n)
    ]


def _complementary(y, f, tol=1e-9):
    return bool(np.all(y >= 0) and np.all(f >= -tol) and np.all(np.abs(f[y > 0]) <= tol))


def test_ncp_reduction_matches_complementarity():
    rng = np.random.default_rng(17)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        support = rng.random(n) < 0.5
        y_star = np.where(support, rng.uniform(0.1, 1.0, n), 0.0)
        w_star = np.where(support, 0.0, rng.uniform(0.1, 1.0, n))
        M = rng.standard_normal((n, n))
        q = w_star - M @ y_star
        spec = from_ncp(_linear_components(M, q), y0=y_star, p=1)
        assert str(spec.cone) == "P" * n
        assert inclusion_residual(spec.cone, y_star, spec.evaluate(np.zeros(0), y_star)) <= 1e-9

        y = np.where(rng.random(n) < 0.5, rng.uniform(0.1, 1.0, n), 0.0)
        f = spec.evaluate(np.zeros(0), y)
        assert_allclose(f, M @ y + q, atol=1e-12)
        solved = inclusion_residual(spec.cone, y, f) <= 1e-9
        assert solved == _complementary(y, f)


def test_kkt_multiplier_block_is_complementary():
    nlp = parse_nlp("dims 0 2\nobjective = y1^2 + y2^2\ng1 = y1 - 1\ng2 = -y2\n", name="box")
    spec = from_kkt(nlp)
    multipliers = ConeSpec.nonneg(2)
    points = [(1.0, 0.0), (0.5, 0.0), (0.5, 0.3), (2.0, 0.0), (1.0, -0.5)]
    lambdas = [(0.0, 0.0), (3.0, 0.0), (0.0, 2.0), (1.0, 1.0)]
    for y in points:
        for lam in lambdas:
            values = spec.evaluate(np.zeros(0), np.array(y + lam))
            g = np.array([y[0] - 1.0, -y[1]])
            assert_allclose(values[2:], -g)
            solved = inclusion_residual(multipliers, np.array(lam), values[2:]) <= 1e-9
            assert solved == _complementary(np.array(lam), -g)
