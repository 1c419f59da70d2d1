import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.schemas import TangentOptions
from app.services.errors import DegenerateDirectionError, InsufficientSamples, NotInKernel
from app.services.problems import parse_problem
from app.services.tangent import certify_tangent, default_t_grid, kernel_check


def test_default_t_grid():
    grid = default_t_grid()
    assert len(grid) == 8
    assert grid[0] == pytest.approx(1e-3)
    assert grid[-1] == pytest.approx(1e-1)


def test_kernel_check_example3(example3):
    assert kernel_check(example3, [0.0, 1.0])
    assert not kernel_check(example3, [1.0, 0.0])


@pytest.mark.parametrize("alpha", [0.5, 2.0, 10.0])
def test_kernel_check_is_invariant_under_positive_scaling(example3, alpha):
    assert kernel_check(example3, [0.0, alpha])
    assert not kernel_check(example3, [alpha, 0.0])


def test_kernel_check_rejects_directions_leaving_the_cone(example3):
    assert not kernel_check(example3, [0.0, -1.0])


def test_certify_ray_in_solution_set(example3, tangent_opts):
    certificate = certify_tangent(example3, [0.0, 1.0], opts=tangent_opts)
    assert certificate.accepted
    assert max(certificate.w_norms) <= 1e-9
    assert all(r <= 1e-8 for r in certificate.per_t_residuals)
    assert certificate.ratio_monotone
    assert len(certificate.samples) == 8


def test_certificate_records_regularity_evidence(example3):
    opts = TangentOptions(samples=20)
    certificate = certify_tangent(example3, [0.0, 1.0], [1e-3, 1e-2, 1e-1], opts)
    assert certificate.regularity_t == [1e-3, 1e-2, 1e-1]
    assert len(certificate.regularity) == 3


def test_direction_outside_kernel(example3, tangent_opts):
    with pytest.raises(NotInKernel):
        certify_tangent(example3, [1.0, 0.0], opts=tangent_opts)


def test_single_point_grid_has_no_slope(example3, tangent_opts):
    with pytest.raises(InsufficientSamples):
        certify_tangent(example3, [0.0, 1.0], [1e-2], tangent_opts)


def test_zero_direction(example3):
    with pytest.raises(DegenerateDirectionError):
        kernel_check(example3, np.zeros(2))


@pytest.fixture
def parabola():
    """Solution set y1 = y2^2 over a free cone, tangent to (0, 1) at the origin."""
    return parse_problem("dims 0 2\ncone FF\norder 2\nf1 = y1*y2 - y2^3\nf2 = y1^2 - y1*y2^2\n", name="parabola")


def test_certify_curved_branch(parabola, tangent_opts):
    certificate = certify_tangent(parabola, [0.0, 1.0], opts=tangent_opts)
    grid = np.array(certificate.t_grid)
    assert certificate.accepted
    assert_allclose(certificate.w_norms, grid ** 2, rtol=1e-6)
    assert certificate.loglog_slope == pytest.approx(2.0, abs=1e-6)
    assert all(r <= 1e-8 for r in certificate.per_t_residuals)
    ratios = np.array(certificate.w_norms) / grid
    # ||w(t)|| / t shrinks as t -> 0
    assert np.all(np.diff(ratios) > 0)
