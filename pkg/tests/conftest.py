import pytest

from app.models.schemas import SolverOptions, TangentOptions
from app.services.problems import builtin, parse_problem


@pytest.fixture
def example1():
    return builtin("example1")


@pytest.fixture
def example2():
    return builtin("example2")


@pytest.fixture
def example3():
    return builtin("example3")


@pytest.fixture
def linear_control():
    """phi(x) = x exactly; the p = 1 control run."""
    return parse_problem("dims 1 1\ncone F\norder 2\nf1 = y1 - x1\n", name="linear").with_order(1)


@pytest.fixture
def solver_opts():
    return SolverOptions()


@pytest.fixture
def tangent_opts():
    return TangentOptions(check_regularity=False)
