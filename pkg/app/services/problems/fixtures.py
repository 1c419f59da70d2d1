# app/services/problems/fixtures.py
"""Built-in problems.

example1: planar NCP  f = (y1^2 - y2^2 - x1, y1*y2 - x2) over R^2_+, p = 2.
example2: KKT generalized equation of a degenerate program with cubic rows
          (one parameter, unknowns (y1, y2, lambda1, lambda2)
          -> y1..y4, cone R^2 x R^2_+, p = 3).
example3: parameter-free inclusion 0 in f(y) + N_{R^2_+}(y) with
          f = (y2^2 - y1^2, y1*y2), p = 2, used for tangent certification.
"""
from typing import Dict

from app.services.errors import UnknownFixtureError
from app.services.problems.parser import parse_problem
from app.services.problems.spec import ProblemSpec

FIXTURES: Dict[str, str] = {
    "example1": """
dims 2 2
cone PP
order 2
base x 0 0 y 0 0
f1 = y1^2 - y2^2 - x1
f2 = y1*y2 - x2
""",
    "example2": """
dims 1 4
cone FFPP
order 3
base x 0 y 0 0 0 0
f1 = 4*y1^3 - x1 + 3*y3*y1^2 + 3*y4*y1^2
f2 = -4*y2^3 - 6*y3*y2^2 + 6*y4*y2^2
f3 = y1^3 - 2*y2^3
f4 = y1^3 + 2*y2^3
""",
    "example3": """
dims 0 2
cone PP
order 2
base x y 0 0
f1 = y2^2 - y1^2
f2 = y1*y2
""",
}


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise UnknownFixtureError(f"unknown builtin {name!r}; choose from {sorted(FIXTURES)}")
    return FIXTURES[name].lstrip()


def builtin(name: str) -> ProblemSpec:
    return parse_problem(fixture_text(name), name=name)
