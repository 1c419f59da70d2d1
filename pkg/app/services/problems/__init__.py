from app.services.problems.fixtures import FIXTURES, builtin, fixture_text
from app.services.problems.parser import parse_ncp, parse_nlp, parse_problem, serialize_problem
from app.services.problems.polynomial import Polynomial, poly_derivative_tensor
from app.services.problems.reductions import from_kkt, from_ncp, infer_order
from app.services.problems.spec import NLPSpec, ProblemSpec

__all__ = [
    "FIXTURES",
    "NLPSpec",
    "Polynomial",
    "ProblemSpec",
    "builtin",
    "fixture_text",
    "from_kkt",
    "from_ncp",
    "infer_order",
    "parse_ncp",
    "parse_nlp",
    "parse_problem",
    "poly_derivative_tensor",
    "serialize_problem",
]
