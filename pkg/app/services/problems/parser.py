# app/services/problems/parser.py
"""Problem-file grammar.

    dims m n
    cone <F|P string of length n>
    order p                      (alias: p)
    base x <m reals> y <n reals>
    f<i> = <polynomial in x1..xm, y1..yn>

NLP files replace the ``cone``/``order``/``f<i>`` lines by
``objective = <expr>`` and ``g<j> = <expr>`` (constraints g(y) <= 0).
Statements are separated by newlines or ``;``; ``#`` starts a comment.
"""
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple
import logging
import re

import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from app.services.cones import ConeSpec
from app.services.errors import DimensionError, ProblemSyntaxError
from app.services.problems.polynomial import Polynomial, variable_names
from app.services.problems.reductions import from_ncp
from app.services.problems.spec import NLPSpec, ProblemSpec

logger = logging.getLogger(__name__)

TRANSFORMATIONS = standard_transformations + (convert_xor,)
ASSIGNMENT = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*(.*)$")


@dataclass
class _Statement:
    line: int
    column: int
    text: str

    def fail(self, message: str, offset: int = 0) -> ProblemSyntaxError:
        return ProblemSyntaxError(message, self.line, self.column + offset)


def _statements(text: str) -> Iterator[_Statement]:
    for line_no, raw in enumerate(text.replace("−", "-").splitlines(), start=1):
        line = raw.split("#", 1)[0]
        start = 0
        for chunk in line.split(";"):
            stripped = chunk.strip()
            if stripped:
                yield _Statement(line_no, start + chunk.index(stripped) + 1, stripped)
            start += len(chunk) + 1


def _parse_int(stmt: _Statement, token: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise stmt.fail(f"expected an integer, got {token!r}", stmt.text.find(token))


def _parse_float(stmt: _Statement, token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise stmt.fail(f"expected a real number, got {token!r}", stmt.text.find(token))


def _parse_base(stmt: _Statement, tokens: List[str], m: int, n: int) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    if "x" not in tokens or "y" not in tokens:
        raise stmt.fail("base needs 'x <reals> y <reals>'")
    ix, iy = tokens.index("x"), tokens.index("y")
    if not ix < iy:
        raise stmt.fail("base lists x before y")
    xs = tuple(_parse_float(stmt, t) for t in tokens[ix + 1:iy])
    ys = tuple(_parse_float(stmt, t) for t in tokens[iy + 1:])
    if len(xs) != m or len(ys) != n:
        raise stmt.fail(f"base expects {m} x-values and {n} y-values, got {len(xs)} and {len(ys)}")
    return xs, ys


def parse_expression(stmt: _Statement, source: str, offset: int, m: int, n: int) -> Polynomial:
    names = variable_names(m, n)
    symbols = {name: sp.Symbol(name) for name in names}
    try:
        expr = parse_expr(source, local_dict=symbols, transformations=TRANSFORMATIONS, evaluate=True)
    except (SyntaxError, TypeError, ValueError, sp.SympifyError) as exc:
        column = getattr(exc, "offset", None) or 1
        raise stmt.fail(f"cannot parse expression: {exc}", offset + column - 1)
    unknown = sorted(str(s) for s in expr.free_symbols if str(s) not in symbols)
    if unknown:
        match = re.search(rf"\b{re.escape(unknown[0])}\b", source)
        raise stmt.fail(f"unknown variable {unknown[0]!r}", offset + (match.start() if match else 0))
    try:
        return Polynomial.from_expr(expr, m, n)
    except (sp.PolynomialError, TypeError, ValueError) as exc:
        raise stmt.fail(f"not a polynomial expression: {exc}", offset)


def _header(statements: List[_Statement]) -> Tuple[int, int, _Statement]:
    for stmt in statements:
        tokens = stmt.text.split()
        if tokens[0] == "dims":
            if len(tokens) != 3:
                raise stmt.fail("dims expects two integers 'dims m n'")
            return _parse_int(stmt, tokens[1]), _parse_int(stmt, tokens[2]), stmt
    raise ProblemSyntaxError("missing 'dims m n' line", 1, 1)


def _assignments(statements: List[_Statement], m: int, n: int) -> Dict[str, Tuple[_Statement, Polynomial]]:
    found: Dict[str, Tuple[_Statement, Polynomial]] = {}
    for stmt in statements:
        match = ASSIGNMENT.match(stmt.text)
        if not match:
            continue
        name, source = match.group(1), match.group(2)
        if name in found:
            raise stmt.fail(f"duplicate definition of {name}")
        found[name] = (stmt, parse_expression(stmt, source, match.start(2), m, n))
    return found


def _problem_parts(text: str):
    statements = list(_statements(text))
    m, n, _ = _header(statements)
    cone: Optional[ConeSpec] = None
    p: Optional[int] = None
    x0: Tuple[float, ...] = ()
    y0: Tuple[float, ...] = ()
    for stmt in statements:
        if ASSIGNMENT.match(stmt.text):
            continue
        tokens = stmt.text.split()
        keyword = tokens[0]
        if keyword == "dims":
            continue
        if keyword == "cone":
            if len(tokens) != 2:
                raise stmt.fail("cone expects one F/P string")
            try:
                cone = ConeSpec.from_string(tokens[1])
            except DimensionError as exc:
                raise stmt.fail(str(exc), stmt.text.find(tokens[1]))
            if cone.dim != n:
                raise stmt.fail(f"cone has length {cone.dim}, expected {n}", stmt.text.find(tokens[1]))
        elif keyword in ("order", "p"):
            if len(tokens) != 2:
                raise stmt.fail("order expects one integer")
            p = _parse_int(stmt, tokens[1])
            if p < 2:
                raise stmt.fail(f"order p must be >= 2, got {p}", stmt.text.find(tokens[1]))
        elif keyword == "base":
            x0, y0 = _parse_base(stmt, tokens[1:], m, n)
        else:
            raise stmt.fail(f"unknown statement {keyword!r}")

    last_line = statements[-1].line if statements else 1
    assignments = _assignments(statements, m, n)
    components = []
    for i in range(1, n + 1):
        if f"f{i}" not in assignments:
            raise ProblemSyntaxError(f"missing component f{i}", last_line, 1)
        components.append(assignments.pop(f"f{i}")[1])
    if assignments:
        extra, (stmt, _) = next(iter(assignments.items()))
        raise stmt.fail(f"unexpected definition {extra!r}")
    return m, n, cone, p, x0, y0, tuple(components), last_line


def parse_problem(text: str, name: str = "problem") -> ProblemSpec:
    m, n, cone, p, x0, y0, components, last_line = _problem_parts(text)
    if cone is None:
        raise ProblemSyntaxError("missing 'cone' line", last_line, 1)
    if p is None:
        raise ProblemSyntaxError("missing 'order' line", last_line, 1)
    spec = ProblemSpec(m=m, n=n, cone=cone, p=p, f=components, x0=x0, y0=y0, name=name)
    logger.info(f"Parsed problem {name}: m={m}, n={n}, cone={cone}, p={p}")
    return spec


def parse_ncp(text: str, name: str = "ncp") -> ProblemSpec:
    """Complementarity file: the problem grammar with ``cone`` and ``order`` optional.

    The cone is always R^n_+; a missing order is inferred from the derivatives.
    """
    m, n, cone, p, x0, y0, components, last_line = _problem_parts(text)
    if cone is not None and cone.nonneg_indices != tuple(range(n)):
        raise ProblemSyntaxError(f"a complementarity problem lives on P^n, got cone {cone}", last_line, 1)
    return from_ncp(components, x0, y0, p=p, name=name)


def parse_nlp(text: str, name: str = "nlp") -> NLPSpec:
    statements = list(_statements(text))
    m, n, _ = _header(statements)
    x0: Tuple[float, ...] = ()
    y0: Tuple[float, ...] = ()
    for stmt in statements:
        if ASSIGNMENT.match(stmt.text):
            continue
        tokens = stmt.text.split()
        if tokens[0] == "dims":
            continue
        if tokens[0] == "base":
            x0, y0 = _parse_base(stmt, tokens[1:], m, n)
        else:
            raise stmt.fail(f"unknown statement {tokens[0]!r}")

    assignments = _assignments(statements, m, n)
    last_line = statements[-1].line if statements else 1
    if "objective" not in assignments:
        raise ProblemSyntaxError("missing 'objective = ...' line", last_line, 1)
    objective = assignments.pop("objective")[1]
    constraints = []
    j = 1
    while f"g{j}" in assignments:
        constraints.append(assignments.pop(f"g{j}")[1])
        j += 1
    if assignments:
        extra, (stmt, _) = next(iter(assignments.items()))
        raise stmt.fail(f"unexpected definition {extra!r}")
    return NLPSpec(objective=objective, constraints=tuple(constraints), x0=x0, y0=y0, name=name)


def serialize_problem(spec: ProblemSpec) -> str:
    if not spec.is_polynomial:
        raise DimensionError("only polynomial problems can be written as problem files")
    lines = [
        f"dims {spec.m} {spec.n}",
        f"cone {spec.cone}",
        f"order {spec.p}",
        "base x " + " ".join(repr(v) for v in spec.x0) + " y " + " ".join(repr(v) for v in spec.y0),
    ]
    lines += [f"f{i} = {poly.format()}" for i, poly in enumerate(spec.f, start=1)]
    return "\n".join(line.replace("  ", " ") for line in lines) + "\n"
