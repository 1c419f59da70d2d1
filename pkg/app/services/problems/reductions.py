# app/services/problems/reductions.py
"""Reductions of complementarity and KKT systems to generalized equations."""
from typing import Optional, Sequence, Tuple
import logging

import numpy as np
import sympy as sp

from app.services.cones import ConeKind, ConeSpec
from app.services.errors import DimensionError, OrderTooLowError
from app.services.multilinear import MAX_FD_ORDER
from app.services.problems.polynomial import Polynomial, poly_derivative_tensor
from app.services.problems.spec import NLPSpec, ProblemSpec

logger = logging.getLogger(__name__)

ZERO_TENSOR_TOL = 1e-12


def infer_order(
    components: Sequence[Polynomial],
    x0: Sequence[float],
    y0: Sequence[float],
    max_order: int = MAX_FD_ORDER,
) -> int:
    """Smallest k whose exact y-derivative tensor at (x0, y0) does not vanish."""
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    for k in range(1, max_order + 1):
        if poly_derivative_tensor(components, x0, y0, k).max_norm() > ZERO_TENSOR_TOL:
            return k
    raise OrderTooLowError(f"all y-derivatives up to order {max_order} vanish at the base point")


def _base(m: int, n: int, x0: Sequence[float], y0: Sequence[float]) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    x0 = tuple(float(v) for v in x0) if len(x0) else (0.0,) * m
    y0 = tuple(float(v) for v in y0) if len(y0) else (0.0,) * n
    return x0, y0


def from_ncp(
    components: Sequence[Polynomial],
    x0: Sequence[float] = (),
    y0: Sequence[float] = (),
    p: Optional[int] = None,
    name: str = "ncp",
) -> ProblemSpec:
    """y >= 0, f(x, y) >= 0, <f, y> = 0  as  0 in f(x, y) + N_{R^n_+}(y)."""
    components = tuple(components)
    if not components:
        raise DimensionError("an NCP needs at least one component")
    m, n = components[0].m, components[0].n
    x0, y0 = _base(m, n, x0, y0)
    if p is None:
        p = infer_order(components, x0, y0)
        logger.info(f"Inferred degeneracy order p={p} for {name}")
    return ProblemSpec(m=m, n=n, cone=ConeSpec.nonneg(n), p=p, f=components, x0=x0, y0=y0, name=name)


def from_kkt(nlp: NLPSpec, p: Optional[int] = None, name: Optional[str] = None) -> ProblemSpec:
    """Stack (L'_y(y, lambda), -g(y)) over the cone R^n x R^k_+.

    Multipliers become the trailing unknowns y_{n+1}..y_{n+k}.
    """
    m, n, k = nlp.m, nlp.n, len(nlp.constraints)
    primal = [sp.Symbol(f"y{i + 1}") for i in range(n)]
    multipliers = [sp.Symbol(f"y{n + j + 1}") for j in range(k)]
    constraints = [g.to_expr() for g in nlp.constraints]
    lagrangian = nlp.objective.to_expr() + sum(
        (lam * g for lam, g in zip(multipliers, constraints)), sp.Integer(0)
    )
    rows = [sp.diff(lagrangian, y) for y in primal] + [-g for g in constraints]
    components = tuple(Polynomial.from_expr(row, m, n + k) for row in rows)

    x0, y0 = _base(m, n, nlp.x0, nlp.y0)
    y0 = y0 + (0.0,) * k
    cone = ConeSpec((ConeKind.FREE,) * n + (ConeKind.NONNEG,) * k)
    if p is None:
        p = infer_order(components, x0, y0)
    label = name or f"kkt({nlp.name})"
    logger.info(f"KKT reduction {label}: {n} primal, {k} multipliers, p={p}")
    return ProblemSpec(m=m, n=n + k, cone=cone, p=p, f=components, x0=x0, y0=y0, name=label)
