# app/services/problems/spec.py
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple
import logging

import numpy as np

from app.services.cones import ConeSpec, inclusion_residual
from app.services.errors import DimensionError, EvalError, InvalidBasePoint
from app.services.multilinear import SymTensor, fd_derivative_tensor
from app.services.problems.polynomial import Polynomial, evaluate_vector, poly_derivative_tensor

logger = logging.getLogger(__name__)

BASE_POINT_TOL = 1e-9

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    """Parametric generalized equation 0 in f(x, y) + N_C(y) around (x0, y0).

    ``f`` holds polynomial components; ``evaluator`` is an opaque callback
    used instead when no polynomial form exists (derivatives then come from
    finite differences only).
    """

    m: int
    n: int
    cone: ConeSpec
    p: int
    f: Optional[Tuple[Polynomial, ...]] = None
    evaluator: Optional[Evaluator] = field(default=None, compare=False)
    x0: Tuple[float, ...] = ()
    y0: Tuple[float, ...] = ()
    name: str = field(default="problem", compare=False)

    def __post_init__(self):
        if self.f is None and self.evaluator is None:
            raise DimensionError("a problem needs polynomial components or an evaluator")
        if self.f is not None:
            object.__setattr__(self, "f", tuple(self.f))
            if len(self.f) != self.n:
                raise DimensionError(f"{len(self.f)} components for {self.n} unknowns")
            for poly in self.f:
                if (poly.m, poly.n) != (self.m, self.n):
                    raise DimensionError(f"component over ({poly.m}, {poly.n}) variables, expected ({self.m}, {self.n})")
        if self.cone.dim != self.n:
            raise DimensionError(f"cone of dimension {self.cone.dim} for {self.n} unknowns")
        if self.p < 1:
            raise DimensionError(f"order p must be >= 1, got {self.p}")
        x0 = tuple(float(v) for v in self.x0) if self.x0 else (0.0,) * self.m
        y0 = tuple(float(v) for v in self.y0) if self.y0 else (0.0,) * self.n
        if len(x0) != self.m or len(y0) != self.n:
            raise DimensionError("base point does not match the problem dimensions")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "y0", y0)

        residual = inclusion_residual(self.cone, self.base_y, self.evaluate(self.base_x, self.base_y))
        if not residual <= BASE_POINT_TOL:
            raise InvalidBasePoint(
                f"base point violates 0 in f(x0, y0) + N_C(y0): residual {residual:.3e}"
            )

    @property
    def base_x(self) -> np.ndarray:
        return np.array(self.x0, dtype=float)

    @property
    def base_y(self) -> np.ndarray:
        return np.array(self.y0, dtype=float)

    @property
    def is_polynomial(self) -> bool:
        return self.f is not None

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.m,) or y.shape != (self.n,):
            raise DimensionError(f"expected x in R^{self.m} and y in R^{self.n}, got {x.shape} and {y.shape}")
        if self.f is not None:
            return evaluate_vector(self.f, x, y)
        try:
            value = np.asarray(self.evaluator(x, y), dtype=float)
        except Exception as exc:
            raise EvalError(f"evaluator failed at x={x.tolist()}, y={y.tolist()}: {exc}") from exc
        if value.shape != (self.n,):
            raise EvalError(f"evaluator returned shape {value.shape}, expected ({self.n},)")
        return value

    def increment(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """f(x, y) - f(x, 0); exact term dropping on the polynomial path."""
        if self.f is not None:
            return evaluate_vector(self.f, np.asarray(x, dtype=float), np.asarray(y, dtype=float), y_only=True)
        return self.evaluate(x, y) - self.evaluate(x, np.zeros(self.n))

    def derivative_tensor(self, order: int, method: str = "auto") -> SymTensor:
        """f_y^{(order)}(x0, y0), exact for polynomials unless ``method='fd'``."""
        if method not in ("auto", "exact", "fd"):
            raise ValueError(f"unknown derivative method {method!r}")
        if method == "exact" and self.f is None:
            raise DimensionError("exact derivatives need polynomial components")
        if self.f is not None and method != "fd":
            return poly_derivative_tensor(self.f, self.base_x, self.base_y, order)
        x0 = self.base_x
        return fd_derivative_tensor(lambda y: self.evaluate(x0, y), self.base_y, order)

    def p_tensor(self, method: str = "auto") -> SymTensor:
        return self.derivative_tensor(self.p, method)

    def with_order(self, p: int) -> "ProblemSpec":
        return ProblemSpec(
            m=self.m, n=self.n, cone=self.cone, p=p, f=self.f, evaluator=self.evaluator,
            x0=self.x0, y0=self.y0, name=self.name,
        )


@dataclass(frozen=True)
class NLPSpec:
    """min xi(x; y) subject to g(y) <= 0, over parameters x and unknowns y."""

    objective: Polynomial
    constraints: Tuple[Polynomial, ...] = ()
    x0: Tuple[float, ...] = ()
    y0: Tuple[float, ...] = ()
    name: str = field(default="nlp", compare=False)

    @property
    def m(self) -> int:
        return self.objective.m

    @property
    def n(self) -> int:
        return self.objective.n
