# app/services/problems/polynomial.py
"""Sparse multivariate polynomials over the joint variables (x1..xm, y1..yn)
with exact differentiation."""
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement, permutations
from typing import Dict, Sequence, Tuple

import numpy as np
import sympy as sp

from app.services.errors import DimensionError
from app.services.multilinear import SymTensor

Term = Tuple[float, Tuple[int, ...]]


def variable_names(m: int, n: int) -> Tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(m)) + tuple(f"y{j + 1}" for j in range(n))


@dataclass(frozen=True)
class Polynomial:
    """sum_t c_t * x^a_t * y^b_t with exponent vectors over (x, y)."""

    m: int
    n: int
    terms: Tuple[Term, ...]

    def __post_init__(self):
        collected: Dict[Tuple[int, ...], float] = {}
        for coeff, exps in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.m + self.n:
                raise DimensionError(f"exponent vector {exps} does not match {self.m}+{self.n} variables")
            if any(e < 0 for e in exps):
                raise DimensionError(f"negative exponent in {exps}")
            collected[exps] = collected.get(exps, 0.0) + float(coeff)
        normalized = tuple(
            (coeff, exps) for exps, coeff in sorted(collected.items(), reverse=True) if coeff != 0.0
        )
        object.__setattr__(self, "terms", normalized)

    @classmethod
    def from_expr(cls, expr: sp.Expr, m: int, n: int) -> "Polynomial":
        gens = sp.symbols(variable_names(m, n)) if m + n else ()
        poly = sp.Poly(sp.expand(expr), *gens) if gens else None
        if poly is None:
            return cls(m, n, ((float(expr), ()),))
        return cls(m, n, tuple((float(coeff), exps) for exps, coeff in poly.terms()))

    def to_expr(self) -> sp.Expr:
        syms = sp.symbols(variable_names(self.m, self.n)) if self.m + self.n else ()
        if not isinstance(syms, tuple):
            syms = (syms,)
        return sp.Add(*[
            sp.Float(coeff) * sp.Mul(*[s ** e for s, e in zip(syms, exps)])
            for coeff, exps in self.terms
        ])

    @cached_property
    def _coefficients(self) -> np.ndarray:
        return np.array([coeff for coeff, _ in self.terms], dtype=float)

    @cached_property
    def _exponents(self) -> np.ndarray:
        return np.array([exps for _, exps in self.terms], dtype=int).reshape(len(self.terms), self.m + self.n)

    def evaluate(self, x: np.ndarray, y: np.ndarray, y_only: bool = False) -> float:
        """Value at (x, y); with ``y_only`` the terms free of y are dropped."""
        if not self.terms:
            return 0.0
        point = np.concatenate([np.asarray(x, dtype=float), np.asarray(y, dtype=float)])
        exps = self._exponents
        coeffs = self._coefficients
        if y_only:
            mask = exps[:, self.m:].sum(axis=1) > 0
            exps, coeffs = exps[mask], coeffs[mask]
            if not coeffs.size:
                return 0.0
        return float(np.sum(coeffs * np.prod(point ** exps, axis=1)))

    def derivative(self, var: int) -> "Polynomial":
        """Exact partial derivative with respect to joint variable index ``var``."""
        terms = []
        for coeff, exps in self.terms:
            if exps[var] == 0:
                continue
            lowered = list(exps)
            lowered[var] -= 1
            terms.append((coeff * exps[var], tuple(lowered)))
        return Polynomial(self.m, self.n, tuple(terms))

    def format(self) -> str:
        """Problem-file rendering, lossless for the stored doubles."""
        names = variable_names(self.m, self.n)
        if not self.terms:
            return "0"
        pieces = []
        for coeff, exps in self.terms:
            monomial = "*".join(
                name if e == 1 else f"{name}^{e}" for name, e in zip(names, exps) if e
            )
            magnitude = repr(abs(coeff))
            body = f"{magnitude}*{monomial}" if monomial else magnitude
            sign = "-" if coeff < 0 else "+"
            pieces.append((sign, body))
        first_sign, first_body = pieces[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text


def evaluate_vector(components: Sequence[Polynomial], x: np.ndarray, y: np.ndarray, y_only: bool = False) -> np.ndarray:
    return np.array([poly.evaluate(x, y, y_only) for poly in components], dtype=float)


def poly_derivative_tensor(
    components: Sequence[Polynomial],
    x: np.ndarray,
    y: np.ndarray,
    order: int,
) -> SymTensor:
    """Exact f_y^{(k)}(x, y): symbolic differentiation in y, then evaluation."""
    if order < 1:
        raise DimensionError(f"derivative order must be >= 1, got {order}")
    if not components:
        raise DimensionError("no components to differentiate")
    m, n = components[0].m, components[0].n
    coeffs = np.zeros((len(components),) + (n,) * order)
    for idx in combinations_with_replacement(range(n), order):
        for row, poly in enumerate(components):
            deriv = poly
            for j in idx:
                deriv = deriv.derivative(m + j)
            value = deriv.evaluate(x, y)
            for perm in set(permutations(idx)):
                coeffs[(row,) + perm] = value
    return SymTensor(coeffs)
