# app/services/multilinear.py
"""Symmetric tensor algebra, p-form evaluation, finite-difference derivative
tensors and the Hausdorff distance between finite point sets."""
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations, product
from typing import Callable, Iterable, Optional, Sequence
import logging
import math

import numpy as np
from scipy.spatial.distance import cdist

from app.config import settings
from app.services.errors import DimensionError, EmptySetError, EvalError

logger = logging.getLogger(__name__)

MAX_FD_ORDER = 4
# Relative FD step per derivative order; scaled by max(1, ||point||).
FD_STEPS = {1: 1e-5, 2: 1e-3, 3: 1e-2, 4: 2e-2}


def as_vector(values: Iterable[float], name: str = "vector") -> np.ndarray:
    vec = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if vec.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise DimensionError(f"{name} has non-finite entries")
    return vec


def symmetrize(coefficients: np.ndarray) -> np.ndarray:
    """Average over all permutations of the input axes (axes 1..k)."""
    order = coefficients.ndim - 1
    if order <= 1:
        return coefficients.copy()
    axes = list(range(1, order + 1))
    total = np.zeros_like(coefficients)
    perms = list(permutations(axes))
    for perm in perms:
        total += np.transpose(coefficients, [0, *perm])
    return total / len(perms)


@dataclass(frozen=True, eq=False)
class SymTensor:
    """Symmetric multilinear map Y^k -> Y*, stored dense as (out, in, ..., in)."""

    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.ndim < 2:
            raise DimensionError("a tensor needs an output axis and at least one input axis")
        in_dims = set(coeffs.shape[1:])
        if len(in_dims) != 1:
            raise DimensionError(f"input axes must share one dimension, got {coeffs.shape[1:]}")
        coeffs = symmetrize(coeffs)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def order(self) -> int:
        return self.coefficients.ndim - 1

    @property
    def out_dim(self) -> int:
        return self.coefficients.shape[0]

    @property
    def in_dim(self) -> int:
        return self.coefficients.shape[1]

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.coefficients))) if self.coefficients.size else 0.0

    def as_matrix(self) -> np.ndarray:
        if self.order != 1:
            raise DimensionError(f"only order-1 tensors are matrices, got order {self.order}")
        return np.array(self.coefficients)

    @classmethod
    def zeros(cls, out_dim: int, in_dim: int, order: int) -> "SymTensor":
        return cls(np.zeros((out_dim,) + (in_dim,) * order))


def _check_arg(T: SymTensor, arg: np.ndarray) -> np.ndarray:
    vec = np.asarray(arg, dtype=float)
    if vec.shape != (T.in_dim,):
        raise DimensionError(f"argument of shape {vec.shape} does not match input dimension {T.in_dim}")
    return vec


def apply_form(T: SymTensor, args: Sequence[np.ndarray]) -> np.ndarray:
    """B(x1, ..., xk); the p-form B[x]^p when all arguments coincide."""
    if len(args) != T.order:
        raise DimensionError(f"tensor of order {T.order} applied to {len(args)} arguments")
    result = np.asarray(T.coefficients)
    for arg in args:
        result = result @ _check_arg(T, arg)
    return np.asarray(result, dtype=float)


def contract(T: SymTensor, h: np.ndarray, count: int) -> SymTensor:
    """Partial application T[h]^count leaving a tensor of order T.order - count."""
    if not 1 <= count < T.order:
        raise DimensionError(f"cannot contract {count} slots of an order-{T.order} tensor")
    h = _check_arg(T, h)
    result = np.asarray(T.coefficients)
    for _ in range(count):
        result = result @ h
    return SymTensor(result)


def default_fd_step(point: np.ndarray, order: int) -> float:
    scale = max(1.0, float(np.linalg.norm(point)))
    return FD_STEPS[order] * scale


def fd_derivative_tensor(
    evaluator: Callable[[np.ndarray], np.ndarray],
    point: Sequence[float],
    order: int,
    step: Optional[float] = None,
) -> SymTensor:
    """Central-difference estimate of the order-th derivative tensor.

    Mixed partials use the signed stencil over {-1, +1}^order, which is exact
    for polynomials of degree <= order + 1 up to roundoff. Only sorted index
    tuples are evaluated; the rest are filled by symmetry.
    """
    if order not in FD_STEPS:
        raise DimensionError(f"finite-difference order must be in 1..{MAX_FD_ORDER}, got {order}")
    point = as_vector(point, "point")
    if step is None:
        step = default_fd_step(point, order)
    if step <= 0:
        raise ValueError("finite-difference step must be positive")

    def call(y: np.ndarray) -> np.ndarray:
        try:
            value = np.asarray(evaluator(y), dtype=float)
        except Exception as exc:
            raise EvalError(f"evaluator failed at {y.tolist()}: {exc}") from exc
        if not np.all(np.isfinite(value)):
            raise EvalError(f"evaluator returned non-finite values at {y.tolist()}")
        return value

    n = point.size
    out_dim = call(point).size
    coeffs = np.zeros((out_dim,) + (n,) * order)
    signs = list(product((-1.0, 1.0), repeat=order))
    denom = (2.0 * step) ** order
    for idx in combinations_with_replacement(range(n), order):
        acc = np.zeros(out_dim)
        for sgn in signs:
            shift = np.zeros(n)
            for s, i in zip(sgn, idx):
                shift[i] += s * step
            acc += math.prod(sgn) * call(point + shift)
        value = acc / denom
        for perm in set(permutations(idx)):
            coeffs[(slice(None),) + perm] = value
    return SymTensor(coeffs)


@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite point set; rows of ``points`` are the members."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 0) if pts.size == 0 else pts.reshape(1, -1)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points: Iterable[np.ndarray], merge_tol: Optional[float] = None) -> "PointSet":
        merged = merge_points(points, merge_tol)
        if not merged:
            return cls(np.zeros((0, 0)))
        return cls(np.vstack(merged))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __iter__(self):
        return iter(self.points)

    def is_empty(self) -> bool:
        return len(self) == 0

    def nearest(self, target: np.ndarray) -> np.ndarray:
        """Nearest member; ties by minimal norm, then lexicographic order."""
        if self.is_empty():
            raise EmptySetError("nearest point requested from an empty set")
        dists = np.linalg.norm(self.points - target, axis=1)
        norms = np.linalg.norm(self.points, axis=1)
        keys = [(round(d, 12), round(m, 12), tuple(p)) for d, m, p in zip(dists, norms, self.points.tolist())]
        best = min(range(len(keys)), key=keys.__getitem__)
        return np.array(self.points[best])


def merge_points(points: Iterable[np.ndarray], merge_tol: Optional[float] = None) -> list:
    tol = settings.merge_tol if merge_tol is None else merge_tol
    merged: list = []
    for point in points:
        vec = np.asarray(point, dtype=float)
        if not any(np.max(np.abs(vec - kept)) <= tol for kept in merged):
            merged.append(vec)
    return merged


def hausdorff(S1: PointSet, S2: PointSet) -> float:
    """max(sup_a dist(a, S2), sup_b dist(b, S1)) under the Euclidean metric."""
    if S1.is_empty() or S2.is_empty():
        raise EmptySetError("Hausdorff distance involving an empty set")
    if S1.points.shape[1] != S2.points.shape[1]:
        raise DimensionError("point sets live in different dimensions")
    distance_matrix = cdist(S1.points, S2.points)
    forward = np.max(np.min(distance_matrix, axis=1))
    backward = np.max(np.min(distance_matrix, axis=0))
    return float(max(forward, backward))
