# app/services/cones.py
"""Orthant-product cones C (free lines x nonnegative half-lines) and their
normal cones N_C(y)."""
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import FrozenSet, List, Optional, Tuple
import math

import numpy as np

from app.config import settings
from app.services.errors import DimensionError, EnumerationLimitError

MAX_ENUMERATED_NONNEG = 20


class ConeKind(str, Enum):
    FREE = "F"
    NONNEG = "P"


class Constraint(str, Enum):
    ZERO = "zero"
    NONPOS = "nonpos"


@dataclass(frozen=True)
class ConeSpec:
    kinds: Tuple[ConeKind, ...]

    @classmethod
    def from_string(cls, text: str) -> "ConeSpec":
        try:
            return cls(tuple(ConeKind(ch) for ch in text.strip().upper()))
        except ValueError:
            raise DimensionError(f"cone string must use only F and P, got {text!r}")

    @classmethod
    def nonneg(cls, n: int) -> "ConeSpec":
        return cls((ConeKind.NONNEG,) * n)

    @classmethod
    def free(cls, n: int) -> "ConeSpec":
        return cls((ConeKind.FREE,) * n)

    def __str__(self) -> str:
        return "".join(kind.value for kind in self.kinds)

    @property
    def dim(self) -> int:
        return len(self.kinds)

    @property
    def nonneg_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, kind in enumerate(self.kinds) if kind is ConeKind.NONNEG)

    def is_nonneg(self, i: int) -> bool:
        return self.kinds[i] is ConeKind.NONNEG


@dataclass(frozen=True)
class Face:
    """NonNeg coordinates pinned to zero; other NonNeg coordinates are positive."""

    active: FrozenSet[int] = frozenset()

    def label(self) -> List[int]:
        return sorted(self.active)


@dataclass(frozen=True)
class NormalConeRep:
    feasible: bool
    constraints: Optional[Tuple[Constraint, ...]] = None

    def is_empty(self) -> bool:
        return not self.feasible


def _check_dim(spec: ConeSpec, *vectors: np.ndarray):
    for vec in vectors:
        if np.shape(vec) != (spec.dim,):
            raise DimensionError(f"vector of shape {np.shape(vec)} does not match cone dimension {spec.dim}")


def _tol(tol: Optional[float]) -> float:
    return settings.feasibility_tol if tol is None else tol


def in_cone(spec: ConeSpec, y: np.ndarray, tol: Optional[float] = None) -> bool:
    y = np.asarray(y, dtype=float)
    _check_dim(spec, y)
    tol = _tol(tol)
    return all(y[i] >= -tol for i in spec.nonneg_indices)


def normal_cone_at(spec: ConeSpec, y: np.ndarray, tol: Optional[float] = None) -> NormalConeRep:
    y = np.asarray(y, dtype=float)
    _check_dim(spec, y)
    tol = _tol(tol)
    if not in_cone(spec, y, tol):
        return NormalConeRep(feasible=False)
    constraints = tuple(
        Constraint.NONPOS if spec.is_nonneg(i) and abs(y[i]) <= tol else Constraint.ZERO
        for i in range(spec.dim)
    )
    return NormalConeRep(feasible=True, constraints=constraints)


def _violations(rep: NormalConeRep, z: np.ndarray) -> np.ndarray:
    """Componentwise distance of z to the sign pattern of ``rep``."""
    return np.array([
        max(z[i], 0.0) if c is Constraint.NONPOS else abs(z[i])
        for i, c in enumerate(rep.constraints)
    ])


def in_normal_cone(spec: ConeSpec, y: np.ndarray, z: np.ndarray, tol: Optional[float] = None) -> bool:
    z = np.asarray(z, dtype=float)
    _check_dim(spec, z)
    tol = _tol(tol)
    rep = normal_cone_at(spec, y, tol)
    if rep.is_empty():
        return False
    return bool(np.all(_violations(rep, z) <= tol))


def inclusion_residual(spec: ConeSpec, y: np.ndarray, v: np.ndarray, tol: Optional[float] = None) -> float:
    """Euclidean distance from -v to N_C(y); +inf when y is outside C."""
    v = np.asarray(v, dtype=float)
    _check_dim(spec, v)
    rep = normal_cone_at(spec, y, tol)
    if rep.is_empty():
        return math.inf
    return float(np.linalg.norm(_violations(rep, -v)))


def faces(spec: ConeSpec) -> List[Face]:
    """All active-set patterns, ordered by size then lexicographically."""
    nonneg = spec.nonneg_indices
    if len(nonneg) > MAX_ENUMERATED_NONNEG:
        raise EnumerationLimitError(
            f"{len(nonneg)} nonnegative coordinates exceed the enumeration bound {MAX_ENUMERATED_NONNEG}"
        )
    return [
        Face(frozenset(active))
        for size in range(len(nonneg) + 1)
        for active in combinations(nonneg, size)
    ]


def face_of(spec: ConeSpec, y: np.ndarray, tol: Optional[float] = None) -> Face:
    """The face whose sign pattern y (in C) matches."""
    y = np.asarray(y, dtype=float)
    _check_dim(spec, y)
    tol = _tol(tol)
    return Face(frozenset(i for i in spec.nonneg_indices if abs(y[i]) <= tol))
