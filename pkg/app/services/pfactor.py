# app/services/pfactor.py
"""The p-factor operator

    L_h(y) = (1/(p-1)!) f_y^{(p)}(x0, y0)[h]^{p-1}[h + y] + N_C(y0 + h + y),

its set-valued inverse, and the sampled diagnostics for the hypotheses of the
singular implicit-function construction.
"""
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy import linalg

from app.config import settings
from app.models.schemas import DegeneracyProfile, RegularityReport
from app.services.cones import ConeSpec, Face, faces
from app.services.errors import (
    DegenerateDirectionError,
    DimensionError,
    NotInvertible,
    NotRegularError,
    OrderTooLowError,
)
from app.services.multilinear import PointSet, SymTensor, apply_form, contract, hausdorff
from app.services.problems.spec import ProblemSpec

logger = logging.getLogger(__name__)

EXACT_ZERO_TOL = 1e-12
FD_ZERO_TOL = 1e-6

Sampler = Callable[[np.random.Generator, int], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True, eq=False)
class PFactorOperator:
    A: np.ndarray
    h: np.ndarray
    shift: np.ndarray
    cone: ConeSpec
    p: int
    tensor: SymTensor

    @property
    def dim(self) -> int:
        return self.cone.dim


@dataclass(frozen=True, eq=False)
class InverseSolveResult:
    points: PointSet
    face_tags: Tuple[Face, ...]
    degenerate_faces: Tuple[Face, ...] = ()

    @property
    def regular(self) -> bool:
        return not self.degenerate_faces


def build_p_factor(
    tensor: SymTensor,
    h: np.ndarray,
    cone: ConeSpec,
    p: int,
    shift: Optional[np.ndarray] = None,
) -> PFactorOperator:
    h = np.asarray(h, dtype=float)
    if tensor.order != p:
        raise DimensionError(f"order-{tensor.order} tensor supplied for p={p}")
    if h.shape != (tensor.in_dim,) or cone.dim != tensor.in_dim:
        raise DimensionError("direction, tensor and cone dimensions disagree")
    if not np.any(h):
        raise DegenerateDirectionError("the p-factor operator needs a nonzero direction h")
    if p == 1:
        A = tensor.as_matrix()
    else:
        A = np.array(contract(tensor, h, p - 1).coefficients) / math.factorial(p - 1)
    shift = np.zeros_like(h) if shift is None else np.asarray(shift, dtype=float)
    A.setflags(write=False)
    return PFactorOperator(A=A, h=h.copy(), shift=shift.copy(), cone=cone, p=p, tensor=tensor)


def _face_candidate(
    A: np.ndarray,
    b: np.ndarray,
    cone: ConeSpec,
    face: Face,
    tol: float,
    rank_tol: float,
    anchor: Optional[np.ndarray],
) -> Tuple[Optional[np.ndarray], bool]:
    """Candidate w on one face, and whether the face system was rank-deficient."""
    n = cone.dim
    free = [i for i in range(n) if i not in face.active]
    w = np.zeros(n)
    degenerate = False
    if free:
        M = A[np.ix_(free, free)]
        rhs = b[free]
        Q, R, piv = linalg.qr(M, pivoting=True)
        pivots = np.abs(np.diag(R))
        rank = int(np.sum(pivots > rank_tol * pivots[0])) if pivots[0] > 0 else 0
        if rank == len(free):
            sol = np.empty(len(free))
            sol[piv] = linalg.solve_triangular(R, Q.T @ rhs)
        else:
            degenerate = True
            if anchor is None:
                return None, True
            sol = linalg.lstsq(M, rhs, cond=rank_tol)[0]
            if np.linalg.norm(M @ sol - rhs) > tol * max(1.0, np.linalg.norm(rhs)):
                return None, True
            basis = linalg.null_space(M, rcond=rank_tol)
            # only the anchor-nearest point of the face solution set is sign-checked
            sol = sol + basis @ (basis.T @ (anchor[free] - sol))
        w[free] = sol

    slack = b - A @ w
    for i in cone.nonneg_indices:
        if i in face.active:
            if slack[i] > tol:
                return None, degenerate
        elif w[i] < -tol:
            return None, degenerate
        else:
            w[i] = max(w[i], 0.0)
    return w, degenerate


def solve_affine_inclusion(
    A: np.ndarray,
    b: np.ndarray,
    cone: ConeSpec,
    tol: Optional[float] = None,
    anchor: Optional[np.ndarray] = None,
    rank_tol: Optional[float] = None,
) -> InverseSolveResult:
    """All w with b - A w in N_C(w), by enumerating the faces of C.

    Rank-deficient faces are recorded; with an ``anchor`` the point of such a
    face's affine solution set nearest to the anchor is kept as a candidate.
    """
    tol = settings.tol if tol is None else tol
    rank_tol = settings.rank_tol if rank_tol is None else rank_tol
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape != (cone.dim, cone.dim) or b.shape != (cone.dim,):
        raise DimensionError(f"operator {A.shape} and right-hand side {b.shape} do not match the cone")
    anchor = None if anchor is None else np.asarray(anchor, dtype=float)

    found: List[Tuple[np.ndarray, Face]] = []
    degenerate: List[Face] = []
    for face in faces(cone):
        w, rank_deficient = _face_candidate(A, b, cone, face, tol, rank_tol, anchor)
        if rank_deficient:
            degenerate.append(face)
        if w is None:
            continue
        if all(np.max(np.abs(w - kept)) > settings.merge_tol for kept, _ in found):
            found.append((w, face))

    points = PointSet.from_points([w for w, _ in found])
    return InverseSolveResult(
        points=points,
        face_tags=tuple(face for _, face in found),
        degenerate_faces=tuple(degenerate),
    )


def invert(
    op: PFactorOperator,
    z: np.ndarray,
    tol: Optional[float] = None,
    anchor: Optional[np.ndarray] = None,
) -> InverseSolveResult:
    """L_h^{-1}(z): every y with z - A(h + y) in N_C(shift + h + y)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (op.dim,):
        raise DimensionError(f"right-hand side of shape {z.shape} for a {op.dim}-dimensional operator")
    offset = op.shift + op.h
    b = z + op.A @ op.shift
    anchor_w = None if anchor is None else offset + np.asarray(anchor, dtype=float)
    result = solve_affine_inclusion(op.A, b, op.cone, tol, anchor=anchor_w)
    if result.points.is_empty():
        raise NotInvertible(
            f"L_h^{{-1}}(z) is empty ({len(result.degenerate_faces)} rank-deficient faces)",
            result.degenerate_faces,
        )
    if result.degenerate_faces:
        logger.debug(f"{len(result.degenerate_faces)} rank-deficient faces while inverting L_h")
    return InverseSolveResult(
        points=PointSet(result.points.points - offset),
        face_tags=result.face_tags,
        degenerate_faces=result.degenerate_faces,
    )


def degeneracy_profile(problem: ProblemSpec, tol: Optional[float] = None, method: str = "auto") -> DegeneracyProfile:
    """Max-norms of f_y^{(k)}(x0, y0), k = 1..p, and the complete-degeneracy verdict."""
    if problem.p < 2:
        raise DimensionError(f"degeneracy needs p >= 2, got {problem.p}")
    exact = problem.is_polynomial and method != "fd"
    if tol is None:
        tol = EXACT_ZERO_TOL if exact else FD_ZERO_TOL
    norms = [problem.derivative_tensor(k, method).max_norm() for k in range(1, problem.p + 1)]
    lower_vanish = all(value <= tol for value in norms[:-1])
    if lower_vanish and norms[-1] <= tol:
        raise OrderTooLowError(
            f"f_y^({problem.p}) also vanishes at the base point; the degeneracy order exceeds p={problem.p}"
        )
    profile = DegeneracyProfile(
        p=problem.p,
        method="exact" if exact else "fd",
        norms=norms,
        completely_degenerate=lower_vanish,
        tol=tol,
    )
    logger.info(f"Degeneracy profile of {problem.name}: norms={norms}, verdict={lower_vanish}")
    return profile


def uniform_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    direction = rng.standard_normal(dim)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        return np.zeros(dim)
    return radius * rng.random() ** (1.0 / dim) * direction / norm


def ball_sampler(radius: float) -> Sampler:
    def sample(rng: np.random.Generator, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        return uniform_ball(rng, dim, radius), uniform_ball(rng, dim, radius)
    return sample


def strong_regularity_estimate(
    op: PFactorOperator,
    sampler: Optional[Sampler] = None,
    samples: Optional[int] = None,
    tol: Optional[float] = None,
    seed: Optional[int] = None,
    radius: Optional[float] = None,
) -> RegularityReport:
    """Empirical constant c in H(L^{-1}(z1), L^{-1}(z2)) <= c/||h||^{p-1} ||z1 - z2||."""
    samples = settings.samples if samples is None else samples
    seed = settings.seed if seed is None else seed
    radius = settings.sample_radius if radius is None else radius
    if samples < 2:
        raise ValueError("strong regularity estimation needs at least two samples")
    sampler = sampler or ball_sampler(radius)
    scale = float(np.linalg.norm(op.h)) ** (op.p - 1)

    ratios: List[float] = []
    worst: Optional[Tuple[np.ndarray, np.ndarray]] = None
    failures = 0
    degenerate = 0
    for index in range(samples):
        rng = np.random.default_rng([seed, index])
        z1, z2 = sampler(rng, op.dim)
        gap = float(np.linalg.norm(z1 - z2))
        if gap == 0.0:
            continue
        try:
            first = invert(op, z1, tol)
            second = invert(op, z2, tol)
        except NotInvertible:
            failures += 1
            continue
        if not (first.regular and second.regular):
            degenerate += 1
            continue
        ratio = scale * hausdorff(first.points, second.points) / gap
        if not ratios or ratio > max(ratios):
            worst = (z1, z2)
        ratios.append(ratio)

    if failures == samples:
        raise NotRegularError(f"L_h^{{-1}} was empty on all {samples} samples")
    regular = failures == 0 and degenerate == 0
    if not regular:
        logger.warning(f"Strong p-regularity evidence failed: {failures} empty inverses, {degenerate} degenerate samples")
    report = RegularityReport(
        c_estimate=max(ratios) if regular and ratios else math.inf,
        median_ratio=float(np.median(ratios)) if regular and ratios else math.inf,
        sample_count=len(ratios),
        failures=failures,
        degenerate_samples=degenerate,
        worst_pair=[worst[0].tolist(), worst[1].tolist()] if worst is not None else None,
        seed=seed,
        radius=radius,
        regular=regular,
    )
    logger.info(f"Strong regularity estimate: c={report.c_estimate:.6g}, median={report.median_ratio:.6g}")
    return report


def approximation_delta(
    problem: ProblemSpec,
    x: np.ndarray,
    radius: float,
    samples: int,
    seed: Optional[int] = None,
) -> float:
    """Empirical modulus delta of the p-factor approximation condition on the radius-ball."""
    if radius <= 0 or samples < 1:
        raise ValueError("approximation_delta needs radius > 0 and samples >= 1")
    seed = settings.seed if seed is None else seed
    x = np.asarray(x, dtype=float)
    p = problem.p
    tensor = problem.p_tensor()
    factor = 1.0 / math.factorial(p)
    y0 = problem.base_y

    def remainder(y: np.ndarray) -> np.ndarray:
        return problem.increment(x, y0 + y) - factor * apply_form(tensor, [y] * p)

    delta = 0.0
    for index in range(samples):
        rng = np.random.default_rng([seed, index])
        y1 = uniform_ball(rng, problem.n, radius)
        y2 = uniform_ball(rng, problem.n, radius)
        gap = float(np.linalg.norm(y1 - y2))
        if gap == 0.0:
            continue
        numerator = float(np.linalg.norm(remainder(y1) - remainder(y2)))
        denominator = (np.linalg.norm(y1) ** (p - 1) + np.linalg.norm(y2) ** (p - 1)) * gap
        delta = max(delta, numerator / denominator)
    logger.info(f"p-factor approximation delta at radius {radius}: {delta:.3e}")
    return delta


def robinson_check(
    problem: ProblemSpec,
    tol: Optional[float] = None,
    samples: int = 20,
    radius: float = 1e-3,
    seed: Optional[int] = None,
) -> bool:
    """Whether T y = f(x0,y0) + f'_y(x0,y0)(y - y0) + N_C(y) has a single-valued inverse near 0.

    Every sampled right-hand side (0 included) must give exactly one solution
    and no rank-deficient face.
    """
    seed = settings.seed if seed is None else seed
    J = problem.derivative_tensor(1).as_matrix()
    f0 = problem.evaluate(problem.base_x, problem.base_y)
    offset = J @ problem.base_y - f0
    for index in range(samples + 1):
        if index == 0:
            z = np.zeros(problem.n)
        else:
            z = uniform_ball(np.random.default_rng([seed, index]), problem.n, radius)
        result = solve_affine_inclusion(J, z + offset, problem.cone, tol)
        if result.degenerate_faces or len(result.points) != 1:
            logger.info(f"Robinson strong regularity fails for {problem.name} at sample {index}")
            return False
    return True
