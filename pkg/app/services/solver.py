# app/services/solver.py
"""Constructive singular implicit-function solver.

For a parameter x the Banach condition gives a direction h(x); the branch is
phi(x) = y0 + h + y(x), where y(x) is a fixed point of the set-valued map
Phi(x, y) = L_h^{-1}(r(x, h + y)), found with the contraction-multimapping
iteration.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from app.config import settings
from app.models.schemas import (
    BanachSolution,
    ImplicitSolution,
    ScalingFailure,
    ScalingReport,
    ScalingSample,
    SolverOptions,
)
from app.services.cones import face_of, faces, inclusion_residual
from app.services.errors import (
    BanachConditionFails,
    HypothesisError,
    InputError,
    InsufficientSamples,
    NoContractionError,
    NonConvergence,
    NotDegenerateError,
    NotRegularError,
)
from app.services.multilinear import PointSet, apply_form, as_vector, contract
from app.services.pfactor import PFactorOperator, build_p_factor, degeneracy_profile, invert
from app.services.problems.spec import ProblemSpec

logger = logging.getLogger(__name__)

BURN_IN = 10
THETA_WINDOW = 5
STARTS_SEED = 20240229
MIN_SCALING_SAMPLES = 5
MIN_SCALING_DECADES = 2.0

SetMap = Callable[[np.ndarray], PointSet]


@dataclass(frozen=True, eq=False)
class CMPResult:
    fixed_point: np.ndarray
    theta_estimate: float
    iterations: int
    steps: Tuple[float, ...]


def _theta(steps: Sequence[float]) -> float:
    window = steps[-(THETA_WINDOW + 1):]
    ratios = [b / a for a, b in zip(window, window[1:]) if a > 0]
    return max(ratios, default=0.0)


def cmp_iterate(
    map_: SetMap,
    y0: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
) -> CMPResult:
    """Fixed point of a set-valued contraction by nearest-point selection."""
    tol = settings.tol if tol is None else tol
    max_iter = settings.max_iter if max_iter is None else max_iter
    y = as_vector(y0, "y0")
    steps: List[float] = []
    for iteration in range(1, max_iter + 1):
        image = map_(y)
        if image.is_empty():
            raise NotRegularError(f"the multimapping returned an empty set at iteration {iteration}")
        y_next = image.nearest(y)
        step = float(np.linalg.norm(y_next - y))
        steps.append(step)
        logger.debug(f"CMP iteration {iteration}: step {step:.3e}")
        y = y_next
        if step <= tol:
            theta = _theta(steps)
            logger.info(f"CMP converged in {iteration} iterations, theta={theta:.3g}")
            return CMPResult(fixed_point=y, theta_estimate=theta, iterations=iteration, steps=tuple(steps))
        if iteration >= BURN_IN and _theta(steps) >= 1.0:
            raise NoContractionError(
                f"step ratio {_theta(steps):.3g} >= 1 after {iteration} iterations; the map does not contract"
            )
    raise NonConvergence(f"no fixed point within {max_iter} iterations (last step {steps[-1]:.3e})")


def _linearization(tensor, h: np.ndarray, p: int) -> np.ndarray:
    """Matrix of v -> T[h]^{p-1}[v]."""
    if p == 1:
        return tensor.as_matrix()
    return np.array(contract(tensor, h, p - 1).coefficients)


def _newton_starts(face_index: int, free: Sequence[int], nonneg: Sequence[int], count: int) -> List[np.ndarray]:
    k = len(free)
    rng = np.random.default_rng([STARTS_SEED, face_index])
    directions = [np.ones(k) / math.sqrt(k)]
    while len(directions) < count:
        direction = rng.standard_normal(k)
        directions.append(direction / np.linalg.norm(direction))
    starts: List[np.ndarray] = []
    for direction in directions:
        for pos, i in enumerate(free):
            if i in nonneg:
                direction[pos] = abs(direction[pos])
        if not any(np.allclose(direction, kept) for kept in starts):
            starts.append(direction)
    return starts


def _damped_newton(residual, jacobian, start: np.ndarray, max_iter: int, step_tol: float) -> Tuple[np.ndarray, float]:
    h = start.copy()
    r = residual(h)
    r_norm = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if r_norm == 0.0:
            break
        step = np.linalg.lstsq(jacobian(h), -r, rcond=None)[0]
        if np.linalg.norm(step) <= step_tol:
            break
        damping = 1.0
        while True:
            candidate = h + damping * step
            r_candidate = residual(candidate)
            c_norm = float(np.linalg.norm(r_candidate))
            if c_norm < r_norm or damping < 2.0 ** -30:
                break
            damping /= 2.0
        if c_norm >= r_norm:
            break
        h, r, r_norm = candidate, r_candidate, c_norm
    return h, r_norm


def solve_banach(problem: ProblemSpec, x: np.ndarray, opts: Optional[SolverOptions] = None) -> BanachSolution:
    """Minimal-norm h with -f(x, y0) in (1/(p-1)!) f_y^{(p)}[h]^p + N_C(y0 + h).

    h = 0 is returned only when y0 itself solves the inclusion at x.
    """
    opts = opts or SolverOptions()
    x = as_vector(x, "x")
    y0 = problem.base_y
    f0 = problem.evaluate(x, y0)
    norm_f = float(np.linalg.norm(f0))
    if norm_f <= opts.zero_tol:
        raise InputError("f(x, y0) vanishes; the trivial branch phi(x) = y0 applies")

    p = problem.p
    tensor = problem.p_tensor()
    factor = 1.0 / math.factorial(p - 1)
    scale = norm_f ** (1.0 / p)
    accept_tol = 1e-9 * norm_f
    sign_tol_h = 1e-9 * scale
    nonneg = set(problem.cone.nonneg_indices)

    candidates: List[Tuple[np.ndarray, np.ndarray, float, list]] = []
    if inclusion_residual(problem.cone, y0, f0) <= accept_tol:
        # y0 already solves the inclusion at x
        zero_face = face_of(problem.cone, y0).label()
        certificate = np.zeros(problem.n)
        certificate[zero_face] = -f0[zero_face]
        candidates.append((np.zeros(problem.n), certificate, 0.0, zero_face))
    for face_index, face in enumerate(faces(problem.cone)):
        active = sorted(face.active)
        free = [i for i in range(problem.n) if i not in face.active]

        def full(hf: np.ndarray) -> np.ndarray:
            h = np.zeros(problem.n)
            h[active] = -y0[active]
            h[free] = hf
            return h

        def gap(h: np.ndarray) -> np.ndarray:
            return -f0 - factor * apply_form(tensor, [h] * p)

        def residual(hf: np.ndarray) -> np.ndarray:
            return gap(full(hf))[free]

        def jacobian(hf: np.ndarray) -> np.ndarray:
            lin = -p * factor * _linearization(tensor, full(hf), p)
            return lin[np.ix_(free, free)]

        starts = _newton_starts(face_index, free, nonneg, opts.newton_starts) if free else [np.zeros(0)]
        for start in starts:
            hf, r_norm = _damped_newton(residual, jacobian, scale * start, opts.newton_max_iter, 1e-15 * scale)
            if r_norm > accept_tol:
                continue
            h = full(hf)
            point = y0 + h
            if any(point[i] < -sign_tol_h for i in free if i in nonneg):
                continue
            for i in free:
                if i in nonneg and point[i] < 0.0:
                    h[i] = -y0[i]
            if np.linalg.norm(h) <= 1e-12 * scale:
                continue
            certificate = np.zeros(problem.n)
            certificate[active] = gap(h)[active]
            if np.any(certificate > accept_tol):
                continue
            candidates.append((h, certificate, r_norm, active))

    if not candidates:
        raise BanachConditionFails(f"no face admits a solution of the Banach condition at x={x.tolist()}")
    h, certificate, r_norm, active = min(candidates, key=lambda c: float(np.linalg.norm(c[0])))
    logger.info(f"Banach direction on face {active}: ||h||={np.linalg.norm(h):.6g} ({len(candidates)} candidates)")
    return BanachSolution(
        h=h.tolist(),
        face=active,
        normal_certificate=certificate.tolist(),
        residual=r_norm,
        bound_ratio=float(np.linalg.norm(h)) / scale,
        candidates=len(candidates),
    )


def residual_map(
    problem: ProblemSpec,
    x: np.ndarray,
    h: np.ndarray,
    y: np.ndarray,
    op: Optional[PFactorOperator] = None,
) -> np.ndarray:
    """r(x, h + y) = (1/(p-1)!) f_y^{(p)}[h]^{p-1}[h + y] - f(x, y0 + h + y)."""
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    if op is None:
        op = build_p_factor(problem.p_tensor(), h, problem.cone, problem.p, shift=problem.base_y)
    return op.A @ (h + y) - problem.evaluate(np.asarray(x, dtype=float), problem.base_y + h + y)


def default_relaxation(p: int) -> float:
    """1 while the plain chord step contracts on homogeneous leading forms, else p^{-(p-1)/p}."""
    if p <= 2:
        return 1.0
    return p ** (-(p - 1) / p)


def solve_implicit(problem: ProblemSpec, x: np.ndarray, opts: Optional[SolverOptions] = None) -> ImplicitSolution:
    opts = opts or SolverOptions()
    x = as_vector(x, "x")
    y0 = problem.base_y
    f0 = problem.evaluate(x, y0)
    norm_f = float(np.linalg.norm(f0))

    if opts.check_degeneracy and problem.p >= 2:
        profile = degeneracy_profile(problem)
        if not profile.completely_degenerate:
            raise NotDegenerateError(f"{problem.name} is not completely degenerate up to order {problem.p}")

    def trivial_branch(reason: str) -> ImplicitSolution:
        logger.info(f"{reason} at x={x.tolist()}; returning the trivial branch")
        zeros = [0.0] * problem.n
        return ImplicitSolution(
            x=x.tolist(), h=zeros, y_corr=zeros, phi=y0.tolist(),
            inclusion_residual=inclusion_residual(problem.cone, y0, f0),
            iterations=0, theta_estimate=0.0, m_ratio=0.0, norm_f=norm_f, trivial=True,
        )

    if norm_f <= opts.zero_tol:
        return trivial_branch("f(x, y0) = 0")

    banach = solve_banach(problem, x, opts)
    h = np.array(banach.h)
    if not np.any(h):
        return trivial_branch("-f(x, y0) lies in N_C(y0)")
    op = build_p_factor(problem.p_tensor(), h, problem.cone, problem.p, shift=y0)
    omega = default_relaxation(problem.p) if opts.relaxation is None else opts.relaxation

    def phi_map(y: np.ndarray) -> PointSet:
        z = residual_map(problem, x, h, y, op=op)
        image = invert(op, z, opts.tol, anchor=y).points
        if omega == 1.0:
            return image
        return PointSet((1.0 - omega) * y + omega * image.points)

    cmp = cmp_iterate(phi_map, np.zeros(problem.n), opts.tol, opts.max_iter)
    phi = y0 + h + cmp.fixed_point
    residual = inclusion_residual(problem.cone, phi, problem.evaluate(x, phi))
    if not residual <= opts.residual_tol:
        raise NonConvergence(f"fixed point leaves inclusion residual {residual:.3e} > {opts.residual_tol:.1e}")

    return ImplicitSolution(
        x=x.tolist(),
        h=h.tolist(),
        y_corr=cmp.fixed_point.tolist(),
        phi=phi.tolist(),
        inclusion_residual=residual,
        iterations=cmp.iterations,
        theta_estimate=cmp.theta_estimate,
        m_ratio=float(np.linalg.norm(phi - y0)) / norm_f ** (1.0 / problem.p),
        norm_f=norm_f,
        relaxation=omega,
    )


def scaling_study(problem: ProblemSpec, xs: Sequence[np.ndarray], opts: Optional[SolverOptions] = None) -> ScalingReport:
    """Log-log fit of ||phi(x) - y0|| against ||f(x, y0)|| over the supplied parameters."""
    opts = opts or SolverOptions()

    def attempt(x):
        try:
            return x, solve_implicit(problem, x, opts), None
        except HypothesisError as exc:
            logger.warning(f"Scaling sample x={np.asarray(x).tolist()} failed: {exc}")
            return x, None, exc

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            outcomes = list(pool.map(attempt, xs))
    else:
        outcomes = [attempt(x) for x in xs]

    y0 = problem.base_y
    samples: List[ScalingSample] = []
    failures: List[ScalingFailure] = []
    for x, solution, exc in outcomes:
        x_list = np.asarray(x, dtype=float).tolist()
        if solution is None:
            failures.append(ScalingFailure(x=x_list, error=type(exc).__name__, message=str(exc)))
            continue
        if solution.trivial:
            failures.append(ScalingFailure(x=x_list, error="TrivialBranch", message="y0 solves the inclusion at x"))
            continue
        norm_phi = float(np.linalg.norm(np.array(solution.phi) - y0))
        samples.append(ScalingSample(
            norm_x=float(np.linalg.norm(x_list)),
            norm_f=solution.norm_f,
            norm_phi=norm_phi,
            ratio=solution.m_ratio,
        ))

    if len(samples) < MIN_SCALING_SAMPLES:
        raise InsufficientSamples(f"{len(samples)} successful solves; at least {MIN_SCALING_SAMPLES} are needed")
    log_f = np.log10([s.norm_f for s in samples])
    log_phi = np.log10([s.norm_phi for s in samples])
    if log_f.max() - log_f.min() < MIN_SCALING_DECADES:
        raise InsufficientSamples(f"samples span {log_f.max() - log_f.min():.2f} decades of ||f(x, y0)||; need 2")
    slope = float(np.polyfit(log_f, log_phi, 1)[0])
    report = ScalingReport(
        samples=samples,
        fitted_exponent=slope,
        m_max=max(s.ratio for s in samples),
        failures=failures,
    )
    logger.info(f"Scaling study on {problem.name}: exponent {slope:.4f} over {len(samples)} samples")
    return report
