# app/services/tangent.py
"""Tangent-direction certification for the solution set of 0 in f(x0, y) + N_C(y).

A direction h_bar is certified by constructing, for each t on a grid, a
correction w(t) with y0 + t h_bar + w(t) in the solution set and showing that
||w(t)|| decays faster than t.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence
import logging
import math

import numpy as np

from app.config import settings
from app.models.schemas import RegularityReport, TangentCertificate, TangentOptions, TangentSample
from app.services.cones import inclusion_residual
from app.services.errors import DegenerateDirectionError, InsufficientSamples, NonConvergence, NotInKernel, NotRegularError
from app.services.multilinear import PointSet, apply_form, as_vector
from app.services.pfactor import build_p_factor, invert, strong_regularity_estimate
from app.services.problems.spec import ProblemSpec
from app.services.solver import cmp_iterate, default_relaxation, residual_map

logger = logging.getLogger(__name__)

DEFAULT_T_POINTS = 8
DEFAULT_T_RANGE = (1e-3, 1e-1)
MONOTONE_SLACK = 1.1


def default_t_grid() -> List[float]:
    return np.logspace(math.log10(DEFAULT_T_RANGE[0]), math.log10(DEFAULT_T_RANGE[1]), DEFAULT_T_POINTS).tolist()


def _direction(problem: ProblemSpec, h_bar: Sequence[float]) -> np.ndarray:
    h_bar = as_vector(h_bar, "h_bar")
    if h_bar.shape != (problem.n,):
        raise DegenerateDirectionError(f"h_bar has length {h_bar.size}, expected {problem.n}")
    if not np.any(h_bar):
        raise DegenerateDirectionError("h_bar must be nonzero")
    return h_bar


def _check_grid(t_grid: Sequence[float]) -> List[float]:
    grid = [float(t) for t in t_grid]
    if any(t <= 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t_grid must be strictly increasing positive reals")
    return grid


def kernel_check(
    problem: ProblemSpec,
    h_bar: Sequence[float],
    t_grid: Optional[Sequence[float]] = None,
    tol: Optional[float] = None,
) -> bool:
    """Whether 0 in f^{(p)}(y0)[t h_bar]^p + N_C(y0 + t h_bar) for every t on the grid."""
    h_bar = _direction(problem, h_bar)
    grid = _check_grid(default_t_grid() if t_grid is None else t_grid)
    tol = settings.tol if tol is None else tol
    tensor = problem.p_tensor()
    y0 = problem.base_y
    for t in grid:
        step = t * h_bar
        residual = inclusion_residual(problem.cone, y0 + step, apply_form(tensor, [step] * problem.p))
        if not residual <= tol:
            logger.info(f"h_bar={h_bar.tolist()} leaves the p-kernel at t={t:.3g} (residual {residual:.3e})")
            return False
    return True


def _loglog_slope(t_grid: List[float], w_norms: List[float], tol: float) -> float:
    if max(w_norms) <= tol:
        # the ray itself solves the inclusion
        return math.inf
    pairs = [(t, w) for t, w in zip(t_grid, w_norms) if w > 0]
    if len(pairs) < 2:
        raise InsufficientSamples("fewer than two nonzero corrections; the log-log slope is undefined")
    ts, ws = zip(*pairs)
    return float(np.polyfit(np.log10(ts), np.log10(ws), 1)[0])


def _ratio_monotone(t_grid: List[float], w_norms: List[float]) -> bool:
    ratios = [w / t for t, w in zip(t_grid, w_norms)]
    return all(a <= MONOTONE_SLACK * b for a, b in zip(ratios, ratios[1:]))


def certify_tangent(
    problem: ProblemSpec,
    h_bar: Sequence[float],
    t_grid: Optional[Sequence[float]] = None,
    opts: Optional[TangentOptions] = None,
) -> TangentCertificate:
    opts = opts or TangentOptions()
    h_bar = _direction(problem, h_bar)
    grid = _check_grid(default_t_grid() if t_grid is None else t_grid)
    if len(grid) < 2:
        raise InsufficientSamples("a slope needs at least two t values")
    if not kernel_check(problem, h_bar, grid, opts.tol):
        raise NotInKernel(f"h_bar={h_bar.tolist()} is not in the p-kernel of {problem.name}")

    x0 = problem.base_x
    y0 = problem.base_y
    tensor = problem.p_tensor()
    omega = default_relaxation(problem.p) if opts.relaxation is None else opts.relaxation

    def curve_point(t: float) -> TangentSample:
        h = t * h_bar
        op = build_p_factor(tensor, h, problem.cone, problem.p, shift=y0)

        def phi_map(w: np.ndarray) -> PointSet:
            image = invert(op, residual_map(problem, x0, h, w, op=op), opts.tol, anchor=w).points
            if omega == 1.0:
                return image
            return PointSet((1.0 - omega) * w + omega * image.points)

        cmp = cmp_iterate(phi_map, np.zeros(problem.n), opts.tol, opts.max_iter)
        point = y0 + h + cmp.fixed_point
        residual = inclusion_residual(problem.cone, point, problem.evaluate(x0, point))
        logger.debug(f"t={t:.3g}: ||w||={np.linalg.norm(cmp.fixed_point):.3e}, residual={residual:.3e}")
        return TangentSample(
            t=t,
            w_norm=float(np.linalg.norm(cmp.fixed_point)),
            residual=residual,
            iterations=cmp.iterations,
            theta_estimate=cmp.theta_estimate,
        )

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            samples = list(pool.map(curve_point, grid))
    else:
        samples = [curve_point(t) for t in grid]

    w_norms = [s.w_norm for s in samples]
    residuals = [s.residual for s in samples]
    if not all(math.isfinite(w) for w in w_norms):
        raise NonConvergence("a curve correction is not finite")
    slope = _loglog_slope(grid, w_norms, opts.tol)
    monotone = _ratio_monotone(grid, w_norms)
    residuals_pass = all(r <= opts.residual_tol for r in residuals)

    regularity_t: List[float] = []
    regularity: List[Optional[RegularityReport]] = []
    if opts.check_regularity:
        for t in sorted({grid[0], grid[len(grid) // 2], grid[-1]}):
            op = build_p_factor(tensor, t * h_bar, problem.cone, problem.p, shift=y0)
            try:
                report = strong_regularity_estimate(
                    op, samples=opts.samples, tol=opts.tol, seed=opts.seed, radius=opts.sample_radius * t ** problem.p
                )
            except NotRegularError as exc:
                logger.warning(f"No regularity evidence at t={t:.3g}: {exc}")
                report = None
            regularity_t.append(t)
            regularity.append(report)

    accepted = residuals_pass and slope >= opts.slope_min and monotone
    logger.info(
        f"Tangent certificate for h_bar={h_bar.tolist()}: slope={slope:.4g}, monotone={monotone}, accepted={accepted}"
    )
    return TangentCertificate(
        h_bar=h_bar.tolist(),
        t_grid=grid,
        w_norms=w_norms,
        per_t_residuals=residuals,
        loglog_slope=slope,
        ratio_monotone=monotone,
        accepted=accepted,
        samples=samples,
        regularity_t=regularity_t,
        regularity=regularity,
    )
