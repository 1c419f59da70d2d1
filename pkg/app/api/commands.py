# app/api/commands.py
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional
import functools
import logging
import sys
import time

import click

from app.config import settings
from app.models.schemas import Report, SolverOptions, TangentOptions
from app.services.errors import HypothesisError, InputError, NotDegenerateError
from app.services.pfactor import (
    approximation_delta,
    build_p_factor,
    degeneracy_profile,
    robinson_check,
    strong_regularity_estimate,
)
from app.services.problems import (
    ProblemSpec,
    builtin,
    from_kkt,
    parse_ncp,
    parse_nlp,
    parse_problem,
    serialize_problem,
)
from app.services.solver import scaling_study, solve_banach, solve_implicit
from app.services.tangent import certify_tangent
from app.utils.grids import parse_t_grid, parse_vector, parse_x_grid
from app.utils.reports import render_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HYPOTHESIS = 2

BUILTIN_PREFIX = "builtin:"


def _read_source(source: str) -> str:
    try:
        return Path(source).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from exc


def load_problem(source: str) -> ProblemSpec:
    """A problem file path or ``builtin:<name>``."""
    if source.startswith(BUILTIN_PREFIX):
        return builtin(source[len(BUILTIN_PREFIX):])
    return parse_problem(_read_source(source), name=Path(source).stem)


def _vector(text: str, flag: str) -> List[float]:
    try:
        return parse_vector(text)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint=flag)


def _echo_argv() -> List[str]:
    root = click.get_current_context().find_root()
    return list((root.obj or {}).get("argv", sys.argv[1:]))


def _write(text: str, path: Optional[str]):
    if path:
        Path(path).write_text(text)
    else:
        click.echo(text, nl=False)


def reporting(func: Callable[..., Dict[str, Any]]):
    """Run a command body and turn its outcome into a report and an exit code."""

    @click.option("--tol", type=float, default=settings.tol, show_default=True)
    @click.option("--max-iter", type=int, default=settings.max_iter, show_default=True)
    @click.option("--seed", type=int, default=settings.seed, show_default=True)
    @click.option("--samples", type=int, default=settings.samples, show_default=True)
    @click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None)
    @functools.wraps(func)
    def wrapper(report_path: Optional[str], **kwargs) -> int:
        started = time.perf_counter()
        report = Report(
            command=_echo_argv(),
            seed=kwargs["seed"],
            tolerances={
                "tol": kwargs["tol"],
                "zero_tol": settings.zero_tol,
                "residual_tol": settings.residual_tol,
            },
        )
        code = EXIT_OK
        try:
            results = func(**kwargs)
            report.results = {k: v for k, v in results.items() if k != "error"}
            if "error" in results:
                report.error = results["error"]
                code = EXIT_HYPOTHESIS
        except HypothesisError as exc:
            logger.warning(f"{type(exc).__name__}: {exc}")
            report.error = {"type": type(exc).__name__, "message": str(exc)}
            code = EXIT_HYPOTHESIS
        report.wall_time = time.perf_counter() - started
        _write(render_report(report), report_path)
        return code

    return wrapper


def _solver_options(tol: float, max_iter: int, **extra) -> SolverOptions:
    return SolverOptions(tol=tol, max_iter=max_iter, **extra)


@click.command()
@click.argument("source")
@click.option("--h", "h_text", default=None, help="Direction for the strong p-regularity estimate.")
@click.option("--radius", type=float, default=settings.sample_radius, show_default=True)
@reporting
def check(source: str, h_text: Optional[str], radius: float, tol: float, max_iter: int, seed: int, samples: int):
    """Degeneracy, Robinson regularity and p-factor approximation diagnostics."""
    problem = load_problem(source)
    results: Dict[str, Any] = {
        "problem": problem.name,
        "degeneracy": degeneracy_profile(problem),
        "robinson_strongly_regular": robinson_check(problem, tol, seed=seed),
        "approximation_delta": approximation_delta(problem, problem.base_x, radius, samples, seed=seed),
    }
    if h_text is not None:
        h = _vector(h_text, "--h")
        op = build_p_factor(problem.p_tensor(), h, problem.cone, problem.p, shift=problem.base_y)
        results["regularity"] = strong_regularity_estimate(op, samples=samples, tol=tol, seed=seed, radius=radius)
    return results


@click.command()
@click.argument("source")
@click.option("--x", "x_text", required=True)
@reporting
def banach(source: str, x_text: str, tol: float, max_iter: int, seed: int, samples: int):
    """Minimal-norm solution of the Banach condition at x."""
    problem = load_problem(source)
    return {"problem": problem.name, "banach": solve_banach(problem, _vector(x_text, "--x"), _solver_options(tol, max_iter))}


@click.command()
@click.argument("source")
@click.option("--x", "x_text", default=None)
@click.option("--x-grid", "x_grid", default=None, help="log:<lo>:<hi>:<count>:<direction>")
@click.option("--relaxation", type=float, default=None)
@click.option("--workers", type=int, default=settings.workers, show_default=True)
@click.option("--table", "table_path", type=click.Path(dir_okay=False), default=None)
@reporting
def solve(
    source: str,
    x_text: Optional[str],
    x_grid: Optional[str],
    relaxation: Optional[float],
    workers: int,
    table_path: Optional[str],
    tol: float,
    max_iter: int,
    seed: int,
    samples: int,
):
    """Implicit branch phi(x) at one point or a scaling study over a grid."""
    if (x_text is None) == (x_grid is None):
        raise click.UsageError("give exactly one of --x and --x-grid")
    problem = load_problem(source)
    opts = _solver_options(tol, max_iter, relaxation=relaxation, workers=workers)
    if x_text is not None:
        return {"problem": problem.name, "solution": solve_implicit(problem, _vector(x_text, "--x"), opts)}
    try:
        xs = parse_x_grid(x_grid)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--x-grid")
    report = scaling_study(problem, xs, opts)
    if table_path:
        Path(table_path).write_text(report.to_table())
    return {"problem": problem.name, "scaling": report}


@click.command()
@click.argument("source")
@click.option("--h", "h_text", required=True)
@click.option("--t-grid", "t_grid", default=None, help="log:<lo>:<hi>:<count> or a comma list")
@click.option("--workers", type=int, default=settings.workers, show_default=True)
@reporting
def tangent(source: str, h_text: str, t_grid: Optional[str], workers: int, tol: float, max_iter: int, seed: int, samples: int):
    """Certify that h is a tangent direction of the solution set at the base point."""
    problem = load_problem(source)
    grid = None
    if t_grid is not None:
        try:
            grid = parse_t_grid(t_grid)
        except ValueError as exc:
            raise click.BadParameter(str(exc), param_hint="--t-grid")
    opts = TangentOptions(tol=tol, max_iter=max_iter, seed=seed, samples=samples, workers=workers)
    certificate = certify_tangent(problem, _vector(h_text, "--h"), grid, opts)
    results: Dict[str, Any] = {"problem": problem.name, "kernel": True, "certificate": certificate}
    if not certificate.accepted:
        results["error"] = {
            "type": "CertificateRejected",
            "message": f"log-log slope {certificate.loglog_slope:.4g}, monotone ratio {certificate.ratio_monotone}",
        }
    return results


@click.command()
@click.argument("kind", type=click.Choice(["ncp", "kkt"]))
@click.argument("source", type=click.Path(dir_okay=False))
@click.option("-o", "output", type=click.Path(dir_okay=False), default=None)
@click.option("--order", type=int, default=None, help="Degeneracy order; inferred when omitted.")
def reduce(kind: str, source: str, output: Optional[str], order: Optional[int]) -> int:
    """Write the generalized equation of a complementarity or KKT system."""
    text = _read_source(source)
    name = Path(source).stem
    if kind == "ncp":
        problem = parse_ncp(text, name=name)
        if order is not None:
            problem = problem.with_order(order)
    else:
        problem = from_kkt(parse_nlp(text, name=name), p=order)
    if problem.p < 2:
        raise NotDegenerateError(f"{problem.name} is regular at the base point (p={problem.p}); nothing to reduce")
    _write(serialize_problem(problem), output)
    return EXIT_OK


@click.command(name="builtin")
@click.argument("name")
@click.option("-o", "output", type=click.Path(dir_okay=False), default=None)
def builtin_command(name: str, output: Optional[str]) -> int:
    """Dump a built-in problem as a problem file."""
    _write(serialize_problem(builtin(name)), output)
    return EXIT_OK


COMMANDS = [check, banach, solve, tangent, reduce, builtin_command]
