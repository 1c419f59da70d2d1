# app/models/schemas.py
from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional

from app.config import settings

class SolverOptions(BaseModel):
    tol: float = Field(default_factory=lambda: settings.tol)
    zero_tol: float = Field(default_factory=lambda: settings.zero_tol)
    residual_tol: float = Field(default_factory=lambda: settings.residual_tol)
    max_iter: int = Field(default_factory=lambda: settings.max_iter)
    newton_starts: int = Field(default_factory=lambda: settings.newton_starts)
    newton_max_iter: int = Field(default_factory=lambda: settings.newton_max_iter)
    # None selects the relaxation automatically from p
    relaxation: Optional[float] = None
    check_degeneracy: bool = True
    workers: int = Field(default_factory=lambda: settings.workers)

class TangentOptions(SolverOptions):
    slope_min: float = Field(default_factory=lambda: settings.slope_min)
    samples: int = Field(default_factory=lambda: settings.samples)
    sample_radius: float = Field(default_factory=lambda: settings.sample_radius)
    seed: int = Field(default_factory=lambda: settings.seed)
    check_regularity: bool = True

class DegeneracyProfile(BaseModel):
    p: int
    method: str
    norms: List[float]
    completely_degenerate: bool
    tol: float

class RegularityReport(BaseModel):
    c_estimate: float
    median_ratio: float
    sample_count: int
    failures: int = 0
    degenerate_samples: int = 0
    worst_pair: Optional[List[List[float]]] = None
    seed: int = 0
    radius: float = 0.0
    regular: bool = True

class BanachSolution(BaseModel):
    h: List[float]
    face: List[int]
    normal_certificate: List[float]
    residual: float
    bound_ratio: float
    candidates: int = 1

class ImplicitSolution(BaseModel):
    x: List[float]
    h: List[float]
    y_corr: List[float]
    phi: List[float]
    inclusion_residual: float
    iterations: int
    theta_estimate: float
    m_ratio: float
    norm_f: float
    relaxation: float = 1.0
    trivial: bool = False

class ScalingSample(BaseModel):
    norm_x: float
    norm_f: float
    norm_phi: float
    ratio: float

class ScalingFailure(BaseModel):
    x: List[float]
    error: str
    message: str

class ScalingReport(BaseModel):
    samples: List[ScalingSample]
    fitted_exponent: float
    m_max: float
    failures: List[ScalingFailure] = []

    def to_table(self) -> str:
        """Plot-ready whitespace-separated table."""
        lines = ["norm_x norm_f norm_phi ratio"]
        for s in self.samples:
            lines.append(f"{s.norm_x:.17g} {s.norm_f:.17g} {s.norm_phi:.17g} {s.ratio:.17g}")
        return "\n".join(lines) + "\n"

class TangentSample(BaseModel):
    t: float
    w_norm: float
    residual: float
    iterations: int
    theta_estimate: float

class TangentCertificate(BaseModel):
    h_bar: List[float]
    t_grid: List[float]
    w_norms: List[float]
    per_t_residuals: List[float]
    loglog_slope: float
    ratio_monotone: bool
    accepted: bool
    samples: List[TangentSample] = []
    regularity_t: List[float] = []
    regularity: List[Optional[RegularityReport]] = []

class Report(BaseModel):
    command: List[str]
    seed: int
    tolerances: Dict[str, float]
    results: Dict[str, Any] = {}
    error: Optional[Dict[str, str]] = None
    wall_time: float = 0.0
