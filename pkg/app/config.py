# app/config.py
from pydantic_settings import BaseSettings
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    # App settings
    app_name: str = "Singular Generalized Equation Toolkit"
    log_level: str = "INFO"

    # Solver tolerances
    tol: float = 1e-9
    zero_tol: float = 1e-12
    residual_tol: float = 1e-8
    max_iter: int = 200

    # Cone / linear algebra tolerances
    feasibility_tol: float = 1e-10
    rank_tol: float = 1e-10
    merge_tol: float = 1e-9

    # Banach condition multi-start Newton
    newton_starts: int = 8
    newton_max_iter: int = 100

    # Sampling
    seed: int = 0
    samples: int = 1000
    sample_radius: float = 0.1
    workers: int = 1

    # Tangent certification
    slope_min: float = 1.5

    class Config:
        env_file = ".env"
        env_prefix = "PFACTOR_"
        case_sensitive = False

settings = Settings()
