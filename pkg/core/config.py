from pydantic_settings import BaseSettings
import os
from dotenv import load_dotenv

load_dotenv()

class Settings(BaseSettings):
    # API
    API_V1_PREFIX: str = "/api/v1"
    PROJECT_NAME: str = "Dense Curve Coverage"
    VERSION: str = "1.0.0"
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Execution
    THREADS: int = int(os.getenv("THREADS", "4"))
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "runs")

    # Numerical tolerances
    HARMONIC_TOLERANCE: float = 1e-8
    CLOSURE_TOLERANCE: float = 1e-8
    PERIOD_TOLERANCE: float = 1e-9
    INVOLUTION_FACTOR: float = 50.0  # conj-conj defect allowance per mean_edge^2 / area
    SOLVER_RTOL: float = 1e-10

    # Covering / curve
    EPS_HIT_FACTOR: float = 1e-7  # times the fundamental-domain diagonal
    EPS_ZERO_FACTOR: float = 0.5  # times the local average flat edge length
    EPS_LOC: float = 1e-9
    TRACE_BOUND_FACTOR: float = 100.0
    SLIT_ANGLE_TOLERANCE: float = 1e-6  # radians
    SLIT_LENGTH_TOLERANCE: float = 1e-6
    SLOPE_RETRIES: int = 100
    FORM_CANDIDATES: int = 24

    # Distributed simulation
    DIFFUSION_MAX_ROUNDS: int = 20000
    DIFFUSION_RELAXATION: float = 0.8  # damping of the per-node update, in (0, 1]

    # CORS
    BACKEND_CORS_ORIGINS: list = ["http://localhost:3000", "http://localhost:8000"]

    class Config:
        env_file = ".env"

settings = Settings()
