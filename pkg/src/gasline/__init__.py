"""gasline: simulate and certify boundary-feedback stabilization of
subsonic gas-pipe velocity flow."""

from .certifier import CertificateReport, check_decay_conditions, report_to_json
from .config import RunConfig, load_config
from .lyapunov import LyapunovSample
from .model import FieldSnapshot, PhysicalState, PipeConfig, RiemannPair
from .solver import InitialData, MonitorViolation, RunResult, SolverConfig, run_closed_loop
from .stationary import StationaryProfile, build_profile, lambert_w_minus1

__version__ = "0.1.0"

__all__ = [
    "PipeConfig",
    "PhysicalState",
    "RiemannPair",
    "FieldSnapshot",
    "StationaryProfile",
    "build_profile",
    "lambert_w_minus1",
    "CertificateReport",
    "check_decay_conditions",
    "report_to_json",
    "LyapunovSample",
    "SolverConfig",
    "InitialData",
    "MonitorViolation",
    "RunResult",
    "run_closed_loop",
    "RunConfig",
    "load_config",
    "__version__",
]
