import numpy as np
import pytest

from gasline import PipeConfig, build_profile, check_decay_conditions
from gasline.solver import SolverConfig, bump_initial_data


@pytest.fixture(scope="session")
def default_cfg():
    return PipeConfig(a=1.0, theta=1.0, L=1.0, k=20.0, gamma=0.5)


@pytest.fixture(scope="session")
def default_profile(default_cfg):
    return build_profile(default_cfg, 1e-5, n=256)


@pytest.fixture(scope="session")
def default_certificate(default_cfg, default_profile):
    return check_decay_conditions(default_cfg, default_profile, 2e-5)


@pytest.fixture(scope="session")
def default_init():
    return bump_initial_data(center=0.5, width=0.6, amplitude=1e-6)


@pytest.fixture(scope="session")
def reference_run(default_cfg, default_profile, default_certificate, default_init):
    """One certified run shared by the norm/monitor tests."""
    from gasline.solver import run_closed_loop

    scfg = SolverConfig(n_cells=256, cfl=0.8, t_end=8.0, sample_dt=0.1)
    return run_closed_loop(default_cfg, default_profile, scfg, default_init,
                           certificate=default_certificate)


def gaussian_initial_data(center, sigma, amplitude):
    """Analytic Gaussian pulse; compatibility residuals are exponentially small."""
    from gasline.solver import InitialData

    def phi(x):
        s = (np.asarray(x, float) - center) / sigma
        return amplitude * np.exp(-0.5 * s * s)

    def phi_x(x):
        s = (np.asarray(x, float) - center) / sigma
        return -amplitude * np.exp(-0.5 * s * s) * s / sigma

    def phi_xx(x):
        s = (np.asarray(x, float) - center) / sigma
        return amplitude * np.exp(-0.5 * s * s) * (s * s - 1.0) / sigma**2

    zero = lambda x: np.zeros_like(np.asarray(x, float))
    return InitialData(phi=phi, psi=zero, phi_x=phi_x, phi_xx=phi_xx, psi_x=zero)
