import copy
from pathlib import Path

import numpy as np
import pytest

from uavsec.scenario import (ArrayParams, Eavesdropper, FlightPowerParams,
                             GroundUser, JammerPlan, ScenarioConfig)

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

TABLE_FLIGHT = FlightPowerParams(Omega=300.0, r=0.4, rho=1.225, s=0.05,
                                 A_r=0.503, P_o=79.86, P_i=88.63, v0=4.03, d0=0.3)


def make_config(**overrides) -> ScenarioConfig:
    """Small, fast scenario used by unit tests; override fields as needed."""
    base = dict(
        users=[GroundUser(position=[350.0, 100.0]),
               GroundUser(position=[150.0, 400.0])],
        eavesdroppers=[Eavesdropper(est_position=[400.0, 100.0], radius=71.0),
                       Eavesdropper(est_position=[250.0, 250.0], radius=50.0)],
        H=100.0, N=4, tau=0.1, N_F=2, W=7800.0, N0=1e-19, beta0=1e-5,
        array=ArrayParams(N_Jx=2, N_Jy=2, delta_J=0.1, lambda_c=0.2),
        flight=TABLE_FLIGHT,
        P_C_I=1.0, P_C_J=1.0, zeta_I=2.0, zeta_J=2.0,
        P_peak_I=1.0, P_peak_J=1.0, P_max_I=3162.3, P_max_J=3162.3,
        R_min=0.0, Gamma_th=0.35, V_max_I=30.0, V_acc_I=4.0, d_min=1.0,
        t0_I=[150.0, 120.0], tF_I=[156.0, 126.0],
        jammer_plan=JammerPlan(kind="CA", speed=10.4, radius=10.0,
                               center=[325.0, 175.0]),
        service_area=np.array([[0.0, 0.0], [500.0, 500.0]]),
    )
    base.update(overrides)
    return ScenarioConfig(**base)


@pytest.fixture
def small_cfg() -> ScenarioConfig:
    return make_config()


@pytest.fixture(scope="session")
def canonical_path() -> Path:
    return CONFIG_DIR / "canonical.yaml"
