"""Rotary-wing flight power and per-slot total power for both UAVs.

Flight power is blade profile + induced + parasite:

    P(v) = P_o (1 + 3 v^2 / (Omega^2 r^2)) + P_i v0 / v + (1/2) d0 rho s A_r v^3

The induced term diverges at hover, so the model is only evaluated for speeds
at or above ``V_FLOOR``; the trajectory solver keeps speeds above that floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import FlightPowerParams, ScenarioConfig

V_FLOOR = 0.1  # m/s; model singular below this speed


class FlightModelError(ValueError):
    """Raised when flight power is requested below the model's valid speed range."""


@dataclass(frozen=True)
class PowerBreakdown:
    blade_profile: float
    induced: float
    parasite: float
    comm: float
    circuit: float

    @property
    def total(self) -> float:
        return self.blade_profile + self.induced + self.parasite + self.comm + self.circuit


def flight_power_components(speed: float, fp: FlightPowerParams) -> tuple[float, float, float]:
    if speed < V_FLOOR:
        raise FlightModelError(
            f"flight power undefined below {V_FLOOR} m/s (got {speed:.4g} m/s)")
    blade = fp.P_o * (1.0 + 3.0 * speed ** 2 / (fp.Omega ** 2 * fp.r ** 2))
    induced = fp.P_i * fp.v0 / speed
    parasite = 0.5 * fp.d0 * fp.rho * fp.s * fp.A_r * speed ** 3
    return blade, induced, parasite


def flight_power(speed: float, fp: FlightPowerParams) -> float:
    """Flight power in W at the given speed; convex on [V_FLOOR, inf)."""
    blade, induced, parasite = flight_power_components(speed, fp)
    return blade + induced + parasite


def flight_power_gradient(speed: float, fp: FlightPowerParams) -> float:
    """d/dv of flight_power, closed form."""
    if speed < V_FLOOR:
        raise FlightModelError(
            f"flight power undefined below {V_FLOOR} m/s (got {speed:.4g} m/s)")
    blade = 6.0 * fp.P_o * speed / (fp.Omega ** 2 * fp.r ** 2)
    induced = -fp.P_i * fp.v0 / speed ** 2
    parasite = 1.5 * fp.d0 * fp.rho * fp.s * fp.A_r * speed ** 2
    return blade + induced + parasite


def info_power_breakdown(alloc, n: int, speed: float, cfg: ScenarioConfig) -> PowerBreakdown:
    """Per-slot power of the information UAV: amplified transmit + circuit + flight.

    The communication term is zeta_I * sum_{k,i} alpha*p, so scheduling gates
    transmit power.
    """
    blade, induced, parasite = flight_power_components(speed, cfg.flight)
    comm = cfg.zeta_I * float(np.sum(alloc.alpha[:, :, n] * alloc.p[:, :, n]))
    return PowerBreakdown(blade_profile=blade, induced=induced, parasite=parasite,
                          comm=comm, circuit=cfg.P_C_I)


def info_total_power(alloc, n: int, speed: float, cfg: ScenarioConfig) -> float:
    return info_power_breakdown(alloc, n, speed, cfg).total


def jammer_power_breakdown(Z_slot: np.ndarray, n: int, speed: float,
                           cfg: ScenarioConfig) -> PowerBreakdown:
    """Per-slot power of the jammer UAV; Z_slot holds the (N_F, N_J, N_J) covariances."""
    Z_slot = np.asarray(Z_slot)
    traces = np.real(np.trace(Z_slot, axis1=-2, axis2=-1))
    if np.any(traces < -1e-9):
        raise ValueError("artificial-noise covariance has negative trace")
    for i in range(Z_slot.shape[0]):
        w = np.linalg.eigvalsh(Z_slot[i])
        if w.min() < -1e-6 * max(1.0, w.max()):
            raise ValueError("artificial-noise covariance is not PSD")
    blade, induced, parasite = flight_power_components(speed, cfg.flight)
    comm = cfg.zeta_J * float(np.sum(traces))
    return PowerBreakdown(blade_profile=blade, induced=induced, parasite=parasite,
                          comm=comm, circuit=cfg.P_C_J)


def jammer_total_power(Z_slot: np.ndarray, n: int, speed: float,
                       cfg: ScenarioConfig) -> float:
    return jammer_power_breakdown(Z_slot, n, speed, cfg).total


def most_efficient_speed(fp: FlightPowerParams, lo: float = 1.0, hi: float = 30.0) -> float:
    """Numerical minimizer of flight_power on [lo, hi], golden-section to 1e-9 m/s."""
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda v: flight_power(v, fp), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-9})
    return float(res.x)
