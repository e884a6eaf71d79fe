import numpy as np
import pytest

from uavsec.metrics import AllocationState
from uavsec.power import (FlightModelError, V_FLOOR, flight_power,
                          flight_power_components, flight_power_gradient,
                          info_total_power, jammer_total_power,
                          most_efficient_speed)

from conftest import TABLE_FLIGHT, make_config


def test_flight_power_at_cruise():
    blade, induced, parasite = flight_power_components(10.4, TABLE_FLIGHT)
    assert blade == pytest.approx(81.66, abs=0.05)
    assert induced == pytest.approx(34.34, abs=0.05)
    assert parasite == pytest.approx(5.20, abs=0.05)
    assert flight_power(10.4, TABLE_FLIGHT) == pytest.approx(121.20, abs=0.05)


def test_flight_power_at_induced_velocity():
    # direct evaluation: 79.86*(1 + 3*4.03^2/14400) + 88.63 + 0.0046213*4.03^3
    blade, induced, parasite = flight_power_components(4.03, TABLE_FLIGHT)
    assert blade == pytest.approx(80.130, abs=0.005)
    assert induced == pytest.approx(88.63, abs=1e-9)
    assert parasite == pytest.approx(0.3024, abs=0.0005)
    assert flight_power(4.03, TABLE_FLIGHT) == pytest.approx(169.06, abs=0.05)


def test_flight_power_floor():
    with pytest.raises(FlightModelError):
        flight_power(0.05, TABLE_FLIGHT)
    flight_power(V_FLOOR, TABLE_FLIGHT)  # boundary allowed


def test_flight_power_convex_on_grid():
    vs = np.linspace(V_FLOOR, 40.0, 400)
    ps = np.array([flight_power(v, TABLE_FLIGHT) for v in vs])
    second = np.diff(ps, 2)
    assert second.min() > 0


def test_flight_power_gradient_matches_finite_differences():
    for v in np.linspace(0.5, 30.0, 25):
        h = 1e-5 * max(1.0, v)
        fd = (flight_power(v + h, TABLE_FLIGHT) - flight_power(v - h, TABLE_FLIGHT)) / (2 * h)
        g = flight_power_gradient(v, TABLE_FLIGHT)
        assert g == pytest.approx(fd, rel=1e-6)


def test_most_efficient_speed_location():
    v_star = most_efficient_speed(TABLE_FLIGHT, 1.0, 30.0)
    # stationary point of the closed-form gradient
    assert flight_power_gradient(v_star, TABLE_FLIGHT) == pytest.approx(0.0, abs=1e-4)
    assert flight_power(v_star, TABLE_FLIGHT) <= flight_power(10.4, TABLE_FLIGHT)


def test_info_total_power(small_cfg):
    alloc = AllocationState.zeros(small_cfg.K, small_cfg.N_F, small_cfg.N,
                                  small_cfg.array.N_J)
    base = info_total_power(alloc, 0, 10.4, small_cfg)
    assert base == pytest.approx(122.20, abs=0.05)  # 0 + 1 + 121.20

    alloc.alpha[0, 0, 0] = 1.0
    alloc.p[0, 0, 0] = 1.0
    assert info_total_power(alloc, 0, 10.4, small_cfg) == pytest.approx(base + 2.0,
                                                                        abs=1e-9)
    # scheduling gates power: alpha = 0 with p > 0 contributes nothing
    alloc.alpha[0, 0, 0] = 0.0
    assert info_total_power(alloc, 0, 10.4, small_cfg) == pytest.approx(base, abs=1e-12)


def test_info_total_power_affine_in_gated_power(small_cfg):
    alloc = AllocationState.zeros(small_cfg.K, small_cfg.N_F, small_cfg.N,
                                  small_cfg.array.N_J)
    rng = np.random.default_rng(2)
    alloc.alpha[:, :, 0] = rng.uniform(0, 1, alloc.alpha[:, :, 0].shape)
    p1 = rng.uniform(0, 1, alloc.p[:, :, 0].shape)
    p2 = rng.uniform(0, 1, alloc.p[:, :, 0].shape)
    alloc.p[:, :, 0] = p1
    f1 = info_total_power(alloc, 0, 10.4, small_cfg)
    alloc.p[:, :, 0] = p2
    f2 = info_total_power(alloc, 0, 10.4, small_cfg)
    alloc.p[:, :, 0] = 0.5 * (p1 + p2)
    mid = info_total_power(alloc, 0, 10.4, small_cfg)
    assert mid == pytest.approx(0.5 * (f1 + f2), rel=1e-12)


def test_jammer_total_power(small_cfg):
    NJ = small_cfg.array.N_J
    Z = np.zeros((small_cfg.N_F, NJ, NJ), dtype=complex)
    base = jammer_total_power(Z, 0, 10.4, small_cfg)
    assert base == pytest.approx(122.20, abs=0.05)
    Z[0] = np.eye(NJ) * (0.1 / NJ)
    assert jammer_total_power(Z, 0, 10.4, small_cfg) == pytest.approx(base + 0.2,
                                                                      abs=1e-9)
    Z[0] = -np.eye(NJ)
    with pytest.raises(ValueError):
        jammer_total_power(Z, 0, 10.4, small_cfg)
