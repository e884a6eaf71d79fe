import json

import numpy as np
import pytest

from uavsec.channel import build_channels, steering_vector
from uavsec.metrics import (AllocationState, audit, energy_efficiency,
                            leakage_sinr, rates_table, user_rate)
from uavsec.scenario import (Eavesdropper, GroundUser, JammerPlan, Trajectory,
                             generate_jammer_trajectory, initial_info_trajectory)

from conftest import make_config


def _setup(cfg):
    info = initial_info_trajectory(cfg)
    jam = generate_jammer_trajectory(cfg)
    channels = build_channels(cfg, info, jam, G=3)
    alloc = AllocationState.zeros(cfg.K, cfg.N_F, cfg.N, cfg.array.N_J)
    return info, jam, channels, alloc


def test_user_rate_zero_when_unscheduled(small_cfg):
    _, _, channels, alloc = _setup(small_cfg)
    alloc.p[0, 0, 0] = 0.5
    assert user_rate(0, 0, 0, alloc, channels, small_cfg) == 0.0


def test_user_rate_unit_sinr(small_cfg):
    _, _, channels, alloc = _setup(small_cfg)
    alloc.alpha[0, 0, 0] = 1.0
    # pick p so that p*h = W*N0 exactly; with Z = 0 the SINR is 1
    noise = small_cfg.W * small_cfg.N0
    assert noise == pytest.approx(7.8e-16)
    alloc.p[0, 0, 0] = noise / channels.h_IU[0, 0]
    assert user_rate(0, 0, 0, alloc, channels, small_cfg) == pytest.approx(
        small_cfg.W, rel=1e-12)


def test_user_rate_monotonicity(small_cfg):
    _, _, channels, alloc = _setup(small_cfg)
    alloc.alpha[0, 0, 0] = 1.0
    rates = []
    for p in np.linspace(0.0, 1.0, 7):
        alloc.p[0, 0, 0] = p
        rates.append(user_rate(0, 0, 0, alloc, channels, small_cfg))
    assert np.all(np.diff(rates) > 0)
    # interference from the jammer strictly reduces the rate
    alloc.p[0, 0, 0] = 0.5
    clean = user_rate(0, 0, 0, alloc, channels, small_cfg)
    alloc.Z[0, 0] = 0.05 * np.eye(small_cfg.array.N_J)
    assert user_rate(0, 0, 0, alloc, channels, small_cfg) < clean


def test_rate_interference_uses_jammer_attenuation(small_cfg):
    # the jammer term in the SINR denominator is A_U * Tr(H_JU Z)
    _, jam, channels, alloc = _setup(small_cfg)
    alloc.alpha[0, 0, 0] = 1.0
    alloc.p[0, 0, 0] = 0.5
    Z = 0.25 * np.eye(small_cfg.array.N_J, dtype=complex)
    alloc.Z[0, 0] = Z
    h = steering_vector(jam.positions[0], small_cfg.users[0].position,
                        small_cfg.array, small_cfg.H)
    interf = channels.A_U[0, 0] * np.real(h.conj() @ Z @ h)
    expected = small_cfg.W * np.log2(
        1 + 0.5 * channels.h_IU[0, 0] / (interf + small_cfg.noise_floor))
    assert user_rate(0, 0, 0, alloc, channels, small_cfg) == pytest.approx(
        expected, rel=1e-12)
    table = rates_table(alloc, channels, small_cfg)
    assert table[0, 0, 0] == pytest.approx(expected, rel=1e-12)


def test_leakage_sinr_behaviour(small_cfg):
    _, _, channels, alloc = _setup(small_cfg)
    pos = small_cfg.eavesdroppers[0].est_position
    assert leakage_sinr(0, 0, 0, 0, alloc, pos, channels, small_cfg) == 0.0
    alloc.p[0, 0, 0] = 2e-7
    base = leakage_sinr(0, 0, 0, 0, alloc, pos, channels, small_cfg)
    assert base > 0
    alloc.Z[0, 0] = 0.3 * np.eye(small_cfg.array.N_J)
    jammed = leakage_sinr(0, 0, 0, 0, alloc, pos, channels, small_cfg)
    assert jammed < base


def test_energy_efficiency_values(small_cfg):
    cfg = make_config(N=2, N_F=1, tF_I=[152.0, 122.0])
    info, jam, channels, alloc = _setup(cfg)
    assert energy_efficiency(alloc, info, jam, cfg) == 0.0

    # doubling all rates at fixed power doubles the efficiency
    alloc.alpha[0, 0, :] = 1.0
    alloc.p[0, 0, :] = 1e-3
    base_rates = rates_table(alloc, channels, cfg).sum()
    ee1 = energy_efficiency(alloc, info, jam, cfg)
    assert ee1 > 0
    # scale power so the per-slot rate doubles exactly (SINR regime is linear
    # enough only for tiny SINR, so instead check homogeneity via the formula)
    from uavsec.metrics import total_powers
    power = total_powers(alloc, info, jam, cfg).sum()
    assert ee1 == pytest.approx(base_rates / power, rel=1e-12)


def test_energy_efficiency_single_slot_division():
    # one slot, known rate and power: EE = rate / power
    cfg = make_config(N=2, N_F=1, tF_I=[152.0, 122.0])
    info, jam, channels, alloc = _setup(cfg)
    alloc.alpha[0, 0, :] = 1.0
    noise = cfg.noise_floor
    alloc.p[0, 0, :] = noise / channels.h_IU[0, :]  # SINR 1 per slot
    from uavsec.metrics import total_powers
    rate = 2 * cfg.W  # W bits/s per slot, summed over 2 slots
    power = total_powers(alloc, info, jam, cfg).sum()
    assert energy_efficiency(alloc, info, jam, cfg) == pytest.approx(rate / power,
                                                                     rel=1e-12)


def test_energy_efficiency_permutation_symmetry(small_cfg):
    info, jam, channels, alloc = _setup(small_cfg)
    rng = np.random.default_rng(0)
    alloc.alpha[0] = (rng.uniform(size=alloc.alpha[0].shape) > 0.5).astype(float)
    alloc.alpha[1] = 1.0 - alloc.alpha[0]
    alloc.p = rng.uniform(0, 0.2, alloc.p.shape) * alloc.alpha
    ee = energy_efficiency(alloc, info, jam, small_cfg)
    # relabel subcarriers
    perm = rng.permutation(small_cfg.N_F)
    permuted = AllocationState(alpha=alloc.alpha[:, perm], p=alloc.p[:, perm],
                               p_tilde=alloc.p_tilde[:, perm], Z=alloc.Z[perm],
                               Z_tilde=alloc.Z_tilde[:, perm])
    assert energy_efficiency(permuted, info, jam, small_cfg) == pytest.approx(
        ee, rel=1e-12)
    # swapping users requires swapping their channels, so swap users in cfg too
    cfg_swapped = make_config(users=[small_cfg.users[1], small_cfg.users[0]])
    swapped = AllocationState(alpha=alloc.alpha[::-1], p=alloc.p[::-1],
                              p_tilde=alloc.p_tilde[::-1], Z=alloc.Z,
                              Z_tilde=alloc.Z_tilde[::-1])
    assert energy_efficiency(swapped, info, jam, cfg_swapped) == pytest.approx(
        ee, rel=1e-12)


# -- audit --------------------------------------------------------------------

def test_audit_zero_allocation(small_cfg):
    cfg = make_config(R_min=1000.0)
    info, jam, channels, alloc = _setup(cfg)
    result = audit(alloc, info, jam, cfg, samples_per_eve=200)
    assert not result.passed
    assert result.failed_names() == ["min_user_rate"]
    for check in result.checks:
        if check.name != "min_user_rate":
            assert check.passed, check.name


def test_audit_separation_margin(small_cfg):
    info, jam, channels, alloc = _setup(small_cfg)
    coincident = Trajectory(positions=jam.positions.copy(),
                            velocities=jam.velocities.copy())
    result = audit(alloc, coincident, jam, small_cfg, samples_per_eve=100)
    sep = result["uav_separation"]
    assert not sep.passed
    assert sep.margin == pytest.approx(-small_cfg.d_min ** 2)


def test_audit_flags_leakage(small_cfg):
    info, jam, channels, alloc = _setup(small_cfg)
    alloc.alpha[0, 0, :] = 1.0
    alloc.p[0, 0, :] = 1.0  # full power, no jamming: leaks far above Gamma_th
    result = audit(alloc, info, jam, small_cfg, samples_per_eve=500)
    leak = result["leakage_sinr"]
    assert not leak.passed
    assert leak.worst["sinr"] > small_cfg.Gamma_th


def test_audit_binary_and_exclusivity(small_cfg):
    info, jam, channels, alloc = _setup(small_cfg)
    alloc.alpha[0, 0, 0] = 0.4
    res = audit(alloc, info, jam, small_cfg, samples_per_eve=50)
    assert not res["alpha_binary"].passed
    alloc.alpha[0, 0, 0] = 1.0
    alloc.alpha[1, 0, 0] = 1.0
    res = audit(alloc, info, jam, small_cfg, samples_per_eve=50)
    assert not res["subcarrier_exclusivity"].passed


def test_audit_kinematics_and_speed(small_cfg):
    info, jam, channels, alloc = _setup(small_cfg)
    bad = Trajectory(positions=info.positions + 1e-6, velocities=info.velocities)
    res = audit(alloc, bad, jam, small_cfg, samples_per_eve=50)
    assert not res["start_position"].passed
    fast = Trajectory(positions=info.positions,
                      velocities=info.velocities + [100.0, 0.0])
    res = audit(alloc, fast, jam, small_cfg, samples_per_eve=50)
    assert not res["speed_limit"].passed
    assert not res["kinematic_consistency"].passed


def test_audit_json_roundtrip(small_cfg):
    info, jam, channels, alloc = _setup(small_cfg)
    res = audit(alloc, info, jam, small_cfg, samples_per_eve=50)
    data = json.loads(res.to_json())
    assert set(c["name"] for c in data["checks"]) >= {
        "alpha_binary", "subcarrier_exclusivity", "leakage_sinr",
        "min_user_rate", "kinematic_consistency", "uav_separation"}
    assert data["passed"] == res.passed


def test_audit_without_jammer(small_cfg):
    info, _, _, alloc = _setup(small_cfg)
    res = audit(alloc, info, None, small_cfg, samples_per_eve=50)
    names = [c.name for c in res.checks]
    assert "uav_separation" not in names
    assert "power_budget_jammer" not in names
    assert res.passed  # zero allocation with R_min = 0 is feasible
