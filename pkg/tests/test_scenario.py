import numpy as np
import pytest

from uavsec.scenario import (Eavesdropper, GroundUser, JammerPlan, ScenarioError,
                             generate_jammer_trajectory, initial_info_trajectory,
                             load_scenario, materialize_jammer_plan, save_scenario,
                             serialize_scenario)

from conftest import make_config


def test_load_canonical(canonical_path):
    cfg = load_scenario(canonical_path)
    assert cfg.K == 2 and cfg.E == 2
    assert cfg.H == 100.0
    np.testing.assert_allclose(cfg.users[0].position, [350.0, 100.0])
    np.testing.assert_allclose(cfg.users[1].position, [150.0, 400.0])
    np.testing.assert_allclose(cfg.eavesdroppers[0].est_position, [400.0, 100.0])
    np.testing.assert_allclose(cfg.eavesdroppers[1].est_position, [250.0, 250.0])
    assert cfg.array.N_J == 4


def test_load_paper_table():
    cfg = load_scenario(__file__.replace("tests/test_scenario.py",
                                         "configs/paper_full.yaml"))
    assert cfg.N == 500 and cfg.N_F == 128
    assert cfg.array.N_J == 25
    assert cfg.eavesdroppers[1].radius == 141.0
    assert cfg.R_min == 6.0e6


def test_tau_must_be_positive():
    with pytest.raises(ScenarioError, match="tau must be positive"):
        make_config(tau=0.0)


def test_reachability_rejected():
    # distance 707.1 m against 10*0.1*30 = 30 m reachable
    with pytest.raises(ScenarioError, match="unreachable"):
        make_config(t0_I=[0.0, 0.0], tF_I=[500.0, 500.0], N=11, tau=0.1,
                    V_max_I=30.0)


def test_negative_power_rejected():
    with pytest.raises(ScenarioError, match="P_peak_I"):
        make_config(P_peak_I=-1.0)


def test_zeta_below_one_rejected():
    with pytest.raises(ScenarioError, match="zeta"):
        make_config(zeta_I=0.5)


def test_node_outside_service_area_rejected():
    with pytest.raises(ScenarioError, match="service rectangle"):
        make_config(users=[GroundUser(position=[1000.0, 100.0]),
                           GroundUser(position=[150.0, 400.0])])


def test_roundtrip_identity(tmp_path):
    cfg = make_config()
    path = tmp_path / "cfg.yaml"
    save_scenario(cfg, path)
    cfg2 = load_scenario(path)
    assert serialize_scenario(cfg) == serialize_scenario(cfg2)
    np.testing.assert_array_equal(cfg.t0_I, cfg2.t0_I)
    assert cfg.N == cfg2.N and cfg.Gamma_th == cfg2.Gamma_th
    assert cfg.jammer_plan.kind == cfg2.jammer_plan.kind
    assert cfg.flight == cfg2.flight


def test_roundtrip_infinite_gamma(tmp_path):
    cfg = make_config(Gamma_th=float("inf"))
    path = tmp_path / "cfg.yaml"
    save_scenario(cfg, path)
    assert load_scenario(path).Gamma_th == float("inf")


# -- jammer orbits -----------------------------------------------------------

def test_cea_centered_at_eavesdropper_centroid():
    cfg = make_config(jammer_plan=JammerPlan(kind="CEA", speed=10.4, radius=159.0),
                      eavesdroppers=[
                          Eavesdropper(est_position=[400.0, 100.0], radius=71.0),
                          Eavesdropper(est_position=[250.0, 250.0], radius=141.0)])
    traj = generate_jammer_trajectory(cfg)
    centroid = np.array([325.0, 175.0])
    radii = np.linalg.norm(traj.positions - centroid, axis=1)
    np.testing.assert_allclose(radii, 159.0, atol=1e-9)


def test_ca_orbit_radius_and_step():
    cfg = make_config(jammer_plan=JammerPlan(kind="CA", speed=10.4, radius=10.0,
                                             center=[400.0, 100.0]))
    traj = generate_jammer_trajectory(cfg)
    center = np.array([400.0, 100.0])
    radii = np.linalg.norm(traj.positions - center, axis=1)
    np.testing.assert_allclose(radii, 10.0, atol=1e-9)
    gaps = np.linalg.norm(np.diff(traj.positions, axis=0), axis=1)
    np.testing.assert_allclose(gaps, 10.4 * cfg.tau, atol=1e-9)


def test_csa_zero_speed_stays_put():
    cfg = make_config(jammer_plan=JammerPlan(kind="CSA", speed=0.0, radius=150.0))
    traj = generate_jammer_trajectory(cfg)
    np.testing.assert_allclose(traj.positions, np.tile(traj.positions[0], (cfg.N, 1)),
                               atol=1e-12)
    assert np.abs(traj.velocities).max() <= 1e-12


def test_csa_centered_in_service_area():
    cfg = make_config(jammer_plan=JammerPlan(kind="CSA", speed=10.4, radius=150.0))
    traj = generate_jammer_trajectory(cfg)
    radii = np.linalg.norm(traj.positions - np.array([250.0, 250.0]), axis=1)
    np.testing.assert_allclose(radii, 150.0, atol=1e-9)


def test_sfe_requires_two_eavesdroppers():
    with pytest.raises(ScenarioError, match="SFE"):
        make_config(jammer_plan=JammerPlan(kind="SFE", speed=10.4),
                    eavesdroppers=[Eavesdropper(est_position=[400.0, 100.0],
                                                radius=71.0)])


def test_sfe_shuttles_on_segment():
    cfg = make_config(N=500,
                      jammer_plan=JammerPlan(kind="SFE", speed=10.4))
    plan = materialize_jammer_plan(cfg)
    traj = plan.trajectory
    a = cfg.eavesdroppers[0].est_position
    b = cfg.eavesdroppers[1].est_position
    seg = b - a
    seg_len = np.linalg.norm(seg)
    # every waypoint on the segment
    rel = (traj.positions - a) @ seg / seg_len**2
    assert rel.min() >= -1e-9 and rel.max() <= 1 + 1e-9
    perp = traj.positions - (a + rel[:, None] * seg)
    assert np.abs(perp).max() < 1e-9
    # constant speed at the snapped value and direction reversals present
    np.testing.assert_allclose(traj.speeds(), plan.speed, atol=1e-9)
    headings = traj.velocities @ seg
    assert (headings > 0).any() and (headings < 0).any()


def test_unsupported_kind_rejected():
    with pytest.raises(ScenarioError, match="unsupported jammer plan kind"):
        JammerPlan(kind="SPIRAL", speed=1.0)


def test_jammer_kinematic_consistency(small_cfg):
    traj = generate_jammer_trajectory(small_cfg)
    assert traj.kinematic_residual(small_cfg.tau) <= 1e-9
    np.testing.assert_allclose(traj.speeds(), small_cfg.jammer_plan.speed, atol=1e-9)


# -- initial trajectory -------------------------------------------------------

def test_sff_constant_velocity():
    cfg = make_config(t0_I=[0.0, 0.0], tF_I=[500.0, 500.0], N=501, V_max_I=30.0)
    traj = initial_info_trajectory(cfg)
    np.testing.assert_allclose(traj.velocities, np.tile([10.0, 10.0], (501, 1)),
                               atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(traj.velocities[0]),
                               np.sqrt(200.0), atol=1e-9)
    # 1-based slot n sits n-1 steps from the start
    np.testing.assert_allclose(traj.positions[249], [249.0, 249.0], atol=1e-9)
    assert traj.kinematic_residual(cfg.tau) <= 1e-9
    np.testing.assert_allclose(traj.positions[0], [0.0, 0.0], atol=0)
    np.testing.assert_allclose(traj.positions[-1], [500.0, 500.0], atol=0)


def test_sff_degenerate_endpoints():
    cfg = make_config(t0_I=[100.0, 100.0], tF_I=[100.0, 100.0])
    traj = initial_info_trajectory(cfg)
    assert np.abs(traj.velocities).max() == 0.0
    np.testing.assert_allclose(traj.positions, np.tile([100.0, 100.0], (cfg.N, 1)),
                               atol=0)
