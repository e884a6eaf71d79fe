import numpy as np
import pytest

from uavsec.channel import (build_channels, distance3d, info_channel_gain,
                            jammer_channel_matrix, steering_vector,
                            steering_vectors, uncertainty_offsets,
                            uncertainty_samples, worst_case_info_gain)
from uavsec.scenario import (ArrayParams, Eavesdropper, generate_jammer_trajectory,
                             initial_info_trajectory)

from conftest import make_config


def test_distance3d_values():
    # sqrt(350^2 + 100^2 + 100^2)
    assert distance3d([350.0, 100.0], [0.0, 0.0], 100.0) == pytest.approx(377.4917, abs=1e-4)
    assert distance3d([42.0, -7.0], [42.0, -7.0], 100.0) == pytest.approx(100.0, abs=0)
    assert distance3d([3.0, 4.0], [0.0, 0.0], 12.0) == pytest.approx(13.0, abs=1e-12)


def test_distance3d_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(50):
        a, b = rng.uniform(-500, 500, (2, 2))
        assert distance3d(a, b, 100.0) == distance3d(b, a, 100.0)


def test_info_gain_values(small_cfg):
    assert info_channel_gain([10.0, 20.0], [10.0, 20.0], small_cfg) == pytest.approx(1e-9)
    assert info_channel_gain([0.0, 0.0], [350.0, 100.0], small_cfg) == pytest.approx(
        1e-5 / 142500.0)


def test_info_gain_inverse_square(small_cfg):
    # slant-range-squared 2e4 gives exactly half the gain of 1e4
    g_near = info_channel_gain([0.0, 0.0], [0.0, 0.0], small_cfg)          # 1e4
    g_far = info_channel_gain([0.0, 0.0], [100.0, 0.0], small_cfg)          # 2e4
    assert g_near == pytest.approx(2 * g_far)


def test_gain_monotone_in_horizontal_distance(small_cfg):
    ds = np.linspace(0.0, 400.0, 40)
    gains = [info_channel_gain([0.0, 0.0], [d, 0.0], small_cfg) for d in ds]
    assert np.all(np.diff(gains) < 0)


def test_single_antenna_steering():
    arr = ArrayParams(N_Jx=1, N_Jy=1, delta_J=0.1, lambda_c=0.2)
    np.testing.assert_array_equal(steering_vector([0, 0], [50, 60], arr, 100.0), [1.0])


def test_overhead_steering_degenerate_rule():
    # node directly below: sin_theta = 1; azimuth fixed to (sin=0, cos=1),
    # so with half-wavelength spacing the x-axis progression is [1, -1]
    arr = ArrayParams(N_Jx=2, N_Jy=1, delta_J=0.1, lambda_c=0.2)
    h = steering_vector([40.0, 50.0], [40.0, 50.0], arr, 100.0)
    np.testing.assert_allclose(h, [1.0, -1.0], atol=1e-12)
    arr_y = ArrayParams(N_Jx=1, N_Jy=2, delta_J=0.1, lambda_c=0.2)
    h = steering_vector([40.0, 50.0], [40.0, 50.0], arr_y, 100.0)
    np.testing.assert_allclose(h, [1.0, 1.0], atol=1e-12)  # sin azimuth = 0


def test_steering_unit_modulus_and_first_entry():
    arr = ArrayParams(N_Jx=3, N_Jy=4, delta_J=0.1, lambda_c=0.2)
    rng = np.random.default_rng(11)
    for _ in range(100):
        uav = rng.uniform(0, 500, 2)
        node = rng.uniform(0, 500, 2)
        h = steering_vector(uav, node, arr, 100.0)
        assert h.shape == (12,)
        assert h[0] == pytest.approx(1.0)
        np.testing.assert_allclose(np.abs(h), 1.0, atol=1e-12)


def test_steering_batch_matches_scalar():
    arr = ArrayParams(N_Jx=2, N_Jy=2, delta_J=0.1, lambda_c=0.2)
    rng = np.random.default_rng(5)
    uav = np.array([250.0, 250.0])
    pts = rng.uniform(0, 500, (32, 2))
    hs = steering_vectors(uav, pts, arr, 100.0)
    for idx in range(len(pts)):
        np.testing.assert_allclose(hs[idx], steering_vector(uav, pts[idx], arr, 100.0),
                                   atol=1e-12)


def test_jammer_channel_matrix_properties():
    np.testing.assert_array_equal(jammer_channel_matrix(np.array([1.0])), [[1.0]])
    H = jammer_channel_matrix(np.array([1.0, -1.0]))
    np.testing.assert_allclose(H, [[1.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_allclose(sorted(np.linalg.eigvalsh(H)), [0.0, 2.0], atol=1e-12)

    arr = ArrayParams(N_Jx=2, N_Jy=2, delta_J=0.1, lambda_c=0.2)
    rng = np.random.default_rng(7)
    for _ in range(50):
        h = steering_vector(rng.uniform(0, 500, 2), rng.uniform(0, 500, 2), arr, 100.0)
        H = jammer_channel_matrix(h)
        np.testing.assert_allclose(H, H.conj().T, atol=1e-12)
        w = np.linalg.eigvalsh(H)
        assert w[0] >= -1e-10
        assert w[-2] <= 1e-10 * w[-1]  # numerical rank one
        assert np.real(np.trace(H)) == pytest.approx(4.0, abs=1e-9)


def test_worst_case_info_gain(small_cfg):
    eve = Eavesdropper(est_position=[400.0, 100.0], radius=71.0)
    # UAV inside the disk: horizontal offset clamps to zero
    assert worst_case_info_gain([400.0, 100.0], eve, small_cfg) == pytest.approx(1e-9)
    assert worst_case_info_gain([400.0, 150.0], eve, small_cfg) == pytest.approx(1e-9)
    # 171 m from the estimate, radius 71: nearest disk point 100 m away
    assert worst_case_info_gain([400.0 + 171.0, 100.0], eve, small_cfg) == pytest.approx(
        5e-10)
    # degenerate disk reduces to the point gain
    pt = Eavesdropper(est_position=[400.0, 100.0], radius=0.0)
    uav = np.array([123.0, 321.0])
    assert worst_case_info_gain(uav, pt, small_cfg) == pytest.approx(
        info_channel_gain(uav, [400.0, 100.0], small_cfg))


def test_worst_case_dominates_disk(small_cfg):
    eve = Eavesdropper(est_position=[250.0, 250.0], radius=71.0)
    rng = np.random.default_rng(13)
    uav = np.array([150.0, 120.0])
    bound = worst_case_info_gain(uav, eve, small_cfg)
    r = eve.radius * np.sqrt(rng.uniform(0, 1, 10_000))
    a = rng.uniform(0, 2 * np.pi, 10_000)
    pts = eve.est_position + np.column_stack([r * np.cos(a), r * np.sin(a)])
    gains = small_cfg.beta0 / (np.sum((pts - uav) ** 2, axis=1) + small_cfg.H ** 2)
    assert gains.max() <= bound * (1 + 1e-12)


def test_uncertainty_samples_layouts():
    eve = Eavesdropper(est_position=[10.0, 20.0], radius=71.0)
    only = uncertainty_samples(eve, 1)
    assert len(only) == 1
    np.testing.assert_array_equal(only[0].position, [10.0, 20.0])

    samples = uncertainty_samples(eve, 9)
    assert len(samples) == 9
    np.testing.assert_array_equal(samples[0].delta, [0.0, 0.0])
    ring = np.array([s.delta for s in samples[1:]])
    np.testing.assert_allclose(np.linalg.norm(ring, axis=1), 71.0, atol=1e-9)
    angles = np.mod(np.arctan2(ring[:, 1], ring[:, 0]), 2 * np.pi)
    np.testing.assert_allclose(np.sort(angles), 2 * np.pi * np.arange(8) / 8,
                               atol=1e-9)

    degenerate = uncertainty_samples(Eavesdropper(est_position=[1.0, 2.0], radius=0.0), 5)
    for s in degenerate:
        np.testing.assert_array_equal(s.position, [1.0, 2.0])


def test_uncertainty_offsets_stay_inside():
    for G in (1, 2, 9, 17, 40):
        off = uncertainty_offsets(33.0, G)
        assert off.shape == (G, 2)
        assert np.linalg.norm(off, axis=1).max() <= 33.0 + 1e-9


def test_build_channels_shapes_and_bounds(small_cfg):
    info = initial_info_trajectory(small_cfg)
    jam = generate_jammer_trajectory(small_cfg)
    ch = build_channels(small_cfg, info, jam, G=9)
    K, E, N, NJ = small_cfg.K, small_cfg.E, small_cfg.N, small_cfg.array.N_J
    assert ch.h_IU.shape == (K, N) and ch.H_JU.shape == (K, N, NJ, NJ)
    assert ch.A_E.shape == (E, 9, N) and ch.H_JE.shape == (E, 9, N, NJ, NJ)
    assert (ch.h_IU > 0).all() and (ch.A_U > 0).all() and (ch.A_E > 0).all()
    cap = small_cfg.beta0 / small_cfg.H ** 2
    assert ch.A_U.max() <= cap and ch.A_E.max() <= cap
    for e in range(E):
        for g in range(9):
            for n in range(N):
                H = ch.H_JE[e, g, n]
                np.testing.assert_allclose(H, H.conj().T, atol=1e-12)
                assert np.real(np.trace(H)) == pytest.approx(NJ, abs=1e-9)
