"""LoS geometry: distances, path-loss gains, planar-array steering, worst-case bounds.

All channels are deterministic functions of node geometry.  The jammer carries
an N_Jx x N_Jy uniform planar array; its channel to a ground node is the
Kronecker product of the per-axis phase progressions, and the received
artificial-noise power is Tr(H Z) with H the rank-one outer product of the
steering vector.  Eavesdropper positions are only known to lie in a disk, so
worst-case gains and a deterministic scenario grid over each disk are provided.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ArrayParams, Eavesdropper, ScenarioConfig, Trajectory

# Below this horizontal offset the azimuth is undefined (node directly under
# the array); fix sin=0, cos=1 so the steering vector stays deterministic.
DEGENERATE_HORIZONTAL = 1e-9


def distance3d(a, b, H: float) -> float:
    """Slant distance between horizontal points a, b at altitude separation H."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sqrt(np.sum((a - b) ** 2) + H * H))


def info_channel_gain(uav_pos, node_pos, cfg: ScenarioConfig) -> float:
    """Free-space power gain beta0 / (||uav-node||^2 + H^2)."""
    uav_pos = np.asarray(uav_pos, dtype=float)
    node_pos = np.asarray(node_pos, dtype=float)
    return cfg.beta0 / (np.sum((uav_pos - node_pos) ** 2) + cfg.H ** 2)


def worst_case_info_gain(uav_pos, eve: Eavesdropper, cfg: ScenarioConfig) -> float:
    """Max of the info-link gain over the eavesdropper's uncertainty disk.

    The gain decreases with horizontal offset, so the maximum sits at the disk
    point nearest the UAV: offset max(0, ||uav - est|| - radius).
    """
    uav_pos = np.asarray(uav_pos, dtype=float)
    gap = max(0.0, float(np.linalg.norm(uav_pos - eve.est_position)) - eve.radius)
    return cfg.beta0 / (gap * gap + cfg.H ** 2)


def _angles(uav_pos: np.ndarray, node_pos: np.ndarray, H: float):
    """(sin_theta, sin_sigma, cos_sigma) of the departure direction.

    Angle cosines/sines use absolute coordinate offsets, so mirrored node
    positions share a steering vector; directly-overhead nodes use the fixed
    degenerate azimuth (sin=0, cos=1).
    """
    off = node_pos - uav_pos
    d_h = float(np.hypot(off[0], off[1]))
    sin_theta = H / float(np.sqrt(d_h * d_h + H * H))
    if d_h < DEGENERATE_HORIZONTAL:
        return sin_theta, 0.0, 1.0
    return sin_theta, abs(off[0]) / d_h, abs(off[1]) / d_h


def steering_vector(uav_pos, node_pos, array: ArrayParams, H: float) -> np.ndarray:
    """Planar-array response toward a ground node; unit-modulus entries, first = 1."""
    uav_pos = np.asarray(uav_pos, dtype=float)
    node_pos = np.asarray(node_pos, dtype=float)
    sin_theta, sin_s, cos_s = _angles(uav_pos, node_pos, H)
    phase = 2.0 * np.pi * array.delta_J / array.lambda_c * sin_theta
    ax = np.exp(-1j * phase * cos_s * np.arange(array.N_Jx))
    ay = np.exp(-1j * phase * sin_s * np.arange(array.N_Jy))
    return np.kron(ax, ay)


def steering_vectors(uav_pos, node_pos_batch: np.ndarray, array: ArrayParams,
                     H: float) -> np.ndarray:
    """Vectorized steering vectors for a batch of node positions, shape (S, N_J)."""
    uav_pos = np.asarray(uav_pos, dtype=float)
    pts = np.asarray(node_pos_batch, dtype=float).reshape(-1, 2)
    off = pts - uav_pos[None, :]
    d_h = np.hypot(off[:, 0], off[:, 1])
    sin_theta = H / np.sqrt(d_h * d_h + H * H)
    safe = d_h >= DEGENERATE_HORIZONTAL
    sin_s = np.where(safe, np.abs(off[:, 0]) / np.where(safe, d_h, 1.0), 0.0)
    cos_s = np.where(safe, np.abs(off[:, 1]) / np.where(safe, d_h, 1.0), 1.0)
    phase = 2.0 * np.pi * array.delta_J / array.lambda_c * sin_theta
    ax = np.exp(-1j * np.outer(phase * cos_s, np.arange(array.N_Jx)))
    ay = np.exp(-1j * np.outer(phase * sin_s, np.arange(array.N_Jy)))
    return (ax[:, :, None] * ay[:, None, :]).reshape(len(pts), array.N_J)


def jammer_channel_matrix(steering: np.ndarray) -> np.ndarray:
    """Rank-one Hermitian channel matrix h h^H; trace equals the element count."""
    h = np.asarray(steering)
    if h.size == 0:
        raise ValueError("steering vector must be nonempty")
    return np.outer(h, h.conj())


def an_received_power(steering: np.ndarray, Z: np.ndarray) -> float:
    """Tr(h h^H Z) = h^H Z h, the artificial-noise power seen along ``steering``."""
    h = np.asarray(steering)
    return float(np.real(h.conj() @ Z @ h))


# ---------------------------------------------------------------------------
# uncertainty-disk discretization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UncertaintySample:
    eve_index: int
    delta: np.ndarray     # offset from the estimated position, ||delta|| <= radius
    position: np.ndarray  # est_position + delta


def uncertainty_offsets(radius: float, G: int) -> np.ndarray:
    """Deterministic (G, 2) grid on the disk of the given radius.

    Layout: the disk center first, then up to 8 points per concentric ring at
    radii radius*i/n_rings (outermost ring on the boundary), angles uniformly
    spaced starting at 0.  G=1 returns just the center.
    """
    if G < 1:
        raise ValueError("G must be >= 1")
    pts = [np.zeros(2)]
    remaining = G - 1
    if remaining > 0:
        n_rings = int(np.ceil(remaining / 8))
        per_ring = [remaining // n_rings] * n_rings
        for i in range(remaining % n_rings):
            per_ring[i] += 1
        # outermost rings get the larger shares; ring i sits at radius*(i+1)/n_rings
        per_ring = sorted(per_ring)
        for i, count in enumerate(per_ring):
            r = radius * (i + 1) / n_rings
            ang = 2.0 * np.pi * np.arange(count) / count
            for a in ang:
                pts.append(r * np.array([np.cos(a), np.sin(a)]))
    return np.array(pts)


def uncertainty_samples(eve: Eavesdropper, G: int, eve_index: int = 0) -> list[UncertaintySample]:
    offsets = uncertainty_offsets(eve.radius, G)
    return [UncertaintySample(eve_index=eve_index, delta=d, position=eve.est_position + d)
            for d in offsets]


# ---------------------------------------------------------------------------
# per-slot channel tables used by the solvers
# ---------------------------------------------------------------------------

@dataclass
class ChannelSet:
    """All channel quantities for one (info trajectory, jammer trajectory) pair.

    Index conventions: k users, e eavesdroppers, g uncertainty samples, n slots.
    With no jammer flying, jammer_positions is None and every jammer-path
    table is zero, so Tr(H Z) terms vanish.
    """

    info_positions: np.ndarray            # (N, 2)
    jammer_positions: np.ndarray | None   # (N, 2)
    h_IU: np.ndarray         # (K, N) info UAV -> user power gain
    A_U: np.ndarray          # (K, N) jammer-path attenuation toward users
    H_JU: np.ndarray         # (K, N, N_J, N_J) rank-one jammer->user matrices
    h_IE_worst: np.ndarray   # (E, N) worst-case info->eavesdropper gain over each disk
    eve_offsets: list        # per e: (G_e, 2) scenario offsets within the disk
    A_E: np.ndarray          # (E, G, N) jammer-path attenuation at each sample
    H_JE: np.ndarray         # (E, G, N, N_J, N_J) jammer->eavesdropper matrices

    @property
    def G(self) -> int:
        return self.A_E.shape[1]


def build_channels(cfg: ScenarioConfig, info_traj: Trajectory,
                   jammer_traj: Trajectory | None, G: int = 9) -> ChannelSet:
    """Evaluate every gain/steering table needed by the optimizers and audits."""
    K, E, N = cfg.K, cfg.E, cfg.N
    NJ = cfg.array.N_J
    H2 = cfg.H ** 2

    ti = info_traj.positions
    tj = None if jammer_traj is None else jammer_traj.positions
    if ti.shape[0] != N or (tj is not None and tj.shape[0] != N):
        raise ValueError("trajectories must have one waypoint per slot")

    h_IU = np.zeros((K, N))
    A_U = np.zeros((K, N))
    H_JU = np.zeros((K, N, NJ, NJ), dtype=complex)
    for k, user in enumerate(cfg.users):
        du2 = np.sum((ti - user.position[None, :]) ** 2, axis=1)
        h_IU[k] = cfg.beta0 / (du2 + H2)
        if tj is not None:
            dj2 = np.sum((tj - user.position[None, :]) ** 2, axis=1)
            A_U[k] = cfg.beta0 / (dj2 + H2)
            for n in range(N):
                h = steering_vector(tj[n], user.position, cfg.array, cfg.H)
                H_JU[k, n] = np.outer(h, h.conj())

    h_IE_worst = np.zeros((E, N))
    offsets = [uncertainty_offsets(e.radius, G) for e in cfg.eavesdroppers]
    A_E = np.zeros((E, G, N))
    H_JE = np.zeros((E, G, N, NJ, NJ), dtype=complex)
    for e, eve in enumerate(cfg.eavesdroppers):
        gap = np.maximum(0.0, np.linalg.norm(ti - eve.est_position[None, :], axis=1)
                         - eve.radius)
        h_IE_worst[e] = cfg.beta0 / (gap ** 2 + H2)
        if tj is None:
            continue
        pts = eve.est_position[None, :] + offsets[e]  # (G, 2)
        for n in range(N):
            d2 = np.sum((pts - tj[n][None, :]) ** 2, axis=1)
            A_E[e, :, n] = cfg.beta0 / (d2 + H2)
            hs = steering_vectors(tj[n], pts, cfg.array, cfg.H)
            H_JE[e, :, n] = hs[:, :, None] * hs.conj()[:, None, :]
    return ChannelSet(info_positions=ti.copy(),
                      jammer_positions=None if tj is None else tj.copy(),
                      h_IU=h_IU, A_U=A_U, H_JU=H_JU,
                      h_IE_worst=h_IE_worst, eve_offsets=offsets,
                      A_E=A_E, H_JE=H_JE)
