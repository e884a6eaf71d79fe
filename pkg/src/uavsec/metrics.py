"""Rates, leakage SINRs, energy efficiency, and an independent constraint audit.

The audit re-derives every quantity from raw geometry (it never trusts solver
surrogates) and reports a signed margin per constraint.  Robust leakage is
checked by dense low-discrepancy sampling of each eavesdropper's uncertainty
disk, deliberately independent of the scenario grid the solvers enforce.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import channel as ch
from . import power as pw
from .scenario import ScenarioConfig, Trajectory

AUDIT_RTOL = 1e-6       # relative feasibility tolerance for deterministic constraints
AUDIT_TOL_LEAK = 1e-3   # leakage allowance for the scenario approximation
PSD_EIG_FLOOR = -1e-9   # smallest acceptable covariance eigenvalue


@dataclass
class AllocationState:
    """Scheduling, transmit powers, and artificial-noise covariances.

    Shapes: alpha, p, p_tilde are (K, N_F, N); Z is (N_F, N, N_J, N_J) and
    Z_tilde is (K, N_F, N, N_J, N_J), both complex Hermitian PSD.  For a binary
    schedule, p_tilde = alpha*p and Z_tilde = alpha*Z hold elementwise.
    """

    alpha: np.ndarray
    p: np.ndarray
    p_tilde: np.ndarray
    Z: np.ndarray
    Z_tilde: np.ndarray

    @classmethod
    def zeros(cls, K: int, N_F: int, N: int, N_J: int) -> "AllocationState":
        return cls(alpha=np.zeros((K, N_F, N)), p=np.zeros((K, N_F, N)),
                   p_tilde=np.zeros((K, N_F, N)),
                   Z=np.zeros((N_F, N, N_J, N_J), dtype=complex),
                   Z_tilde=np.zeros((K, N_F, N, N_J, N_J), dtype=complex))

    def copy(self) -> "AllocationState":
        return AllocationState(alpha=self.alpha.copy(), p=self.p.copy(),
                               p_tilde=self.p_tilde.copy(), Z=self.Z.copy(),
                               Z_tilde=self.Z_tilde.copy())

    def an_traces(self) -> np.ndarray:
        """Tr(Z_i[n]) as an (N_F, N) real array."""
        return np.real(np.trace(self.Z, axis1=-2, axis2=-1))


# ---------------------------------------------------------------------------
# rates and efficiency
# ---------------------------------------------------------------------------

def an_interference(alloc: AllocationState, channels: ch.ChannelSet) -> np.ndarray:
    """A_U[k,n] * Tr(H_JU[k,n] Z[i,n]) as a (K, N_F, N) real array."""
    tr = np.einsum("knab,inba->kin", channels.H_JU, alloc.Z).real
    return channels.A_U[:, None, :] * tr


def rates_table(alloc: AllocationState, channels: ch.ChannelSet,
                cfg: ScenarioConfig) -> np.ndarray:
    """Per-(k, i, n) achievable rate in bit/s."""
    noise = cfg.noise_floor
    interf = an_interference(alloc, channels)
    sinr = alloc.p * channels.h_IU[:, None, :] / (interf + noise)
    return cfg.W * alloc.alpha * np.log2(1.0 + sinr)


def user_rate(k: int, i: int, n: int, alloc: AllocationState,
              channels: ch.ChannelSet, cfg: ScenarioConfig) -> float:
    Z = alloc.Z[i, n]
    interf = channels.A_U[k, n] * float(np.real(np.trace(channels.H_JU[k, n] @ Z)))
    sinr = alloc.p[k, i, n] * channels.h_IU[k, n] / (interf + cfg.noise_floor)
    return cfg.W * alloc.alpha[k, i, n] * math.log2(1.0 + sinr)


def leakage_sinr(k: int, e: int, i: int, n: int, alloc: AllocationState,
                 eve_position, channels: ch.ChannelSet, cfg: ScenarioConfig) -> float:
    """Leakage SINR at a specific candidate eavesdropper position."""
    pos = np.asarray(eve_position, dtype=float)
    h_ie = ch.info_channel_gain(channels.info_positions[n], pos, cfg)
    p = alloc.p[k, i, n]
    if channels.jammer_positions is None:
        return p * h_ie / cfg.noise_floor
    a_e = ch.info_channel_gain(channels.jammer_positions[n], pos, cfg)
    h = ch.steering_vector(channels.jammer_positions[n], pos, cfg.array, cfg.H)
    interf = a_e * ch.an_received_power(h, alloc.Z[i, n])
    return p * h_ie / (interf + cfg.noise_floor)


def total_powers(alloc: AllocationState, info_traj: Trajectory,
                 jammer_traj: Trajectory | None, cfg: ScenarioConfig) -> np.ndarray:
    """Per-slot system power P_total_I[n] (+ P_total_J[n] when a jammer flies)."""
    N = cfg.N
    out = np.zeros(N)
    vi = info_traj.speeds()
    vj = jammer_traj.speeds() if jammer_traj is not None else None
    for n in range(N):
        try:
            out[n] = pw.info_total_power(alloc, n, vi[n], cfg)
        except pw.FlightModelError:
            out[n] = np.inf
        if jammer_traj is not None:
            try:
                out[n] += pw.jammer_total_power(alloc.Z[:, n], n, vj[n], cfg)
            except pw.FlightModelError:
                out[n] = np.inf
    return out


def energy_efficiency(alloc: AllocationState, info_traj: Trajectory,
                      jammer_traj: Trajectory | None, cfg: ScenarioConfig,
                      channels: ch.ChannelSet | None = None) -> float:
    """Total delivered bits per consumed Joule over the mission (bit/J)."""
    if channels is None:
        channels = ch.build_channels(cfg, info_traj, jammer_traj, G=1)
    rate_sum = float(rates_table(alloc, channels, cfg).sum())
    power_sum = float(total_powers(alloc, info_traj, jammer_traj, cfg).sum())
    return rate_sum / power_sum


def secrecy_rate_floor(cfg: ScenarioConfig) -> float:
    """Informational secure-rate margin R_min - W log2(1 + Gamma_th), bit/s."""
    if math.isinf(cfg.Gamma_th):
        return -math.inf
    return cfg.R_min - cfg.W * math.log2(1.0 + cfg.Gamma_th)


# ---------------------------------------------------------------------------
# constraint audit
# ---------------------------------------------------------------------------

@dataclass
class ConstraintCheck:
    name: str
    passed: bool
    margin: float          # signed slack; negative means violated by that much
    worst: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        worst = {}
        for key, val in self.worst.items():
            if isinstance(val, np.ndarray):
                worst[key] = [float(x) for x in np.ravel(val)]
            elif isinstance(val, (np.floating, np.integer)):
                worst[key] = val.item()
            else:
                worst[key] = val
        return {"name": self.name, "passed": bool(self.passed),
                "margin": float(self.margin), "worst": worst}


@dataclass
class AuditResult:
    checks: list[ConstraintCheck]
    samples_per_eve: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_names(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> ConstraintCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "samples_per_eve": self.samples_per_eve,
                "seed": self.seed,
                "checks": [c.to_dict() for c in self.checks]}

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _disk_samples(eve, n_samples: int, seed: int, extra_points: np.ndarray) -> np.ndarray:
    """Deterministic low-discrepancy fill of the uncertainty disk plus extras."""
    sampler = qmc.Halton(d=2, scramble=True, seed=seed)
    u = sampler.random(n_samples)
    r = eve.radius * np.sqrt(u[:, 0])
    a = 2.0 * np.pi * u[:, 1]
    pts = eve.est_position[None, :] + np.column_stack([r * np.cos(a), r * np.sin(a)])
    return np.vstack([pts, extra_points, eve.est_position[None, :]])


def _nearest_disk_points(eve, targets: np.ndarray) -> np.ndarray:
    """For each target, the disk point closest to it (peak of the info-link gain)."""
    off = targets - eve.est_position[None, :]
    dist = np.linalg.norm(off, axis=1)
    scale = np.minimum(1.0, eve.radius / np.maximum(dist, 1e-12))
    return eve.est_position[None, :] + off * scale[:, None]


def audit(alloc: AllocationState, info_traj: Trajectory,
          jammer_traj: Trajectory | None, cfg: ScenarioConfig,
          samples_per_eve: int = 10_000, seed: int = 0,
          rtol: float = AUDIT_RTOL, tol_leak: float = AUDIT_TOL_LEAK) -> AuditResult:
    """Check every mission constraint with margins; never raises."""
    checks: list[ConstraintCheck] = []
    K, NF, N = alloc.alpha.shape
    noise = cfg.noise_floor
    jammer_absent = jammer_traj is None

    # scheduling near-binary and range
    dev = np.abs(alloc.alpha - np.round(np.clip(alloc.alpha, 0.0, 1.0)))
    worst_idx = np.unravel_index(np.argmax(dev), dev.shape)
    checks.append(ConstraintCheck(
        name="alpha_binary", passed=bool(dev.max() <= rtol),
        margin=float(rtol - dev.max()),
        worst={"k": int(worst_idx[0]), "i": int(worst_idx[1]), "n": int(worst_idx[2]),
               "alpha": float(alloc.alpha[worst_idx])}))

    # one user per subcarrier per slot
    load = alloc.alpha.sum(axis=0)
    worst_idx = np.unravel_index(np.argmax(load), load.shape)
    checks.append(ConstraintCheck(
        name="subcarrier_exclusivity", passed=bool(load.max() <= 1.0 + rtol),
        margin=float(1.0 + rtol - load.max()),
        worst={"i": int(worst_idx[0]), "n": int(worst_idx[1]), "load": float(load.max())}))

    # nonnegative transmit power
    checks.append(ConstraintCheck(
        name="power_nonneg", passed=bool(alloc.p.min() >= -rtol * cfg.P_peak_I),
        margin=float(alloc.p.min() + rtol * cfg.P_peak_I),
        worst={"p_min": float(alloc.p.min())}))

    # PSD artificial noise
    eig_min, eig_where = 0.0, (0, 0)
    for i in range(NF):
        for n in range(N):
            w = np.linalg.eigvalsh(0.5 * (alloc.Z[i, n] + alloc.Z[i, n].conj().T))
            if w[0] < eig_min:
                eig_min, eig_where = float(w[0]), (i, n)
    floor = PSD_EIG_FLOOR * max(1.0, cfg.P_peak_J)
    checks.append(ConstraintCheck(
        name="an_psd", passed=bool(eig_min >= floor), margin=float(eig_min - floor),
        worst={"i": eig_where[0], "n": eig_where[1], "eig_min": eig_min}))

    # peak transmit powers
    tx = (alloc.alpha * alloc.p).sum(axis=(0, 1))
    n_w = int(np.argmax(tx))
    checks.append(ConstraintCheck(
        name="peak_power_info", passed=bool(tx.max() <= cfg.P_peak_I * (1 + rtol)),
        margin=float(cfg.P_peak_I * (1 + rtol) - tx.max()),
        worst={"n": n_w, "value": float(tx.max())}))
    an_tx = alloc.an_traces().sum(axis=0)
    n_w = int(np.argmax(an_tx))
    checks.append(ConstraintCheck(
        name="peak_power_jammer", passed=bool(an_tx.max() <= cfg.P_peak_J * (1 + rtol)),
        margin=float(cfg.P_peak_J * (1 + rtol) - an_tx.max()),
        worst={"n": n_w, "value": float(an_tx.max())}))

    # per-slot power budgets
    vi = info_traj.speeds()
    p_info = np.zeros(N)
    for n in range(N):
        try:
            p_info[n] = pw.info_total_power(alloc, n, vi[n], cfg)
        except pw.FlightModelError:
            p_info[n] = np.inf
    n_w = int(np.argmax(p_info))
    checks.append(ConstraintCheck(
        name="power_budget_info", passed=bool(p_info.max() <= cfg.P_max_I * (1 + rtol)),
        margin=float(cfg.P_max_I * (1 + rtol) - p_info.max()),
        worst={"n": n_w, "value": float(p_info.max())}))
    if not jammer_absent:
        vj = jammer_traj.speeds()
        p_jam = np.zeros(N)
        for n in range(N):
            try:
                p_jam[n] = pw.jammer_total_power(alloc.Z[:, n], n, vj[n], cfg)
            except (pw.FlightModelError, ValueError):
                p_jam[n] = np.inf
        n_w = int(np.argmax(p_jam))
        checks.append(ConstraintCheck(
            name="power_budget_jammer", passed=bool(p_jam.max() <= cfg.P_max_J * (1 + rtol)),
            margin=float(cfg.P_max_J * (1 + rtol) - p_jam.max()),
            worst={"n": n_w, "value": float(p_jam.max())}))

    # per-user average rate
    channels = ch.build_channels(cfg, info_traj, jammer_traj, G=1)
    rates = rates_table(alloc, channels, cfg)
    avg = rates.sum(axis=(1, 2)) / N
    k_w = int(np.argmin(avg))
    bound = cfg.R_min * (1 - rtol)
    checks.append(ConstraintCheck(
        name="min_user_rate", passed=bool(avg.min() >= bound),
        margin=float(avg.min() - bound),
        worst={"k": k_w, "avg_rate": float(avg.min()), "R_min": cfg.R_min}))

    # robust leakage via dense disk sampling
    if math.isinf(cfg.Gamma_th):
        checks.append(ConstraintCheck(name="leakage_sinr", passed=True,
                                      margin=math.inf, worst={}))
    else:
        worst_sinr, worst_loc = 0.0, {}
        p_max_in = alloc.p.max(axis=0)  # (NF, N): leakage is worst for the largest power
        for e, eve in enumerate(cfg.eavesdroppers):
            pts = _disk_samples(eve, samples_per_eve, seed + e,
                                _nearest_disk_points(eve, info_traj.positions))
            for n in range(N):
                h_ie = cfg.beta0 / (np.sum((pts - info_traj.positions[n]) ** 2, axis=1)
                                    + cfg.H ** 2)
                if jammer_absent:
                    den = np.full((NF, len(pts)), noise)
                else:
                    hs = ch.steering_vectors(jammer_traj.positions[n], pts, cfg.array, cfg.H)
                    a_e = cfg.beta0 / (np.sum((pts - jammer_traj.positions[n]) ** 2, axis=1)
                                       + cfg.H ** 2)
                    tr = np.einsum("sa,iab,sb->is", hs.conj(), alloc.Z[:, n], hs).real
                    den = a_e[None, :] * tr + noise
                sinr = p_max_in[:, n][:, None] * h_ie[None, :] / den
                i_w, s_w = np.unravel_index(np.argmax(sinr), sinr.shape)
                if sinr[i_w, s_w] > worst_sinr:
                    worst_sinr = float(sinr[i_w, s_w])
                    worst_loc = {"e": e, "n": n, "i": int(i_w),
                                 "position": [float(x) for x in pts[s_w]]}
        bound = cfg.Gamma_th * (1 + tol_leak)
        checks.append(ConstraintCheck(
            name="leakage_sinr", passed=bool(worst_sinr <= bound),
            margin=float(bound - worst_sinr),
            worst=dict(worst_loc, sinr=worst_sinr, Gamma_th=cfg.Gamma_th)))

    # endpoints and kinematics
    scale = max(1.0, float(np.linalg.norm(cfg.t0_I)), float(np.linalg.norm(cfg.tF_I)))
    d0 = float(np.linalg.norm(info_traj.positions[0] - cfg.t0_I))
    checks.append(ConstraintCheck(
        name="start_position", passed=bool(d0 <= 1e-9 * scale),
        margin=float(1e-9 * scale - d0), worst={"offset_m": d0}))
    dF = float(np.linalg.norm(info_traj.positions[-1] - cfg.tF_I))
    checks.append(ConstraintCheck(
        name="end_position", passed=bool(dF <= 1e-9 * scale),
        margin=float(1e-9 * scale - dF), worst={"offset_m": dF}))

    res = info_traj.kinematic_residual(cfg.tau)
    checks.append(ConstraintCheck(
        name="kinematic_consistency", passed=bool(res <= 1e-9),
        margin=float(1e-9 - res), worst={"residual_m": res}))

    sp = info_traj.speeds()
    n_w = int(np.argmax(sp))
    checks.append(ConstraintCheck(
        name="speed_limit", passed=bool(sp.max() <= cfg.V_max_I * (1 + rtol)),
        margin=float(cfg.V_max_I * (1 + rtol) - sp.max()),
        worst={"n": n_w, "speed": float(sp.max())}))

    dv = np.linalg.norm(np.diff(info_traj.velocities, axis=0), axis=1)
    if dv.size:
        n_w = int(np.argmax(dv))
        checks.append(ConstraintCheck(
            name="accel_limit", passed=bool(dv.max() <= cfg.V_acc_I * (1 + rtol)),
            margin=float(cfg.V_acc_I * (1 + rtol) - dv.max()),
            worst={"n": n_w, "dv": float(dv.max())}))

    if not jammer_absent:
        sep2 = np.sum((info_traj.positions - jammer_traj.positions) ** 2, axis=1)
        n_w = int(np.argmin(sep2))
        margin = float(sep2.min() - cfg.d_min ** 2)
        checks.append(ConstraintCheck(
            name="uav_separation",
            passed=bool(sep2.min() >= cfg.d_min ** 2 * (1 - rtol)),
            margin=margin,
            worst={"n": n_w, "separation_m": float(np.sqrt(sep2.min()))}))

    return AuditResult(checks=checks, samples_per_eve=samples_per_eve, seed=seed)
