"""Information-UAV path and speed design at a fixed allocation.

The rate is rewritten against a slack on the squared slant distance to each
user (convex in the slack, minorized by its tangent), flight power against a
speed slack entering the induced-power hyperbola, and the robust leakage
constraint becomes, per eavesdropper and slot, a 3x3 linear matrix inequality
obtained from the S-procedure over the uncertainty disk, with the one
non-affine diagonal entry linearized conservatively.  A Dinkelbach loop inside
an SCA sweep maximizes delivered-bits-per-Joule over the reachable tube.

Engine rates are in Mbit/s, matching the allocation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from . import conic
from .allocation import RATE_SCALE, _trace_entry
from .channel import ChannelSet, build_channels
from .fractional import SubproblemInfeasible, maximize_ratio
from .metrics import AllocationState, energy_efficiency
from .power import V_FLOOR, flight_power
from .scenario import ScenarioConfig, Trajectory


class TrajectoryInfeasible(RuntimeError):
    def __init__(self, message: str, violated: list[str]):
        super().__init__(message)
        self.violated = violated


@dataclass
class Sp2Params:
    eps_sca: float = 1e-3
    max_sca: int = 5
    eps_dinkelbach: float = 1e-6
    max_dinkelbach: int = 10
    G: int = 9
    v_floor: float = V_FLOOR
    zero_accel: bool = False   # constant-velocity variant used by one baseline


@dataclass
class Sp2ExpansionPoint:
    u: np.ndarray  # (K, N) squared-slant-distance slack at the point
    t: np.ndarray  # (N, 2)
    v: np.ndarray  # (N, 2)


@dataclass
class Sp2Result:
    trajectory: Trajectory
    q_engine: float
    ee: float
    sca_trace: list = field(default_factory=list)
    fallback_to_warm_start: bool = False


# ---------------------------------------------------------------------------
# fixed tables and surrogate mathematics
# ---------------------------------------------------------------------------

def effective_snr_tables(alloc: AllocationState, channels: ChannelSet,
                         cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """(gamma_u, gamma_e_max): distance-stripped SNR numerators at fixed jamming.

    gamma_u[k,i,n] = p*beta0 / (A_U Tr(H_JU Z) + W N0); the user rate is then
    alpha*W*log2(1 + gamma_u/u) with u the squared slant distance.
    gamma_e_max[e,n] is the worst such constant toward an eavesdropper,
    maximized over (k,i) and with the denominator minimized over the disk's
    scenario samples (conservative on both sides).
    """
    K, NF, N = alloc.alpha.shape
    E = cfg.E
    noise = cfg.noise_floor
    tr_u = np.einsum("knab,inba->kin", channels.H_JU, alloc.Z).real
    den_u = channels.A_U[:, None, :] * tr_u + noise
    gamma_u = alloc.p * cfg.beta0 / den_u

    gamma_e_max = np.zeros((E, N))
    if E:
        tr_e = np.einsum("egnab,inba->egin", channels.H_JE, alloc.Z).real
        den_e = (channels.A_E[:, :, None, :] * tr_e).min(axis=1) + noise  # (E, NF, N)
        p_max = alloc.p.max(axis=0)  # (NF, N); any user's power can leak
        gamma_e_max = (p_max[None, :, :] * cfg.beta0 / den_e).max(axis=1)
    return gamma_u, gamma_e_max


def exact_rate_in_u(u, gamma: float, weight: float):
    """weight * log2(1 + gamma/u); convex and decreasing in u > 0."""
    return weight * np.log2(1.0 + gamma / np.asarray(u, dtype=float))


def rate_lb_in_u(u, u_j: float, gamma: float, weight: float):
    """Tangent of the rate in the distance slack; a global lower bound."""
    if u_j <= 0:
        raise ValueError("expansion point u must be positive")
    u = np.asarray(u, dtype=float)
    slope = weight * gamma / (u_j * (u_j + gamma) * math.log(2.0))
    return weight * math.log2(1.0 + gamma / u_j) - slope * (u - u_j)


def separation_sq_lb(t, t_j, t_other):
    """Tangent minorant of ||t - t_other||^2 around t_j."""
    t = np.asarray(t, dtype=float)
    t_j = np.asarray(t_j, dtype=float)
    t_other = np.asarray(t_other, dtype=float)
    g = t_j - t_other
    return float(g @ g) + 2.0 * (t - t_j) @ g


def speed_sq_lb(v, v_j):
    """Tangent minorant of ||v||^2 around v_j."""
    v = np.asarray(v, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    return float(v_j @ v_j) + 2.0 * (v - v_j) @ v_j


def standoff_c_exact(t, t_hat, H: float, gamma_w: float, Gamma_th: float) -> float:
    """Exact corner entry of the robust-standoff LMI."""
    t = np.asarray(t, dtype=float)
    d = t - np.asarray(t_hat, dtype=float)
    return float(d @ d) + H * H - gamma_w / Gamma_th


def standoff_c_lin(t, t_j, t_hat, H: float, gamma_w: float, Gamma_th: float) -> float:
    """Affine minorant of the corner entry (||t||^2 replaced by its tangent)."""
    t = np.asarray(t, dtype=float)
    t_j = np.asarray(t_j, dtype=float)
    t_hat = np.asarray(t_hat, dtype=float)
    return (float(t_hat @ t_hat) + 2.0 * t @ t_j - float(t_j @ t_j)
            - 2.0 * t_hat @ t + H * H - gamma_w / Gamma_th)


def standoff_lmi(t, psi: float, t_hat, Q: float, c_val: float) -> np.ndarray:
    """3x3 S-procedure block; PSD implies the robust standoff over the disk."""
    t = np.asarray(t, dtype=float)
    d = t - np.asarray(t_hat, dtype=float)
    top = np.hstack([(psi + 1.0) * np.eye(2), d[:, None]])
    bot = np.hstack([d[None, :], [[-psi * Q * Q + c_val]]])
    return np.vstack([top, bot])


# ---------------------------------------------------------------------------
# parametric conic program
# ---------------------------------------------------------------------------

class Sp2Program:
    def __init__(self, cfg: ScenarioConfig, alloc: AllocationState,
                 channels: ChannelSet, jammer_traj: Trajectory | None,
                 params: Sp2Params):
        self.cfg = cfg
        self.params = params
        self.jammer_absent = jammer_traj is None
        self.jammer_positions = None if jammer_traj is None else jammer_traj.positions
        K, N = cfg.K, cfg.N
        E = cfg.E
        self.K, self.N, self.E = K, N, E

        self.gamma_u, self.gamma_e_max = effective_snr_tables(alloc, channels, cfg)
        self.alpha = alloc.alpha
        self.tx_per_slot = (alloc.alpha * alloc.p).sum(axis=(0, 1))  # (N,)
        if self.jammer_absent:
            self.jam_power = np.zeros(N)
        else:
            an = np.real(np.trace(alloc.Z, axis1=-2, axis2=-1)).sum(axis=0)
            jspeeds = jammer_traj.speeds()
            self.jam_power = (cfg.zeta_J * an + cfg.P_C_J
                              + np.array([flight_power(s, cfg.flight) for s in jspeeds]))

        t = cp.Variable((N, 2), name="t")
        v = cp.Variable((N, 2), name="v")
        u = cp.Variable((K, N), name="u")
        ups = cp.Variable(N, name="ups")
        s = cp.Variable(N, nonneg=True, name="s")
        w = cp.Variable(N, nonneg=True, name="w")
        self.t, self.v, self.u, self.ups, self.s, self.w = t, v, u, ups, s, w

        self.q = cp.Parameter(name="q")
        self.C0 = cp.Parameter((K, N), name="rate_const")   # Mbit/s
        self.CU = cp.Parameter((K, N), name="rate_slope")   # Mbit/s per m^2
        self.c13a = cp.Parameter((N, 2), name="sep_lin")
        self.c13b = cp.Parameter(N, name="sep_rhs")
        self.c23a = cp.Parameter((N, 2), name="speed_lin")
        self.c23b = cp.Parameter(N, name="speed_rhs")
        self.tj_par = cp.Parameter((N, 2), name="t_point")

        cons = [t[0] == cfg.t0_I, t[N - 1] == cfg.tF_I,
                t[1:] == t[:-1] + cfg.tau * v[:-1]]
        cons.append(cp.norm(v, 2, axis=1) <= cfg.V_max_I)
        if N >= 2:
            cons.append(cp.norm(v[1:] - v[:-1], 2, axis=1) <= cfg.V_acc_I)
        if params.zero_accel:
            cons.append(v[1:] == np.ones((N - 1, 1)) @ cp.reshape(v[0], (1, 2), order="C"))

        for k, user in enumerate(cfg.users):
            d2 = cp.sum(cp.square(t - user.position[None, :]), axis=1)
            cons.append(d2 + cfg.H ** 2 <= u[k, :])
        cons.append(u >= cfg.H ** 2)

        cons.append(cp.sum(cp.multiply(self.c23a, v), axis=1) - self.c23b
                    >= cp.square(ups))
        cons.append(ups >= params.v_floor)
        cons.append(cp.norm(v, 2, axis=1) <= s)
        cons.append(cp.power(s, 3) <= w)

        if not self.jammer_absent:
            cons.append(cp.sum(cp.multiply(self.c13a, t), axis=1) >= self.c13b)

        self.psi = None
        self.lmi_cc = None
        if E and not math.isinf(cfg.Gamma_th):
            self.psi = cp.Variable((E, N), nonneg=True, name="psi")
            self.lmi_cc = cp.Parameter((E, N), name="lmi_const")
            for e, eve in enumerate(cfg.eavesdroppers):
                that = eve.est_position
                for n in range(N):
                    c_aff = (self.lmi_cc[e, n]
                             + 2.0 * (self.tj_par[n, :] @ t[n, :])
                             - 2.0 * (that @ t[n, :]))
                    dvec = cp.reshape(t[n, :] - that, (2, 1), order="C")
                    top = cp.hstack([(self.psi[e, n] + 1.0) * np.eye(2), dvec])
                    bot = cp.hstack([cp.reshape(t[n, :] - that, (1, 2), order="C"),
                                     cp.reshape(-self.psi[e, n] * eve.radius ** 2 + c_aff,
                                                (1, 1), order="C")])
                    X = cp.vstack([top, bot])
                    cons.append(0.5 * (X + X.T) >> 0)

        fp = cfg.flight
        blade = fp.P_o * (1.0 + 3.0 * cp.sum(cp.square(v), axis=1)
                          / (fp.Omega ** 2 * fp.r ** 2))
        induced = fp.P_i * fp.v0 * cp.inv_pos(ups)
        self._parasite_coeff = 0.5 * fp.d0 * fp.rho * fp.s * fp.A_r
        parasite = self._parasite_coeff * w
        flight_I = blade + induced + parasite
        info_power = cfg.zeta_I * self.tx_per_slot + cfg.P_C_I + flight_I
        cons.append(info_power <= cfg.P_max_I)

        rate = cp.sum(self.C0 + cp.multiply(self.CU, u))
        cons.append(cp.sum(self.C0 + cp.multiply(self.CU, u), axis=1) / N
                    >= cfg.R_min * RATE_SCALE)

        self.denominator = cp.sum(info_power) + float(np.sum(self.jam_power))
        self.problem = cp.Problem(cp.Maximize(rate - self.q * self.denominator), cons)

        self._C0 = np.zeros((K, N))
        self._CU = np.zeros((K, N))
        self._c23a = np.zeros((N, 2))
        self._c23b = np.zeros(N)

    # -- parameter updates ------------------------------------------------------

    def set_expansion(self, point: Sp2ExpansionPoint) -> None:
        cfg = self.cfg
        K, N, E = self.K, self.N, self.E
        Ws = cfg.W * RATE_SCALE
        ln2 = math.log(2.0)
        C0 = np.zeros((K, N))
        CU = np.zeros((K, N))
        for k in range(K):
            for n in range(N):
                uj = point.u[k, n]
                for i in range(cfg.N_F):
                    a = self.alpha[k, i, n]
                    if a <= 0.5:
                        continue
                    g = self.gamma_u[k, i, n]
                    if g <= 0:
                        continue
                    slope = Ws * a * g / (uj * (uj + g) * ln2)
                    C0[k, n] += Ws * a * math.log2(1.0 + g / uj) + slope * uj
                    CU[k, n] -= slope
        self._C0, self._CU = C0, CU
        self.C0.value = C0
        self.CU.value = CU
        tj, vj = point.t, point.v
        self.tj_par.value = tj
        if not self.jammer_absent:
            gvec = tj - self.jammer_positions
            self.c13a.value = 2.0 * gvec
            self.c13b.value = (cfg.d_min ** 2 - np.sum(gvec * gvec, axis=1)
                               + 2.0 * np.sum(gvec * tj, axis=1))
        self._c23a = 2.0 * vj
        self._c23b = np.sum(vj * vj, axis=1)
        self.c23a.value = self._c23a
        self.c23b.value = self._c23b
        if self.lmi_cc is not None:
            cc = np.zeros((E, N))
            for e, eve in enumerate(cfg.eavesdroppers):
                that = eve.est_position
                cc[e, :] = (float(that @ that) - np.sum(tj * tj, axis=1) + cfg.H ** 2
                            - self.gamma_e_max[e, :] / cfg.Gamma_th)
            self.lmi_cc.value = cc

    # -- solving ---------------------------------------------------------------

    def evaluate(self, q: float):
        self.q.value = q
        status = conic.solve(self.problem)
        if status.infeasible:
            raise SubproblemInfeasible("trajectory subproblem infeasible", q=q)
        if not status.optimal:
            raise conic.ConicSolveError(
                f"trajectory subproblem not solved: status {status.status}")
        t = np.asarray(self.t.value)
        v = np.asarray(self.v.value)
        u = np.asarray(self.u.value)
        # tighten the epigraph slacks before valuing the ratio: smaller induced
        # and parasite power at the same feasible (t, v, u)
        speeds = np.linalg.norm(v, axis=1)
        c23_slack = np.sum(self._c23a * v, axis=1) - self._c23b
        ups = np.sqrt(np.maximum(self.params.v_floor ** 2, np.maximum(0.0, c23_slack)))
        num = float(np.sum(self._C0 + self._CU * u))
        cfg = self.cfg
        fp = cfg.flight
        blade = fp.P_o * (1.0 + 3.0 * speeds ** 2 / (fp.Omega ** 2 * fp.r ** 2))
        induced = fp.P_i * fp.v0 / ups
        parasite = self._parasite_coeff * speeds ** 3
        den = float(np.sum(cfg.zeta_I * self.tx_per_slot + cfg.P_C_I
                           + blade + induced + parasite) + np.sum(self.jam_power))
        return (t, v, u), num, den


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def expansion_from_trajectory(cfg: ScenarioConfig, traj: Trajectory) -> Sp2ExpansionPoint:
    u = np.zeros((cfg.K, cfg.N))
    for k, user in enumerate(cfg.users):
        u[k] = np.sum((traj.positions - user.position[None, :]) ** 2, axis=1) + cfg.H ** 2
    return Sp2ExpansionPoint(u=u, t=traj.positions.copy(), v=traj.velocities.copy())


def _rebuild_trajectory(cfg: ScenarioConfig, t: np.ndarray, v: np.ndarray) -> Trajectory:
    """Pin endpoints, then re-derive velocities so kinematics hold exactly."""
    pos = t.copy()
    pos[0] = cfg.t0_I
    pos[-1] = cfg.tF_I
    vel = v.copy()
    if cfg.N >= 2:
        vel[:-1] = (pos[1:] - pos[:-1]) / cfg.tau
    return Trajectory(positions=pos, velocities=vel)


def _check_warm_start(cfg: ScenarioConfig, traj: Trajectory,
                      jammer_traj: Trajectory | None) -> None:
    violated = []
    if np.linalg.norm(traj.positions[0] - cfg.t0_I) > 1e-6:
        violated.append("start_position")
    if np.linalg.norm(traj.positions[-1] - cfg.tF_I) > 1e-6:
        violated.append("end_position")
    if traj.kinematic_residual(cfg.tau) > 1e-6:
        violated.append("kinematic_consistency")
    if traj.speeds().max() > cfg.V_max_I * (1 + 1e-6):
        violated.append("speed_limit")
    dv = np.linalg.norm(np.diff(traj.velocities, axis=0), axis=1)
    if dv.size and dv.max() > cfg.V_acc_I * (1 + 1e-6):
        violated.append("accel_limit")
    if jammer_traj is not None:
        sep2 = np.sum((traj.positions - jammer_traj.positions) ** 2, axis=1)
        if sep2.min() < cfg.d_min ** 2 * (1 - 1e-6):
            violated.append("uav_separation")
    if violated:
        raise TrajectoryInfeasible(
            f"warm-start trajectory violates {violated}", violated)


def solve_sp2(cfg: ScenarioConfig, alloc: AllocationState,
              jammer_traj: Trajectory | None, params: Sp2Params | None = None,
              warm_start: Trajectory | None = None,
              channels: ChannelSet | None = None) -> Sp2Result:
    params = params or Sp2Params()
    if warm_start is None:
        raise ValueError("solve_sp2 requires a warm-start trajectory")
    _check_warm_start(cfg, warm_start, jammer_traj)
    if channels is None:
        channels = build_channels(cfg, warm_start, jammer_traj, G=params.G)
    prog = Sp2Program(cfg, alloc, channels, jammer_traj, params)

    point = expansion_from_trajectory(cfg, warm_start)
    best_traj = warm_start
    sca_trace: list[dict] = []
    q_prev = None
    q_eng = float("nan")
    fallback = True
    for it in range(params.max_sca):
        prog.set_expansion(point)
        try:
            res = maximize_ratio(prog.evaluate, q0=0.0, eps=params.eps_dinkelbach,
                                 max_iters=params.max_dinkelbach)
        except (SubproblemInfeasible, conic.ConicSolveError):
            break
        sca_trace.append(_trace_entry("sca", res))
        t, v, u = res.x_best
        best_traj = _rebuild_trajectory(cfg, t, v)
        q_eng = res.q_final
        fallback = False
        point = expansion_from_trajectory(cfg, best_traj)
        if q_prev is not None and abs(res.q_final - q_prev) <= params.eps_sca * max(
                abs(q_prev), 1e-12):
            break
        q_prev = res.q_final

    ee = energy_efficiency(alloc, best_traj, jammer_traj, cfg)
    return Sp2Result(trajectory=best_traj, q_engine=q_eng, ee=ee,
                     sca_trace=sca_trace, fallback_to_warm_start=fallback)
