"""Joint scheduling, transmit power, and artificial-noise design at fixed paths.

The binary schedule is relaxed to [0,1] with a penalty that vanishes only at
binary points; products of the schedule with powers and covariances are
replaced by auxiliary variables tied down with big-M bounds.  The remaining
difference-of-concave rate is minorized by keeping its concave part exact
(a perspective-of-log, handled natively by the exponential cone) and replacing
the interference log with its tangent plane at the current iterate.  The
resulting concave-over-affine ratio is maximized by a Dinkelbach loop inside a
majorize-minimize sweep; the final relaxed schedule is rounded and the powers
and covariances are re-solved with the schedule frozen.

Rates inside the engine are measured in Mbit/s so the Dinkelbach residual
tolerance (relative to the power denominator in watts) is numerically
meaningful at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from . import conic
from .channel import ChannelSet, build_channels
from .fractional import SubproblemInfeasible, maximize_ratio
from .metrics import AllocationState, energy_efficiency
from .power import flight_power
from .scenario import ScenarioConfig, Trajectory

RATE_SCALE = 1e-6       # engine rate unit: Mbit/s per bit/s
ALPHA_POINT_MIN = 1e-2  # expansion-point floor; perspective gradients need alpha_j > 0
AN_ZERO_TRACE = 1e-6    # W; beams below this trace are switched off in the polish


class AllocationInfeasible(RuntimeError):
    def __init__(self, message: str, violated: list[str]):
        super().__init__(message)
        self.violated = violated


@dataclass
class Sp1Params:
    chi: float | None = None      # penalty weight on fractional scheduling; None = auto
    eps_sca: float = 1e-3         # relative q change that stops the outer sweep
    max_sca: int = 5
    eps_dinkelbach: float = 1e-6  # residual tolerance relative to the denominator
    max_dinkelbach: int = 10
    G: int = 9                    # leakage scenario samples per eavesdropper disk
    round_threshold: float = 0.5
    freeze_sca: int = 2           # polish sweeps after rounding
    an_zero_trace: float = AN_ZERO_TRACE


@dataclass
class Sp1ExpansionPoint:
    """Linearization point: schedule in (0,1] and gated AN covariances."""

    alpha: np.ndarray    # (K, N_F, N)
    Z_tilde: np.ndarray  # (K, N_F, N, N_J, N_J)


@dataclass
class Sp1Result:
    alloc: AllocationState
    q_engine: float          # Dinkelbach ratio of the surrogate program, Mbit/J
    ee: float                # true energy efficiency of the returned state, bit/J
    sca_trace: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# surrogate mathematics (bit/s units; used by the program builder and tests)
# ---------------------------------------------------------------------------

def interference_log(alpha, S, W: float, noise: float):
    """W*alpha*log2(noise + S/alpha), the interference part of the gated rate.

    Jointly concave in (alpha, S); alpha -> 0 is extended by continuity.
    """
    a = np.asarray(alpha, dtype=float)
    s = np.asarray(S, dtype=float)
    a, s = np.broadcast_arrays(a, s)
    out = np.zeros(a.shape)
    mask = a > 0
    out[mask] = W * a[mask] * np.log2(noise + s[mask] / a[mask])
    return out if out.shape else float(out)


def interference_log_grad_alpha(alpha_j: float, S_j: float, W: float, noise: float) -> float:
    if alpha_j <= 0:
        raise ValueError("expansion point alpha must be positive")
    return (W * math.log2(noise + S_j / alpha_j)
            - W * S_j / ((S_j + noise * alpha_j) * math.log(2.0)))


def interference_log_grad_S(alpha_j: float, S_j: float, W: float, noise: float) -> float:
    if alpha_j <= 0:
        raise ValueError("expansion point alpha must be positive")
    return W * alpha_j / ((S_j + noise * alpha_j) * math.log(2.0))


def exact_gated_rate(alpha, p_tilde, S, h: float, W: float, noise: float):
    """W*alpha*[log2(noise + (S + p~h)/alpha) - log2(noise + S/alpha)]."""
    first = interference_log(alpha, np.asarray(S) + np.asarray(p_tilde) * h, W, noise)
    return first - interference_log(alpha, S, W, noise)


def dc_lower_bound_rate(alpha_j: float, S_j: float, alpha, p_tilde, S,
                        h: float, W: float, noise: float):
    """Minorant of the gated rate, tangent at (alpha_j, S_j).

    The signal log stays exact (concave); the interference log is replaced by
    its tangent plane, an upper bound by joint concavity, so the difference
    lower-bounds the exact rate everywhere and matches it at the point.
    """
    first = interference_log(np.asarray(alpha, dtype=float),
                             np.asarray(S) + np.asarray(p_tilde) * h, W, noise)
    d2 = (interference_log(alpha_j, S_j, W, noise)
          + interference_log_grad_alpha(alpha_j, S_j, W, noise) * (np.asarray(alpha) - alpha_j)
          + interference_log_grad_S(alpha_j, S_j, W, noise) * (np.asarray(S) - S_j))
    return first - d2


def penalty_upper_bound(alpha_j, alpha):
    """Tangent of the concave scheduling penalty alpha - alpha^2.

    Matches the penalty at alpha_j and dominates it everywhere (gap is exactly
    (alpha - alpha_j)^2), so subtracting it minorizes the objective.
    """
    aj = np.asarray(alpha_j, dtype=float)
    a = np.asarray(alpha, dtype=float)
    return a * (1.0 - 2.0 * aj) + aj ** 2


def default_chi(cfg: ScenarioConfig) -> float:
    """Penalty weight dominating the rate scale (engine units)."""
    snr_ref = cfg.P_peak_I * cfg.beta0 / (cfg.H ** 2 * cfg.noise_floor)
    return 10.0 * RATE_SCALE * cfg.N * cfg.K * cfg.N_F * cfg.W * math.log2(1.0 + snr_ref)


# ---------------------------------------------------------------------------
# parametric conic program
# ---------------------------------------------------------------------------

class Sp1Program:
    """One canonicalized conic program reused across all inner solves.

    Flattened index m = i*N + n over (subcarrier, slot); schedule/power
    variables are (K, M) matrices.  Parameters carry the Dinkelbach ratio q,
    the expansion-point coefficients, the schedule box bounds (relaxed vs
    frozen-binary phase), and per-beam AN trace caps for the polish.
    """

    def __init__(self, cfg: ScenarioConfig, channels: ChannelSet,
                 info_speeds: np.ndarray, jammer_speeds: np.ndarray | None,
                 params: Sp1Params, chi: float):
        self.cfg = cfg
        self.channels = channels
        self.params = params
        self.chi = chi
        self.jammer_absent = jammer_speeds is None

        K, NF, N = cfg.K, cfg.N_F, cfg.N
        NJ = cfg.array.N_J
        M = NF * N
        self.K, self.NF, self.N, self.NJ, self.M = K, NF, N, NJ, M
        noise = cfg.noise_floor
        self._noise = noise
        self._Ws = cfg.W * RATE_SCALE

        self.flight_I = np.array([flight_power(s, cfg.flight) for s in info_speeds])
        self.flight_J = (np.zeros(N) if self.jammer_absent else
                         np.array([flight_power(s, cfg.flight) for s in jammer_speeds]))

        self.alpha = cp.Variable((K, M), name="alpha")
        self.p = cp.Variable((K, M), nonneg=True, name="p")
        self.pt = cp.Variable((K, M), nonneg=True, name="pt")

        self.q = cp.Parameter(name="q")
        self.c0 = cp.Parameter((K, M), name="c0")  # constant part of the tangent plane
        self.cA = cp.Parameter((K, M), name="cA")  # coefficient on alpha
        self.cy = cp.Parameter((K, M), name="cy")  # coefficient on y = S/noise
        self.pen_lin = cp.Parameter((K, M), name="pen_lin")      # 1 - 2*alpha_j
        self.pen_const = cp.Parameter((K, M), name="pen_const")  # alpha_j^2
        self.alpha_lo = cp.Parameter((K, M), name="alpha_lo")
        self.alpha_hi = cp.Parameter((K, M), name="alpha_hi")
        self.rmin = cp.Parameter(nonneg=True, name="rmin")  # Mbit/s

        cons = [self.alpha >= self.alpha_lo, self.alpha <= self.alpha_hi]

        # gated AN covariances with big-M coupling to the schedule
        if self.jammer_absent:
            self.Z = None
            self.Zt = None
            self.zcap = None
            y = None
            trZ_slot = None
        else:
            self.Z = [cp.Variable((NJ, NJ), hermitian=True) for _ in range(M)]
            self.Zt = [[cp.Variable((NJ, NJ), hermitian=True) for _ in range(M)]
                       for _ in range(K)]
            self.zcap = cp.Parameter(M, nonneg=True, name="zcap")
            trZ = cp.hstack([cp.real(cp.trace(Zm)) for Zm in self.Z])
            eye = np.eye(NJ)
            rows = []
            for k in range(K):
                terms = []
                for m in range(M):
                    n = m % N
                    Heff = channels.A_U[k, n] * channels.H_JU[k, n] / noise
                    terms.append(cp.real(cp.trace(Heff @ self.Zt[k][m])))
                rows.append(cp.hstack(terms))
            y = cp.vstack(rows)  # (K, M): received AN power over noise at each user
            for m in range(M):
                cons.append(self.Z[m] >> 0)
                for k in range(K):
                    a_km = self.alpha[k, m]
                    cons.append(self.Zt[k][m] >> 0)
                    cons.append(self.Z[m] - self.Zt[k][m] >> 0)
                    cons.append(self.Zt[k][m] - self.Z[m]
                                + (1 - a_km) * cfg.P_peak_J * eye >> 0)
                    cons.append(a_km * cfg.P_peak_J * eye - self.Zt[k][m] >> 0)
            cons.append(trZ <= self.zcap)
            trZ_slot = cp.hstack([cp.sum(trZ[n::N]) for n in range(N)])
            cons.append(trZ_slot <= cfg.P_peak_J)

        # exact perspective-of-log signal part minus the tangent plane of the
        # interference part, both normalized by the noise floor for scaling
        h_over_noise = np.zeros((K, M))
        for k in range(K):
            for m in range(M):
                h_over_noise[k, m] = channels.h_IU[k, m % N] / noise
        self._h_over_noise = h_over_noise
        x = cp.multiply(h_over_noise, self.pt) + (y if y is not None else 0)
        signal_log = (self._Ws / math.log(2.0)) * (-cp.rel_entr(self.alpha, self.alpha + x))
        d2_ub = self.c0 + cp.multiply(self.cA, self.alpha) \
            + (cp.multiply(self.cy, y) if y is not None else 0)
        self.rate_lb = signal_log - d2_ub  # (K, M), Mbit/s
        penalty = self.pen_const + cp.multiply(self.pen_lin, self.alpha)

        # scheduling exclusivity, big-M power coupling, caps and budgets
        cons.append(cp.sum(self.alpha, axis=0) <= 1.0)
        cons.append(self.pt <= self.p)
        cons.append(self.pt >= self.p - cp.multiply(1 - self.alpha, cfg.P_peak_I))
        cons.append(self.pt <= self.alpha * cfg.P_peak_I)
        pt_slot = cp.hstack([cp.sum(self.pt[:, n::N]) for n in range(N)])
        cons.append(pt_slot <= cfg.P_peak_I)
        cons.append(cfg.zeta_I * pt_slot + cfg.P_C_I + self.flight_I <= cfg.P_max_I)
        if trZ_slot is not None:
            cons.append(cfg.zeta_J * trZ_slot + cfg.P_C_J + self.flight_J <= cfg.P_max_J)

        # per-user average-rate floor on the minorant
        cons.append(cp.sum(self.rate_lb, axis=1) / N >= self.rmin)

        # robust leakage: worst-case numerator against each disk sample's own
        # jamming denominator, for every user power that could occupy the
        # carrier; rows are normalized by the noise floor for conditioning
        if not math.isinf(cfg.Gamma_th):
            G = 1 if self.jammer_absent else channels.G
            ones_k = np.ones((K, 1))
            for e in range(cfg.E):
                for n in range(N):
                    hwn = channels.h_IE_worst[e, n] / noise
                    if self.jammer_absent:
                        cons.append(hwn * self.p[:, n::N] <= cfg.Gamma_th)
                        continue
                    for g in range(G):
                        aegn = channels.A_E[e, g, n] / noise
                        Heg = channels.H_JE[e, g, n]
                        jam = cp.hstack([cp.real(cp.trace(Heg @ self.Z[i * N + n]))
                                         for i in range(NF)])
                        rhs = cp.reshape(cfg.Gamma_th * (aegn * jam + 1.0), (1, NF),
                                         order="C")
                        cons.append(hwn * self.p[:, n::N] <= ones_k @ rhs)

        comm_power = cfg.zeta_I * cp.sum(self.pt)
        const_power = float(np.sum(self.flight_I) + N * cfg.P_C_I)
        if trZ_slot is not None:
            comm_power = comm_power + cfg.zeta_J * cp.sum(trZ_slot)
            const_power += float(np.sum(self.flight_J) + N * cfg.P_C_J)
        self._const_power = const_power
        self.denominator = comm_power + const_power
        self.numerator = cp.sum(self.rate_lb) - chi * cp.sum(penalty)
        self.problem = cp.Problem(
            cp.Maximize(self.numerator - self.q * self.denominator), cons)

        # mutable coefficient mirrors for fast numpy evaluation
        self._c0 = np.zeros((K, M))
        self._cA = np.zeros((K, M))
        self._cy = np.zeros((K, M))
        self._pen_lin = np.ones((K, M))
        self._pen_const = np.zeros((K, M))
        self.rmin.value = cfg.R_min * RATE_SCALE
        self.alpha_lo.value = np.zeros((K, M))
        self.alpha_hi.value = np.ones((K, M))
        if self.zcap is not None:
            self.zcap.value = np.full(M, cfg.P_peak_J)

    # -- parameter updates ----------------------------------------------------

    def set_expansion(self, point: Sp1ExpansionPoint) -> None:
        cfg, channels = self.cfg, self.channels
        K, M, N = self.K, self.M, self.N
        noise, Ws = self._noise, self._Ws
        ln2 = math.log(2.0)
        alpha_j = np.clip(point.alpha.reshape(K, M), ALPHA_POINT_MIN, 1.0)
        c0 = np.zeros((K, M))
        cA = np.zeros((K, M))
        cy = np.zeros((K, M))
        for k in range(K):
            for m in range(M):
                i, n = divmod(m, N)
                aj = alpha_j[k, m]
                if self.jammer_absent:
                    yj = 0.0
                else:
                    Heff = channels.A_U[k, n] * channels.H_JU[k, n]
                    yj = max(0.0, float(np.real(np.trace(Heff @ point.Z_tilde[k, i, n])))) \
                        / noise
                # the common W*alpha*log2(noise) offset cancels between the two
                # logs, so only the normalized part is expanded
                val = Ws * aj * math.log2(1.0 + yj / aj)
                gA = Ws * (math.log2(1.0 + yj / aj) - yj / ((aj + yj) * ln2))
                gy = Ws * aj / ((aj + yj) * ln2)
                c0[k, m] = val - gA * aj - gy * yj
                cA[k, m] = gA
                cy[k, m] = gy
        self._c0, self._cA, self._cy = c0, cA, cy
        self._pen_lin = 1.0 - 2.0 * alpha_j
        self._pen_const = alpha_j ** 2
        self.c0.value = c0
        self.cA.value = cA
        self.cy.value = cy
        self.pen_lin.value = self._pen_lin
        self.pen_const.value = self._pen_const

    def set_alpha_bounds(self, lo: np.ndarray, hi: np.ndarray) -> None:
        self.alpha_lo.value = np.asarray(lo, dtype=float).reshape(self.K, self.M)
        self.alpha_hi.value = np.asarray(hi, dtype=float).reshape(self.K, self.M)

    def set_an_caps(self, caps: np.ndarray) -> None:
        if self.zcap is not None:
            self.zcap.value = np.asarray(caps, dtype=float).reshape(self.M)

    # -- solution handling ------------------------------------------------------

    def _extract(self):
        K, NF, N, NJ, M = self.K, self.NF, self.N, self.NJ, self.M
        alpha = np.clip(self.alpha.value, 0.0, 1.0).reshape(K, NF, N)
        p = np.maximum(self.p.value, 0.0).reshape(K, NF, N)
        pt = np.maximum(self.pt.value, 0.0).reshape(K, NF, N)
        Z = np.zeros((NF, N, NJ, NJ), dtype=complex)
        Zt = np.zeros((K, NF, N, NJ, NJ), dtype=complex)
        if not self.jammer_absent:
            for m in range(M):
                i, n = divmod(m, N)
                Zm = self.Z[m].value
                Z[i, n] = 0.5 * (Zm + Zm.conj().T)
                for k in range(K):
                    Ztm = self.Zt[k][m].value
                    Zt[k, i, n] = 0.5 * (Ztm + Ztm.conj().T)
        return alpha, p, pt, Z, Zt

    def surrogate_value(self, alpha, pt, Z, Zt) -> tuple[float, float]:
        """(numerator, denominator) of the surrogate ratio at solution arrays."""
        cfg, channels = self.cfg, self.channels
        K, M, N = self.K, self.M, self.N
        noise = self._noise
        a = alpha.reshape(K, M)
        ptm = pt.reshape(K, M)
        y = np.zeros((K, M))
        if not self.jammer_absent:
            for k in range(K):
                for m in range(M):
                    i, n = divmod(m, N)
                    Heff = channels.A_U[k, n] * channels.H_JU[k, n]
                    y[k, m] = max(0.0, float(np.real(np.trace(Heff @ Zt[k, i, n])))) / noise
        x = self._h_over_noise * ptm + y
        signal = np.where(a > 1e-15,
                          self._Ws * a * np.log2(1.0 + x / np.maximum(a, 1e-300)), 0.0)
        d2 = self._c0 + self._cA * a + self._cy * y
        pen = self._pen_const + a * self._pen_lin
        num = float(np.sum(signal - d2) - self.chi * np.sum(pen))
        den = float(cfg.zeta_I * np.sum(ptm)) + self._const_power
        if not self.jammer_absent:
            den += cfg.zeta_J * float(np.real(np.trace(Z, axis1=-2, axis2=-1)).sum())
        return num, den

    def evaluate(self, q: float):
        """Dinkelbach oracle: argmax of numerator - q*denominator."""
        self.q.value = q
        status = conic.solve(self.problem)
        if status.infeasible:
            raise SubproblemInfeasible("allocation subproblem infeasible", q=q)
        if not status.optimal:
            raise conic.ConicSolveError(
                f"allocation subproblem not solved: status {status.status}")
        alpha, p, pt, Z, Zt = self._extract()
        num, den = self.surrogate_value(alpha, pt, Z, Zt)
        return (alpha, p, pt, Z, Zt), num, den


class Sp1FrozenProgram:
    """Power/AN re-solve with the schedule frozen to a binary assignment.

    With alpha constant the big-M couplings collapse (p~ = p and Z~ = Z on
    scheduled pairs, zero elsewhere), the perspective in the rate reduces to a
    plain log, and subcarriers with no scheduled user carry no AN beam, so
    their covariances are structurally zero rather than solver dust.
    """

    def __init__(self, cfg: ScenarioConfig, channels: ChannelSet,
                 flight_I: np.ndarray, flight_J: np.ndarray | None,
                 alpha_bin: np.ndarray):
        self.cfg = cfg
        self.channels = channels
        self.alpha_bin = alpha_bin
        self.jammer_absent = flight_J is None
        K, NF, N = cfg.K, cfg.N_F, cfg.N
        NJ = cfg.array.N_J
        noise = cfg.noise_floor
        self._noise = noise
        self._Ws = cfg.W * RATE_SCALE
        self.flight_I = flight_I
        self.flight_J = flight_J if flight_J is not None else np.zeros(N)

        # active (k, i, n) pairs and the subcarrier-slots they occupy
        self.active = [(k, i, n) for k in range(K) for i in range(NF)
                       for n in range(N) if alpha_bin[k, i, n] > 0.5]
        self.active_ms = sorted({(i, n) for _, i, n in self.active})
        self._m_index = {mn: j for j, mn in enumerate(self.active_ms)}
        A = len(self.active)
        B = len(self.active_ms)
        self.A, self.B = A, B

        self.pt = cp.Variable(A, nonneg=True, name="pt") if A else None
        if self.jammer_absent or B == 0:
            self.Z = None
            self.zcap = None
        else:
            self.Z = [cp.Variable((NJ, NJ), hermitian=True) for _ in range(B)]
            self.zcap = cp.Parameter(B, nonneg=True, name="zcap")
        self.q = cp.Parameter(name="q")
        self.c0 = cp.Parameter(A, name="c0") if A else None
        self.cy = cp.Parameter(A, name="cy") if A else None
        self.rmin = cp.Parameter(nonneg=True, name="rmin")

        cons = []
        rate_terms = None
        y = None
        if A:
            hn = np.array([channels.h_IU[k, n] / noise for k, _, n in self.active])
            if self.Z is not None:
                y = cp.hstack([
                    cp.real(cp.trace(
                        (channels.A_U[k, n] * channels.H_JU[k, n] / noise)
                        @ self.Z[self._m_index[(i, n)]]))
                    for k, i, n in self.active])
            else:
                y = np.zeros(A)
            x = cp.multiply(hn, self.pt) + y
            signal = (self._Ws / math.log(2.0)) * cp.log1p(x)
            d2_ub = self.c0 + (cp.multiply(self.cy, y) if self.Z is not None else 0.0)
            rate_terms = signal - d2_ub
        self.rate_terms = rate_terms

        if self.Z is not None:
            trZ = cp.hstack([cp.real(cp.trace(Zb)) for Zb in self.Z])
            for Zb in self.Z:
                cons.append(Zb >> 0)
            cons.append(trZ <= self.zcap)
            trZ_slot = []
            for n in range(N):
                idx = [j for j, (i2, n2) in enumerate(self.active_ms) if n2 == n]
                trZ_slot.append(cp.sum(trZ[idx]) if idx else cp.Constant(0.0))
            trZ_slot = cp.hstack(trZ_slot)
            cons.append(trZ_slot <= cfg.P_peak_J)
            cons.append(cfg.zeta_J * trZ_slot + cfg.P_C_J + self.flight_J
                        <= cfg.P_max_J)
        else:
            trZ_slot = np.zeros(N)

        if A:
            pt_slot = []
            for n in range(N):
                idx = [a for a, (k, i, n2) in enumerate(self.active) if n2 == n]
                pt_slot.append(cp.sum(self.pt[idx]) if idx else cp.Constant(0.0))
            pt_slot = cp.hstack(pt_slot)
            cons.append(pt_slot <= cfg.P_peak_I)
            cons.append(cfg.zeta_I * pt_slot + cfg.P_C_I + self.flight_I
                        <= cfg.P_max_I)
            for k in range(K):
                idx = [a for a, (k2, _, _) in enumerate(self.active) if k2 == k]
                expr = cp.sum(rate_terms[idx]) / N if idx else cp.Constant(0.0)
                cons.append(expr >= self.rmin)
            if not math.isinf(cfg.Gamma_th):
                G = 1 if self.Z is None else channels.G
                for a, (k, i, n) in enumerate(self.active):
                    for e in range(cfg.E):
                        hwn = channels.h_IE_worst[e, n] / noise
                        if self.Z is None:
                            cons.append(hwn * self.pt[a] <= cfg.Gamma_th)
                            continue
                        Zb = self.Z[self._m_index[(i, n)]]
                        for g in range(G):
                            aegn = channels.A_E[e, g, n] / noise
                            jam = cp.real(cp.trace(channels.H_JE[e, g, n] @ Zb))
                            cons.append(hwn * self.pt[a]
                                        <= cfg.Gamma_th * (aegn * jam + 1.0))

        comm = (cfg.zeta_I * cp.sum(self.pt) if A else 0.0)
        const_power = float(np.sum(self.flight_I) + N * cfg.P_C_I)
        if not self.jammer_absent:
            comm = comm + cfg.zeta_J * cp.sum(trZ_slot)
            const_power += float(np.sum(self.flight_J) + N * cfg.P_C_J)
        self._const_power = const_power
        self._trivial = (self.pt is None and self.Z is None)
        if not self._trivial:
            numerator = cp.sum(rate_terms) if A else cp.Constant(0.0)
            self.problem = cp.Problem(
                cp.Maximize(numerator - self.q * (comm + const_power)), cons)
        else:
            self.problem = None

        self._c0 = np.zeros(A)
        self._cy = np.zeros(A)
        self.rmin.value = cfg.R_min * RATE_SCALE
        if self.zcap is not None:
            self.zcap.value = np.full(B, cfg.P_peak_J)

    def set_expansion(self, Z_point: np.ndarray) -> None:
        """Linearize the interference log around fixed covariances (i, n)."""
        if not self.A:
            return
        cfg, channels = self.cfg, self.channels
        noise, Ws = self._noise, self._Ws
        ln2 = math.log(2.0)
        c0 = np.zeros(self.A)
        cy = np.zeros(self.A)
        for a, (k, i, n) in enumerate(self.active):
            if self.Z is None:
                yj = 0.0
            else:
                Heff = channels.A_U[k, n] * channels.H_JU[k, n]
                yj = max(0.0, float(np.real(np.trace(Heff @ Z_point[i, n])))) / noise
            gy = Ws / ((1.0 + yj) * ln2)
            c0[a] = Ws * math.log2(1.0 + yj) - gy * yj
            cy[a] = gy
        self._c0, self._cy = c0, cy
        self.c0.value = c0
        self.cy.value = cy

    def set_an_caps(self, caps: np.ndarray) -> None:
        if self.zcap is not None:
            self.zcap.value = caps

    def _extract(self):
        cfg = self.cfg
        K, NF, N, NJ = cfg.K, cfg.N_F, cfg.N, cfg.array.N_J
        pt = np.zeros((K, NF, N))
        if self.A:
            vals = np.maximum(self.pt.value, 0.0)
            for a, (k, i, n) in enumerate(self.active):
                pt[k, i, n] = vals[a]
        Z = np.zeros((NF, N, NJ, NJ), dtype=complex)
        if self.Z is not None:
            for (i, n), j in self._m_index.items():
                Zb = self.Z[j].value
                Z[i, n] = 0.5 * (Zb + Zb.conj().T)
        return pt, Z

    def surrogate_value(self, pt, Z) -> tuple[float, float]:
        cfg, channels = self.cfg, self.channels
        noise = self._noise
        num = 0.0
        if self.A:
            for a, (k, i, n) in enumerate(self.active):
                if self.Z is None:
                    yv = 0.0
                else:
                    Heff = channels.A_U[k, n] * channels.H_JU[k, n]
                    yv = max(0.0, float(np.real(np.trace(Heff @ Z[i, n])))) / noise
                xv = channels.h_IU[k, n] / noise * pt[k, i, n] + yv
                num += self._Ws * math.log2(1.0 + xv) - (self._c0[a] + self._cy[a] * yv)
        den = float(cfg.zeta_I * np.sum(pt)) + self._const_power
        if not self.jammer_absent:
            den += cfg.zeta_J * float(np.real(np.trace(Z, axis1=-2, axis2=-1)).sum())
        return num, den

    def evaluate(self, q: float):
        if self._trivial:
            pt, Z = self._extract_trivial()
            num, den = self.surrogate_value(pt, Z)
            return (pt, Z), num, den
        self.q.value = q
        status = conic.solve(self.problem)
        if status.infeasible:
            raise SubproblemInfeasible("frozen allocation subproblem infeasible", q=q)
        if not status.optimal:
            raise conic.ConicSolveError(
                f"frozen allocation subproblem not solved: status {status.status}")
        pt, Z = self._extract()
        num, den = self.surrogate_value(pt, Z)
        return (pt, Z), num, den

    def _extract_trivial(self):
        cfg = self.cfg
        return (np.zeros((cfg.K, cfg.N_F, cfg.N)),
                np.zeros((cfg.N_F, cfg.N, cfg.array.N_J, cfg.array.N_J),
                         dtype=complex))


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def default_expansion_point(cfg: ScenarioConfig) -> Sp1ExpansionPoint:
    K, NF, N, NJ = cfg.K, cfg.N_F, cfg.N, cfg.array.N_J
    alpha = np.full((K, NF, N), 1.0 / K)
    scale = cfg.P_peak_J / (2.0 * NF * NJ * K)
    Zt = np.tile(scale * np.eye(NJ, dtype=complex), (K, NF, N, 1, 1))
    return Sp1ExpansionPoint(alpha=alpha, Z_tilde=Zt)


def expansion_from_alloc(alloc: AllocationState) -> Sp1ExpansionPoint:
    return Sp1ExpansionPoint(alpha=np.clip(alloc.alpha, ALPHA_POINT_MIN, 1.0),
                             Z_tilde=alloc.Z_tilde.copy())


def round_schedule(alpha: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Threshold, then keep only the strongest user per (subcarrier, slot)."""
    out = (np.asarray(alpha) >= threshold).astype(float)
    K, NF, N = out.shape
    for i in range(NF):
        for n in range(N):
            if out[:, i, n].sum() > 1:
                keep = int(np.argmax(alpha[:, i, n]))
                out[:, i, n] = 0.0
                out[keep, i, n] = 1.0
    return out


def strongest_user_schedule(alpha: np.ndarray) -> np.ndarray:
    """Fallback rounding: assign every (subcarrier, slot) to its strongest user."""
    out = np.zeros_like(alpha)
    K, NF, N = alpha.shape
    for i in range(NF):
        for n in range(N):
            out[int(np.argmax(alpha[:, i, n])), i, n] = 1.0
    return out


def _diagnose_infeasibility(prog: Sp1Program) -> list[str]:
    """Attribute infeasibility to a constraint family by relaxing the rate floor."""
    saved = prog.rmin.value
    prog.rmin.value = 0.0
    try:
        prog.evaluate(0.0)
        violated = ["min_user_rate"]
    except (SubproblemInfeasible, conic.ConicSolveError):
        violated = ["leakage_sinr", "power_budget_info", "power_budget_jammer"]
    finally:
        prog.rmin.value = saved
    return violated


def solve_sp1(cfg: ScenarioConfig, info_traj: Trajectory,
              jammer_traj: Trajectory | None, params: Sp1Params | None = None,
              warm_start: AllocationState | None = None,
              channels: ChannelSet | None = None) -> Sp1Result:
    params = params or Sp1Params()
    if channels is None:
        channels = build_channels(cfg, info_traj, jammer_traj, G=params.G)
    chi = params.chi if params.chi is not None else default_chi(cfg)
    jam_speeds = None if jammer_traj is None else jammer_traj.speeds()
    prog = Sp1Program(cfg, channels, info_traj.speeds(), jam_speeds, params, chi)

    point = expansion_from_alloc(warm_start) if warm_start is not None \
        else default_expansion_point(cfg)
    sca_trace: list[dict] = []
    q_prev = None
    best = None
    for it in range(params.max_sca):
        prog.set_expansion(point)
        try:
            res = maximize_ratio(prog.evaluate, q0=0.0, eps=params.eps_dinkelbach,
                                 max_iters=params.max_dinkelbach)
        except SubproblemInfeasible as exc:
            if best is None:
                violated = _diagnose_infeasibility(prog)
                raise AllocationInfeasible(
                    f"no feasible allocation (failing ratio q={exc.q:.3g}); "
                    f"suspected constraints: {violated}", violated) from exc
            break
        sca_trace.append(_trace_entry("relaxed", res))
        best = res
        alpha, p, pt, Z, Zt = res.x_best
        point = Sp1ExpansionPoint(alpha=np.clip(alpha, ALPHA_POINT_MIN, 1.0), Z_tilde=Zt)
        if q_prev is not None and abs(res.q_final - q_prev) <= params.eps_sca * max(
                abs(q_prev), 1e-12):
            break
        q_prev = res.q_final

    alloc, q_eng, polish_trace = _round_and_polish(prog, cfg, params,
                                                   best.x_best[0], point)
    sca_trace.extend(polish_trace)
    ee = energy_efficiency(alloc, info_traj, jammer_traj, cfg)
    return Sp1Result(alloc=alloc, q_engine=q_eng, ee=ee, sca_trace=sca_trace)


def _trace_entry(phase: str, res) -> dict:
    return {"phase": phase, "q": res.q_final, "residual": res.residual,
            "denominator": res.denominator, "dinkelbach_iters": res.iterations,
            "converged": res.converged}


def _round_and_polish(prog: Sp1Program, cfg: ScenarioConfig, params: Sp1Params,
                      alpha_rel: np.ndarray, point: Sp1ExpansionPoint):
    trace: list[dict] = []
    schedules = [round_schedule(alpha_rel, params.round_threshold),
                 strongest_user_schedule(alpha_rel)]
    last_exc = None
    for attempt, alpha_bin in enumerate(schedules):
        if attempt == 1 and np.array_equal(schedules[0], schedules[1]):
            break
        frozen = Sp1FrozenProgram(cfg, prog.channels, prog.flight_I,
                                  None if prog.jammer_absent else prog.flight_J,
                                  alpha_bin)
        # seed the linearization with the relaxed solution's covariances
        Z_point = _point_Z_from_expansion(cfg, point, alpha_bin)
        try:
            res = None
            for _ in range(max(1, params.freeze_sca)):
                frozen.set_expansion(Z_point)
                res = maximize_ratio(frozen.evaluate, q0=0.0,
                                     eps=params.eps_dinkelbach,
                                     max_iters=params.max_dinkelbach)
                _, Z_point = res.x_best
                trace.append(_trace_entry("frozen", res))
            res = _switch_off_idle_beams(frozen, cfg, params, res, trace)
        except SubproblemInfeasible as exc:
            last_exc = exc
            continue
        pt, Z = res.x_best
        alloc = _finalize(cfg, alpha_bin, pt, Z)
        return alloc, res.q_final, trace
    raise AllocationInfeasible(
        "rounded schedule infeasible even with strongest-user repair",
        ["alpha_binary"]) from last_exc


def _point_Z_from_expansion(cfg: ScenarioConfig, point: Sp1ExpansionPoint,
                            alpha_bin: np.ndarray) -> np.ndarray:
    """Per-(i, n) covariance point implied by the gated covariances."""
    NF, N, NJ = cfg.N_F, cfg.N, cfg.array.N_J
    Z = np.zeros((NF, N, NJ, NJ), dtype=complex)
    for i in range(NF):
        for n in range(N):
            ks = np.where(alpha_bin[:, i, n] > 0.5)[0]
            if ks.size:
                Z[i, n] = point.Z_tilde[ks[0], i, n]
    return Z


def _switch_off_idle_beams(frozen: Sp1FrozenProgram, cfg: ScenarioConfig,
                           params: Sp1Params, res, trace: list):
    """Zero numerically idle AN beams (dust from interior-point solves) and
    re-solve; keep the previous solution if switching off loses objective."""
    if frozen.Z is None:
        return res
    pt, Z = res.x_best
    caps = np.array([max(0.0, np.real(np.trace(Z[i, n])))
                     for (i, n) in frozen.active_ms])
    idle = caps < params.an_zero_trace
    if not idle.any():
        return res
    frozen.set_an_caps(np.where(idle, 0.0, cfg.P_peak_J))
    frozen.set_expansion(Z)
    try:
        res2 = maximize_ratio(frozen.evaluate, q0=0.0, eps=params.eps_dinkelbach,
                              max_iters=params.max_dinkelbach)
    except SubproblemInfeasible:
        frozen.set_an_caps(np.full(frozen.B, cfg.P_peak_J))
        return res
    if res2.q_final >= res.q_final - abs(res.q_final) * 1e-6:
        trace.append(_trace_entry("polish", res2))
        return res2
    frozen.set_an_caps(np.full(frozen.B, cfg.P_peak_J))
    return res


def _finalize(cfg: ScenarioConfig, alpha_bin: np.ndarray, pt: np.ndarray,
              Z: np.ndarray) -> AllocationState:
    """Exact big-M consistency: p = p~ on scheduled pairs, Z~ = alpha Z."""
    p = np.where(alpha_bin > 0.5, pt, 0.0)
    pt_exact = alpha_bin * p
    Zc = Z.copy()
    for i in range(cfg.N_F):
        for n in range(cfg.N):
            Zi = 0.5 * (Zc[i, n] + Zc[i, n].conj().T)
            w, V = np.linalg.eigh(Zi)
            if w.size and w[0] < 0:
                Zi = (V * np.maximum(w, 0.0)) @ V.conj().T
            Zc[i, n] = Zi
    Zt = alpha_bin[..., None, None] * Zc[None, ...]
    return AllocationState(alpha=alpha_bin, p=p, p_tilde=pt_exact, Z=Zc, Z_tilde=Zt)
