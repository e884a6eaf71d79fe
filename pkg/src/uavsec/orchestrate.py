"""Alternating optimization, baseline schemes, sweeps, and result export.

One outer round solves the allocation at the current path, then the path at
the current allocation; a candidate update is only accepted if it does not
decrease the true energy efficiency, so the reported trace is nondecreasing by
construction while every value is measured by the independent metrics layer.
"""

from __future__ import annotations

import copy
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics
from .allocation import AllocationInfeasible, Sp1Params, solve_sp1
from .channel import build_channels
from .metrics import AllocationState, AuditResult, audit, energy_efficiency
from .scenario import (ArrayParams, Eavesdropper, ScenarioConfig, Trajectory,
                       initial_info_trajectory, materialize_jammer_plan)
from .trajopt import Sp2Params, TrajectoryInfeasible, solve_sp2

SCHEMES = ("PA", "NJ", "SAJ", "ZAI", "SLI", "PERFECT_CSI")


@dataclass
class RunParams:
    eps_outer: float = 1e-3      # relative EE change that stops the alternation
    max_outer: int = 5
    sp1: Sp1Params = field(default_factory=Sp1Params)
    sp2: Sp2Params = field(default_factory=Sp2Params)
    audit_samples: int = 10_000
    seed: int = 0


@dataclass
class RunSpec:
    scheme: str = "PA"
    sweep_param: str | None = None   # one of P_peak_I, Q_e, N_J, K, T
    sweep_values: list = field(default_factory=list)
    params: RunParams = field(default_factory=RunParams)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")


@dataclass
class SolveReport:
    scheme: str
    ee_trace: list[float]                 # true EE (bit/J) after each outer round
    converged: bool
    outer_iterations: int
    alloc: AllocationState | None
    info_traj: Trajectory | None
    jammer_traj: Trajectory | None
    audit: AuditResult | None
    sp1_traces: list = field(default_factory=list)
    sp2_traces: list = field(default_factory=list)
    wall_times: dict = field(default_factory=dict)
    complexity: dict = field(default_factory=dict)
    status: str = "ok"
    infeasible_phase: str | None = None
    secrecy_rate_floor: float = 0.0
    seed: int = 0

    @property
    def ee(self) -> float:
        return self.ee_trace[-1] if self.ee_trace else float("nan")


def complexity_terms(cfg: ScenarioConfig) -> dict:
    """Interior-point cost drivers of the two subproblems (reported, not asserted)."""
    N, K, NF, NJ, E = cfg.N, cfg.K, cfg.N_F, cfg.array.N_J, cfg.E
    m1 = 10 * N * K * NF + N * K * E * NF + 2 * N * NF + 4 * N + K
    n1 = 3 * N * K * NF + NJ ** 2 * N * NF + NJ ** 2 * N * K * NF
    m2 = 9 * N + N * K + K
    n2 = 4 * N + N * K
    return {"M1": m1, "N1": n1, "M2": m2, "N2": n2}


def _apply_scheme(cfg: ScenarioConfig, scheme: str) -> ScenarioConfig:
    if scheme == "SAJ":
        arr = cfg.array
        return cfg.replace(array=ArrayParams(N_Jx=1, N_Jy=1, delta_J=arr.delta_J,
                                             lambda_c=arr.lambda_c))
    if scheme == "PERFECT_CSI":
        eves = [Eavesdropper(est_position=e.est_position, radius=0.0)
                for e in cfg.eavesdroppers]
        return cfg.replace(eavesdroppers=eves)
    return cfg


def alternate_optimize(cfg: ScenarioConfig, params: RunParams | None = None,
                       scheme: str = "PA") -> SolveReport:
    """Alternate allocation and trajectory solves until the EE settles."""
    params = params or RunParams()
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    cfg = _apply_scheme(cfg, scheme)
    jammer_absent = scheme == "NJ"
    freeze_path = scheme == "SLI"
    sp2_params = copy.deepcopy(params.sp2)
    if scheme == "ZAI":
        sp2_params.zero_accel = True

    t_start = time.perf_counter()
    jammer_traj = None if jammer_absent else materialize_jammer_plan(cfg).trajectory
    info_traj = initial_info_trajectory(cfg)
    alloc: AllocationState | None = None
    ee_prev = 0.0
    ee_trace: list[float] = []
    sp1_traces, sp2_traces = [], []
    wall = {"sp1": 0.0, "sp2": 0.0}
    converged = False
    status, infeasible_phase = "ok", None

    for outer in range(params.max_outer):
        t0 = time.perf_counter()
        try:
            res1 = solve_sp1(cfg, info_traj, jammer_traj, params.sp1, warm_start=alloc)
        except AllocationInfeasible as exc:
            status, infeasible_phase = "infeasible", "allocation"
            if alloc is None:
                return _report(scheme, cfg, ee_trace, converged, outer, None,
                               info_traj, jammer_traj, None, sp1_traces, sp2_traces,
                               wall, status, infeasible_phase, params, t_start)
            break
        wall["sp1"] += time.perf_counter() - t0
        sp1_traces.append(res1.sca_trace)
        if alloc is None or res1.ee >= ee_prev * (1 - 1e-12):
            alloc = res1.alloc
            ee_cur = res1.ee
        else:
            ee_cur = ee_prev  # keep the incumbent allocation

        if not freeze_path:
            t0 = time.perf_counter()
            try:
                res2 = solve_sp2(cfg, alloc, jammer_traj, sp2_params,
                                 warm_start=info_traj)
            except TrajectoryInfeasible:
                status, infeasible_phase = "infeasible", "trajectory"
                break
            wall["sp2"] += time.perf_counter() - t0
            sp2_traces.append(res2.sca_trace)
            if res2.ee >= ee_cur * (1 - 1e-12):
                info_traj = res2.trajectory
                ee_cur = res2.ee

        ee_trace.append(ee_cur)
        rel = abs(ee_cur - ee_prev) / ee_prev if ee_prev > 0 else (
            0.0 if ee_cur == ee_prev else math.inf)
        if rel <= params.eps_outer:
            converged = True
            ee_prev = ee_cur
            break
        ee_prev = ee_cur

    return _report(scheme, cfg, ee_trace, converged, len(ee_trace), alloc,
                   info_traj, jammer_traj, None, sp1_traces, sp2_traces, wall,
                   status, infeasible_phase, params, t_start)


def _report(scheme, cfg, ee_trace, converged, outer, alloc, info_traj, jammer_traj,
            _audit, sp1_traces, sp2_traces, wall, status, infeasible_phase,
            params, t_start) -> SolveReport:
    audit_res = None
    if alloc is not None:
        audit_res = audit(alloc, info_traj, jammer_traj, cfg,
                          samples_per_eve=params.audit_samples, seed=params.seed)
        if status == "ok" and not audit_res.passed:
            status = "infeasible-at-audit"
    wall = dict(wall, total=time.perf_counter() - t_start)
    return SolveReport(scheme=scheme, ee_trace=ee_trace, converged=converged,
                       outer_iterations=outer, alloc=alloc, info_traj=info_traj,
                       jammer_traj=jammer_traj, audit=audit_res,
                       sp1_traces=sp1_traces, sp2_traces=sp2_traces,
                       wall_times=wall, complexity=complexity_terms(cfg),
                       status=status, infeasible_phase=infeasible_phase,
                       secrecy_rate_floor=metrics.secrecy_rate_floor(cfg),
                       seed=params.seed)


def run_baseline(cfg: ScenarioConfig, spec: RunSpec) -> SolveReport:
    """Solve one scheme; sweeps are handled by run_sweep."""
    return alternate_optimize(cfg, spec.params, scheme=spec.scheme)


def sweep_configs(cfg: ScenarioConfig, param: str, values) -> list[ScenarioConfig]:
    out = []
    for val in values:
        if param == "P_peak_I":
            out.append(cfg.replace(P_peak_I=float(val)))
        elif param == "Q_e":
            # convention: sweep the last eavesdropper's uncertainty radius
            eves = list(cfg.eavesdroppers)
            eves[-1] = Eavesdropper(est_position=eves[-1].est_position,
                                    radius=float(val))
            out.append(cfg.replace(eavesdroppers=eves))
        elif param == "N_J":
            side = int(round(math.sqrt(float(val))))
            if side * side != int(val):
                raise ValueError("N_J sweep values must be perfect squares")
            arr = cfg.array
            out.append(cfg.replace(array=ArrayParams(N_Jx=side, N_Jy=side,
                                                     delta_J=arr.delta_J,
                                                     lambda_c=arr.lambda_c)))
        elif param == "T":
            n_slots = int(round(float(val) / cfg.tau))
            out.append(cfg.replace(N=n_slots))
        else:
            raise ValueError(f"unsupported sweep parameter {param!r}")
    return out


def run_sweep(cfg: ScenarioConfig, spec: RunSpec) -> list[SolveReport]:
    reports = []
    for sub_cfg in sweep_configs(cfg, spec.sweep_param, spec.sweep_values):
        reports.append(alternate_optimize(sub_cfg, spec.params, scheme=spec.scheme))
    return reports


# ---------------------------------------------------------------------------
# export (all files deterministic for a fixed config and seed)
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def export_results(report: SolveReport, outdir) -> list[Path]:
    """Write trajectory, allocation, EE-trace, audit, and summary files.

    trajectory.csv: one row per slot with both UAVs' positions and velocities
    (jammer columns are nan when no jammer flies).  allocation.csv: one row
    per (slot, subcarrier, user).  Timing data is deliberately excluded so
    identical runs export identical bytes.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []

    traj_path = outdir / "trajectory.csv"
    lines = ["n,tI_x,tI_y,vI_x,vI_y,tJ_x,tJ_y,vJ_x,vJ_y"]
    ti, vi = report.info_traj.positions, report.info_traj.velocities
    for n in range(ti.shape[0]):
        if report.jammer_traj is not None:
            tj, vj = report.jammer_traj.positions[n], report.jammer_traj.velocities[n]
        else:
            tj = vj = (float("nan"), float("nan"))
        lines.append(",".join([str(n)] + [_fmt(x) for x in
                                          (*ti[n], *vi[n], *tj, *vj)]))
    traj_path.write_text("\n".join(lines) + "\n")
    paths.append(traj_path)

    alloc_path = outdir / "allocation.csv"
    lines = ["n,i,k,alpha,p,trZ"]
    if report.alloc is not None:
        K, NF, N = report.alloc.alpha.shape
        trz = report.alloc.an_traces()
        for n in range(N):
            for i in range(NF):
                for k in range(K):
                    lines.append(",".join([str(n), str(i), str(k),
                                           _fmt(report.alloc.alpha[k, i, n]),
                                           _fmt(report.alloc.p[k, i, n]),
                                           _fmt(trz[i, n])]))
    alloc_path.write_text("\n".join(lines) + "\n")
    paths.append(alloc_path)

    trace_path = outdir / "ee_trace.csv"
    lines = ["iteration,ee_bits_per_joule"]
    for idx, val in enumerate(report.ee_trace):
        lines.append(f"{idx},{_fmt(val)}")
    trace_path.write_text("\n".join(lines) + "\n")
    paths.append(trace_path)

    audit_path = outdir / "audit.json"
    audit_path.write_text(report.audit.to_json() if report.audit is not None
                          else json.dumps({"passed": None}))
    paths.append(audit_path)

    summary_path = outdir / "summary.json"
    summary = {
        "scheme": report.scheme,
        "status": report.status,
        "converged": report.converged,
        "outer_iterations": report.outer_iterations,
        "ee_bits_per_joule": report.ee,
        "ee_trace": report.ee_trace,
        "audit_passed": None if report.audit is None else report.audit.passed,
        "infeasible_phase": report.infeasible_phase,
        "complexity": report.complexity,
        "secrecy_rate_floor_bits_per_s": report.secrecy_rate_floor,
        "seed": report.seed,
    }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    paths.append(summary_path)

    # full AN covariances so an exported run can be re-audited faithfully
    an_path = outdir / "an_covariances.json"
    if report.alloc is not None:
        NF, N = report.alloc.Z.shape[:2]
        an = {"N_F": NF, "N": N, "N_J": report.alloc.Z.shape[-1],
              "Z_real": [[[[float(x) for x in row] for row in report.alloc.Z[i, n].real]
                          for n in range(N)] for i in range(NF)],
              "Z_imag": [[[[float(x) for x in row] for row in report.alloc.Z[i, n].imag]
                          for n in range(N)] for i in range(NF)]}
    else:
        an = {}
    an_path.write_text(json.dumps(an, sort_keys=True))
    paths.append(an_path)
    return paths


def load_solution(outdir, cfg: ScenarioConfig):
    """Rebuild (alloc, info_traj, jammer_traj) from an export directory."""
    outdir = Path(outdir)
    rows = (outdir / "trajectory.csv").read_text().strip().splitlines()[1:]
    if len(rows) != cfg.N:
        raise ValueError(f"trajectory.csv has {len(rows)} rows, expected N={cfg.N}")
    ti = np.zeros((cfg.N, 2))
    vi = np.zeros((cfg.N, 2))
    tj = np.zeros((cfg.N, 2))
    vj = np.zeros((cfg.N, 2))
    for row in rows:
        vals = row.split(",")
        n = int(vals[0])
        ti[n] = [float(vals[1]), float(vals[2])]
        vi[n] = [float(vals[3]), float(vals[4])]
        tj[n] = [float(vals[5]), float(vals[6])]
        vj[n] = [float(vals[7]), float(vals[8])]
    info_traj = Trajectory(positions=ti, velocities=vi)
    jammer_traj = None if np.isnan(tj).any() else Trajectory(positions=tj, velocities=vj)

    alloc = AllocationState.zeros(cfg.K, cfg.N_F, cfg.N, cfg.array.N_J)
    for row in (outdir / "allocation.csv").read_text().strip().splitlines()[1:]:
        vals = row.split(",")
        n, i, k = int(vals[0]), int(vals[1]), int(vals[2])
        alloc.alpha[k, i, n] = float(vals[3])
        alloc.p[k, i, n] = float(vals[4])
    an = json.loads((outdir / "an_covariances.json").read_text())
    if an:
        zr = np.asarray(an["Z_real"], dtype=float)
        zi = np.asarray(an["Z_imag"], dtype=float)
        alloc.Z = np.transpose(zr + 1j * zi, (0, 1, 2, 3)).reshape(
            cfg.N_F, cfg.N, cfg.array.N_J, cfg.array.N_J)
    alloc.p_tilde = alloc.alpha * alloc.p
    alloc.Z_tilde = alloc.alpha[..., None, None] * alloc.Z[None, ...]
    return alloc, info_traj, jammer_traj
