"""Mission scenarios: ground nodes, UAV limits, jammer orbits, and the initial path.

A scenario is a single YAML file with SI units throughout.  Loading validates
every invariant and returns an immutable :class:`ScenarioConfig`; the jammer
orbit and the straight initial path of the information UAV are materialized
from it on demand.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

KINEMATIC_TOL = 1e-9  # meters; positions[n+1]-positions[n]-v[n]*tau must vanish to this

JAMMER_KINDS = ("CSA", "CEA", "SFE", "CA")


class ScenarioError(ValueError):
    """Raised when a scenario file is malformed or violates an invariant."""


def _vec2(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (2,) or not np.all(np.isfinite(v)):
        raise ScenarioError(f"{name} must be a finite 2-vector, got {x!r}")
    return v


@dataclass(frozen=True)
class GroundUser:
    position: np.ndarray  # horizontal location, m

    def __post_init__(self):
        object.__setattr__(self, "position", _vec2(self.position, "user position"))


@dataclass(frozen=True)
class Eavesdropper:
    est_position: np.ndarray  # estimated horizontal location, m
    radius: float             # uncertainty disk radius, m

    def __post_init__(self):
        object.__setattr__(self, "est_position",
                           _vec2(self.est_position, "eavesdropper est_position"))
        if self.radius < 0:
            raise ScenarioError("eavesdropper radius must be >= 0")


@dataclass(frozen=True)
class ArrayParams:
    N_Jx: int
    N_Jy: int
    delta_J: float   # element spacing, m
    lambda_c: float  # carrier wavelength, m

    def __post_init__(self):
        if self.N_Jx < 1 or self.N_Jy < 1:
            raise ScenarioError("antenna counts N_Jx, N_Jy must be >= 1")
        if self.delta_J <= 0:
            raise ScenarioError("delta_J must be positive")
        if self.lambda_c <= 0:
            raise ScenarioError("lambda_c must be positive")

    @property
    def N_J(self) -> int:
        return self.N_Jx * self.N_Jy


@dataclass(frozen=True)
class FlightPowerParams:
    Omega: float  # blade angular velocity, rad/s
    r: float      # rotor radius, m
    rho: float    # air density, kg/m^3
    s: float      # rotor solidity
    A_r: float    # rotor disc area, m^2
    P_o: float    # blade profile power at hover, W
    P_i: float    # induced power at hover, W
    v0: float     # mean rotor induced velocity, m/s
    d0: float     # fuselage drag ratio

    def __post_init__(self):
        for name in ("Omega", "r", "rho", "s", "A_r", "P_o", "P_i", "v0", "d0"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"flight parameter {name} must be positive")


@dataclass
class Trajectory:
    """Per-slot horizontal positions (N,2) and velocities (N,2) of one UAV.

    positions[n+1] - positions[n] == velocities[n]*tau holds exactly for
    n = 0..N-2; velocities[N-1] only enters flight power and rate limits.
    """

    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ScenarioError("trajectory positions must have shape (N, 2)")
        if self.velocities.shape != self.positions.shape:
            raise ScenarioError("trajectory velocities must match positions shape")

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    def speeds(self) -> np.ndarray:
        return np.linalg.norm(self.velocities, axis=1)

    def kinematic_residual(self, tau: float) -> float:
        """Max |positions[n+1] - positions[n] - v[n]*tau| over n, in meters."""
        if self.N < 2:
            return 0.0
        gap = self.positions[1:] - self.positions[:-1] - self.velocities[:-1] * tau
        return float(np.abs(gap).max())

    def validate(self, tau: float, V_max: float | None = None,
                 V_acc: float | None = None) -> None:
        res = self.kinematic_residual(tau)
        if res > KINEMATIC_TOL:
            raise ScenarioError(
                f"trajectory violates kinematic consistency: residual {res:.3e} m")
        if V_max is not None and self.speeds().max() > V_max * (1 + 1e-9) + 1e-12:
            raise ScenarioError("trajectory violates speed limit V_max")
        if V_acc is not None and self.N >= 2:
            dv = np.linalg.norm(np.diff(self.velocities, axis=0), axis=1)
            if dv.max() > V_acc * (1 + 1e-9) + 1e-12:
                raise ScenarioError("trajectory violates per-slot speed-change limit V_acc")


@dataclass
class JammerPlan:
    """Fixed jammer orbit: a named locus traversed at constant speed.

    kinds: CSA (circle at service-area center), CEA (circle at the centroid of
    the estimated eavesdropper locations), SFE (shuttle on the segment between
    the two estimated eavesdropper locations), CA (circle at an explicit
    center).  ``radius`` applies to the circular kinds; ``center`` to CA only.
    For SFE the speed is snapped to the nearest value that makes the shuttle
    reverse exactly on a slot boundary, so the per-slot speed stays constant.
    """

    kind: str
    speed: float
    radius: float | None = None
    center: np.ndarray | None = None
    trajectory: Trajectory | None = None

    def __post_init__(self):
        if self.kind not in JAMMER_KINDS:
            raise ScenarioError(
                f"unsupported jammer plan kind {self.kind!r}; expected one of {JAMMER_KINDS}")
        if self.speed < 0:
            raise ScenarioError("jammer speed must be >= 0")
        if self.kind in ("CSA", "CEA", "CA"):
            if self.radius is None or self.radius <= 0:
                raise ScenarioError(f"jammer plan kind {self.kind} requires radius > 0")
        if self.kind == "CA":
            if self.center is None:
                raise ScenarioError("jammer plan kind CA requires a center")
            self.center = _vec2(self.center, "jammer plan center")


@dataclass
class ScenarioConfig:
    """All physical, spectral, and limit parameters of one mission."""

    users: list[GroundUser]
    eavesdroppers: list[Eavesdropper]
    H: float          # flight altitude of both UAVs, m
    N: int            # number of time slots
    tau: float        # slot duration, s
    N_F: int          # number of subcarriers
    W: float          # subcarrier bandwidth, Hz
    N0: float         # noise PSD, W/Hz
    beta0: float      # reference channel gain at 1 m (default -50 dB)
    array: ArrayParams
    flight: FlightPowerParams
    P_C_I: float      # circuit power, info UAV, W
    P_C_J: float      # circuit power, jammer UAV, W
    zeta_I: float     # amplifier inefficiency, info UAV (>= 1)
    zeta_J: float     # amplifier inefficiency, jammer UAV (>= 1)
    P_peak_I: float   # peak transmit power, info UAV, W
    P_peak_J: float   # peak transmit power, jammer UAV, W
    P_max_I: float    # per-slot total power budget, info UAV, W
    P_max_J: float    # per-slot total power budget, jammer UAV, W
    R_min: float      # minimum per-user average rate, bit/s
    Gamma_th: float   # maximum tolerable leakage SINR, linear ratio
    V_max_I: float    # speed limit of the info UAV, m/s
    V_acc_I: float    # max per-slot speed change of the info UAV, m/s
    d_min: float      # minimum inter-UAV separation, m
    t0_I: np.ndarray  # start position of the info UAV, m
    tF_I: np.ndarray  # final position of the info UAV, m
    jammer_plan: JammerPlan
    service_area: np.ndarray | None = None  # [[xmin,ymin],[xmax,ymax]]; default: bbox of all nodes

    def __post_init__(self):
        self.t0_I = _vec2(self.t0_I, "t0_I")
        self.tF_I = _vec2(self.tF_I, "tF_I")
        if self.service_area is not None:
            sa = np.asarray(self.service_area, dtype=float)
            if sa.shape != (2, 2):
                raise ScenarioError("service_area must be [[xmin,ymin],[xmax,ymax]]")
            self.service_area = sa
        self._validate()

    # -- derived quantities ------------------------------------------------

    @property
    def K(self) -> int:
        return len(self.users)

    @property
    def E(self) -> int:
        return len(self.eavesdroppers)

    @property
    def noise_floor(self) -> float:
        """Per-subcarrier AWGN power W*N0, W."""
        return self.W * self.N0

    @property
    def mission_duration(self) -> float:
        return self.N * self.tau

    def service_rectangle(self) -> np.ndarray:
        """Explicit service area, or the bounding box of all declared nodes."""
        if self.service_area is not None:
            return self.service_area
        pts = [self.t0_I, self.tF_I]
        pts += [u.position for u in self.users]
        pts += [e.est_position for e in self.eavesdroppers]
        if self.jammer_plan.center is not None:
            pts.append(self.jammer_plan.center)
        pts = np.array(pts)
        return np.array([pts.min(axis=0), pts.max(axis=0)])

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        if not self.users:
            raise ScenarioError("scenario requires at least one user")
        if self.N < 2:
            raise ScenarioError("N must be >= 2")
        if self.tau <= 0:
            raise ScenarioError("tau must be positive")
        positives = {
            "H": self.H, "W": self.W, "N0": self.N0, "beta0": self.beta0,
            "P_C_I": self.P_C_I, "P_C_J": self.P_C_J,
            "P_peak_I": self.P_peak_I, "P_peak_J": self.P_peak_J,
            "P_max_I": self.P_max_I, "P_max_J": self.P_max_J,
            "V_max_I": self.V_max_I, "V_acc_I": self.V_acc_I,
            "d_min": self.d_min,
        }
        for name, val in positives.items():
            if val <= 0:
                raise ScenarioError(f"{name} must be positive")
        if self.N_F < 1:
            raise ScenarioError("N_F must be >= 1")
        if self.zeta_I < 1 or self.zeta_J < 1:
            raise ScenarioError("amplifier inefficiencies zeta must be >= 1")
        if self.R_min < 0:
            raise ScenarioError("R_min must be >= 0")
        if not (self.Gamma_th > 0):
            raise ScenarioError("Gamma_th must be positive")
        reach = (self.N - 1) * self.tau * self.V_max_I
        dist = float(np.linalg.norm(self.tF_I - self.t0_I))
        if dist > reach * (1 + 1e-12):
            raise ScenarioError(
                f"final position unreachable: distance {dist:.1f} m exceeds "
                f"(N-1)*tau*V_max = {reach:.1f} m")
        lo, hi = self.service_rectangle()
        for idx, u in enumerate(self.users):
            if np.any(u.position < lo - 1e-9) or np.any(u.position > hi + 1e-9):
                raise ScenarioError(f"user {idx} lies outside the service rectangle")
        for idx, e in enumerate(self.eavesdroppers):
            if np.any(e.est_position < lo - 1e-9) or np.any(e.est_position > hi + 1e-9):
                raise ScenarioError(f"eavesdropper {idx} lies outside the service rectangle")
        if self.kind_requires_two_eavesdroppers() and self.E != 2:
            raise ScenarioError("jammer plan kind SFE requires exactly 2 eavesdroppers")

    def kind_requires_two_eavesdroppers(self) -> bool:
        return self.jammer_plan.kind == "SFE"

    def replace(self, **kwargs) -> "ScenarioConfig":
        """A modified, re-validated copy (used by baselines and sweeps)."""
        data = {
            "users": self.users, "eavesdroppers": self.eavesdroppers,
            "H": self.H, "N": self.N, "tau": self.tau, "N_F": self.N_F,
            "W": self.W, "N0": self.N0, "beta0": self.beta0,
            "array": self.array, "flight": self.flight,
            "P_C_I": self.P_C_I, "P_C_J": self.P_C_J,
            "zeta_I": self.zeta_I, "zeta_J": self.zeta_J,
            "P_peak_I": self.P_peak_I, "P_peak_J": self.P_peak_J,
            "P_max_I": self.P_max_I, "P_max_J": self.P_max_J,
            "R_min": self.R_min, "Gamma_th": self.Gamma_th,
            "V_max_I": self.V_max_I, "V_acc_I": self.V_acc_I,
            "d_min": self.d_min, "t0_I": self.t0_I, "tF_I": self.tF_I,
            "jammer_plan": copy.deepcopy(self.jammer_plan),
            "service_area": self.service_area,
        }
        data.update(kwargs)
        return ScenarioConfig(**data)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def _cfg_to_dict(cfg: ScenarioConfig) -> dict:
    d = {
        "users": [{"position": [float(x) for x in u.position]} for u in cfg.users],
        "eavesdroppers": [
            {"est_position": [float(x) for x in e.est_position], "radius": float(e.radius)}
            for e in cfg.eavesdroppers
        ],
        "H": cfg.H, "N": cfg.N, "tau": cfg.tau, "N_F": cfg.N_F, "W": cfg.W,
        "N0": cfg.N0, "beta0": cfg.beta0,
        "array": {"N_Jx": cfg.array.N_Jx, "N_Jy": cfg.array.N_Jy,
                  "delta_J": cfg.array.delta_J, "lambda_c": cfg.array.lambda_c},
        "flight": {k: float(v) for k, v in asdict(cfg.flight).items()},
        "P_C_I": cfg.P_C_I, "P_C_J": cfg.P_C_J,
        "zeta_I": cfg.zeta_I, "zeta_J": cfg.zeta_J,
        "P_peak_I": cfg.P_peak_I, "P_peak_J": cfg.P_peak_J,
        "P_max_I": cfg.P_max_I, "P_max_J": cfg.P_max_J,
        "R_min": cfg.R_min, "Gamma_th": cfg.Gamma_th,
        "V_max_I": cfg.V_max_I, "V_acc_I": cfg.V_acc_I, "d_min": cfg.d_min,
        "t0_I": [float(x) for x in cfg.t0_I], "tF_I": [float(x) for x in cfg.tF_I],
        "jammer_plan": {"kind": cfg.jammer_plan.kind, "speed": cfg.jammer_plan.speed},
    }
    if cfg.jammer_plan.radius is not None:
        d["jammer_plan"]["radius"] = float(cfg.jammer_plan.radius)
    if cfg.jammer_plan.center is not None:
        d["jammer_plan"]["center"] = [float(x) for x in cfg.jammer_plan.center]
    if cfg.service_area is not None:
        d["service_area"] = [[float(x) for x in row] for row in cfg.service_area]
    return d


def _cfg_from_dict(d: dict) -> ScenarioConfig:
    try:
        users = [GroundUser(position=u["position"]) for u in d["users"]]
        eves = [Eavesdropper(est_position=e["est_position"], radius=float(e["radius"]))
                for e in d["eavesdroppers"]]
        arr = d["array"]
        fl = d["flight"]
        jp = d["jammer_plan"]
        return ScenarioConfig(
            users=users, eavesdroppers=eves,
            H=float(d["H"]), N=int(d["N"]), tau=float(d["tau"]),
            N_F=int(d["N_F"]), W=float(d["W"]), N0=float(d["N0"]),
            beta0=float(d["beta0"]),
            array=ArrayParams(N_Jx=int(arr["N_Jx"]), N_Jy=int(arr["N_Jy"]),
                              delta_J=float(arr["delta_J"]), lambda_c=float(arr["lambda_c"])),
            flight=FlightPowerParams(**{k: float(v) for k, v in fl.items()}),
            P_C_I=float(d["P_C_I"]), P_C_J=float(d["P_C_J"]),
            zeta_I=float(d["zeta_I"]), zeta_J=float(d["zeta_J"]),
            P_peak_I=float(d["P_peak_I"]), P_peak_J=float(d["P_peak_J"]),
            P_max_I=float(d["P_max_I"]), P_max_J=float(d["P_max_J"]),
            R_min=float(d["R_min"]), Gamma_th=float(d["Gamma_th"]),
            V_max_I=float(d["V_max_I"]), V_acc_I=float(d["V_acc_I"]),
            d_min=float(d["d_min"]), t0_I=d["t0_I"], tF_I=d["tF_I"],
            jammer_plan=JammerPlan(kind=jp["kind"], speed=float(jp["speed"]),
                                   radius=jp.get("radius"), center=jp.get("center")),
            service_area=d.get("service_area"),
        )
    except KeyError as exc:
        raise ScenarioError(f"missing required config key: {exc.args[0]}") from exc


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a mission scenario from a YAML file."""
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"could not parse scenario file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"scenario file {path} does not contain a mapping")
    return _cfg_from_dict(raw)


def serialize_scenario(cfg: ScenarioConfig) -> str:
    """YAML text such that load(serialize(cfg)) reproduces cfg field-for-field."""
    return yaml.safe_dump(_cfg_to_dict(cfg), sort_keys=False, default_flow_style=None)


def save_scenario(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(serialize_scenario(cfg))


# ---------------------------------------------------------------------------
# trajectory construction
# ---------------------------------------------------------------------------

def _circle_trajectory(center: np.ndarray, radius: float, speed: float,
                       N: int, tau: float) -> Trajectory:
    """Counter-clockwise circle starting due east of the center.

    The angular step is chosen so consecutive waypoints are exactly
    speed*tau apart (chord spacing), which keeps the per-slot speed equal to
    the commanded speed to machine precision.
    """
    step = speed * tau
    if step > 2 * radius:
        raise ScenarioError(
            f"jammer step {step:.3f} m exceeds orbit diameter {2*radius:.3f} m")
    dphi = 2.0 * math.asin(step / (2.0 * radius)) if radius > 0 else 0.0
    ang = dphi * np.arange(N + 1)
    pts = center[None, :] + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    positions = pts[:N]
    velocities = (pts[1:] - pts[:-1]) / tau
    return Trajectory(positions=positions, velocities=velocities)


def _shuttle_trajectory(a: np.ndarray, b: np.ndarray, speed: float,
                        N: int, tau: float) -> tuple[Trajectory, float]:
    """Back-and-forth on segment a->b, reversing exactly at its endpoints.

    Returns the trajectory and the snapped speed (nearest value making the
    segment length an integer number of per-slot steps).
    """
    L = float(np.linalg.norm(b - a))
    if speed == 0.0 or L == 0.0:
        positions = np.tile(a, (N, 1))
        velocities = np.zeros((N, 2))
        return Trajectory(positions=positions, velocities=velocities), 0.0
    m = max(1, int(round(L / (speed * tau))))
    snapped = L / (m * tau)
    idx = np.arange(N + 1) % (2 * m)
    folded = np.where(idx <= m, idx, 2 * m - idx) / m  # triangle wave in [0, 1]
    pts = a[None, :] + folded[:, None] * (b - a)[None, :]
    positions = pts[:N]
    velocities = (pts[1:] - pts[:-1]) / tau
    return Trajectory(positions=positions, velocities=velocities), snapped


def generate_jammer_trajectory(cfg: ScenarioConfig) -> Trajectory:
    """Materialize the jammer orbit declared in cfg.jammer_plan."""
    plan = cfg.jammer_plan
    if plan.kind == "CSA":
        lo, hi = cfg.service_rectangle()
        center = 0.5 * (lo + hi)
        return _circle_trajectory(center, plan.radius, plan.speed, cfg.N, cfg.tau)
    if plan.kind == "CEA":
        center = np.mean([e.est_position for e in cfg.eavesdroppers], axis=0)
        return _circle_trajectory(center, plan.radius, plan.speed, cfg.N, cfg.tau)
    if plan.kind == "CA":
        return _circle_trajectory(plan.center, plan.radius, plan.speed, cfg.N, cfg.tau)
    if plan.kind == "SFE":
        if cfg.E != 2:
            raise ScenarioError("jammer plan kind SFE requires exactly 2 eavesdroppers")
        a = cfg.eavesdroppers[0].est_position
        b = cfg.eavesdroppers[1].est_position
        traj, _ = _shuttle_trajectory(a, b, plan.speed, cfg.N, cfg.tau)
        return traj
    raise ScenarioError(f"unsupported jammer plan kind {plan.kind!r}")


def materialize_jammer_plan(cfg: ScenarioConfig) -> JammerPlan:
    """JammerPlan copy with the trajectory attached and (for SFE) speed snapped."""
    plan = copy.deepcopy(cfg.jammer_plan)
    traj = generate_jammer_trajectory(cfg)
    plan.trajectory = traj
    speeds = traj.speeds()
    if speeds.size:
        plan.speed = float(speeds.max())
    return plan


def initial_info_trajectory(cfg: ScenarioConfig) -> Trajectory:
    """Straight segment from t0_I to tF_I at constant velocity (the SFF path)."""
    v = (cfg.tF_I - cfg.t0_I) / ((cfg.N - 1) * cfg.tau)
    if np.linalg.norm(v) > cfg.V_max_I * (1 + 1e-12):
        raise ScenarioError("initial trajectory infeasible: required speed exceeds V_max_I")
    steps = np.arange(cfg.N)[:, None] * (v * cfg.tau)[None, :]
    positions = cfg.t0_I[None, :] + steps
    positions[-1] = cfg.tF_I  # exact endpoint, C9 to machine precision
    velocities = np.tile(v, (cfg.N, 1))
    return Trajectory(positions=positions, velocities=velocities)
