"""Scenario configuration, ground-truth generation, and measurement synthesis.

The default scenario: a 4500 m x 4500 m region, nearly-constant-velocity
objects born from an eleven-component Beta-Gaussian birth mixture, constant
hidden detection probability, and uniform Poisson clutter.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import yaml

__all__ = [
    "ScenarioConfig",
    "TruthLog",
    "ScanData",
    "default_scenario",
    "load_scenario",
    "save_scenario",
    "ncv_matrices",
    "observation_matrices",
    "generate_truth",
    "generate_measurements",
    "save_truth",
    "load_truth",
    "save_scans",
    "load_scans",
]

DEFAULT_BIRTH_MEANS = [
    [1000.0, 2300.0, 0.0, 0.0],
    [3000.0, 1200.0, 0.0, 0.0],
    [2000.0, 2000.0, 0.0, 0.0],
    [2000.0, 3500.0, 0.0, 0.0],
    [800.0, 3000.0, 0.0, 0.0],
    [2500.0, 1500.0, 0.0, 0.0],
    [3800.0, 2000.0, 0.0, 0.0],
    [3800.0, 3400.0, 0.0, 0.0],
    [4000.0, 2500.0, 0.0, 0.0],
    [3900.0, 1500.0, 0.0, 0.0],
    [1200.0, 1200.0, 0.0, 0.0],
]

# (birth scan, death scan, birth-mean index); death scan is exclusive.
# Twelve objects: three at the start, pairs appearing every ten scans, four
# of them gone at scan 60, the rest alive until the end.
DEFAULT_SCHEDULE = [
    (1, 81, 0),
    (1, 81, 1),
    (1, 81, 2),
    (10, 81, 3),
    (10, 60, 4),
    (20, 81, 5),
    (20, 60, 6),
    (30, 81, 7),
    (30, 60, 8),
    (40, 81, 9),
    (40, 60, 10),
    (50, 81, 0),
]


@dataclass
class ScenarioConfig:
    region: tuple[float, float, float, float] = (0.0, 4500.0, 0.0, 4500.0)
    duration: int = 80
    delta_t: float = 1.0
    sigma_v: float = 5.0
    sigma_eps: float = 10.0
    p_s: float = 0.97
    p_d_true: float = 0.95
    lambda_c: float = 10.0
    birth_means: list = field(default_factory=lambda: [list(m) for m in DEFAULT_BIRTH_MEANS])
    birth_cov: list = field(default_factory=lambda: np.diag([60.0, 60.0, 60.0, 60.0]) ** 2)
    birth_weight: float = 0.03
    birth_beta: tuple[float, float] = (1.0, 1.0)
    object_schedule: list = field(default_factory=lambda: [list(s) for s in DEFAULT_SCHEDULE])

    def __post_init__(self):
        self.birth_cov = np.asarray(self.birth_cov, dtype=float)
        if not (0.0 < self.p_d_true <= 1.0):
            raise ValueError(f"p_d_true must lie in (0,1], got {self.p_d_true}")
        if self.lambda_c < 0:
            raise ValueError("lambda_c must be >= 0")
        if self.duration <= 0:
            raise ValueError("duration must be positive")

    @property
    def region_area(self) -> float:
        x0, x1, y0, y1 = self.region
        return (x1 - x0) * (y1 - y0)

    @property
    def clutter_density(self) -> float:
        return self.lambda_c / self.region_area


@dataclass(frozen=True)
class TruthLog:
    """scans[k] is a list of (object_id, state vector) alive at scan k+1."""

    scans: tuple


@dataclass(frozen=True)
class ScanData:
    """Observations of one scan: array of 2-D positions."""

    observations: np.ndarray


def default_scenario(**overrides) -> ScenarioConfig:
    return ScenarioConfig(**overrides)


def save_scenario(cfg: ScenarioConfig, path) -> None:
    data = asdict(cfg)
    data["birth_cov"] = np.asarray(cfg.birth_cov).tolist()
    data["region"] = list(cfg.region)
    data["birth_beta"] = list(cfg.birth_beta)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))


def load_scenario(path) -> ScenarioConfig:
    data = yaml.safe_load(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"scenario file {path} does not hold a mapping")
    known = set(ScenarioConfig.__dataclass_fields__)
    unknown = set(data) - known - {"filter"}
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    data.pop("filter", None)
    if "region" in data:
        data["region"] = tuple(data["region"])
    if "birth_beta" in data:
        data["birth_beta"] = tuple(data["birth_beta"])
    return ScenarioConfig(**data)


def ncv_matrices(delta_t: float, sigma_v: float) -> tuple[np.ndarray, np.ndarray]:
    d = delta_t
    I2 = np.eye(2)
    F = np.block([[I2, d * I2], [np.zeros((2, 2)), I2]])
    Q = sigma_v**2 * np.block(
        [[d**4 / 4 * I2, d**3 / 2 * I2], [d**3 / 2 * I2, d**2 * I2]]
    )
    return F, Q


def observation_matrices(sigma_eps: float) -> tuple[np.ndarray, np.ndarray]:
    H = np.hstack([np.eye(2), np.zeros((2, 2))])
    R = sigma_eps**2 * np.eye(2)
    return H, R


def _psd_sqrt(P: np.ndarray) -> np.ndarray:
    """Square root of a positive semi-definite matrix (covariances may be
    singular, e.g. a zero birth covariance in tests)."""
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(P)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def generate_truth(cfg: ScenarioConfig, seed: int) -> TruthLog:
    """NCV trajectories per the object schedule; birth velocities are
    conditioned so the nominal path stays inside the region."""
    rng = np.random.default_rng(seed)
    F, _ = ncv_matrices(cfg.delta_t, cfg.sigma_v)
    # Q is the singular white-acceleration covariance G sigma_v^2 G^T; draw
    # noise through the shaping matrix so samples have exactly covariance Q
    d = cfg.delta_t
    G = cfg.sigma_v * np.vstack([d**2 / 2 * np.eye(2), d * np.eye(2)])
    Lb = _psd_sqrt(cfg.birth_cov)
    x0, x1, y0, y1 = cfg.region

    def draw_birth_state(mean: np.ndarray, lifetime: float) -> np.ndarray:
        # redraw the velocity block until the straight-line path stays inside
        # the region; a boundary bounce would break the constant-velocity
        # observation model and make the object untrackable
        x = mean + Lb @ rng.standard_normal(4)
        margin = 50.0
        for _ in range(100):
            end = x[:2] + lifetime * cfg.delta_t * x[2:]
            if (
                x0 + margin <= end[0] <= x1 - margin
                and y0 + margin <= end[1] <= y1 - margin
            ):
                return x
            x[2:] = (Lb @ rng.standard_normal(4))[2:] + mean[2:]
        x[2:] = 0.0
        return x

    states: dict[int, np.ndarray] = {}
    scans = []
    for k in range(1, cfg.duration + 1):
        for oid, (birth, death, mi) in enumerate(cfg.object_schedule):
            if k == birth:
                m = np.asarray(cfg.birth_means[mi], dtype=float)
                states[oid] = draw_birth_state(m, float(death - birth))
            elif birth < k < death and oid in states:
                # no boundary handling: a reflected bounce would violate the
                # constant-velocity model and make the object untrackable
                states[oid] = F @ states[oid] + G @ rng.standard_normal(2)
            elif k >= death:
                states.pop(oid, None)
        alive = [
            (oid, states[oid].copy())
            for oid, (birth, death, _) in enumerate(cfg.object_schedule)
            if birth <= k < death and oid in states
        ]
        scans.append(tuple(alive))
    return TruthLog(tuple(scans))


def generate_measurements(truth: TruthLog, cfg: ScenarioConfig, seed: int) -> list[ScanData]:
    """Detections with probability p_d_true plus uniform Poisson clutter,
    shuffled within each scan."""
    rng = np.random.default_rng(seed)
    H, _ = observation_matrices(cfg.sigma_eps)
    x0, x1, y0, y1 = cfg.region
    out = []
    for scan in truth.scans:
        zs = []
        for _, state in scan:
            if rng.random() < cfg.p_d_true:
                zs.append(H @ state + cfg.sigma_eps * rng.standard_normal(2))
        n_clutter = rng.poisson(cfg.lambda_c)
        for _ in range(n_clutter):
            zs.append(np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)]))
        Z = np.array(zs).reshape(-1, 2)
        rng.shuffle(Z, axis=0)
        out.append(ScanData(Z))
    return out


def save_truth(truth: TruthLog, path) -> None:
    lines = ["scan,id,x,y,vx,vy"]
    for k, scan in enumerate(truth.scans, start=1):
        for oid, x in scan:
            lines.append(f"{k},{oid},{x[0]:.10g},{x[1]:.10g},{x[2]:.10g},{x[3]:.10g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_truth(path) -> TruthLog:
    lines = Path(path).read_text().strip().splitlines()[1:]
    by_scan: dict[int, list] = {}
    max_scan = 0
    for line in lines:
        scan, oid, px, py, vx, vy = line.split(",")
        k = int(scan)
        max_scan = max(max_scan, k)
        by_scan.setdefault(k, []).append(
            (int(oid), np.array([float(px), float(py), float(vx), float(vy)]))
        )
    return TruthLog(tuple(tuple(by_scan.get(k, [])) for k in range(1, max_scan + 1)))


def save_scans(scans: list[ScanData], path) -> None:
    lines = ["scan,flag,x,y"]
    for k, sd in enumerate(scans, start=1):
        for z in sd.observations:
            lines.append(f"{k},z,{z[0]:.10g},{z[1]:.10g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_scans(path) -> list[ScanData]:
    lines = Path(path).read_text().strip().splitlines()
    header, rows = lines[0], lines[1:]
    by_scan: dict[int, list] = {}
    max_scan = 0
    for line in rows:
        scan, _, x, y = line.split(",")
        k = int(scan)
        max_scan = max(max_scan, k)
        by_scan.setdefault(k, []).append([float(x), float(y)])
    return [
        ScanData(np.array(by_scan.get(k, [])).reshape(-1, 2))
        for k in range(1, max_scan + 1)
    ]
