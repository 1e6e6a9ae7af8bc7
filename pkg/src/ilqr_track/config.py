"""Experiment configuration (JSON file with sections path/weights/solver/controller/perturbation)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .cost import CostWeights
from .dynamics import STATE_DIM
from .ilqr import SolverOptions
from .path import BellPathParams, ReferencePath, generate_bell, read_path_csv

CONTROLLERS = ("lqr", "ilqr")
SECTIONS = ("path", "weights", "solver", "controller", "perturbation")

DEFAULT_PERTURBATION_SET: Tuple[Tuple[float, float, float], ...] = (
    (0.1, 0.0, 0.0),
    (-0.1, 0.0, 0.0),
    (0.0, 0.1, 0.0),
    (0.0, -0.1, 0.0),
    (0.0, 0.0, 0.1),
    (0.0, 0.0, -0.1),
)


class ConfigError(ValueError):
    pass


def _pad_state(vec, name: str) -> Tuple[float, ...]:
    arr = np.asarray(vec, dtype=np.float64).ravel()
    if arr.size > STATE_DIM or not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must hold at most {STATE_DIM} finite numbers")
    return tuple(np.concatenate([arr, np.zeros(STATE_DIM - arr.size)]).tolist())


@dataclass(frozen=True)
class PathConfig:
    params: BellPathParams = BellPathParams()
    v_max: float = 2.0
    csv: Optional[str] = None  # overrides the bell generator when set

    def build(self, base_dir: Path = Path(".")) -> ReferencePath:
        if self.csv is None:
            return generate_bell(self.params, v_max=self.v_max)
        return read_path_csv(base_dir / self.csv, dt=self.params.dt, v_max=self.v_max)


@dataclass(frozen=True)
class WeightsConfig:
    Q: Tuple[float, ...] = (10.0, 10.0, 1.0, 0.1, 0.1, 0.0, 0.0)
    R: Tuple[float, ...] = (1.0, 1.0)
    Qf: Optional[Tuple[float, ...]] = None  # defaults to 10 * Q
    control_deviation: bool = True

    def build(self) -> CostWeights:
        return CostWeights.from_diagonals(self.Q, self.R, self.Qf, control_deviation=self.control_deviation)


@dataclass(frozen=True)
class ControllerConfig:
    type: str = "both"
    lqr_substeps: int = 1
    baseline: str = "lqr"
    candidate: str = "ilqr"

    def selected(self) -> List[str]:
        return list(CONTROLLERS) if self.type == "both" else [self.type]


@dataclass(frozen=True)
class PerturbationConfig:
    offset: Tuple[float, ...] = (0.0,) * STATE_DIM
    noise_std: Tuple[float, ...] = (0.0,) * STATE_DIM
    seed: int = 0
    compare_set: Tuple[Tuple[float, ...], ...] = tuple(_pad_state(v, "compare_set") for v in DEFAULT_PERTURBATION_SET)

    def initial_offset(self, seed: Optional[int] = None) -> np.ndarray:
        rng = np.random.default_rng(self.seed if seed is None else seed)
        return np.asarray(self.offset) + np.asarray(self.noise_std) * rng.standard_normal(STATE_DIM)


@dataclass(frozen=True)
class ExperimentConfig:
    path: PathConfig = PathConfig()
    weights: WeightsConfig = WeightsConfig()
    solver: SolverOptions = SolverOptions()
    controller: ControllerConfig = ControllerConfig()
    perturbation: PerturbationConfig = PerturbationConfig()
    base_dir: Path = field(default=Path("."), compare=False)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, perturbation=dataclasses.replace(self.perturbation, seed=int(seed)))

    def with_points(self, n_points: int, dt: float) -> "ExperimentConfig":
        params = dataclasses.replace(self.path.params, n_points=int(n_points), dt=float(dt))
        return dataclasses.replace(self, path=dataclasses.replace(self.path, params=params))

    def to_dict(self) -> Dict[str, Any]:
        p = self.path
        return {
            "path": {**dataclasses.asdict(p.params), "v_max": p.v_max, "csv": p.csv},
            "weights": {
                "Q": list(self.weights.Q),
                "R": list(self.weights.R),
                "Qf": None if self.weights.Qf is None else list(self.weights.Qf),
                "control_deviation": self.weights.control_deviation,
            },
            "solver": {**dataclasses.asdict(self.solver), "alpha_schedule": list(self.solver.alpha_schedule)},
            "controller": dataclasses.asdict(self.controller),
            "perturbation": {
                "offset": list(self.perturbation.offset),
                "noise_std": list(self.perturbation.noise_std),
                "seed": self.perturbation.seed,
                "compare_set": [list(v) for v in self.perturbation.compare_set],
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Path = Path(".")) -> "ExperimentConfig":
        """Build and validate a config; raises ConfigError on any problem."""
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        sections = {}
        for name in SECTIONS:
            sec = data.get(name, {}) or {}
            if not isinstance(sec, dict):
                raise ConfigError(f"section '{name}' must be an object")
            sections[name] = dict(sec)
        try:
            cfg = cls._build(sections, base_dir)
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err
        return cfg

    @classmethod
    def _build(cls, s: Dict[str, Dict[str, Any]], base_dir: Path) -> "ExperimentConfig":
        path_sec = s["path"]
        v_max = float(path_sec.pop("v_max", 2.0))
        csv_file = path_sec.pop("csv", None)
        _reject_unknown("path", path_sec, [f.name for f in dataclasses.fields(BellPathParams)])
        path = PathConfig(BellPathParams(**path_sec), v_max=v_max, csv=csv_file)

        _reject_unknown("weights", s["weights"], ["Q", "R", "Qf", "control_deviation"])
        w = s["weights"]
        weights = WeightsConfig(
            Q=tuple(float(v) for v in w.get("Q", WeightsConfig.Q)),
            R=tuple(float(v) for v in w.get("R", WeightsConfig.R)),
            Qf=None if w.get("Qf") is None else tuple(float(v) for v in w["Qf"]),
            control_deviation=bool(w.get("control_deviation", True)),
        )
        if len(weights.Q) != STATE_DIM or len(weights.R) != 2 or (weights.Qf is not None and len(weights.Qf) != STATE_DIM):
            raise ConfigError("weights: Q and Qf need 7 diagonal entries, R needs 2")
        weights.build()

        _reject_unknown("solver", s["solver"], [f.name for f in dataclasses.fields(SolverOptions)])
        solver = SolverOptions(**s["solver"])

        _reject_unknown("controller", s["controller"], [f.name for f in dataclasses.fields(ControllerConfig)])
        controller = ControllerConfig(**s["controller"])
        if controller.type not in CONTROLLERS + ("both",):
            raise ConfigError(f"controller.type must be lqr, ilqr or both, got {controller.type!r}")
        for role in ("baseline", "candidate"):
            if getattr(controller, role) not in CONTROLLERS:
                raise ConfigError(f"controller.{role} must be lqr or ilqr")
        if int(controller.lqr_substeps) != controller.lqr_substeps or controller.lqr_substeps < 1:
            raise ConfigError("controller.lqr_substeps must be a positive integer")

        p = s["perturbation"]
        _reject_unknown("perturbation", p, [f.name for f in dataclasses.fields(PerturbationConfig)])
        perturbation = PerturbationConfig(
            offset=_pad_state(p.get("offset", ()), "perturbation.offset"),
            noise_std=_pad_state(p.get("noise_std", ()), "perturbation.noise_std"),
            seed=int(p.get("seed", 0)),
            compare_set=tuple(
                _pad_state(v, "perturbation.compare_set entry") for v in p.get("compare_set", DEFAULT_PERTURBATION_SET)
            ),
        )
        if any(v < 0 for v in perturbation.noise_std):
            raise ConfigError("perturbation.noise_std must be non-negative")
        return cls(path, weights, solver, controller, perturbation, base_dir)


def _reject_unknown(section: str, values: Dict[str, Any], allowed) -> None:
    extra = set(values) - set(allowed)
    if extra:
        raise ConfigError(f"{section}: unknown keys {sorted(extra)}")


def load_config(filename) -> ExperimentConfig:
    """Read a JSON config. OSError propagates (I/O); bad content raises ConfigError."""
    filename = Path(filename)
    text = filename.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{filename}: invalid JSON ({err})") from err
    return ExperimentConfig.from_dict(data, base_dir=filename.parent)
