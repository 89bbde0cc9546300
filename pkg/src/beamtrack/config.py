"""Experiment configuration management."""

import math
import os
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv

# Load .env file from current working directory
load_dotenv()

SEED_ENV = "BEAMTRACK_SEED"
OUTPUT_PATH_ENV = "BEAMTRACK_OUTPUT_PATH"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ExperimentKind(Enum):
    MSE_VS_SENSORS = "mse_vs_sensors"
    OUTAGE_VS_POWER = "outage_vs_power"
    TRACKING_TRACE = "tracking_trace"


class ConstraintMode(Enum):
    SUM = "sum"
    INDIVIDUAL = "individual"
    EQUAL = "equal"
    ALL = "all"
    NONE = "none"

    def expand(self) -> list["ConstraintMode"]:
        """Concrete modes covered by this selection, in output order."""
        if self is ConstraintMode.ALL:
            return [ConstraintMode.SUM, ConstraintMode.INDIVIDUAL, ConstraintMode.EQUAL]
        return [self]


# Per-experiment sweep defaults: (sensor counts, power budgets)
EXPERIMENT_DEFAULTS: dict[ExperimentKind, tuple[tuple[int, ...], tuple[float, ...]]] = {
    ExperimentKind.MSE_VS_SENSORS: (tuple(range(2, 21)), (300.0, 3000.0)),
    ExperimentKind.OUTAGE_VS_POWER: (
        (10,),
        (1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0, 10000.0, 30000.0),
    ),
    ExperimentKind.TRACKING_TRACE: ((10,), (300.0,)),
}

_ENUM_ALIASES = {"equalpower": "equal"}


def _normalize(text: str) -> str:
    return text.lower().replace("_", "").replace("-", "")


def _as_enum(key: str, value: Any, enum: type[Enum]) -> Enum:
    if isinstance(value, enum):
        return value
    if isinstance(value, str):
        wanted = _normalize(value)
        wanted = _ENUM_ALIASES.get(wanted, wanted)
        for member in enum:
            if wanted in (_normalize(member.value), _normalize(member.name)):
                return member
    choices = ", ".join(member.value for member in enum)
    raise ConfigError(key, f"expected one of {choices}, got {value!r}")


def _as_int(key: str, value: Any, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    try:
        result = int(value)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {value!r}") from None
    if minimum is not None and result < minimum:
        raise ConfigError(key, f"must be at least {minimum}, got {result}")
    return result


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    try:
        result = float(value)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {value!r}") from None
    if not math.isfinite(result):
        raise ConfigError(key, f"must be finite, got {value!r}")
    return result


def _split_list(value: Any) -> list[Any]:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _as_int_list(key: str, value: Any) -> tuple[int, ...]:
    """Integers from a scalar, a list, or a comma list with a-b ranges."""
    items: list[int] = []
    for part in _split_list(value):
        if isinstance(part, str) and "-" in part.strip("-"):
            lo_text, hi_text = part.split("-", 1)
            lo, hi = _as_int(key, lo_text.strip()), _as_int(key, hi_text.strip())
            if lo > hi:
                raise ConfigError(key, f"range {part!r} is inverted")
            items.extend(range(lo, hi + 1))
        else:
            items.append(_as_int(key, part))
    if not items:
        raise ConfigError(key, "needs at least one value")
    if min(items) < 1:
        raise ConfigError(key, "sensor counts must be positive")
    return tuple(items)


def _as_float_list(key: str, value: Any) -> tuple[float, ...]:
    items = tuple(_as_float(key, part) for part in _split_list(value))
    if not items:
        raise ConfigError(key, "needs at least one value")
    if min(items) <= 0:
        raise ConfigError(key, "power budgets must be positive")
    return items


def _as_range(key: str, value: Any, lower_bound: float) -> tuple[float, float]:
    parts = _split_list(value)
    if len(parts) != 2:
        raise ConfigError(key, f"expected a [lower, upper] pair, got {value!r}")
    lo, hi = (_as_float(key, part) for part in parts)
    if lo > hi:
        raise ConfigError(key, f"range is inverted: {lo} > {hi}")
    if lo < lower_bound:
        raise ConfigError(key, f"lower end must be at least {lower_bound}, got {lo}")
    return (lo, hi)


def _as_bool(key: str, value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
        return value.lower() in ("true", "1", "yes")
    raise ConfigError(key, f"expected a boolean, got {value!r}")


def _require(key: str, ok: bool, message: str) -> None:
    if not ok:
        raise ConfigError(key, message)


@dataclass
class ExperimentConfig:
    """Fully resolved experiment configuration.

    Empty ``n_sensors`` / ``p_max`` are filled from the experiment defaults;
    ``sigma_u2 = None`` selects the stationary process for ``alpha``.
    """

    seed: int
    experiment: ExperimentKind = ExperimentKind.MSE_VS_SENSORS
    n_sensors: tuple[int, ...] = ()
    p_max: tuple[float, ...] = ()
    constraint_mode: ConstraintMode = ConstraintMode.ALL
    realizations: int = 300
    trials: int = 100_000
    steps: int = 1
    epsilon: float = 0.3
    distance_range: tuple[float, float] = (2.0, 8.0)
    sigma_v2_range: tuple[float, float] = (0.0, 0.5)
    sigma_v2_floor: float = 1e-6
    gamma: float = 1.0
    sigma_w2: float = 0.5
    sigma_theta2: float = 1.0
    alpha: float = 0.9
    sigma_u2: float | None = None
    p_init: float = 1.0
    sdp_tol: float = 1e-8
    sdp_gap_tol: float = 1e-7
    sdp_max_iter: int = 200
    workers: int = 1
    output_path: str = "results.csv"
    json_mirror: bool = False

    def __post_init__(self) -> None:
        self.seed = _as_int("seed", self.seed, minimum=0)
        _require("seed", self.seed < 2**64, "must fit in 64 bits")
        self.experiment = _as_enum("experiment", self.experiment, ExperimentKind)
        self.constraint_mode = _as_enum("constraint_mode", self.constraint_mode, ConstraintMode)

        default_sensors, default_power = EXPERIMENT_DEFAULTS[self.experiment]
        self.n_sensors = _as_int_list("n_sensors", self.n_sensors or default_sensors)
        self.p_max = _as_float_list("p_max", self.p_max or default_power)
        if self.experiment is not ExperimentKind.MSE_VS_SENSORS:
            _require("n_sensors", len(self.n_sensors) == 1, "this experiment takes a single N")
        if self.experiment is ExperimentKind.TRACKING_TRACE:
            _require("p_max", len(self.p_max) == 1, "the tracking trace takes a single P_max")

        self.realizations = _as_int("realizations", self.realizations, minimum=1)
        self.trials = _as_int("trials", self.trials, minimum=1)
        self.steps = _as_int("steps", self.steps, minimum=1)
        self.sdp_max_iter = _as_int("sdp_max_iter", self.sdp_max_iter, minimum=1)
        self.workers = _as_int("workers", self.workers, minimum=1)

        self.epsilon = _as_float("epsilon", self.epsilon)
        _require("epsilon", self.epsilon > 0, "must be positive")
        self.distance_range = _as_range("distance_range", self.distance_range, 0.0)
        _require("distance_range", self.distance_range[0] > 0, "distances must be positive")
        self.sigma_v2_range = _as_range("sigma_v2_range", self.sigma_v2_range, 0.0)
        self.sigma_v2_floor = _as_float("sigma_v2_floor", self.sigma_v2_floor)
        _require("sigma_v2_floor", self.sigma_v2_floor >= 0, "must be nonnegative")
        self.gamma = _as_float("gamma", self.gamma)
        _require("gamma", self.gamma >= 0, "must be nonnegative")
        self.sigma_w2 = _as_float("sigma_w2", self.sigma_w2)
        _require("sigma_w2", self.sigma_w2 > 0, "must be positive")
        self.sigma_theta2 = _as_float("sigma_theta2", self.sigma_theta2)
        _require("sigma_theta2", self.sigma_theta2 > 0, "must be positive")
        self.alpha = _as_float("alpha", self.alpha)
        _require("alpha", abs(self.alpha) <= 1, "must satisfy |alpha| <= 1")
        if self.sigma_u2 is None:
            _require("alpha", abs(self.alpha) < 1, "stationary mode needs |alpha| < 1; set sigma_u2")
        else:
            self.sigma_u2 = _as_float("sigma_u2", self.sigma_u2)
            _require("sigma_u2", self.sigma_u2 >= 0, "must be nonnegative")
        self.p_init = _as_float("p_init", self.p_init)
        _require("p_init", self.p_init > 0, "must be positive")
        self.sdp_tol = _as_float("sdp_tol", self.sdp_tol)
        _require("sdp_tol", self.sdp_tol > 0, "must be positive")
        self.sdp_gap_tol = _as_float("sdp_gap_tol", self.sdp_gap_tol)
        _require("sdp_gap_tol", self.sdp_gap_tol > 0, "must be positive")
        _require("output_path", isinstance(self.output_path, (str, Path)), "expected a path")
        self.output_path = str(self.output_path)
        self.json_mirror = _as_bool("json_mirror", self.json_mirror)

    @classmethod
    def from_yaml(cls, path: str | Path, **overrides: Any) -> "ExperimentConfig":
        """Load configuration from a YAML (or JSON) file.

        Environment variables take precedence over file values:
        - BEAMTRACK_SEED: master seed
        - BEAMTRACK_OUTPUT_PATH: CSV output path
        """
        return parse_config(path, **overrides)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, Enum):
                data[key] = value.value
            elif isinstance(value, tuple):
                data[key] = list(value)
        return data

    @property
    def stationary(self) -> bool:
        return self.sigma_u2 is None


def parse_config(
    source: str | Path | Mapping[str, Any] | None = None, **overrides: Any
) -> ExperimentConfig:
    """Resolve a config from a file or mapping, the environment and CLI overrides.

    Precedence: overrides (``None`` values ignored) > environment > source >
    defaults.
    """
    if source is None:
        data: Any = {}
    elif isinstance(source, Mapping):
        data = dict(source)
    else:
        with open(source) as f:
            data = yaml.safe_load(f)
        if data is None:
            data = {}
    if not isinstance(data, dict):
        raise ConfigError("config", f"expected a mapping at top level, got {type(data).__name__}")

    known = {f.name for f in fields(ExperimentConfig)}
    for key in data:
        if key not in known:
            raise ConfigError(str(key), "unknown configuration key")

    # Environment variables take precedence over the config file
    if os.environ.get(SEED_ENV):
        data["seed"] = os.environ[SEED_ENV]
    if os.environ.get(OUTPUT_PATH_ENV):
        data["output_path"] = os.environ[OUTPUT_PATH_ENV]

    for key, value in overrides.items():
        if key not in known:
            raise ConfigError(key, "unknown configuration key")
        if value is not None:
            data[key] = value

    if data.get("seed") is None:
        raise ConfigError(
            "seed",
            f"a seed is required; set it in the config file, via {SEED_ENV} or with --seed",
        )
    # explicit nulls fall back to the field default
    data = {key: value for key, value in data.items() if value is not None or key == "sigma_u2"}
    return ExperimentConfig(**data)
