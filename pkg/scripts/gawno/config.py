"""
Configuration management for GAWNO runs.

Defaults live in RunConfig.DEFAULTS, are overlaid by config/config.yaml under the
base directory, then by a user file passed with --config, and finally by
command-line flags.
"""

import copy
import os
from dataclasses import asdict
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigurationError
from .fdi import DetectConfig
from .networks import DiscriminatorSpec, GeneratorSpec
from .synthetic import FaultSpec, SynthConfig
from .training import TrainConfig


class RunConfig:
    """Sectioned run configuration shared by every subcommand."""

    DEFAULTS: dict[str, Any] = {
        "paths": {
            "base_dir": None,  # Set dynamically
            "data": None,
            "normal": None,
            "checkpoint": "runs/gawno.ckpt",
            "report": "runs/report.csv",
            "threshold": "runs/threshold.yaml",
            "log_csv": "runs/train_log.csv",
            "synth_out": "data/synthetic.csv",
            "logs": "logs",
        },
        "generator": {
            "features": None,  # Inferred from the training data
            "length": 64,
            "lifted_width": 32,
            "q_width": 64,
            "wavelet": "db6",
            "levels": 2,
            "retained_level": 1,
            "depth": 4,
            "output_activation": "tanh",
        },
        "discriminator": {
            "head_width": 32,
            "head_activation": "gelu",
        },
        "train": {
            "epochs": 200,
            "batch_size": 16,
            "lr": 1e-3,
            "weight_decay": 1e-5,
            "beta1": 0.9,
            "beta2": 0.999,
            "eps": 1e-8,
            "seed": 0,
            "window_stride": 8,
            "probe_draws": 8,
            "grad_clip": None,
            "label_smoothing": 0.0,
        },
        "detect": {
            "draws": 64,
            "seed": 0,
            "k": 3.0,
            "smoothing_window": 5,
            "smoothing_alignment": "trailing",
        },
        "synth": {
            "features": 5,
            "steps": 480,
            "seed": 0,
            "latent_periods": [48, 96, 32],
            "ar_coef": 0.7,
            "noise_std": 0.1,
        },
        "fault": {
            "kind": "step",
            "variable": 0,
            "onset": 160,
            "magnitude": 3.0,
        },
        "logging": {
            "level": "INFO",
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "file_enabled": False,
        },
    }

    _instance: Optional["RunConfig"] = None
    _config: dict[str, Any] = {}
    _base_dir: Optional[Path] = None

    def __new__(cls) -> "RunConfig":
        """Singleton pattern to ensure single configuration instance."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self) -> None:
        if self._initialized:
            return
        self._initialized = True
        self._base_dir = self._find_base_dir()
        self.reload()

    def _find_base_dir(self) -> Path:
        env_base = os.environ.get("GAWNO_BASE_DIR")
        if env_base:
            return Path(env_base)
        # scripts/gawno/config.py -> scripts/gawno -> scripts -> base
        return Path(__file__).resolve().parent.parent.parent

    def _load_config_file(self) -> None:
        config_path = self._base_dir / "config" / "config.yaml"
        if config_path.exists():
            self._merge_file(config_path)
        self._config["paths"]["base_dir"] = str(self._base_dir)

    def _merge_file(self, path: Path) -> None:
        with open(path, encoding="utf-8") as f:
            try:
                file_config = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigurationError(f"Config file {path} is not valid YAML: {e}") from e
        if not isinstance(file_config, dict):
            raise ConfigurationError(f"Config file {path} must contain a mapping of sections")
        self._merge_config(file_config)

    def _merge_config(self, new_config: dict[str, Any]) -> None:
        """Merge sections key by key, rejecting anything DEFAULTS does not know."""
        for section, values in new_config.items():
            if section not in self.DEFAULTS:
                raise ConfigurationError(f"Unknown config section: {section}")
            if not isinstance(values, dict):
                raise ConfigurationError(f"Config section {section} must be a mapping")
            for key, value in values.items():
                self._set(f"{section}.{key}", value)

    def _set(self, dotted: str, value: Any) -> None:
        section, _, key = dotted.partition(".")
        defaults = self.DEFAULTS.get(section)
        if defaults is None or key not in defaults:
            raise ConfigurationError(f"Unknown config key: {dotted}")
        self._config[section][key] = _coerce(dotted, defaults[key], value)

    @property
    def base_dir(self) -> Path:
        return self._base_dir

    @property
    def logs_dir(self) -> Path:
        return self._base_dir / self._config["paths"]["logs"]

    def path(self, key: str) -> Optional[Path]:
        """Resolve `paths.<key>`; relative paths are taken from the working directory."""
        value = self._config["paths"].get(key)
        return None if value is None else Path(value)

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value by key.

        Supports dot notation for nested keys (e.g., 'train.epochs').
        """
        value = self._config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def override(self, dotted: str, value: Any) -> None:
        """Set one value from a command-line flag; None leaves the current value."""
        if value is not None:
            self._set(dotted, value)

    def load(self, path: Path) -> None:
        """Reset to defaults plus the base config file, then merge `path` on top."""
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")
        self.reload()
        self._merge_file(path)

    def reload(self) -> None:
        self._config = copy.deepcopy(self.DEFAULTS)
        self._load_config_file()

    def as_dict(self) -> dict[str, Any]:
        return copy.deepcopy(self._config)

    def to_yaml(self) -> str:
        """Serialize every section except the computed base directory."""
        document = self.as_dict()
        document["paths"].pop("base_dir", None)
        return yaml.safe_dump(document, sort_keys=False)

    # Typed views onto the sections

    def generator_spec(self, features: Optional[int] = None) -> GeneratorSpec:
        section = dict(self._config["generator"])
        section["features"] = features if features is not None else section["features"]
        if section["features"] is None:
            raise ConfigurationError("generator.features is not set and could not be inferred")
        return GeneratorSpec(**section)

    def discriminator_spec(self, features: Optional[int] = None) -> DiscriminatorSpec:
        base = asdict(self.generator_spec(features))
        return DiscriminatorSpec(**base, **self._config["discriminator"])

    def train_config(self, features: Optional[int] = None) -> TrainConfig:
        return TrainConfig(
            generator=self.generator_spec(features),
            discriminator=self.discriminator_spec(features),
            **self._config["train"],
        )

    def detect_config(self) -> DetectConfig:
        return DetectConfig(**self._config["detect"])

    def synth_config(self) -> SynthConfig:
        section = dict(self._config["synth"])
        section["latent_periods"] = tuple(section["latent_periods"])
        return SynthConfig(**section)

    def fault_spec(self) -> Optional[FaultSpec]:
        """The configured fault, or None when `fault.kind` is "none"."""
        section = self._config["fault"]
        if section["kind"] == "none":
            return None
        return FaultSpec(**section)


# Typed stand-ins for keys whose default is null.
NULLABLE_TYPES: dict[str, Any] = {
    "generator.features": 0,
    "train.grad_clip": 0.0,
}


def _coerce(dotted: str, default: Any, value: Any) -> Any:
    """Check `value` against the type of its default; null is allowed where the default is null."""
    if value is None:
        return value
    if default is None:
        default = "" if dotted.startswith("paths.") else NULLABLE_TYPES.get(dotted)
        if default is None:
            return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{dotted} must be true or false, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{dotted} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{dotted} must be an integer, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigurationError(f"{dotted} must be a list, got {value!r}")
        return list(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigurationError(f"{dotted} must be a string, got {value!r}")
    return value


def get_config() -> RunConfig:
    """Return the process-wide configuration instance."""
    return RunConfig()
