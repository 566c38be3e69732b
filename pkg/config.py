"""Pipeline configuration: pydantic models plus the YAML loader.

Defaults are the published hyperparameters. Length-valued keys take a bare
number in meters or a string with a unit ("5 cm", "0.05 m", "50 mm");
everything is stored in meters. Unknown keys are rejected.

Example config.yaml:
    seed: 7
    conversion:
      fpf_delta: 10 cm
    utcl:
      mu: 20 cm
"""

import re
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

_UNITS_PER_METER = {"m": 1.0, "cm": 100.0, "mm": 1000.0}
_LENGTH_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(m|cm|mm)?\s*$")


class ConfigError(ValueError):
    """Raised when a configuration file cannot be parsed or violates a range."""


def parse_length(value: Any) -> Any:
    """Convert "5 cm" style strings to meters; numbers pass through as meters."""
    if isinstance(value, str):
        match = _LENGTH_PATTERN.match(value)
        if not match:
            raise ValueError(f"expected a length like '5 cm' or '0.05 m', got {value!r}")
        return float(match.group(1)) / _UNITS_PER_METER[match.group(2) or "m"]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PreprocessConfig(_Section):
    box_xy_half: float = 1.5
    box_z_min: float = 0.0
    box_z_max: float = 2.0
    rot_max_deg: float = 10.0
    scale_min: float = 0.9
    scale_max: float = 1.1
    trans_max: float = 0.01
    target_points: int = 256

    @field_validator("box_xy_half", "box_z_min", "box_z_max", "trans_max", mode="before")
    @classmethod
    def lengths_in_meters(cls, value: Any) -> Any:
        return parse_length(value)

    @model_validator(mode="after")
    def check_ranges(self) -> "PreprocessConfig":
        if self.box_xy_half <= 0:
            raise ValueError("box_xy_half must be > 0")
        if not self.box_z_min < self.box_z_max:
            raise ValueError("box_z_min must be < box_z_max")
        if self.rot_max_deg < 0:
            raise ValueError("rot_max_deg must be >= 0")
        if not 0 < self.scale_min <= self.scale_max:
            raise ValueError("scale_min must satisfy 0 < scale_min <= scale_max")
        if self.trans_max < 0:
            raise ValueError("trans_max must be >= 0")
        if self.target_points < 1:
            raise ValueError("target_points must be >= 1")
        return self


class StageToggles(_Section):
    """Which conversion stages run; all on reproduces the full pipeline."""
    npa: bool = True
    fpf: bool = True
    rs: bool = True
    ni: bool = True


class ConversionConfig(_Section):
    npa_sigma: float = 0.02
    npa_prob: float = 0.5
    npa_count: int = 32
    fpf_gamma: float = 0.02
    fpf_delta: float = 0.05
    rs_rmin: float = 0.125
    rs_rmax: float = 1.0
    rs_min_points: int = 128
    ni_sigma: float = 0.05
    idw_epsilon: float = 1e-6
    stages: StageToggles = StageToggles()

    @field_validator("npa_sigma", "fpf_gamma", "fpf_delta", "ni_sigma", mode="before")
    @classmethod
    def lengths_in_meters(cls, value: Any) -> Any:
        return parse_length(value)

    @model_validator(mode="after")
    def check_ranges(self) -> "ConversionConfig":
        if not 0.0 <= self.npa_prob <= 1.0:
            raise ValueError("npa_prob must be within [0, 1]")
        if self.npa_count < 0:
            raise ValueError("npa_count must be >= 0")
        if self.fpf_gamma <= 0:
            raise ValueError("fpf_gamma must be > 0")
        if self.fpf_gamma > self.fpf_delta:
            raise ValueError("fpf_gamma must be <= fpf_delta")
        if not 0.0 < self.rs_rmin <= self.rs_rmax <= 1.0:
            raise ValueError("rs_rmin/rs_rmax must satisfy 0 < rs_rmin <= rs_rmax <= 1")
        if self.rs_min_points < 0:
            raise ValueError("rs_min_points must be >= 0")
        if self.npa_sigma < 0 or self.ni_sigma < 0:
            raise ValueError("npa_sigma and ni_sigma must be >= 0")
        if self.idw_epsilon <= 0:
            raise ValueError("idw_epsilon must be > 0")
        return self


class UtclConfig(_Section):
    mu: float = 0.20
    eta: float = 0.05
    rho: float = 0.05
    lambda_con: float = 0.01

    @field_validator("mu", "eta", "rho", mode="before")
    @classmethod
    def lengths_in_meters(cls, value: Any) -> Any:
        return parse_length(value)

    @model_validator(mode="after")
    def check_ranges(self) -> "UtclConfig":
        if min(self.mu, self.eta, self.rho) <= 0:
            raise ValueError("mu, eta and rho must be > 0")
        if self.lambda_con < 0:
            raise ValueError("lambda_con must be >= 0")
        return self


class Config(_Section):
    preprocess: PreprocessConfig = PreprocessConfig()
    conversion: ConversionConfig = ConversionConfig()
    utcl: UtclConfig = UtclConfig()
    seed: Optional[int] = None


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        key = ".".join(str(p) for p in error["loc"]) or "<root>"
        message = error["msg"].removeprefix("Value error, ")
        parts.append(f"{key}: {message}")
    return "; ".join(parts)


def load_config(path: Path | None) -> Config:
    """Load a YAML config; ``None`` or an empty file gives every default.

    Raises:
        ConfigError: On unreadable YAML, unknown keys or range violations;
            the message names the offending dotted key.
    """
    if path is None:
        return Config()
    try:
        with Path(path).open("r", encoding="utf-8") as stream:
            data = yaml.safe_load(stream)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        return Config.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {_describe(exc)}") from exc
