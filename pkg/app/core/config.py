"""
Configuration Management for the Network Booster Planner
Handles environment settings and per-scenario configuration with validation
"""

import logging
import tomllib
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Application settings with validation and type checking"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_ignore_empty=True,
        extra="ignore",
        case_sensitive=False
    )

    # Application Configuration
    app_name: str = "Network Booster Planner"
    app_version: str = "1.0.0"
    environment: str = "development"  # development, staging, production
    debug: bool = False
    log_level: str = "INFO"

    # Solver Configuration
    solver_backend: str = "highs"
    feasibility_tol: float = Field(1e-6, gt=0)
    optimality_tol: float = Field(1e-6, gt=0)
    solver_time_limit: Optional[float] = None  # seconds

    # Network physics
    base_mva: float = Field(100.0, gt=0)
    period_hours: float = Field(8760.0, gt=0)
    slack_bus: Optional[str] = None  # first bus in file order when unset
    bridge_tol: float = Field(1e-6, gt=0)

    # Verification
    verify_tol: float = Field(1e-6, gt=0)

    # Outputs and execution
    output_dir: str = "results"
    sweep_workers: int = Field(1, ge=1)

    # Snapshot reduction (k-means)
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-6
    kmeans_n_init: int = 10


@lru_cache()
def get_settings() -> Settings:
    """Get application settings (cached)"""
    return Settings()


class PlanningModel(str, Enum):
    """Available planning formulations"""
    PREVENTIVE = "preventive"
    SEQUENTIAL = "sequential"
    SIMULTANEOUS = "simultaneous"


class ScenarioConfig(BaseModel):
    """One planning scenario: CO2 target, TATL relaxation and booster costs.

    Costs are annualized (€/MW/a for capacity, €/MWh for dispatch). Booster
    dispatch costs default to 0.01 €/MWh so that boosters stay idle unless an
    outage needs them and never charge and discharge at the same bus.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    model: PlanningModel = PlanningModel.SEQUENTIAL

    co2_cap: Optional[float] = Field(None, ge=0, description="Absolute cap in tCO2/a")
    co2_reduction: Optional[float] = Field(None, ge=0, lt=1, description="Reduction vs. baseline")
    co2_baseline: Optional[float] = Field(None, ge=0, description="Reference emissions in tCO2/a")

    tatl_factor: float = Field(1.3, ge=1.0)

    nb_capital_cost_up: float = Field(23000.0, ge=0)
    nb_capital_cost_down: float = Field(23000.0, ge=0)
    nb_dispatch_cost_up: float = Field(0.01, ge=0)
    nb_dispatch_cost_down: float = Field(0.01, ge=0)

    contingencies: Optional[List[str]] = Field(
        None, description="Outaged lines; all non-bridge lines when unset"
    )
    slack_bus: Optional[str] = None

    @model_validator(mode="after")
    def _check_co2_target(self) -> "ScenarioConfig":
        if self.co2_cap is None and self.co2_reduction is not None and self.co2_baseline is None:
            raise ValueError("co2_reduction requires co2_baseline")
        return self

    def resolved_co2_cap(self) -> Optional[float]:
        """Absolute CO2 cap in tCO2/a, or None when emissions are unconstrained"""
        if self.co2_cap is not None:
            return self.co2_cap
        if self.co2_reduction is not None:
            return (1.0 - self.co2_reduction) * self.co2_baseline
        return None

    def with_overrides(self, **fields: Any) -> "ScenarioConfig":
        """Return a re-validated copy with the given fields replaced"""
        overrides = {key: value for key, value in fields.items() if value is not None}
        if "co2_reduction" in overrides and "co2_cap" not in overrides:
            overrides["co2_cap"] = None
        try:
            return ScenarioConfig.model_validate({**self.model_dump(), **overrides})
        except ValidationError as e:
            raise ConfigurationError(_describe_validation_error(e)) from e

    @classmethod
    def from_toml(cls, path: Path | str, **overrides: Any) -> "ScenarioConfig":
        """
        Load a flat TOML scenario file; non-None overrides win over file values.

        Args:
            path: TOML file with ScenarioConfig keys
            **overrides: Values given on the command line

        Returns:
            Validated scenario configuration
        """
        path = Path(path)
        try:
            with path.open("rb") as handle:
                data = tomllib.load(handle)
        except FileNotFoundError as e:
            raise ConfigurationError(f"config file not found: {path}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"{path}: {e}") from e

        data.update({key: value for key, value in overrides.items() if value is not None})
        if "co2_reduction" in overrides and overrides["co2_reduction"] is not None:
            data.pop("co2_cap", None)

        try:
            config = cls.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"{path}: {_describe_validation_error(e)}") from e

        logger.debug(f"Loaded scenario '{config.name}' from {path}")
        return config


def _describe_validation_error(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        field = ".".join(str(loc) for loc in item["loc"]) or "config"
        parts.append(f"{field}: {item['msg']}")
    return "; ".join(parts)
