# gradedeck/schemas.py

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator

from .core.errors import InvalidConfig
from .data.dataset import Stage
from .learners.base import PARAM_KEYS, AlgorithmId, ParamValue


# ---------------------------------------------------------------------------
# ENUMS
# ---------------------------------------------------------------------------

class GridProfile(str, Enum):
    DATASET1 = "Dataset1Like"
    DATASET2 = "Dataset2Like"


# ---------------------------------------------------------------------------
# DATASET SCHEMA
# ---------------------------------------------------------------------------

class DatasetSchema(BaseModel):
    """
    Column layout of one grade export.

    features maps each mark column to its maximum attainable mark, in the
    order the columns should appear in a Dataset.
    """

    name: str
    description: Optional[str] = None
    id_column: str = "id"
    grade_column: str = "final_grade"
    profile: GridProfile = GridProfile.DATASET1
    features: Dict[str, float]
    stages: Dict[Stage, List[str]] = Field(default_factory=dict)
    tau_presets: Dict[Stage, float] = Field(default_factory=dict)

    @field_validator("features", mode="before")
    @classmethod
    def stringify_feature_names(cls, v):
        # YAML turns a bare `1.1:` key into a float
        if isinstance(v, dict):
            return {str(k): val for k, val in v.items()}
        return v

    @field_validator("features")
    @classmethod
    def positive_maxima(cls, v: Dict[str, float]) -> Dict[str, float]:
        if not v:
            raise ValueError("schema must declare at least one feature")
        bad = {name: m for name, m in v.items() if not m > 0}
        if bad:
            raise ValueError(f"feature maxima must be > 0: {bad}")
        return v

    @field_validator("tau_presets")
    @classmethod
    def tau_in_unit_interval(cls, v: Dict[Stage, float]) -> Dict[Stage, float]:
        for stage, tau in v.items():
            if not 0.0 <= tau <= 1.0:
                raise ValueError(f"tau preset for {stage.value} must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def stage_features_declared(self) -> "DatasetSchema":
        reserved = {self.id_column, self.grade_column}
        clash = reserved.intersection(self.features)
        if clash:
            raise ValueError(f"feature names collide with id/grade columns: {sorted(clash)}")
        for stage, feats in self.stages.items():
            if not feats:
                raise ValueError(f"{stage.value} feature list must not be empty")
            unknown = [f for f in feats if f not in self.features]
            if unknown:
                raise ValueError(f"{stage.value} lists undeclared features {unknown}")
        return self

    @property
    def feature_names(self) -> List[str]:
        return list(self.features)

    def stage_features(self, stage: Stage) -> List[str]:
        return list(self.stages.get(Stage(stage), self.feature_names))


class SchemaConfig(BaseModel):
    """Top-level object loaded from schemas.yaml."""

    datasets: Dict[str, DatasetSchema]

    @field_validator("datasets", mode="before")
    @classmethod
    def attach_dataset_names(cls, v):
        if not isinstance(v, dict):
            return v
        named: Dict[str, object] = {}
        for name, entry in v.items():
            if isinstance(entry, DatasetSchema):
                named[name] = entry if entry.name == name else entry.model_copy(update={"name": name})
            elif isinstance(entry, dict):
                data = dict(entry)
                data.setdefault("name", name)
                named[name] = data
            else:
                named[name] = entry
        return named

    def get(self, name: str) -> DatasetSchema:
        try:
            return self.datasets[name]
        except KeyError:
            raise InvalidConfig(
                f"unknown schema {name!r}; known: {', '.join(sorted(self.datasets))}"
            ) from None


# ---------------------------------------------------------------------------
# GRID TABLES
# ---------------------------------------------------------------------------

AxisTable = Dict[AlgorithmId, Dict[str, List[ParamValue]]]


def _check_axes(table: AxisTable, where: str) -> AxisTable:
    for algorithm, axes in table.items():
        expected = set(PARAM_KEYS[algorithm])
        if set(axes) != expected:
            raise ValueError(
                f"{where}/{algorithm.value}: axes must be {sorted(expected)}, got {sorted(axes)}"
            )
        empty = [name for name, values in axes.items() if not values]
        if empty:
            raise ValueError(f"{where}/{algorithm.value}: empty axes {empty}")
    return table


class GridConfig(BaseModel):
    """
    Grid tables loaded from grids.yaml.

    `profiles` holds one table per dataset profile. `grids` is profile-agnostic
    and, when present for an algorithm, wins over the profile table. Override
    files passed with --grid may use either key.
    """

    profiles: Dict[GridProfile, AxisTable] = Field(default_factory=dict)
    grids: AxisTable = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def none_tables_are_empty(cls, data: Any) -> Any:
        # `LREG: {}` is fine, but `LREG:` with nothing after it loads as None
        if isinstance(data, dict):
            data = dict(data)
            for key in ("profiles", "grids"):
                if data.get(key) is None:
                    data.pop(key, None)
            profiles = data.get("profiles")
            if isinstance(profiles, dict):
                data["profiles"] = {
                    p: {a: (axes or {}) for a, axes in (table or {}).items()}
                    for p, table in profiles.items()
                }
            grids = data.get("grids")
            if isinstance(grids, dict):
                data["grids"] = {a: (axes or {}) for a, axes in grids.items()}
        return data

    @model_validator(mode="after")
    def axes_match_algorithms(self) -> "GridConfig":
        for profile, table in self.profiles.items():
            _check_axes(table, profile.value)
        _check_axes(self.grids, "grids")
        return self

    def axes_for(
        self, algorithm: AlgorithmId, profile: GridProfile
    ) -> Optional[Dict[str, List[ParamValue]]]:
        if algorithm in self.grids:
            return self.grids[algorithm]
        return self.profiles.get(profile, {}).get(algorithm)


# ---------------------------------------------------------------------------
# LOADERS
# ---------------------------------------------------------------------------

CONFIG_DIR = Path(__file__).resolve().parent / "config"
DEFAULT_SCHEMA_CONFIG_PATH = CONFIG_DIR / "schemas.yaml"
DEFAULT_GRID_CONFIG_PATH = CONFIG_DIR / "grids.yaml"


def _read_yaml(path: Path, what: str) -> Dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"{what} file not found: {path}")
    with path.open("r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def load_schema_config(path: Optional[Union[str, Path]] = None) -> SchemaConfig:
    """
    Load and validate dataset schemas from YAML.

    A file may hold the full `datasets:` mapping or a single bare schema
    (a mapping with a `features:` key), which is registered under its file stem.
    """
    path = Path(path) if path is not None else DEFAULT_SCHEMA_CONFIG_PATH
    raw = _read_yaml(path, "Schema config")
    if "datasets" not in raw and "features" in raw:
        raw = {"datasets": {raw.get("name") or path.stem: raw}}
    return SchemaConfig.model_validate(raw)


def load_grid_config(path: Optional[Union[str, Path]] = None) -> GridConfig:
    path = Path(path) if path is not None else DEFAULT_GRID_CONFIG_PATH
    return GridConfig.model_validate(_read_yaml(path, "Grid config"))


# ---------------------------------------------------------------------------
# DEBUG / MANUAL TEST ENTRYPOINT
# ---------------------------------------------------------------------------

def _debug_print_config(schemas: SchemaConfig, grids: GridConfig) -> None:
    print("=== SchemaConfig loaded ===\n")
    for name, s in schemas.datasets.items():
        print(f"- {name}: profile={s.profile.value}, features={len(s.features)}")
        for stage, feats in s.stages.items():
            tau = s.tau_presets.get(stage)
            print(f"    {stage.value}: {len(feats)} features, tau preset={tau}")

    print("\nGrids:")
    for profile, table in grids.profiles.items():
        print(f"- {profile.value}")
        for algorithm, axes in table.items():
            sizes = {k: len(v) for k, v in axes.items()}
            print(f"    {algorithm.value}: {sizes or 'no parameters'}")


if __name__ == "__main__":
    _debug_print_config(load_schema_config(), load_grid_config())
