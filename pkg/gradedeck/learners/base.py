# gradedeck/learners/base.py

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, ClassVar, Dict, List, Mapping, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..core.config import learner_defaults
from ..core.errors import InvalidParams


class AlgorithmId(str, Enum):
    # Declaration order is the table column order.
    RF = "RF"
    MLP = "MLP"
    NB = "NB"
    KNN = "KNN"
    LREG = "LREG"
    SVM = "SVM"

    @property
    def column(self) -> str:
        return _COLUMNS[self]

    @property
    def position(self) -> int:
        return ALGORITHMS.index(self)


_COLUMNS = {
    AlgorithmId.RF: "rf",
    AlgorithmId.MLP: "mlp",
    AlgorithmId.NB: "bn",
    AlgorithmId.KNN: "knn",
    AlgorithmId.LREG: "lreg",
    AlgorithmId.SVM: "svm",
}

ALGORITHMS: Tuple[AlgorithmId, ...] = tuple(AlgorithmId)

PARAM_KEYS: Dict[AlgorithmId, Tuple[str, ...]] = {
    AlgorithmId.RF: ("mtry",),
    AlgorithmId.MLP: ("neurons", "hidden_layers"),
    AlgorithmId.NB: ("usekernel",),
    AlgorithmId.KNN: ("k",),
    AlgorithmId.LREG: (),
    AlgorithmId.SVM: ("C", "sigma"),
}

_INT_KEYS = {"mtry", "neurons", "hidden_layers", "k"}
_BOOL_KEYS = {"usekernel"}

ParamValue = Union[bool, int, float]


def _coerce(name: str, value: Any) -> ParamValue:
    if name in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ValueError(f"{name} must be true or false, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ValueError(f"{name} must be numeric, got {value!r}")
    if name in _INT_KEYS:
        as_float = float(value)
        if not as_float.is_integer() or as_float < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
        return int(as_float)
    as_float = float(value)
    if not np.isfinite(as_float) or as_float <= 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")
    return as_float


class ParamPoint(BaseModel):
    """One hyperparameter setting for one algorithm."""

    model_config = ConfigDict(frozen=True)

    algorithm: AlgorithmId
    entries: Dict[str, ParamValue] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _normalize_entries(cls, data: Any) -> Any:
        if not isinstance(data, Mapping):
            return data
        algorithm = AlgorithmId(data.get("algorithm"))
        entries = dict(data.get("entries") or {})
        expected = PARAM_KEYS[algorithm]
        if set(entries) != set(expected):
            raise ValueError(
                f"{algorithm.value} takes parameters {list(expected)}, got {sorted(entries)}"
            )
        ordered = {name: _coerce(name, entries[name]) for name in expected}
        return {"algorithm": algorithm, "entries": ordered}

    @classmethod
    def build(cls, algorithm: Union[AlgorithmId, str], **entries: Any) -> "ParamPoint":
        try:
            return cls(algorithm=AlgorithmId(algorithm), entries=entries)
        except (ValidationError, ValueError) as exc:
            raise InvalidParams(str(exc)) from exc

    def get(self, name: str) -> ParamValue:
        return self.entries[name]

    def label(self) -> str:
        if not self.entries:
            return "-"
        return ",".join(f"{k}={v}" for k, v in self.entries.items())


class LearnerSettings(BaseModel):
    """Optimizer constants shared by all learners; see conf/gradedeck.yml `learners:`."""

    rf_trees: int = Field(500, ge=1)
    nb_variance_floor: float = Field(1e-9, gt=0)
    lreg_learning_rate: float = Field(0.01, gt=0)
    lreg_max_epochs: int = Field(5000, ge=1)
    lreg_tolerance: float = Field(1e-6, gt=0)
    mlp_learning_rate: float = Field(0.1, gt=0)
    mlp_max_epochs: int = Field(2000, ge=1)
    mlp_tolerance: float = Field(1e-6, gt=0)
    mlp_init_range: float = Field(0.5, gt=0)
    svm_tolerance: float = Field(1e-3, gt=0)
    svm_max_passes: int = Field(100, ge=1)
    svm_max_iterations: int = Field(5000, ge=1)
    # marks are multiplied by this before entering the SVM kernel
    svm_input_scale: float = Field(0.01, gt=0)

    @classmethod
    def from_config(cls, **overrides: Any) -> "LearnerSettings":
        merged = {**learner_defaults(), **{k: v for k, v in overrides.items() if v is not None}}
        return cls(**merged)


class Learner(ABC):
    """
    A fitted-in-place classifier over percent marks.

    `fit` receives X as float marks (n, d) and y with 1 for Weak.
    `predict_weak` returns probabilities of Weak in [0, 1].
    """

    algorithm: ClassVar[AlgorithmId]

    def __init__(self, params: ParamPoint, settings: LearnerSettings):
        if params.algorithm is not self.algorithm:
            raise InvalidParams(
                f"{self.algorithm.value} learner given {params.algorithm.value} parameters"
            )
        self.params = params
        self.settings = settings
        self.converged = True
        self.notes: List[str] = []

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        ...

    @abstractmethod
    def predict_weak(self, X: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def state_dict(self) -> Dict[str, Any]:
        """Fitted arrays as plain lists / scalars."""

    @abstractmethod
    def load_state(self, state: Mapping[str, Any]) -> None:
        ...


@dataclass(frozen=True, eq=False)
class TrainedModel:
    algorithm: AlgorithmId
    params: ParamPoint
    feature_names: Tuple[str, ...]
    train_seed: int
    learner: Learner
    converged: bool = True
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm.value,
            "params": dict(self.params.entries),
            "feature_names": list(self.feature_names),
            "train_seed": int(self.train_seed),
            "converged": bool(self.converged),
            "notes": list(self.notes),
        }


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Weak-probabilities aligned to the dataset rows they were computed for."""

    index: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        index = np.array(self.index, dtype=np.int64)
        values = np.array(self.values, dtype=float)
        if index.shape != values.shape or values.ndim != 1:
            raise ValueError(f"index/values length mismatch: {index.shape} vs {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("scores must be finite")
        index.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)
