# gradedeck/learners/dump.py

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Union

from ..core.errors import UnknownModelFormat
from .base import AlgorithmId, LearnerSettings, ParamPoint, TrainedModel
from .training import make_learner

FORMAT_VERSION = 1


def model_to_document(model: TrainedModel) -> Dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        **model.to_dict(),
        "settings": model.learner.settings.model_dump(),
        "state": model.learner.state_dict(),
    }


def model_from_document(doc: Dict[str, Any]) -> TrainedModel:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnknownModelFormat(f"unsupported model format_version {version!r}")
    try:
        algorithm = AlgorithmId(doc["algorithm"])
        params = ParamPoint.build(algorithm, **doc["params"])
        learner = make_learner(algorithm, params, LearnerSettings(**doc.get("settings", {})))
        learner.load_state(doc["state"])
    except (KeyError, ValueError, TypeError) as exc:
        raise UnknownModelFormat(f"malformed model document: {exc!r}") from exc
    learner.converged = bool(doc.get("converged", True))
    learner.notes = list(doc.get("notes", []))
    return TrainedModel(
        algorithm=algorithm,
        params=params,
        feature_names=tuple(doc["feature_names"]),
        train_seed=int(doc["train_seed"]),
        learner=learner,
        converged=learner.converged,
        notes=tuple(learner.notes),
    )


def dump_model(model: TrainedModel, path: Union[str, Path]) -> Path:
    """Write a self-describing JSON audit file; floats keep their full repr."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_document(model), indent=1) + "\n", encoding="utf-8")
    return path


def load_model(path: Union[str, Path]) -> TrainedModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UnknownModelFormat(f"{path.name} is not a model document: {exc}") from exc
    if not isinstance(doc, dict):
        raise UnknownModelFormat(f"{path.name} is not a model document")
    return model_from_document(doc)
