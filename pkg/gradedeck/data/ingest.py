# gradedeck/data/ingest.py

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd
import yaml

from ..core.errors import DuplicateId, MissingColumn, NonNumericCell
from ..schemas import DatasetSchema
from .dataset import Dataset, RawDataset

log = logging.getLogger(__name__)


def _parse_cell(text: str, row: int, column: str, *, allow_empty: bool) -> float:
    s = text.strip()
    if s == "":
        if allow_empty:
            return math.nan
        raise NonNumericCell(f"row {row}: {column} is empty")
    try:
        value = float(s)
    except ValueError:
        raise NonNumericCell(f"row {row}: {column}={text!r} is not a number") from None
    if not math.isfinite(value):
        raise NonNumericCell(f"row {row}: {column}={text!r} is not finite")
    return value


def load_csv(path: Union[str, Path], schema: DatasetSchema) -> RawDataset:
    """
    Read a grade export. Empty mark cells stay absent (NaN) until preprocess.

    Columns not named in the schema are ignored; row order is preserved.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Grade file not found: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    frame.columns = [str(c).strip() for c in frame.columns]

    needed = [schema.id_column, *schema.feature_names, schema.grade_column]
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise MissingColumn(f"{path.name}: missing declared columns {missing}")

    ids = [s.strip() for s in frame[schema.id_column].tolist()]
    dupes = pd.Series(ids)[pd.Series(ids).duplicated()].unique().tolist()
    if dupes:
        raise DuplicateId(f"{path.name}: duplicate student ids {dupes}")

    # header is line 1, so data row i sits on line i + 2
    marks = np.empty((len(ids), len(schema.features)), dtype=float)
    for j, name in enumerate(schema.feature_names):
        for i, cell in enumerate(frame[name].tolist()):
            marks[i, j] = _parse_cell(cell, i + 2, name, allow_empty=True)
    grades = np.array(
        [
            _parse_cell(cell, i + 2, schema.grade_column, allow_empty=False)
            for i, cell in enumerate(frame[schema.grade_column].tolist())
        ],
        dtype=float,
    )

    log.info("loaded %d students x %d features from %s", len(ids), len(schema.features), path)
    return RawDataset(
        student_ids=tuple(ids),
        feature_names=tuple(schema.feature_names),
        raw_marks=marks,
        feature_max=np.array([schema.features[f] for f in schema.feature_names], dtype=float),
        final_grade=grades,
        stage_features={stage: tuple(feats) for stage, feats in schema.stages.items()},
    )


def _fmt_mark(value: float) -> str:
    if math.isnan(value):
        return ""
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def write_raw_csv(
    path: Union[str, Path],
    student_ids: Sequence[str],
    feature_names: Sequence[str],
    marks: np.ndarray,
    final_grade: Sequence[float],
    *,
    id_column: str = "id",
    grade_column: str = "final_grade",
) -> Path:
    """Write marks in the input layout that `load_csv` reads back."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {name: [_fmt_mark(v) for v in np.asarray(marks, dtype=float)[:, j]] for j, name in enumerate(feature_names)}
    )
    frame.insert(0, id_column, list(student_ids))
    frame[grade_column] = [_fmt_mark(float(g)) for g in final_grade]
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def write_dataset_csv(ds: Dataset, path: Union[str, Path]) -> Path:
    """Preprocessed export: id, integer percents, final_grade, label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = ds.to_frame()
    frame["final_grade"] = [_fmt_mark(float(g)) for g in ds.final_grade]
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def write_schema_yaml(schema: DatasetSchema, path: Union[str, Path]) -> Path:
    """Write a single-schema sidecar file that `load_schema_config` accepts."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "name": schema.name,
        "description": schema.description,
        "id_column": schema.id_column,
        "grade_column": schema.grade_column,
        "profile": schema.profile.value,
        "features": {k: float(v) for k, v in schema.features.items()},
        "stages": {stage.value: list(feats) for stage, feats in schema.stages.items()},
        "tau_presets": {stage.value: float(t) for stage, t in schema.tau_presets.items()},
    }
    with path.open("w", encoding="utf-8") as f:
        yaml.safe_dump(doc, f, sort_keys=False)
    return path
