# core/errors.py
from __future__ import annotations

from typing import Optional


class GradeDeckError(Exception):
    """Base error: every subclass carries a stable machine-readable code."""

    code: str = "GRADEDECK_ERROR"

    def __init__(self, message: str = ""):
        self.message = message or self.__class__.__name__
        super().__init__(self.message)

    def summary(self) -> str:
        return f"{self.code}: {self.message}"


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------

class DuplicateId(GradeDeckError):
    code = "DUPLICATE_ID"


class NonNumericCell(GradeDeckError):
    code = "NON_NUMERIC_CELL"


class MissingColumn(GradeDeckError):
    code = "MISSING_COLUMN"


class InvalidRawDataset(GradeDeckError):
    code = "INVALID_RAW_DATASET"


class InsufficientClassMembers(GradeDeckError):
    code = "INSUFFICIENT_CLASS_MEMBERS"


class DegenerateFold(GradeDeckError):
    code = "DEGENERATE_FOLD"


class DegenerateData(GradeDeckError):
    code = "DEGENERATE_DATA"


class InvalidSpec(GradeDeckError):
    code = "INVALID_SPEC"


# ---------------------------------------------------------------------------
# learners
# ---------------------------------------------------------------------------

class SingleClassTrainingSet(GradeDeckError):
    code = "SINGLE_CLASS_TRAINING_SET"


class SchemaMismatch(GradeDeckError):
    code = "SCHEMA_MISMATCH"


class InvalidParams(GradeDeckError):
    code = "INVALID_PARAMS"


class UnknownModelFormat(GradeDeckError):
    code = "UNKNOWN_MODEL_FORMAT"


# ---------------------------------------------------------------------------
# metrics / selection
# ---------------------------------------------------------------------------

class SingleClassSample(GradeDeckError):
    code = "SINGLE_CLASS_SAMPLE"


class InvalidRepeats(GradeDeckError):
    code = "INVALID_REPEATS"


class EmptyEnsemble(GradeDeckError):
    code = "EMPTY_ENSEMBLE"


class LengthMismatch(GradeDeckError):
    code = "LENGTH_MISMATCH"


class NoSignificantEnsemble(GradeDeckError):
    code = "NO_SIGNIFICANT_ENSEMBLE"


class InvalidConfig(GradeDeckError):
    code = "INVALID_CONFIG"


class PipelineStageError(GradeDeckError):
    """Wraps any failure inside a pipeline stage so the CLI can name the stage."""

    code = "PIPELINE_STAGE_FAILED"

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        cause_code: Optional[str] = getattr(cause, "code", None)
        detail = getattr(cause, "message", None) or str(cause) or cause.__class__.__name__
        label = cause_code or cause.__class__.__name__
        super().__init__(f"[{stage}] {label}: {detail}")
