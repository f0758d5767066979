"""Grade tables: raw exports, preprocessed datasets, splits and synthetic data."""

from .dataset import (
    Dataset,
    DatasetSummary,
    Label,
    RawDataset,
    Stage,
    preprocess,
    round_half_up,
    summarize,
    weak_mask,
)

__all__ = [
    "Dataset",
    "DatasetSummary",
    "Label",
    "RawDataset",
    "Stage",
    "preprocess",
    "round_half_up",
    "summarize",
    "weak_mask",
]
