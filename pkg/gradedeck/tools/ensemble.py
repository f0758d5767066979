# gradedeck/tools/ensemble.py

from __future__ import annotations

import itertools
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from ..core.errors import EmptyEnsemble, InvalidConfig, LengthMismatch, NoSignificantEnsemble
from ..learners.base import ALGORITHMS, AlgorithmId, ScoreVector
from .metrics import PValue, gini, null_distribution, pvalue_from_null

log = logging.getLogger(__name__)

Membership = Tuple[bool, bool, bool, bool, bool, bool]

# every non-empty subset of the six algorithms, in bit order
ALL_SUBSETS: Tuple[Membership, ...] = tuple(
    bits for bits in itertools.product((False, True), repeat=len(ALGORITHMS)) if any(bits)
)


class NullOn(str, Enum):
    AVG = "avg"
    INITIAL = "initial"


class Rationale(str, Enum):
    TOP_AVG = "TopAvg"
    TOP_AVG_AFTER_EXCLUSION = "TopAvgAfterExclusion"


def split_columns(n_splits: int) -> List[str]:
    return ["G"] + [f"G{i}" for i in range(1, n_splits)]


def average(g: Sequence[float]) -> float:
    """Row statistic Avg: arithmetic mean of the per-split Ginis."""
    return sum(g) / len(g)


def membership_of(members: Iterable[Union[AlgorithmId, str]]) -> Membership:
    chosen = {AlgorithmId(m) for m in members}
    return tuple(a in chosen for a in ALGORITHMS)  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# COMBINATION
# ---------------------------------------------------------------------------

def combine_scores(member_scores: Sequence[ScoreVector]) -> ScoreVector:
    """Element-wise mean of member Weak-probabilities."""
    if not member_scores:
        raise EmptyEnsemble("an ensemble needs at least one member")
    first = member_scores[0]
    for other in member_scores[1:]:
        if len(other) != len(first):
            raise LengthMismatch(f"member score lengths differ: {len(first)} vs {len(other)}")
        if not np.array_equal(other.index, first.index):
            raise LengthMismatch("member scores cover different students")
    if len(member_scores) == 1:
        return first
    stacked = np.vstack([m.values for m in member_scores])
    return ScoreVector(index=first.index, values=stacked.mean(axis=0))


# ---------------------------------------------------------------------------
# TABLE
# ---------------------------------------------------------------------------

class EnsembleRow(BaseModel):
    membership: Membership
    g: List[float]
    avg: float
    p: PValue

    @field_validator("membership")
    @classmethod
    def non_empty(cls, v: Membership) -> Membership:
        if not any(v):
            raise ValueError("an ensemble row needs at least one member")
        return v

    @property
    def members(self) -> List[AlgorithmId]:
        return [a for a, bit in zip(ALGORITHMS, self.membership) if bit]

    @property
    def n_members(self) -> int:
        return sum(self.membership)

    @property
    def bits_value(self) -> int:
        # RF is the most significant bit
        return int("".join("1" if b else "0" for b in self.membership), 2)

    @property
    def label(self) -> str:
        return "+".join(a.value for a in self.members)

    def sort_key(self) -> Tuple[float, float, int, int]:
        return (-self.avg, self.p.value, self.n_members, self.bits_value)

    def record(self, columns: Sequence[str]) -> Dict[str, Any]:
        out: Dict[str, Any] = {a.column: int(bit) for a, bit in zip(ALGORITHMS, self.membership)}
        out.update(dict(zip(columns, self.g)))
        out["Avg"] = self.avg
        out["p"] = self.p.value
        return out


class SelectionTable(BaseModel):
    rows: List[EnsembleRow]
    master_seed: int
    null_on: NullOn = NullOn.AVG
    null_samples: int
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @property
    def columns(self) -> List[str]:
        n = len(self.rows[0].g) if self.rows else 0
        return [a.column for a in ALGORITHMS] + split_columns(n) + ["Avg", "p"]

    def row_for(self, members: Iterable[Union[AlgorithmId, str]]) -> EnsembleRow:
        wanted = membership_of(members)
        for row in self.rows:
            if row.membership == wanted:
                return row
        raise KeyError(wanted)

    def singletons(self) -> List[EnsembleRow]:
        return [r for r in self.rows if r.n_members == 1]

    def to_frame(self) -> pd.DataFrame:
        split_cols = split_columns(len(self.rows[0].g)) if self.rows else []
        return pd.DataFrame([r.record(split_cols) for r in self.rows], columns=self.columns)

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, lineterminator="\n")

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv(), encoding="utf-8")
        return path


def subset_ginis(
    per_split_scores: Sequence[Mapping[AlgorithmId, ScoreVector]],
    per_split_labels: Sequence[Any],
    membership: Membership,
) -> List[float]:
    members = [a for a, bit in zip(ALGORITHMS, membership) if bit]
    return [
        gini(combine_scores([scores[a] for a in members]), labels)
        for scores, labels in zip(per_split_scores, per_split_labels)
    ]


def build_table(
    per_split_scores: Sequence[Mapping[AlgorithmId, ScoreVector]],
    per_split_labels: Sequence[Any],
    R: int,
    seed: int,
    *,
    null_on: Union[NullOn, str] = NullOn.AVG,
    chunk_size: int = 10_000,
    n_jobs: int = 1,
    provenance: Optional[Dict[str, Any]] = None,
    master_seed: Optional[int] = None,
) -> SelectionTable:
    """
    Score all 63 subsets on every split's test set and attach Monte-Carlo p-values.

    One null sample is shared by every row, so within a table a higher
    statistic never gets a larger p.
    """
    null_on = NullOn(null_on)
    if len(per_split_scores) != len(per_split_labels) or not per_split_scores:
        raise LengthMismatch(
            f"{len(per_split_scores)} score sets but {len(per_split_labels)} label sets"
        )
    for number, scores in enumerate(per_split_scores):
        missing = [a.value for a in ALGORITHMS if a not in scores]
        if missing:
            raise InvalidConfig(f"split {number} is missing scores for {missing}")

    null_sets = per_split_labels if null_on is NullOn.AVG else per_split_labels[:1]
    null = np.sort(null_distribution(null_sets, R, seed, chunk_size=chunk_size, n_jobs=n_jobs))

    rows = []
    for membership in ALL_SUBSETS:
        g = subset_ginis(per_split_scores, per_split_labels, membership)
        avg = average(g)
        observed = avg if null_on is NullOn.AVG else g[0]
        p = PValue(value=pvalue_from_null(observed, null, presorted=True), null_samples=R, null_seed=int(seed))
        rows.append(EnsembleRow(membership=membership, g=g, avg=avg, p=p))
    rows.sort(key=EnsembleRow.sort_key)
    log.info("selection table: top %s avg=%.4f p=%.4g", rows[0].label, rows[0].avg, rows[0].p.value)
    return SelectionTable(
        rows=rows,
        master_seed=int(seed if master_seed is None else master_seed),
        null_on=null_on,
        null_samples=R,
        provenance=dict(provenance or {}),
    )


# ---------------------------------------------------------------------------
# SELECTION
# ---------------------------------------------------------------------------

class SelectionDecision(BaseModel):
    chosen: EnsembleRow
    rationale: Rationale
    exclusions: List[AlgorithmId] = Field(default_factory=list)
    alpha: float


def select_best(
    table: SelectionTable,
    alpha: float = 0.05,
    exclusions: Sequence[Union[AlgorithmId, str]] = (),
) -> SelectionDecision:
    """First row, in table order, without excluded members and with p <= alpha."""
    if not table.rows:
        raise NoSignificantEnsemble("selection table is empty")
    excluded = [AlgorithmId(e) for e in exclusions]
    for row in table.rows:
        if any(a in excluded for a in row.members):
            continue
        if row.p.value <= alpha:
            rationale = Rationale.TOP_AVG_AFTER_EXCLUSION if excluded else Rationale.TOP_AVG
            return SelectionDecision(chosen=row, rationale=rationale, exclusions=excluded, alpha=alpha)
    smallest = min(r.p.value for r in table.rows)
    raise NoSignificantEnsemble(
        f"no ensemble{' without ' + ','.join(a.value for a in excluded) if excluded else ''} "
        f"has p <= {alpha} (smallest p in table {smallest:.4g})"
    )
