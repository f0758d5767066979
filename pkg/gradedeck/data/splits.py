# gradedeck/data/splits.py

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Any, Dict, Iterable, Sequence, Tuple

import numpy as np

from ..core.errors import DegenerateFold, InsufficientClassMembers, InvalidConfig
from ..core.seeding import derive_seed
from .dataset import Dataset, round_half_up, weak_mask

# first seed key for split derivation; other streams use other tags
SPLIT_STREAM = 0


def _sorted(values: Iterable[int]) -> np.ndarray:
    arr = np.sort(np.asarray(list(values), dtype=np.int64))
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Split:
    number: int
    seed: int
    train: np.ndarray
    test: np.ndarray

    @property
    def is_initial(self) -> bool:
        return self.number == 0

    @property
    def column(self) -> str:
        # selection-table column: G for the initial split, G1..Gk for the rest
        return "G" if self.number == 0 else f"G{self.number}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "number": self.number,
            "seed": self.seed,
            "train": self.train.tolist(),
            "test": self.test.tolist(),
        }


@dataclass(frozen=True, eq=False)
class SplitPlan:
    splits: Tuple[Split, ...]
    train_fraction: float
    master_seed: int

    @property
    def initial(self) -> Split:
        return self.splits[0]

    def __len__(self) -> int:
        return len(self.splits)

    def __iter__(self):
        return iter(self.splits)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "train_fraction": self.train_fraction,
            "master_seed": self.master_seed,
            "splits": [s.to_dict() for s in self.splits],
        }


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    train_indices: np.ndarray
    folds: Tuple[np.ndarray, ...]

    def complement(self, i: int) -> np.ndarray:
        return _sorted(np.setdiff1d(self.train_indices, self.folds[i]))

    def sizes(self) -> Tuple[int, ...]:
        return tuple(int(f.size) for f in self.folds)


def _check_fraction(frac: float) -> Decimal:
    exact = Decimal(str(frac))
    if not Decimal(0) < exact < Decimal(1):
        raise InvalidConfig(f"train fraction must lie strictly between 0 and 1, got {frac}")
    return exact


def stratified_split(ds: Dataset, frac: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-label proportional train/test partition.

    Each label contributes round_half_up(frac * count) students to train,
    clamped to [1, count - 1] so both sides see both labels.
    """
    exact = _check_fraction(frac)
    weak = weak_mask(ds.labels)
    groups = (np.flatnonzero(weak), np.flatnonzero(~weak))
    for name, members in zip(("Weak", "Good"), groups):
        if members.size < 2:
            raise InsufficientClassMembers(
                f"stratified split needs at least 2 {name} students, found {members.size}"
            )

    rng = np.random.default_rng(seed)
    train, test = [], []
    for members in groups:
        n_train = round_half_up(exact * members.size)
        n_train = min(max(n_train, 1), members.size - 1)
        shuffled = rng.permutation(members)
        train.extend(shuffled[:n_train])
        test.extend(shuffled[n_train:])
    return _sorted(train), _sorted(test)


def make_split_plan(ds: Dataset, seed: int, n_extra: int = 5, frac: float = 0.7) -> SplitPlan:
    """Initial split plus `n_extra` more, each seeded from (seed, split number)."""
    if n_extra < 0:
        raise InvalidConfig(f"extra_splits must be >= 0, got {n_extra}")
    splits = []
    for number in range(n_extra + 1):
        split_seed = derive_seed(seed, SPLIT_STREAM, number)
        train, test = stratified_split(ds, frac, split_seed)
        splits.append(Split(number=number, seed=split_seed, train=train, test=test))
    return SplitPlan(splits=tuple(splits), train_fraction=float(frac), master_seed=int(seed))


def kfold(train_indices: Sequence[int], k: int, seed: int, labels: Sequence[Any]) -> FoldPlan:
    """
    Stratified k-fold over `train_indices`; `labels` is aligned with them.

    Weak members then Good members, each shuffled, are dealt round-robin, so
    fold sizes differ by at most one and each label spreads evenly.
    """
    if k < 2:
        raise InvalidConfig(f"k must be >= 2, got {k}")
    indices = np.asarray(train_indices, dtype=np.int64)
    weak = weak_mask(labels)
    if weak.shape != indices.shape:
        raise InvalidConfig(f"{indices.size} indices but {weak.size} labels")
    if indices.size < k:
        raise DegenerateFold(f"cannot cut {indices.size} students into {k} folds")

    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(indices[weak]), rng.permutation(indices[~weak])])
    slot = np.arange(order.size) % k
    folds = tuple(_sorted(order[slot == i]) for i in range(k))

    weak_ids = set(indices[weak].tolist())
    for i, fold in enumerate(folds):
        rest = np.setdiff1d(indices, fold)
        n_weak = sum(1 for j in rest.tolist() if j in weak_ids)
        if n_weak == 0 or n_weak == rest.size:
            raise DegenerateFold(
                f"fold {i} complement has a single label (weak={n_weak}, n={rest.size})"
            )
    return FoldPlan(k=k, train_indices=_sorted(indices), folds=folds)
