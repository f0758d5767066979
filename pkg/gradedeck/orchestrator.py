# gradedeck/orchestrator.py

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

from joblib import Parallel, delayed
from pydantic import BaseModel, Field, ValidationError, field_validator

from . import __version__
from .core.config import pipeline_defaults, report_defaults
from .core.errors import DegenerateData, GradeDeckError, InvalidConfig, PipelineStageError
from .core.seeding import derive_seed
from .data.dataset import Dataset, DatasetSummary, RawDataset, Stage, preprocess, summarize
from .data.ingest import load_csv
from .data.splits import FoldPlan, Split, SplitPlan, kfold, make_split_plan
from .learners.base import ALGORITHMS, AlgorithmId, LearnerSettings, ParamPoint, ScoreVector, TrainedModel
from .learners.dump import dump_model
from .learners.training import score, train
from .schemas import DatasetSchema, GridConfig, GridProfile, load_grid_config, load_schema_config
from .tools.analysis import (
    BoundaryGrid,
    ImportanceRanking,
    PcaResult,
    decision_grid,
    pca,
    permutation_importance,
)
from .tools.ensemble import NullOn, SelectionDecision, SelectionTable, build_table, combine_scores, select_best
from .tools.metrics import (
    CapCurve,
    ConfusionMetrics,
    ScoreBand,
    accuracy_ratio,
    cap_area,
    cap_curve,
    capture_at,
    score_bands,
    students_needed,
    tau_grid,
    tau_sweep,
)
from .tools.tuning import ParamGrid, TuneResult, grid_for, grid_search

log = logging.getLogger(__name__)

# seed streams below the master seed; splits use data.splits.SPLIT_STREAM (0)
TRAIN_STREAM = 1
TUNE_STREAM = 2
NULL_STREAM = 3
IMPORTANCE_STREAM = 4
FOLD_STREAM = 5
BOUNDARY_STREAM = 6

MAX_NULL_SAMPLES = 1_000_000

# CapSummary label of the chosen ensemble; base learners use their algorithm id
ENSEMBLE_LABEL = "ensemble"


# ---------- Config and report models ----------


class RunConfig(BaseModel):
    """
    Everything one pipeline run depends on. The model dump is echoed into the
    report, so a run can be repeated from its own report.
    """

    input_path: Optional[str] = None
    schema_name: Optional[str] = None
    schema_path: Optional[str] = None
    stage: Stage = Stage.STAGE20
    train_fraction: float = Field(0.7, gt=0, lt=1)
    k_folds: int = Field(3, ge=2)
    extra_splits: int = Field(5, ge=0)
    null_samples: int = Field(10_000, ge=1, le=MAX_NULL_SAMPLES)
    null_on: NullOn = NullOn.AVG
    null_chunk_size: int = Field(10_000, ge=1)
    alpha: float = Field(0.05, gt=0, le=1)
    taus: List[float] = Field(default_factory=list)
    tau_preset: bool = False
    tau_sweep: bool = False
    seed: int = 20190601
    n_jobs: int = 1
    grid_path: Optional[str] = None
    exclusions: List[AlgorithmId] = Field(default_factory=list)
    profile: Optional[GridProfile] = None
    learners: LearnerSettings = Field(default_factory=LearnerSettings)

    @field_validator("taus")
    @classmethod
    def taus_in_unit_interval(cls, v: List[float]) -> List[float]:
        bad = [t for t in v if not 0.0 <= t <= 1.0]
        if bad:
            raise ValueError(f"tau values must lie in [0, 1], got {bad}")
        return v

    @field_validator("exclusions")
    @classmethod
    def unique_exclusions(cls, v: List[AlgorithmId]) -> List[AlgorithmId]:
        return sorted(set(v), key=lambda a: a.position)

    @field_validator("n_jobs")
    @classmethod
    def nonzero_jobs(cls, v: int) -> int:
        if v == 0:
            raise ValueError("n_jobs must not be 0 (use 1 for serial, -1 for all cores)")
        return v

    @classmethod
    def from_defaults(cls, **overrides: Any) -> "RunConfig":
        """Packaged pipeline defaults, then env overrides, then explicit non-None overrides."""
        merged: Dict[str, Any] = {k: v for k, v in pipeline_defaults().items() if v is not None}
        learner_overrides = overrides.pop("learners", None)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        try:
            if isinstance(learner_overrides, LearnerSettings):
                merged["learners"] = learner_overrides
            else:
                merged["learners"] = LearnerSettings.from_config(**(learner_overrides or {}))
            return cls(**merged)
        except ValidationError as exc:
            raise InvalidConfig(f"invalid run configuration: {exc}") from exc

    def echo(self) -> Dict[str, Any]:
        # worker count never changes results, so it stays out of the report
        return self.model_dump(mode="json", exclude={"n_jobs"})


class SplitInfo(BaseModel):
    number: int
    column: str
    seed: int
    n_train: int
    n_test: int
    n_test_weak: int


class TunedEntry(BaseModel):
    split: int
    algorithm: AlgorithmId
    params: ParamPoint
    cv_gini: float
    converged: bool = True
    notes: List[str] = Field(default_factory=list)


class CapSummary(BaseModel):
    label: str
    x: List[float]
    y: List[float]
    area: float
    accuracy_ratio: float
    students_needed_all: float
    checkpoint: float
    captured_at_checkpoint: float

    def curve(self) -> CapCurve:
        return CapCurve.from_dict({"x": self.x, "y": self.y})


class RunReport(BaseModel):
    """Union of everything a run produces. `timings` never reaches report.json."""

    version: str = __version__
    config: Dict[str, Any]
    schema_name: Optional[str] = None
    profile: GridProfile
    dataset: DatasetSummary
    splits: List[SplitInfo]
    table: SelectionTable
    decision: SelectionDecision
    taus: List[float] = Field(default_factory=list)
    metrics: List[ConfusionMetrics] = Field(default_factory=list)
    base_metrics: Dict[str, List[ConfusionMetrics]] = Field(default_factory=dict)
    sweep: List[ConfusionMetrics] = Field(default_factory=list)
    bands: List[ScoreBand] = Field(default_factory=list)
    caps: List[CapSummary] = Field(default_factory=list)
    tuned: List[TunedEntry] = Field(default_factory=list)
    tuning_curves: List[Dict[str, Any]] = Field(default_factory=list)
    pca: Dict[str, Any] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict, exclude=True)

    def cap_for(self, label: str) -> CapSummary:
        for cap in self.caps:
            if cap.label == label:
                return cap
        raise KeyError(label)

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"


@dataclass
class AnalysisResult:
    config: Dict[str, Any]
    dataset: DatasetSummary
    pca: PcaResult
    rankings: List[ImportanceRanking]
    boundary: BoundaryGrid
    tuned: List[TunedEntry] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": __version__,
            "config": self.config,
            "dataset": self.dataset.model_dump(mode="json"),
            "pca": self.pca.to_dict(),
            "importance": [r.model_dump(mode="json") for r in self.rankings],
            "boundary": self.boundary.to_dict(),
            "tuned": [t.model_dump(mode="json") for t in self.tuned],
        }


@dataclass
class _SplitFit:
    split: int
    algorithm: AlgorithmId
    tuned: TuneResult
    model: TrainedModel
    scores: ScoreVector


# ---------- Stage plumbing ----------


@contextmanager
def _stage(name: str, timings: Dict[str, float]) -> Iterator[None]:
    log.info("stage %s: start", name)
    started = time.perf_counter()
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        log.error("stage %s failed: %r", name, exc)
        raise PipelineStageError(name, exc) from exc
    finally:
        timings[name] = round(time.perf_counter() - started, 6)
    log.info("stage %s: done in %.3fs", name, timings[name])


def resolve_schema(config: RunConfig) -> DatasetSchema:
    if config.schema_path:
        schemas = load_schema_config(config.schema_path)
        if config.schema_name:
            return schemas.get(config.schema_name)
        if len(schemas.datasets) != 1:
            raise InvalidConfig(
                f"{config.schema_path} declares {len(schemas.datasets)} schemas; name one with --schema-name"
            )
        return next(iter(schemas.datasets.values()))
    if not config.schema_name:
        raise InvalidConfig("a schema name or schema file is required to read a grade export")
    return load_schema_config().get(config.schema_name)


def resolve_taus(config: RunConfig, schema: Optional[DatasetSchema]) -> List[float]:
    taus = list(config.taus)
    if config.tau_preset:
        if schema is None or config.stage not in schema.tau_presets:
            raise InvalidConfig(f"no tau preset for {config.stage.value}")
        taus.append(float(schema.tau_presets[config.stage]))
    seen: List[float] = []
    for t in taus:
        if t not in seen:
            seen.append(t)
    return seen


def _sweep_taus() -> List[float]:
    spec = report_defaults().get("tau_sweep") or {}
    return tau_grid(spec.get("start", 0.05), spec.get("stop", 0.95), spec.get("step", 0.05))


def _load_dataset(
    config: RunConfig,
    dataset: Optional[Union[RawDataset, Dataset]],
    timings: Dict[str, float],
) -> Tuple[Dataset, Optional[DatasetSchema]]:
    schema: Optional[DatasetSchema] = None
    with _stage("ingest", timings):
        if isinstance(dataset, Dataset):
            raw: Optional[RawDataset] = None
        elif isinstance(dataset, RawDataset):
            raw = dataset
        else:
            if not config.input_path:
                raise InvalidConfig("no input file given")
            schema = resolve_schema(config)
            raw = load_csv(config.input_path, schema)
    with _stage("preprocess", timings):
        ds = dataset if raw is None else preprocess(raw, config.stage)
        log.info("dataset: %d students, %d Weak, %d features", ds.n_students, ds.n_weak, ds.n_features)
    return ds, schema


def _profile(config: RunConfig, schema: Optional[DatasetSchema]) -> GridProfile:
    if config.profile is not None:
        return config.profile
    return schema.profile if schema is not None else GridProfile.DATASET1


def _grids(config: RunConfig, profile: GridProfile, n_features: int) -> Dict[AlgorithmId, ParamGrid]:
    override: Optional[GridConfig] = load_grid_config(config.grid_path) if config.grid_path else None
    return {a: grid_for(a, profile, n_features=n_features, override=override) for a in ALGORITHMS}


def _fold_plan(config: RunConfig, train_view: Dataset, split_number: int) -> FoldPlan:
    return kfold(
        train_view.row_index,
        config.k_folds,
        derive_seed(config.seed, FOLD_STREAM, split_number),
        train_view.labels,
    )


def _fit_one(
    ds: Dataset,
    split: Split,
    algorithm: AlgorithmId,
    grid: ParamGrid,
    config: RunConfig,
) -> _SplitFit:
    """Tune and train on the split's training view only; the test view is touched just to score."""
    train_view = ds.take(split.train)
    tuned = grid_search(
        algorithm,
        train_view,
        _fold_plan(config, train_view, split.number),
        derive_seed(config.seed, TUNE_STREAM, split.number, algorithm.position),
        grid=grid,
        settings=config.learners,
    )
    model = train(
        algorithm,
        tuned.best,
        train_view,
        derive_seed(config.seed, TRAIN_STREAM, split.number, algorithm.position),
        config.learners,
    )
    scores = score(model, ds.take(split.test))
    log.info(
        "split %d %s: best %s cv_gini=%.4f", split.number, algorithm.value, tuned.best.label(), tuned.cv_gini
    )
    return _SplitFit(split=split.number, algorithm=algorithm, tuned=tuned, model=model, scores=scores)


def _fit_all(
    ds: Dataset, plan: SplitPlan, grids: Dict[AlgorithmId, ParamGrid], config: RunConfig
) -> List[_SplitFit]:
    tasks = [(split, a) for split in plan for a in ALGORITHMS]
    return Parallel(n_jobs=config.n_jobs)(
        delayed(_fit_one)(ds, split, a, grids[a], config) for split, a in tasks
    )


def _tuned_entry(fit: _SplitFit) -> TunedEntry:
    return TunedEntry(
        split=fit.split,
        algorithm=fit.algorithm,
        params=fit.tuned.best,
        cv_gini=fit.tuned.cv_gini,
        converged=fit.model.converged,
        notes=list(fit.model.notes),
    )


def _cap_summary(label: str, scores: ScoreVector, labels: Any, checkpoint: float) -> CapSummary:
    curve = cap_curve(scores, labels)
    return CapSummary(
        label=label,
        x=curve.x.tolist(),
        y=curve.y.tolist(),
        area=cap_area(curve),
        accuracy_ratio=accuracy_ratio(curve),
        students_needed_all=students_needed(curve, 1.0),
        checkpoint=checkpoint,
        captured_at_checkpoint=capture_at(curve, checkpoint),
    )


def _dump_models(fits: List[_SplitFit], dump_dir: Path) -> List[Path]:
    written = []
    for fit in fits:
        if fit.split == 0:
            written.append(dump_model(fit.model, dump_dir / f"{fit.algorithm.value.lower()}.json"))
    log.info("wrote %d models to %s", len(written), dump_dir)
    return written


# ---------- Pipelines ----------


def run_pipeline(
    config: RunConfig,
    *,
    dataset: Optional[Union[RawDataset, Dataset]] = None,
    dump_dir: Optional[Union[str, Path]] = None,
) -> RunReport:
    """
    Full selection run.

    ingest -> preprocess -> split plan -> tune and train all six per split ->
    score test sets -> 63-row table with Monte-Carlo p-values -> select ->
    evaluate the chosen ensemble on the initial split -> PCA summary.

    `dataset` skips reading `config.input_path`; a RawDataset still goes
    through preprocessing.
    """
    timings: Dict[str, float] = {}
    ds, schema = _load_dataset(config, dataset, timings)
    profile = _profile(config, schema)

    with _stage("split", timings):
        taus = resolve_taus(config, schema)
        plan = make_split_plan(ds, config.seed, config.extra_splits, config.train_fraction)
        split_info = []
        for split in plan:
            test_view = ds.take(split.test)
            split_info.append(
                SplitInfo(
                    number=split.number,
                    column=split.column,
                    seed=split.seed,
                    n_train=int(split.train.size),
                    n_test=int(split.test.size),
                    n_test_weak=test_view.n_weak,
                )
            )

    with _stage("tune", timings):
        grids = _grids(config, profile, ds.n_features)
        fits = _fit_all(ds, plan, grids, config)
        if dump_dir is not None:
            _dump_models(fits, Path(dump_dir))

    per_split_scores: List[Dict[AlgorithmId, ScoreVector]] = [{} for _ in plan]
    for fit in fits:
        per_split_scores[fit.split][fit.algorithm] = fit.scores
    test_labels = [ds.take(split.test).labels for split in plan]

    with _stage("table", timings):
        table = build_table(
            per_split_scores,
            test_labels,
            config.null_samples,
            derive_seed(config.seed, NULL_STREAM),
            null_on=config.null_on,
            chunk_size=config.null_chunk_size,
            n_jobs=config.n_jobs,
            provenance={
                "dataset": schema.name if schema is not None else None,
                "stage": config.stage.value,
                "n_students": ds.n_students,
                "splits": len(plan),
            },
            master_seed=config.seed,
        )

    with _stage("select", timings):
        decision = select_best(table, config.alpha, config.exclusions)
        log.info(
            "selected %s avg=%.4f p=%.4g (%s)",
            decision.chosen.label,
            decision.chosen.avg,
            decision.chosen.p.value,
            decision.rationale.value,
        )

    rdefaults = report_defaults()
    with _stage("evaluate", timings):
        initial_scores = per_split_scores[0]
        labels = test_labels[0]
        ensemble = combine_scores([initial_scores[a] for a in decision.chosen.members])
        metrics = tau_sweep(ensemble, labels, taus)
        base_metrics = {a.value: tau_sweep(initial_scores[a], labels, taus) for a in ALGORITHMS} if taus else {}
        sweep = tau_sweep(ensemble, labels, _sweep_taus()) if config.tau_sweep else []
        n_bands = min(int(rdefaults.get("score_bands", 10)), len(ensemble))
        bands = score_bands(ensemble, labels, n_bands)
        checkpoint = float(rdefaults.get("capture_checkpoint", 0.3))
        caps = [_cap_summary(ENSEMBLE_LABEL, ensemble, labels, checkpoint)]
        caps += [_cap_summary(a.value, initial_scores[a], labels, checkpoint) for a in ALGORITHMS]

    with _stage("analysis", timings):
        try:
            pca_summary = pca(ds).to_dict()
        except DegenerateData as exc:
            # the PCA summary is optional in a selection run
            log.warning("analysis: skipping PCA summary (%s)", exc)
            pca_summary = {}

    report = RunReport(
        config=config.echo(),
        schema_name=schema.name if schema is not None else None,
        profile=profile,
        dataset=summarize(ds),
        splits=split_info,
        table=table,
        decision=decision,
        taus=taus,
        metrics=metrics,
        base_metrics=base_metrics,
        sweep=sweep,
        bands=bands,
        caps=caps,
        tuned=[_tuned_entry(f) for f in fits],
        tuning_curves=[row for f in fits for row in f.tuned.curve_rows(f.split)],
        pca=pca_summary,
        timings=timings,
    )
    return report


def run_analysis(
    config: RunConfig,
    *,
    dataset: Optional[Union[RawDataset, Dataset]] = None,
    n_repeats: Optional[int] = None,
    resolution: Optional[int] = None,
) -> AnalysisResult:
    """
    PCA over the whole dataset, permutation importance for all six tuned
    learners on the initial split, and an SVM decision grid over PC1/PC2
    of the initial training set.
    """
    timings: Dict[str, float] = {}
    ds, schema = _load_dataset(config, dataset, timings)
    profile = _profile(config, schema)
    rdefaults = report_defaults()
    n_repeats = int(rdefaults.get("importance_repeats", 10)) if n_repeats is None else n_repeats
    resolution = int(rdefaults.get("boundary_resolution", 50)) if resolution is None else resolution

    with _stage("split", timings):
        initial = make_split_plan(ds, config.seed, 0, config.train_fraction).initial
        train_view = ds.take(initial.train)
        test_view = ds.take(initial.test)

    with _stage("tune", timings):
        grids = _grids(config, profile, ds.n_features)
        fits: List[_SplitFit] = Parallel(n_jobs=config.n_jobs)(
            delayed(_fit_one)(ds, initial, a, grids[a], config) for a in ALGORITHMS
        )

    with _stage("analysis", timings):
        result_pca = pca(ds)
        rankings = [
            permutation_importance(
                fit.model, test_view, n_repeats, derive_seed(config.seed, IMPORTANCE_STREAM, fit.algorithm.position)
            )
            for fit in fits
        ]
        override = load_grid_config(config.grid_path) if config.grid_path else None
        boundary = decision_grid(
            train_view,
            resolution,
            derive_seed(config.seed, BOUNDARY_STREAM),
            profile=profile,
            k_folds=config.k_folds,
            settings=config.learners,
            override=override,
        )

    return AnalysisResult(
        config=config.echo(),
        dataset=summarize(ds),
        pca=result_pca,
        rankings=rankings,
        boundary=boundary,
        tuned=[_tuned_entry(f) for f in fits],
        timings=timings,
    )


def describe_error(exc: GradeDeckError) -> str:
    return exc.message if isinstance(exc, PipelineStageError) else exc.summary()
