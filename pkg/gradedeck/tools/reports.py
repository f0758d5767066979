from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd

from ..learners.base import ALGORITHMS
from ..orchestrator import ENSEMBLE_LABEL, AnalysisResult, RunReport
from .ensemble import split_columns
from .metrics import ConfusionMetrics

log = logging.getLogger(__name__)

REPORT_JSON = "report.json"
TIMINGS_JSON = "timings.json"
TEXT_ROWS = 10

_METRIC_COLUMNS = ["tau", "tp", "fp", "tn", "fn", "accuracy", "precision", "sensitivity", "f_measure", "specificity"]


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def _write_json(payload: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def _fmt(value: Optional[float], digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def metrics_frame(rows: Dict[str, Sequence[ConfusionMetrics]]) -> pd.DataFrame:
    records = [{"model": model, **m.model_dump()} for model, ms in rows.items() for m in ms]
    return pd.DataFrame(records, columns=["model", *_METRIC_COLUMNS])


def load_report(path: Union[str, Path]) -> RunReport:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_JSON
    if not path.exists():
        raise FileNotFoundError(f"Report not found: {path}")
    return RunReport.model_validate_json(path.read_text(encoding="utf-8"))


# ---------- selection run ----------


def _table_lines(report: RunReport, limit: int) -> List[str]:
    n_splits = len(report.table.rows[0].g) if report.table.rows else 0
    algo_head = " ".join(f"{a.column:>4}" for a in ALGORITHMS)
    split_head = " ".join(f"{c:>6}" for c in split_columns(n_splits))
    lines = [f"{algo_head} | {split_head} | {'Avg':>6} {'p':>8}"]
    for row in report.table.rows[:limit]:
        bits = " ".join(f"{int(b):>4}" for b in row.membership)
        ginis = " ".join(f"{g:>6.3f}" for g in row.g)
        lines.append(f"{bits} | {ginis} | {row.avg:>6.3f} {row.p.value:>8.4g}")
    return lines


def _metric_line(label: str, m: ConfusionMetrics) -> str:
    return (
        f"  {label:<10} tau={m.tau:<6g} acc={_fmt(m.accuracy)} prec={_fmt(m.precision)} "
        f"sens={_fmt(m.sensitivity)} F={_fmt(m.f_measure)} spec={_fmt(m.specificity)}"
    )


def render_text(report: RunReport, limit: int = TEXT_ROWS) -> str:
    ds = report.dataset
    chosen = report.decision.chosen
    out = [
        f"gradedeck {report.version}  dataset={report.schema_name or '-'}  stage={ds.stage.value}  "
        f"profile={report.profile.value}",
        f"{ds.n_students} students, {ds.n_weak} Weak ({ds.weak_fraction:.1%}), {ds.n_features} features, "
        f"{len(report.splits)} splits, R={report.table.null_samples}",
        "",
        f"Selection table (top {min(limit, len(report.table.rows))} of {len(report.table.rows)}):",
        *_table_lines(report, limit),
        "",
        f"Chosen ensemble: {chosen.label}  Avg={chosen.avg:.3f}  p={chosen.p.value:.4g}  "
        f"[{report.decision.rationale.value}]",
    ]
    if report.decision.exclusions:
        out.append("  excluded: " + ", ".join(a.value for a in report.decision.exclusions))

    out.append("")
    if report.metrics:
        out.append("Metrics on the initial test split:")
        for m in report.metrics:
            out.append(_metric_line("ensemble", m))
        for algo, ms in report.base_metrics.items():
            for m in ms:
                out.append(_metric_line(algo, m))
    else:
        out.append("No tau given; metrics section omitted.")

    try:
        cap = report.cap_for(ENSEMBLE_LABEL)
    except KeyError:
        cap = None
    if cap is not None:
        out += [
            "",
            f"CAP: accuracy ratio {cap.accuracy_ratio:.3f}; "
            f"{cap.captured_at_checkpoint:.1%} of Weak within the first {cap.checkpoint:.0%} of students; "
            f"all Weak within the first {cap.students_needed_all:.1%}",
        ]
    if report.bands:
        out.append("Weak rate by score band: " + " ".join(f"{b.weak_rate:.2f}" for b in report.bands))
    if report.pca:
        pct = report.pca.get("explained_variance_pct", [])
        out.append("PCA explained variance: " + ", ".join(f"PC{i + 1}={v:.1f}%" for i, v in enumerate(pct[:4])))
    return "\n".join(out) + "\n"


def write_report_files(report: RunReport, out_dir: Union[str, Path]) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [report.table.write_csv(out / "selection_table.csv")]

    for cap in report.caps:
        files.append(_write_frame(cap.curve().to_frame(), out / f"cap_{cap.label.lower()}.csv"))

    if report.metrics:
        rows = {ENSEMBLE_LABEL: report.metrics, **report.base_metrics}
        files.append(_write_frame(metrics_frame(rows), out / "metrics.csv"))
    if report.sweep:
        files.append(_write_frame(metrics_frame({ENSEMBLE_LABEL: report.sweep}), out / "tau_sweep.csv"))
    if report.bands:
        files.append(_write_frame(pd.DataFrame([b.model_dump() for b in report.bands]), out / "score_bands.csv"))
    if report.tuning_curves:
        frame = pd.DataFrame(report.tuning_curves, columns=["split", "algorithm", "params", "cv_gini"])
        files.append(_write_frame(frame, out / "tuning_curves.csv"))
    if report.pca:
        pct = report.pca.get("explained_variance_pct", [])
        frame = pd.DataFrame(
            {
                "component": [f"PC{i + 1}" for i in range(len(pct))],
                "explained_pct": pct,
                "cumulative_pct": report.pca.get("cumulative_pct", []),
            }
        )
        files.append(_write_frame(frame, out / "pca_variance.csv"))

    report_path = out / REPORT_JSON
    report_path.write_text(report.to_json(), encoding="utf-8")
    files.append(report_path)
    if report.timings:
        files.append(_write_json(report.timings, out / TIMINGS_JSON))
    log.info("wrote %d report files to %s", len(files), out)
    return files


def report_render(report: RunReport, out_dir: Optional[Union[str, Path]] = None) -> Tuple[str, List[Path]]:
    """Human-readable summary, plus the CSV/JSON artifacts when `out_dir` is given."""
    files = write_report_files(report, out_dir) if out_dir is not None else []
    return render_text(report), files


# ---------- analysis run ----------


def render_analysis_text(result: AnalysisResult) -> str:
    pct = result.pca.explained_variance_pct
    cum = result.pca.cumulative_pct()
    out = ["PCA (correlation matrix):"]
    for i, (p, c) in enumerate(zip(pct, cum)):
        out.append(f"  PC{i + 1:<3} {p:6.2f}%  cumulative {c:6.2f}%")
    if result.pca.dropped:
        out.append("  dropped zero-variance: " + ", ".join(result.pca.dropped))
    out.append("")
    out.append("Permutation importance (initial test split):")
    for ranking in result.rankings:
        algo = ranking.algorithm.value if ranking.algorithm else "-"
        top = ", ".join(f"{e.feature}={e.importance:.3f}" for e in ranking.entries[:5])
        out.append(f"  {algo:<5} baseline Gini {ranking.baseline_gini:.3f}: {top}")
    out.append("")
    b = result.boundary
    out.append(
        f"SVM decision grid over PC1/PC2: {b.resolution}x{b.resolution}, {b.params.label()}, cv_gini={b.cv_gini:.3f}"
    )
    return "\n".join(out) + "\n"


def write_analysis_files(result: AnalysisResult, out_dir: Union[str, Path]) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    importance = pd.DataFrame(
        [row for r in result.rankings for row in r.rows()],
        columns=["algorithm", "rank", "feature", "importance"],
    )
    files = [
        _write_frame(importance, out / "importance.csv"),
        _write_frame(result.pca.variance_frame(), out / "pca_variance.csv"),
        _write_frame(result.pca.loadings_frame(), out / "pca_loadings.csv"),
        _write_frame(result.pca.scores_frame(), out / "pca_scores.csv"),
        _write_frame(result.boundary.to_frame(), out / "boundary.csv"),
        _write_json(result.to_dict(), out / "analysis.json"),
    ]
    if result.timings:
        files.append(_write_json(result.timings, out / TIMINGS_JSON))
    return files


def analysis_render(result: AnalysisResult, out_dir: Optional[Union[str, Path]] = None) -> Tuple[str, List[Path]]:
    files = write_analysis_files(result, out_dir) if out_dir is not None else []
    return render_analysis_text(result), files
