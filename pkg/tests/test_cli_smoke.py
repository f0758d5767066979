import json

from click.testing import CliRunner

from gradedeck import cli


def _env():
    # unset run overrides so packaged defaults apply
    return {"GRADEDECK_N_JOBS": None, "GRADEDECK_NULL_SAMPLES": None, "GRADEDECK_SEED": None}

def _synth(runner, tmp_path):
    out = tmp_path / "cohort.csv"
    result = runner.invoke(
        cli.cli,
        [
            "synth",
            "--output", str(out),
            "--n-students", "50",
            "--n-features", "3",
            "--separation", "4.0",
            "--seed", "11",
        ],
        env=_env(),
    )
    assert result.exit_code == 0, result.output
    return out, tmp_path / "cohort.schema.yml"


def test_doctor_smoke():
    runner = CliRunner()
    result = runner.invoke(cli.cli, ["doctor"], env=_env())
    assert result.exit_code == 0, result.output
    assert "All green" in result.output


def test_synth_and_ingest(tmp_path):
    runner = CliRunner()
    csv_path, schema_path = _synth(runner, tmp_path)
    assert csv_path.exists() and schema_path.exists()
    assert csv_path.read_text(encoding="utf-8").splitlines()[0] == "id,F01,F02,F03,final_grade"

    result = runner.invoke(
        cli.cli,
        ["ingest", str(csv_path), "--schema", str(schema_path), "--output", str(tmp_path / "pre.csv")],
        env=_env(),
    )
    assert result.exit_code == 0, result.output
    assert "50 students, 15 Weak" in result.output
    assert (tmp_path / "pre.csv").exists()

    result = runner.invoke(cli.cli, ["ingest", str(csv_path), "--schema", str(schema_path), "--json-output"], env=_env())
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert summary["n_weak"] == 15
    assert [f["name"] for f in summary["features"]] == ["F01", "F02", "F03"]


def test_select_then_report(tmp_path, tiny_grid):
    runner = CliRunner()
    csv_path, schema_path = _synth(runner, tmp_path)
    out_dir = tmp_path / "run"
    result = runner.invoke(
        cli.cli,
        [
            "select", str(csv_path),
            "--schema", str(schema_path),
            "--grid", str(tiny_grid),
            "--rf-trees", "15",
            "--null-samples", "200",
            "--extra-splits", "1",
            "--seed", "3",
            "--tau", "0.4",
            "--exclude", "svm",
            "--out", str(out_dir),
        ],
        env=_env(),
    )
    assert result.exit_code == 0, result.output
    assert "Chosen ensemble:" in result.output
    assert "excluded: SVM" in result.output
    assert (out_dir / "report.json").exists()
    assert (out_dir / "selection_table.csv").exists()

    rendered = runner.invoke(cli.cli, ["report", str(out_dir)], env=_env())
    assert rendered.exit_code == 0, rendered.output
    assert "Chosen ensemble:" in rendered.output

    as_json = runner.invoke(cli.cli, ["report", str(out_dir / "report.json"), "--json-output"], env=_env())
    assert as_json.exit_code == 0, as_json.output
    doc = json.loads(as_json.output)
    assert doc["decision"]["exclusions"] == ["SVM"]
    assert doc["decision"]["chosen"]["membership"][5] is False
    assert len(doc["table"]["rows"]) == 63


def test_stage_failure_names_the_stage(tmp_path, tiny_grid):
    runner = CliRunner()
    csv_path, _ = _synth(runner, tmp_path)
    result = runner.invoke(
        cli.cli,
        ["select", str(csv_path), "--schema", "no_such_schema", "--grid", str(tiny_grid)],
        env=_env(),
    )
    assert result.exit_code == 1
    assert "Error: [ingest] INVALID_CONFIG" in result.output


def test_bad_run_option_is_reported(tmp_path):
    runner = CliRunner()
    csv_path, schema_path = _synth(runner, tmp_path)
    result = runner.invoke(
        cli.cli,
        ["select", str(csv_path), "--schema", str(schema_path), "--n-jobs", "0"],
        env=_env(),
    )
    assert result.exit_code == 1
    assert "INVALID_CONFIG" in result.output


def test_report_missing_file(tmp_path):
    runner = CliRunner()
    result = runner.invoke(cli.cli, ["report", str(tmp_path / "missing")], env=_env())
    assert result.exit_code == 1
    assert "Report not found" in result.output
