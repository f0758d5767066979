import pytest
from pydantic import ValidationError

from gradedeck.core.config import learner_defaults, pipeline_defaults
from gradedeck.core.errors import InvalidConfig
from gradedeck.data.dataset import Stage
from gradedeck.learners.base import AlgorithmId
from gradedeck.orchestrator import RunConfig, resolve_schema, resolve_taus
from gradedeck.schemas import DatasetSchema, GridProfile, load_schema_config


def test_packaged_defaults(monkeypatch):
    monkeypatch.delenv("GRADEDECK_SEED", raising=False)
    monkeypatch.delenv("GRADEDECK_N_JOBS", raising=False)
    monkeypatch.delenv("GRADEDECK_NULL_SAMPLES", raising=False)
    config = RunConfig.from_defaults()
    assert config.train_fraction == 0.7
    assert config.k_folds == 3
    assert config.extra_splits == 5
    assert config.alpha == 0.05
    assert config.seed == 20190601
    assert config.learners.rf_trees == learner_defaults()["rf_trees"]


def test_env_overrides_apply_below_explicit_values(monkeypatch):
    monkeypatch.setenv("GRADEDECK_SEED", "99")
    monkeypatch.setenv("GRADEDECK_N_JOBS", "2")
    assert pipeline_defaults()["seed"] == 99
    assert RunConfig.from_defaults().seed == 99
    assert RunConfig.from_defaults(seed=5).seed == 5
    assert RunConfig.from_defaults().n_jobs == 2


def test_bad_env_value(monkeypatch):
    monkeypatch.setenv("GRADEDECK_NULL_SAMPLES", "lots")
    with pytest.raises(ValueError, match="GRADEDECK_NULL_SAMPLES"):
        pipeline_defaults()


@pytest.mark.parametrize(
    "overrides",
    [
        {"n_jobs": 0},
        {"taus": [1.5]},
        {"train_fraction": 1.0},
        {"k_folds": 1},
        {"null_samples": 0},
        {"learners": {"rf_trees": 0}},
    ],
)
def test_invalid_run_options(overrides):
    with pytest.raises(InvalidConfig):
        RunConfig.from_defaults(**overrides)


def test_exclusions_are_deduplicated_in_algorithm_order():
    config = RunConfig.from_defaults(exclusions=["SVM", "RF", "SVM"])
    assert config.exclusions == [AlgorithmId.RF, AlgorithmId.SVM]
    assert config.echo()["exclusions"] == ["RF", "SVM"]


def test_packaged_schemas():
    schemas = load_schema_config()
    deeds = schemas.get("deeds")
    assert deeds.name == "deeds"
    assert deeds.profile is GridProfile.DATASET1
    assert len(deeds.stage_features(Stage.STAGE20)) == 9
    grades = schemas.get("course_grades")
    assert grades.stage_features(Stage.STAGE20) == ["Quiz01", "Assign01"]
    assert grades.tau_presets[Stage.STAGE20] == pytest.approx(0.065)


def test_unknown_schema_lists_known_names():
    with pytest.raises(InvalidConfig, match="course_grades"):
        load_schema_config().get("nope")


def test_stage_must_use_declared_features():
    with pytest.raises(ValidationError):
        DatasetSchema(name="x", features={"a": 10}, stages={Stage.STAGE20: ["b"]})


def test_schema_file_and_resolvers(tmp_path):
    path = tmp_path / "mine.yml"
    path.write_text(
        "features:\n  q1: 5\n  q2: 5\nstages:\n  stage20: [q1]\ntau_presets:\n  stage20: 0.3\n",
        encoding="utf-8",
    )
    config = RunConfig.from_defaults(schema_path=str(path), taus=[0.5, 0.3], tau_preset=True)
    schema = resolve_schema(config)
    assert schema.name == "mine"
    assert schema.feature_names == ["q1", "q2"]
    assert resolve_taus(config, schema) == [0.5, 0.3]

    with pytest.raises(InvalidConfig):
        resolve_schema(RunConfig.from_defaults())
    stage50 = RunConfig.from_defaults(schema_path=str(path), stage="stage50", tau_preset=True)
    with pytest.raises(InvalidConfig):
        resolve_taus(stage50, schema)


def test_dotenv_fills_unset_variables_only(tmp_path, monkeypatch):
    from gradedeck import load_dotenv

    path = tmp_path / ".env"
    path.write_text(
        "# local overrides\n"
        "GRADEDECK_SEED=42  # quick runs\n"
        "export GRADEDECK_N_JOBS='4'\n"
        "GRADEDECK_NULL_SAMPLES=777\n"
        "not a pair\n",
        encoding="utf-8",
    )
    for key in ("GRADEDECK_SEED", "GRADEDECK_N_JOBS"):
        # set first so teardown also removes what the file applies
        monkeypatch.setenv(key, "0")
        monkeypatch.delenv(key)
    monkeypatch.setenv("GRADEDECK_NULL_SAMPLES", "100")
    applied = load_dotenv(path)
    assert applied == {"GRADEDECK_SEED": "42", "GRADEDECK_N_JOBS": "4"}
    assert pipeline_defaults()["null_samples"] == 100
    assert load_dotenv(tmp_path / "missing.env") == {}
