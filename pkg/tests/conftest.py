# tests/conftest.py
import sys
from pathlib import Path

import pytest

# Ensure project root (the directory that contains 'gradedeck') is on sys.path
ROOT = Path(__file__).resolve().parent.parent  # one level up from tests/
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

# one point per algorithm keeps end-to-end runs to seconds
TINY_GRID_YAML = """\
grids:
  RF:
    mtry: [2]
  MLP:
    neurons: [3]
    hidden_layers: [1]
  NB:
    usekernel: [false]
  KNN:
    k: [5]
  LREG: {}
  SVM:
    C: [1.0]
    sigma: [0.1]
"""

FAST_LEARNERS = {
    "rf_trees": 15,
    "mlp_max_epochs": 500,
    "lreg_max_epochs": 2000,
    "svm_max_passes": 10,
    "svm_max_iterations": 300,
}


@pytest.fixture(scope="session")
def tiny_grid(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("grids") / "tiny_grid.yaml"
    path.write_text(TINY_GRID_YAML, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def fast_learners() -> dict:
    return dict(FAST_LEARNERS)
