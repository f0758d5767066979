from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Union

import yaml

_CONF_CACHE: Dict[str, Any] = {}

PACKAGE_DIR = Path(__file__).resolve().parent.parent
MAIN_CONFIG_PATH = PACKAGE_DIR / "conf" / "gradedeck.yml"

# env var -> (pipeline key, caster)
_ENV_OVERRIDES = {
    "GRADEDECK_N_JOBS": ("n_jobs", int),
    "GRADEDECK_NULL_SAMPLES": ("null_samples", int),
    "GRADEDECK_SEED": ("seed", int),
}


def load_yaml(path: Union[str, Path]) -> Dict[str, Any]:
    key = str(path)
    if key in _CONF_CACHE:
        return _CONF_CACHE[key]
    if not os.path.exists(key):
        raise FileNotFoundError(f"Missing config file: {key}")
    with open(key, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    _CONF_CACHE[key] = data
    return data


def cfg() -> Dict[str, Any]:
    # main app config
    return load_yaml(MAIN_CONFIG_PATH)


def pipeline_defaults() -> Dict[str, Any]:
    """Pipeline protocol constants with GRADEDECK_* environment overrides applied."""
    merged = dict(cfg().get("pipeline", {}) or {})
    for env_key, (key, caster) in _ENV_OVERRIDES.items():
        raw = os.environ.get(env_key)
        if raw is None or raw.strip() == "":
            continue
        try:
            merged[key] = caster(raw)
        except ValueError as exc:
            raise ValueError(f"{env_key}={raw!r} is not a valid {caster.__name__}") from exc
    return merged


def learner_defaults() -> Dict[str, Any]:
    return dict(cfg().get("learners", {}) or {})


def report_defaults() -> Dict[str, Any]:
    return dict(cfg().get("report", {}) or {})
