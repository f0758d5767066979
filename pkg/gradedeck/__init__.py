"""gradedeck: ensemble model selection for early detection of weak students.

Importing the package applies a project-root `.env` file, so run overrides such
as GRADEDECK_N_JOBS or GRADEDECK_SEED can live next to the checkout.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

__version__ = "0.1.0"

log = logging.getLogger(__name__)

DOTENV_PATH = Path(__file__).resolve().parent.parent / ".env"


def _parse_env_line(line: str) -> Optional[Tuple[str, str]]:
    line = line.strip()
    if line.startswith("export "):
        line = line[len("export "):]
    key, sep, value = line.partition("=")
    key, value = key.strip(), value.strip()
    if not sep or not key or key.startswith("#"):
        return None
    if value[:1] in {'"', "'"} and value.endswith(value[0]) and len(value) > 1:
        return key, value[1:-1]
    # unquoted values may carry a trailing comment
    return key, value.split(" #", 1)[0].rstrip()


def load_dotenv(path: Union[str, Path] = DOTENV_PATH) -> Dict[str, str]:
    """Apply KEY=VALUE lines from `path`; variables already set win. Returns what was applied."""
    path = Path(path)
    applied: Dict[str, str] = {}
    if not path.is_file():
        return applied
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        log.warning("could not read %s (%r)", path, exc)
        return applied
    for line in lines:
        parsed = _parse_env_line(line)
        if parsed is None or parsed[0] in os.environ:
            continue
        os.environ[parsed[0]] = parsed[1]
        applied[parsed[0]] = parsed[1]
    return applied


load_dotenv()
