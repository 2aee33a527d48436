"""Shared fixtures.

The bundled configs are executed once per session, in process, and the
(config, outcome) pairs are shared by every test that needs a real run.
The p-Laplacian run dominates the cost at roughly twenty seconds.
"""

from pathlib import Path

import pytest

from dictdescent.config import load_config
from dictdescent.runner import execute_config

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"

BUNDLED = (
    "quadratic_axes",
    "quadratic_laplacian_fullspace",
    "quadratic_laplacian_axes",
    "plaplacian_axes",
    "power_axes",
)


@pytest.fixture(scope="session")
def bundle_outcomes():
    out = {}
    for name in BUNDLED:
        cfg = load_config(str(CONFIG_DIR / f"{name}.json"))
        out[name] = (cfg, execute_config(cfg))
    return out
