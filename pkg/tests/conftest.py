"""
Shared fixtures: repository root on sys.path, an isolated PLANLAB_HOME and the golden assets
"""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

import utils.config_loader as config_loader  # noqa: E402
import utils.logger as logger  # noqa: E402

ASSETS = ROOT / 'assets' / 'domains'


def pytest_configure(config):
    config.addinivalue_line('markers', "slow: acceptance-scale sweeps, deselect with -m 'not slow'")


@pytest.fixture(autouse=True)
def planlab_home(tmp_path, monkeypatch):
    """Fresh config and log directory for every test"""
    home = tmp_path / 'home'
    monkeypatch.setenv('PLANLAB_HOME', str(home))
    monkeypatch.delenv('PLANLAB_SEED', raising=False)
    monkeypatch.setattr(logger, '_logger_instance', None)
    monkeypatch.setattr(config_loader, '_config_instance', None)
    return home


@pytest.fixture
def assets():
    return ASSETS


@pytest.fixture
def asset():
    def path(name):
        found = ASSETS / name
        assert found.exists(), f"missing golden file {name}"
        return str(found)
    return path
