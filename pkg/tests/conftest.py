import sys
from pathlib import Path

import pytest

from ceam import kernels

CONFIG_DIR = Path(__file__).resolve().parents[1] / "src" / "ceam" / "configs"


def pytest_addoption(parser):
    parser.addoption("--kernel-backend", default=None, choices=kernels.available_backends(),
                     help="run the whole suite on this kernel backend")


def pytest_configure(config):
    choice = config.getoption("--kernel-backend")
    if choice:
        kernels.use_backend(choice)


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test once per importable kernel backend."""
    previous = kernels.backend_name()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section(f"acceptance criteria (kernel backend: {kernels.backend_name()})")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
