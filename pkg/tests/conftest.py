import importlib
from pathlib import Path

import pytest

from rmode_toa import _kernels_py

DATA = Path(__file__).parent / "data"

try:
    _ckernels = importlib.import_module("rmode_toa._ckernels")
except ImportError:
    _ckernels = None

KERNELS = [pytest.param(_kernels_py, id="python")]
KERNELS.append(
    pytest.param(_ckernels, id="cython", marks=pytest.mark.skipif(_ckernels is None, reason="extension not built"))
)


@pytest.fixture(params=KERNELS)
def kernels(request):
    return request.param


@pytest.fixture(params=[m for m in (_kernels_py, _ckernels) if m is not None], ids=lambda m: m.__name__.split(".")[-1])
def backend(request, monkeypatch):
    """Route the public API through one kernel implementation."""
    from rmode_toa import phase

    monkeypatch.setattr(phase, "_kernels", request.param)
    return request.param


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
