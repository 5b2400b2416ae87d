import warnings

import numpy as np
import pytest

from dpgbem.assembly import DofLayout, assemble_B
from dpgbem.mesh import build_cube_surface, build_square_screen, refine
from dpgbem.potentials import QuadratureConfig


@pytest.fixture(scope="session")
def cube():
    return build_cube_surface()


@pytest.fixture(scope="session")
def screen():
    return build_square_screen()


@pytest.fixture(scope="session")
def fast():
    return QuadratureConfig.profile("fast")


@pytest.fixture(scope="session")
def accurate():
    return QuadratureConfig.profile("accurate")


@pytest.fixture(scope="session")
def systems(cube, screen, fast):
    """Assembled systems (zero load) on the coarse and once-refined meshes."""
    out = {}
    for name, m in (("cube", cube), ("screen", screen)):
        for level in (0, 1):
            mm = refine(m, level)
            out[name, level] = (mm, assemble_B(mm, DofLayout.for_mesh(mm), fast))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_RECORDS = {}


@pytest.fixture(scope="session")
def experiment_record():
    """Cached convergence records keyed by ``(experiment, levels)``."""
    from dpgbem.experiments import ExperimentConfig, run_experiment

    def get(experiment, levels):
        key = (experiment, levels)
        if key not in _RECORDS:
            _RECORDS[key] = run_experiment(ExperimentConfig(experiment=experiment, levels=levels))
        return _RECORDS[key]

    return get


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion; returns the flag."""
    def report(number, title, ok, detail=""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title}"
        if detail:
            line += f" ({detail})"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return report
