import numpy as np
import pytest

from nehari_fem.assembly import ProblemParams, WeightField
from nehari_fem.mesh import build_interval_mesh, build_rect_mesh


@pytest.fixture
def ref_mesh():
    """Unit interval, two cells: the hat (0, 1, 0) is the only interior direction."""
    return build_interval_mesh(0.0, 1.0, 2)


@pytest.fixture
def ref_params():
    return ProblemParams(2.0, 0.5, 4.0, 1.0)


@pytest.fixture
def ref_weights(ref_mesh):
    return WeightField.constant(ref_mesh)


@pytest.fixture
def hat():
    return np.array([0.0, 1.0, 0.0])


@pytest.fixture
def mesh_1d():
    return build_interval_mesh(0.0, 1.0, 64)


@pytest.fixture
def mesh_2d():
    return build_rect_mesh((0.0, 1.0), (0.0, 1.0), 8, 8)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import CRITERIA, RESULTS, format_line

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        if k in RESULTS:
            terminalreporter.write_line(format_line(k, *RESULTS[k]))
