import numpy as np
import pytest

from hodge_dtn import probes
from support import pipeline


def test_unit_circle_probes_are_the_first_fourier_modes():
    # eigenvalues m^2 <= 30 keep m = 0..5: one constant and a cos/sin pair per m >= 1
    gs = pipeline("disk2d").gs
    q0, q1 = probes.probe_space(gs, 0), probes.probe_space(gs, 1)
    assert q0.shape[1] == 11 and q1.shape[1] == 11
    K, M = probes.boundary_hodge_laplacian(gs, 0)
    vals = np.diag(q0.T @ K @ q0)
    np.testing.assert_allclose(np.sort(vals)[[0, 1, 3, 5, 7, 9]], [0, 1, 4, 9, 16, 25], rtol=5e-3, atol=1e-10)


@pytest.mark.parametrize("name, res", [("annulus2d", 4), ("ball3d", 1)])
def test_probes_are_mass_orthonormal(name, res):
    gs = pipeline(name, res).gs
    for k, q in probes.probe_spaces(gs).items():
        gram = q.T @ gs.bmass[k].toarray() @ q
        np.testing.assert_allclose(gram, np.eye(q.shape[1]), atol=1e-10)


def test_out_of_range_degree_is_empty():
    gs = pipeline("disk2d", 3).gs
    assert probes.probe_space(gs, 2).shape == (0, 0)
