import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodge_dtn import cylinder
from hodge_dtn.cylinder import _Modes, density_coordinates, mode_solve, swap_matrix


def test_affine_mode():
    L = 2.0
    blk = mode_solve(0, 0, L)
    c1, c2 = 0.5, 3.0
    np.testing.assert_allclose(blk.Phi @ [c1, c2], [-(c2 - c1) / L, (c2 - c1) / L])
    assert not np.any(blk.Phi @ [1.7, 1.7])
    assert blk.Psi.shape == (0, 2)
    assert blk.coordinates == ["const@Gamma0", "const@Gamma1"]


def test_angular_form_spans_ker_phi1():
    blk = mode_solve(0, 1)
    dtheta = density_coordinates([1.0, 1.0])
    np.testing.assert_array_equal(dtheta, [-1.0, 1.0])
    assert not np.any(blk.Phi @ dtheta)
    assert not np.any(blk.Psi @ dtheta)


@pytest.mark.parametrize("m, L", [(1, 1.0), (3, 0.5), (7, 2.0)])
def test_mode_blocks_closed_form(m, L):
    c, s = np.cosh(m * L), np.sinh(m * L)
    blk0, blk1 = mode_solve(m, 0, L), mode_solve(m, 1, L)
    np.testing.assert_allclose(blk0.Phi[:2, :2], m / s * np.array([[c, -1], [-1, c]]), rtol=1e-14)
    np.testing.assert_allclose(blk1.Phi[2:, 2:], m / s * np.array([[c, 1], [1, c]]), rtol=1e-14)
    assert not np.any(blk0.Phi[:2, 2:])
    assert blk0.to_dict()["coordinates"][3] == "sin@Gamma1"


def test_long_cylinder_decouples_the_circles():
    # the cross entry relative to the diagonal is 1/cosh(mL), about 2 exp(-mL)
    phi = mode_solve(1, 0, 10.0).Phi
    ratio = abs(phi[0, 1]) / phi[0, 0]
    assert ratio == pytest.approx(1 / np.cosh(10.0), rel=1e-12)
    assert ratio <= 2 * np.exp(-10.0)


@pytest.mark.parametrize("m", [0, 1, 4])
def test_swapping_the_circles(m):
    J = swap_matrix(m)
    for k in (0, 1):
        blk = mode_solve(m, k)
        np.testing.assert_allclose(J @ blk.Phi @ J, blk.Phi, atol=1e-14)
        if blk.Psi.size:
            np.testing.assert_allclose(J @ blk.Psi @ J, -blk.Psi, atol=1e-14)


def test_identity_suite_is_machine_exact():
    reports = cylinder.oracle_identity_suite(L=1.0, m_max=20)
    assert max(r.residual for r in reports) <= 1e-12
    assert all(r.residual == 0.0 for r in reports if r.name == "Psi^2 = 0")
    assert {r.m for r in reports} == set(range(21))


@settings(max_examples=40, deadline=None)
@given(m=st.integers(0, 30), L=st.floats(0.1, 5.0))
def test_identities_hold_for_any_length(m, L):
    assert max(r for _, _, r in cylinder.mode_identities(m, L)) <= 1e-10


def test_mode_accounting():
    acc = cylinder.mode_accounting(L=1.0, m_max=20)
    assert acc["totals"] == {"ker_phi": [1, 1], "psi_homology": [2, 2],
                             "psi_tilde": [2, 2], "theta": [2, 2]}
    assert acc["per_mode"][0]["ker_phi"] == [1, 1]
    assert all(row["ker_phi"] == [0, 0] for row in acc["per_mode"][1:])


def test_literal_psi_tilde_sign_is_not_adjoint():
    o = _Modes(2, 1.0)
    adopted = o.psi_tilde(0)
    literal = o.psi_tilde(0, exponent=0 * (cylinder.N - 1))
    np.testing.assert_allclose(adopted, o.psi(1).T, atol=1e-14)
    np.testing.assert_allclose(literal, -o.psi(1).T, atol=1e-14)


def test_disk_modes():
    assert cylinder.disk_dtn_mode(0) == 0.0
    assert cylinder.disk_dtn_mode(1) == 1.0
    assert cylinder.disk_dtn_mode(5) == 5.0
    assert cylinder.disk_dtn_mode(-3) == 3.0


def test_oracle_report():
    rep = cylinder.oracle_report(L=1.0, m_max=3)
    assert rep["passed"] and rep["max_residual"] <= 1e-12
    assert len(rep["blocks"]) == 8
    assert rep["accounting"]["totals"]["ker_phi"] == [1, 1]


def test_degree_out_of_range():
    with pytest.raises(ValueError):
        mode_solve(1, 2)
