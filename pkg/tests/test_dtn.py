import numpy as np
import pytest

from hodge_dtn import generators, topology
from hodge_dtn.dtn import assemble_all, assemble_phi_psi, solve_bvp
from hodge_dtn.galerkin import assemble_galerkin
from hodge_dtn.mesh import Cochain, build_complex, extract_boundary, simplex_volume
from support import pipeline


def _setup(name, res):
    c = build_complex(*generators.generate(name, res))
    b = extract_boundary(c)
    return c, b, assemble_galerkin(c, b)


def _volume(c):
    return sum(simplex_volume(c.vertices[list(s)]) for s in c.simplices[c.n])


def _angular_form(c):
    """Exact integrals of dtheta along the edges (chords) of an annulus mesh."""
    V = c.vertices
    e = np.asarray(c.simplices[1])
    a = np.arctan2(V[e, 1], V[e, 0])
    return np.angle(np.exp(1j * (a[:, 1] - a[:, 0])))


def test_constant_data_is_its_own_extension():
    c, b, gs = _setup("annulus2d", 3)
    sol = solve_bvp(c, b, gs, 0, np.full(b.count(0), 2.5))
    np.testing.assert_allclose(sol.omega.coefficients, 2.5, rtol=1e-12)
    assert sol.sigma is None
    assert np.abs(sol.flux.coefficients).max() < 1e-12
    assert sol.flux.representation == "weak" and sol.flux.degree == 1


@pytest.mark.parametrize("name, res", [("disk2d", 3), ("ball3d", 1)])
def test_linear_functions_give_the_volume(name, res):
    # x is discretely harmonic, so x^T Phi0 x = int |grad x|^2 = volume of the mesh
    c, b, gs = _setup(name, res)
    phi0 = assemble_all(c, b, gs, [0]).Phi[0]
    bv = [s[0] for s in b.complex.simplices[0]]
    for axis in range(c.n):
        x = c.vertices[bv, axis]
        assert x @ phi0 @ x == pytest.approx(_volume(c), rel=1e-11)


def test_solution_has_the_prescribed_trace():
    c, b, gs = _setup("ball3d", 1)
    phi = np.random.default_rng(3).normal(size=b.count(1))
    sol = solve_bvp(c, b, gs, 1, Cochain(1, "boundary", "strong", phi))
    np.testing.assert_array_equal(sol.omega.coefficients[b.inclusion[1]], phi)
    with pytest.raises(ValueError):
        solve_bvp(c, b, gs, 3, phi)


def test_angular_form_is_a_harmonic_field():
    c, b, gs = _setup("annulus2d", 4)
    dtheta = _angular_form(c)
    sol = solve_bvp(c, b, gs, 1, dtheta[b.inclusion[1]])
    assert np.linalg.norm(sol.omega.coefficients - dtheta) <= 1e-12 * np.linalg.norm(dtheta)
    assert np.linalg.norm(sol.sigma.coefficients) <= 1e-10 * np.linalg.norm(dtheta)
    assert np.linalg.norm(sol.flux.coefficients) <= 1e-10 * np.linalg.norm(dtheta)


def test_disk_modes_pair_to_m_pi():
    p = pipeline("disk2d")
    V = p.c.vertices
    bv = [s[0] for s in p.b.complex.simplices[0]]
    theta = np.arctan2(V[bv, 1], V[bv, 0])
    for m in range(1, 6):
        x = np.cos(m * theta)
        assert x @ p.dtn.Phi[0] @ x == pytest.approx(m * np.pi, rel=0.05)


def test_psi0_is_empty_and_constants_are_in_ker_phi0():
    c, b, gs = _setup("disk2d", 3)
    d = assemble_all(c, b, gs)
    assert d.Psi[0].shape == (0, b.count(0))
    assert np.abs(d.Phi[0] @ np.ones(b.count(0))).max() < 1e-12
    assert d.degrees() == [0, 1]


@pytest.mark.parametrize("name, res", [("annulus2d", 3), ("ball3d", 1)])
def test_phi_is_symmetric_positive_semidefinite(name, res):
    c, b, gs = _setup(name, res)
    d = assemble_all(c, b, gs)
    for k in d.degrees():
        P = d.Phi[k]
        scale = np.abs(P).max()
        assert np.abs(P - P.T).max() <= 1e-11 * scale
        assert np.linalg.eigvalsh(0.5 * (P + P.T)).min() >= -1e-12 * scale


def test_annulus_phi1_kernel_is_one_dimensional():
    p = pipeline("annulus2d", 8)
    dim, rep = topology.betti_from_phi(p.alg, 1)
    assert dim == 1 and not rep.ambiguous


def test_assembly_is_bitwise_reproducible():
    c, b, gs = _setup("ball3d", 1)
    first = assemble_phi_psi(c, b, gs, 1)
    second = assemble_phi_psi(c, b, gs, 1)
    assert np.array_equal(first.Phi[1], second.Phi[1])
    assert np.array_equal(first.Psi[1], second.Psi[1])


def test_natural_responses_have_matching_shapes():
    c, b, gs = _setup("annulus2d", 3)
    d = assemble_all(c, b, gs, with_natural=True)
    assert 0 not in d.natural_flux
    assert d.natural_flux[1].shape == (b.count(0), b.count(0))
    assert d.natural_sigma[1].shape == (b.count(0), b.count(0))


def test_frozen_operator_values():
    c, b, gs = _setup("disk2d", 4)
    d = assemble_all(c, b, gs)
    assert np.trace(d.Phi[0]) == pytest.approx(35.37711683747616, rel=1e-12)
    assert np.trace(d.Phi[1]) == pytest.approx(981.1949630923425, rel=1e-12)
    assert np.linalg.norm(d.Psi[1]) == pytest.approx(197.16103549726802, rel=1e-12)
    np.testing.assert_allclose(d.Phi[0][0, :3], [1.5520823159663752, -0.5534592335168375, -0.0705852349862619],
                               rtol=1e-12)


def test_degree_out_of_range():
    c, b, gs = _setup("disk2d", 1)
    with pytest.raises(ValueError):
        assemble_phi_psi(c, b, gs, 2)
