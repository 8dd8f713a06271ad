"""Discrete boundary value problem and the operators Phi_k, Psi_k.

For boundary data phi the discrete harmonic field omega (a Whitney k-form
whose boundary degrees of freedom equal phi) and sigma = delta(omega) solve

    mass[k-1] sigma - D^T mass[k] omega = 0                  (all (k-1)-simplices)
    mass[k] D sigma + D_k^T mass[k+1] D_k omega = 0          (interior k-simplices)

The first equation holds against every (k-1)-form, including those that do not
vanish on the boundary, which imposes i*(*omega) = 0 weakly.  Evaluating the
second expression on boundary k-simplices gives the functional
v -> int_{dM} v ^ i*(*d omega), i.e. Phi(phi) in weak form.  Psi(phi) is the
trace of sigma.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Cochain

log = logging.getLogger(__name__)


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass
class HarmonicSolution:
    omega: Cochain
    sigma: Cochain | None
    flux: Cochain


@dataclass
class _Factorized:
    k: int
    lu: object
    n_sigma: int
    interior: np.ndarray
    bnd: np.ndarray
    rhs_block: sp.spmatrix
    flux_sigma: sp.spmatrix
    flux_omega_i: sp.spmatrix
    flux_omega_b: sp.spmatrix
    sigma_bnd: np.ndarray


def _factorize(c, b, gs, k):
    n = c.n
    if not 0 <= k <= n - 1:
        raise ValueError(f"degree {k} outside 0..{n - 1}")
    on_bnd = gs.masks[k]
    interior = np.flatnonzero(~on_bnd)
    bnd = b.inclusion[k]
    K = gs.stiffness[k].tocsr()
    if k == 0:
        A = K[interior][:, interior].tocsc()
        rhs = -K[interior][:, bnd]
        n_sigma = 0
        flux_sigma = None
        sigma_bnd = np.zeros(0, dtype=np.int64)
    else:
        D = c.coboundary[k - 1].astype(float).tocsr()
        Mk = gs.mass[k]
        Mkm1 = gs.mass[k - 1]
        DtM = (D.T @ Mk).tocsr()
        MD = (Mk @ D).tocsr()
        n_sigma = Mkm1.shape[0]
        A = sp.bmat([[-Mkm1, DtM[:, interior]],
                     [MD[interior], K[interior][:, interior]]], format="csc")
        rhs = -sp.vstack([DtM[:, bnd], K[interior][:, bnd]])
        flux_sigma = MD[bnd]
        sigma_bnd = b.inclusion[k - 1]
    lu = spla.splu(A, permc_spec="COLAMD")
    diag = np.abs(lu.U.diagonal())
    if diag.size and diag.min() <= 1e-13 * diag.max():
        raise SingularSystemError(
            f"degree {k} system is numerically singular (pivot ratio {diag.min() / diag.max():.2e}); "
            "degenerate mesh?")
    return _Factorized(k, lu, n_sigma, interior, bnd, rhs.tocsc(), flux_sigma,
                       K[bnd][:, interior], K[bnd][:, bnd], sigma_bnd)


def _solve_block(f, phi):
    """Solve for a block of boundary data columns (shape n_bnd x m)."""
    phi = np.asarray(phi, dtype=float)
    rhs = f.rhs_block @ phi
    x = f.lu.solve(np.asfortranarray(rhs))
    sigma = x[: f.n_sigma]
    omega_i = x[f.n_sigma:]
    flux = f.flux_omega_i @ omega_i + f.flux_omega_b @ phi
    if f.n_sigma:
        flux = flux + f.flux_sigma @ sigma
    return sigma, omega_i, flux


def solve_bvp(c, b, gs, k, phi):
    """Discrete harmonic k-field with tangential trace phi and i*(*omega) = 0."""
    if k == c.n:
        raise ValueError("degree n has no boundary trace")
    data = phi.coefficients if isinstance(phi, Cochain) else np.asarray(phi, dtype=float)
    f = _factorize(c, b, gs, k)
    sigma, omega_i, flux = _solve_block(f, data[:, None])
    omega = np.zeros(c.count(k))
    omega[f.interior] = omega_i[:, 0]
    omega[f.bnd] = data
    sig = Cochain(k - 1, "bulk", "strong", sigma[:, 0]) if k > 0 else None
    return HarmonicSolution(Cochain(k, "bulk", "strong", omega), sig,
                            Cochain(c.n - 1 - k, "boundary", "weak", flux[:, 0]))


@dataclass
class DtnOperators:
    """Dense Phi[k] (strong k -> weak (n-1-k)) and Psi[k] (strong k -> strong k-1)."""

    n: int
    Phi: dict = field(default_factory=dict)
    Psi: dict = field(default_factory=dict)
    natural_flux: dict = field(default_factory=dict)
    natural_sigma: dict = field(default_factory=dict)

    def degrees(self):
        return sorted(self.Phi)


def assemble_phi_psi(c, b, gs, k, dtn=None, with_natural=False):
    """Fill Phi[k], Psi[k] column by column from the boundary basis.

    With ``with_natural`` the responses to prescribed normal data on the
    boundary (k-1)-simplices are also stored; they realize the direct
    Lambda boundary value problem.
    """
    dtn = DtnOperators(c.n) if dtn is None else dtn
    f = _factorize(c, b, gs, k)
    nb = len(f.bnd)
    sigma, _, flux = _solve_block(f, np.eye(nb))
    dtn.Phi[k] = np.ascontiguousarray(flux)
    if k == 0:
        dtn.Psi[k] = np.zeros((0, nb))
    else:
        dtn.Psi[k] = np.ascontiguousarray(sigma[f.sigma_bnd])
    if with_natural and k > 0:
        m = len(f.sigma_bnd)
        rhs = np.zeros((f.lu.shape[0], m))
        rhs[f.sigma_bnd, np.arange(m)] = 1.0
        x = f.lu.solve(rhs)
        s = x[: f.n_sigma]
        oi = x[f.n_sigma:]
        dtn.natural_flux[k] = f.flux_omega_i @ oi + f.flux_sigma @ s
        dtn.natural_sigma[k] = s[f.sigma_bnd]
    return dtn


def assemble_all(c, b, gs, degrees=None, with_natural=False):
    dtn = DtnOperators(c.n)
    for k in (range(c.n) if degrees is None else degrees):
        assemble_phi_psi(c, b, gs, k, dtn, with_natural=with_natural)
    return dtn
