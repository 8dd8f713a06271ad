"""Smooth probe forms on the boundary.

Weak outputs of the discrete flux operators are only accurate when tested
against smooth forms; their Riesz representatives can oscillate on the grid
scale.  The probe space of degree k is spanned by the eigenforms of the
discrete boundary Hodge Laplacian with eigenvalue at most ``cutoff``.  These
are L2-orthonormal, resolved on any reasonable mesh, and converge to a fixed
space of smooth forms under refinement.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

DEFAULT_CUTOFF = 30.0


def boundary_hodge_laplacian(gs, k):
    """Stiffness matrix of the Whitney Hodge Laplacian on boundary k-forms."""
    m = gs.n - 1
    M = gs.bmass[k].toarray()
    K = np.zeros_like(M)
    if k < m:
        D = gs.bcoboundary[k].toarray()
        K += D.T @ gs.bmass[k + 1].toarray() @ D
    if k > 0:
        D = gs.bcoboundary[k - 1].toarray()
        MD = M @ D
        K += MD @ la.solve(gs.bmass[k - 1].toarray(), MD.T, assume_a="pos")
    return 0.5 * (K + K.T), M


def probe_space(gs, k, cutoff=DEFAULT_CUTOFF):
    """L2-orthonormal low-frequency boundary k-forms, shape (#bnd k-simplices, r)."""
    m = gs.n - 1
    if not 0 <= k <= m or gs.bmass[k].shape[0] == 0:
        return np.zeros((0, 0))
    K, M = boundary_hodge_laplacian(gs, k)
    _, vecs = la.eigh(K, M, subset_by_value=(-np.inf, cutoff))
    return vecs


def probe_spaces(gs, cutoff=DEFAULT_CUTOFF):
    return {k: probe_space(gs, k, cutoff) for k in range(gs.n)}
