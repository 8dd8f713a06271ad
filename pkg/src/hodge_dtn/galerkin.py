"""Whitney-form mass, stiffness and wedge-pairing matrices.

All element integrals are closed form.  For a d-simplex with barycentric
coordinates lambda_i, the Whitney form of the face s = (s_0..s_k) is

    w_s = k! sum_a (-1)^a lambda_{s_a} dlambda_{s_0} ^ .. (omit s_a) .. ^ dlambda_{s_k}

and products lambda_i lambda_j integrate to |T| (1 + delta_ij) / ((d+1)(d+2)).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .mesh import Cochain, boundary_masks


class DegenerateSimplexError(ValueError):
    pass


def _barycentric_gram(points):
    """Volumes and Gram matrices <dlambda_i, dlambda_j> for a batch of simplices.

    ``points`` has shape (T, d+1, N).  Works for simplices embedded in a
    higher-dimensional ambient space (boundary facets).
    """
    edges = points[:, 1:, :] - points[:, :1, :]
    d = edges.shape[1]
    gram = np.einsum("tin,tjn->tij", edges, edges)
    det = np.linalg.det(gram)
    if np.any(det <= 0):
        raise DegenerateSimplexError("simplex with zero volume")
    vol = np.sqrt(det) / factorial(d)
    inv = np.linalg.inv(gram)
    G = np.empty((len(points), d + 1, d + 1))
    G[:, 1:, 1:] = inv
    G[:, 0, 1:] = -inv.sum(axis=1)
    G[:, 1:, 0] = -inv.sum(axis=2)
    G[:, 0, 0] = inv.sum(axis=(1, 2))
    return vol, G


def _batched_det(a):
    if a.shape[-1] == 0:
        return np.ones(a.shape[0])
    return np.linalg.det(a)


def local_mass(points, k):
    """Element L2 inner products of Whitney k-forms, shape (T, nk, nk)."""
    T, dp1, _ = points.shape
    d = dp1 - 1
    vol, G = _barycentric_gram(points)
    faces = list(itertools.combinations(range(dp1), k + 1))
    nk = len(faces)
    out = np.zeros((T, nk, nk))
    pair = vol / ((d + 1) * (d + 2))
    scale = factorial(k) ** 2
    for i, s in enumerate(faces):
        for j in range(i, nk):
            t = faces[j]
            acc = np.zeros(T)
            for a in range(k + 1):
                rs = s[:a] + s[a + 1:]
                for b_ in range(k + 1):
                    cs = t[:b_] + t[b_ + 1:]
                    w = pair * (2.0 if s[a] == t[b_] else 1.0)
                    sub = G[:, list(rs)][:, :, list(cs)]
                    acc += (-1) ** (a + b_) * w * _batched_det(sub)
            out[:, i, j] = scale * acc
            out[:, j, i] = scale * acc
    return out


def _perm_sign(seq):
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _top_coefficient(I, J, d):
    """Coefficient of dlambda_I ^ dlambda_J relative to dlambda_1 ^ .. ^ dlambda_d."""
    if set(I) & set(J):
        return 0
    missing = (set(range(d + 1)) - set(I) - set(J)).pop()
    return _perm_sign(tuple(I) + tuple(J)) * (-1) ** missing


@lru_cache(maxsize=None)
def local_wedge(d, k):
    """int_T w_s ^ w_t for k-faces s and (d-k)-faces t of the reference d-simplex.

    The result is metric free; T carries its vertex-order orientation.
    """
    l = d - k
    sf = list(itertools.combinations(range(d + 1), k + 1))
    tf = list(itertools.combinations(range(d + 1), l + 1))
    out = np.zeros((len(sf), len(tf)))
    base = 1.0 / (factorial(d) * (d + 1) * (d + 2))
    for i, s in enumerate(sf):
        for j, t in enumerate(tf):
            acc = 0.0
            for a in range(k + 1):
                for b_ in range(l + 1):
                    coef = _top_coefficient(s[:a] + s[a + 1:], t[:b_] + t[b_ + 1:], d)
                    if coef:
                        acc += (-1) ** (a + b_) * coef * base * (2.0 if s[a] == t[b_] else 1.0)
            out[i, j] = factorial(k) * factorial(l) * acc
    return out


def _face_ids(top, index_k, k):
    """Global ids of the local k-faces of each top simplex, shape (T, nk)."""
    local = list(itertools.combinations(range(len(top[0])), k + 1))
    return np.array([[index_k[tuple(s[i] for i in f)] for f in local] for s in top], dtype=np.int64)


def _assemble(ids_r, ids_c, local, shape):
    T, a, b = local.shape
    rows = np.repeat(ids_r[:, :, None], b, axis=2).ravel()
    cols = np.repeat(ids_c[:, None, :], a, axis=1).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=shape)


def mass_matrices(cplx, top=None):
    """Whitney mass matrices for k = 0..d over the given top simplices."""
    top = cplx.simplices[cplx.n] if top is None else top
    d = len(top[0]) - 1
    points = cplx.vertices[np.asarray(top)]
    out = []
    for k in range(d + 1):
        ids = _face_ids(top, cplx.index[k], k)
        m = _assemble(ids, ids, local_mass(points, k), (cplx.count(k), cplx.count(k)))
        out.append(((m + m.T) * 0.5).tocsr())
    return out


def wedge_matrices(bcplx, signs):
    """Boundary pairing matrices W[k][e, f] = int_{dM} w_e ^ w_f, k = 0..n-1."""
    top = bcplx.simplices[bcplx.n]
    d = bcplx.n
    out = []
    for k in range(d + 1):
        l = d - k
        loc = local_wedge(d, k)
        ids_r = _face_ids(top, bcplx.index[k], k)
        ids_c = _face_ids(top, bcplx.index[l], l)
        local = signs[:, None, None] * loc[None, :, :]
        out.append(_assemble(ids_r, ids_c, local, (bcplx.count(k), bcplx.count(l))).tocsr())
    return out


@dataclass(frozen=True, eq=False)
class GalerkinStructures:
    """Metric data on M and dM.

    ``mass[k]`` and ``bmass[k]`` are sparse SPD matrices; ``wedge[k]`` has
    shape (#boundary k-simplices, #boundary (n-1-k)-simplices);
    ``stiffness[k]`` is D_k^T mass[k+1] D_k.
    """

    n: int
    mass: list
    bmass: list
    wedge: list
    stiffness: list
    bcoboundary: list
    masks: list

    def bmass_factor(self, k):
        return _cholesky(self.bmass[k])

    def to_weak(self, j, x):
        """Weak form of a strong boundary j-cochain: v -> int v ^ x over (n-1-j)-forms."""
        return self.wedge[self.n - 1 - j] @ x

    def to_strong(self, j, f):
        """Galerkin (star-based) strong representative of a weak boundary j-form."""
        m = self.n - 1
        xi = _solve_spd(self.bmass[m - j], f)
        return (-1) ** (j * (m - j)) * _solve_spd(self.bmass[j], self.wedge[j] @ xi)

    def to_weak_matrix(self, j):
        return self.wedge[self.n - 1 - j].toarray()

    def to_strong_matrix(self, j):
        m = self.n - 1
        cnt = self.bmass[m - j].shape[0]
        return self.to_strong(j, np.eye(cnt)) if cnt else np.zeros((self.bmass[j].shape[0], 0))


def _cholesky(m):
    dense = m.toarray() if sp.issparse(m) else np.asarray(m)
    return la.cho_factor(dense, lower=True)


def _solve_spd(m, rhs):
    rhs = np.asarray(rhs, dtype=float)
    if m.shape[0] == 0:
        return np.zeros_like(rhs)
    return la.cho_solve(_cholesky(m), rhs)


def assemble_galerkin(c, b):
    """Mass, stiffness and wedge matrices for a complex and its boundary."""
    n = c.n
    mass = mass_matrices(c)
    bmass = mass_matrices(b.complex)
    wedge = wedge_matrices(b.complex, b.signs)
    stiffness = []
    for k in range(n):
        D = c.coboundary[k].astype(float)
        stiffness.append((D.T @ mass[k + 1] @ D).tocsr())
    bcob = [d.astype(float).tocsr() for d in b.coboundary]
    return GalerkinStructures(n, mass, bmass, wedge, stiffness, bcob, boundary_masks(c, b))


def weak_codifferential(c, gs, omega):
    """Functional r = D_{k-1}^T mass[k] omega; its Riesz representative is delta(omega)."""
    k = omega.degree
    if k < 1:
        raise ValueError("codifferential of a 0-form is not defined here")
    if omega.representation != "strong" or omega.domain != "bulk":
        raise ValueError("weak_codifferential expects a strong bulk cochain")
    D = c.coboundary[k - 1].astype(float)
    r = D.T @ (gs.mass[k] @ omega.coefficients)
    return Cochain(k - 1, "bulk", "weak", r)


def weak_to_strong(gs, r, degree, domain):
    """Solve mass x = r for the strong representative of an L2 functional."""
    m = gs.mass[degree] if domain == "bulk" else gs.bmass[degree]
    r = np.asarray(r.coefficients if isinstance(r, Cochain) else r, dtype=float)
    try:
        x = _solve_spd(m, r)
    except la.LinAlgError as exc:
        dense = m.toarray()
        raise np.linalg.LinAlgError(f"mass matrix solve failed (cond ~ {np.linalg.cond(dense):.2e})") from exc
    return Cochain(degree, domain, "strong", x)


def write_matrix(path, a):
    """Dense text matrix: ``rows cols`` header then row-major values."""
    a = np.atleast_2d(np.asarray(a.toarray() if sp.issparse(a) else a, dtype=float))
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines.extend(" ".join(repr(float(x)) for x in row) for row in a)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path):
    tokens = Path(path).read_text(encoding="utf-8").split()
    r, cc = int(tokens[0]), int(tokens[1])
    vals = np.array([float(t) for t in tokens[2:]], dtype=float)
    if vals.size != r * cc:
        raise ValueError(f"matrix file declares {r}x{cc} but holds {vals.size} values")
    return vals.reshape(r, cc)


def simplex_count(d, k):
    return comb(d + 1, k + 1)
