"""Betti numbers from the boundary operators, checked against exact simplicial cohomology."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg as la

from . import algebra

DEFAULT_THRESHOLD = 1e3
DEFAULT_FLOOR = 1e-12


@dataclass
class RankReport:
    label: str
    singular_values: list
    rank: int
    gap_ratio: float
    policy: dict
    ambiguous: bool

    @property
    def nullity(self):
        return self.policy["columns"] - self.rank

    def to_dict(self, max_values=12):
        """JSON-friendly summary; only the singular values around the gap are kept."""
        sv = self.singular_values
        lo = max(0, self.rank - max_values // 2)
        return {"label": self.label, "rank": self.rank, "nullity": self.nullity,
                "gap_ratio": _finite(self.gap_ratio), "ambiguous": self.ambiguous,
                "size": [self.policy["rows"], self.policy["columns"]],
                "singular_values_near_gap": {"offset": lo, "values": sv[lo: lo + max_values]}}


def _finite(x):
    return float(x) if np.isfinite(x) else None


def numerical_rank(A, label="", threshold=DEFAULT_THRESHOLD, floor=DEFAULT_FLOOR):
    """Rank at the largest ratio gap of the singular values.

    Values at or below ``floor * sigma_max`` count as zero, and the floor
    itself acts as a virtual smallest singular value, so a well-conditioned
    full-rank matrix has an unambiguous gap just below its spectrum.
    """
    A = np.asarray(A, dtype=float)
    rows, cols = A.shape if A.ndim == 2 else (0, 0)
    policy = {"method": "ratio-gap", "threshold": threshold, "floor": floor, "rows": rows, "columns": cols}
    s = la.svdvals(A) if A.size else np.zeros(0)
    if s.size == 0 or s[0] == 0:
        return RankReport(label, [float(x) for x in s], 0, np.inf, policy, False)
    noise = floor * s[0]
    above = s[s > noise]
    ext = np.append(above, noise)
    ratios = ext[:-1] / ext[1:]
    i = int(np.argmax(ratios))
    gap = float(ratios[i])
    return RankReport(label, [float(x) for x in s], i + 1, gap, policy, gap < threshold)


def null_space(A, rank):
    """Orthonormal basis of the complement of the top ``rank`` right singular vectors."""
    if A.shape[1] == 0:
        return np.zeros((0, 0))
    _, _, vt = la.svd(A)
    return vt[rank:].T


# ---------------------------------------------------------------------------
# exact oracle


def exact_rank(matrix):
    """Rank over the rationals of a sparse integer matrix (row reduction by leading column)."""
    m = matrix.tocsr()
    pivots = {}
    rank = 0
    for r in range(m.shape[0]):
        lo, hi = m.indptr[r], m.indptr[r + 1]
        row = {int(c): int(v) for c, v in zip(m.indices[lo:hi], m.data[lo:hi]) if v != 0}
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                a = row[lead]
                # unit pivots keep the arithmetic in integers
                if a == -1:
                    row = {c: -v for c, v in row.items()}
                elif a != 1:
                    row = {c: Fraction(v) / a for c, v in row.items()}
                pivots[lead] = row
                rank += 1
                break
            f = row[lead]
            for c, v in piv.items():
                nv = row.get(c, 0) - f * v
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
    return rank


def simplicial_oracle(c, b):
    """Absolute and relative Betti numbers from exact ranks of the coboundary matrices."""
    n = c.n
    interior = []
    for k in range(n + 1):
        mask = np.ones(c.count(k), dtype=bool)
        if k < n:
            mask[b.inclusion[k]] = False
        interior.append(np.flatnonzero(mask))
    rank_abs = [exact_rank(c.coboundary[k]) for k in range(n)]
    rank_rel = [exact_rank(c.coboundary[k][interior[k + 1]][:, interior[k]]) for k in range(n)]
    betti_abs, betti_rel = [], []
    for k in range(n + 1):
        ra = (rank_abs[k] if k < n else 0) + (rank_abs[k - 1] if k > 0 else 0)
        rr = (rank_rel[k] if k < n else 0) + (rank_rel[k - 1] if k > 0 else 0)
        betti_abs.append(c.count(k) - ra)
        betti_rel.append(len(interior[k]) - rr)
    return betti_abs, betti_rel


# ---------------------------------------------------------------------------
# operator-side dimensions


def _rank(alg, op, label, threshold):
    return numerical_rank(alg.weighted(op), label=label, threshold=threshold)


def betti_from_phi(alg, k, threshold=DEFAULT_THRESHOLD):
    rep = _rank(alg, alg.phi(k), f"Phi{k}", threshold)
    return rep.nullity, rep


def fredholm_check(alg, k, threshold=DEFAULT_THRESHOLD):
    """Kernel dimension against image codimension, and orthogonality of the image to the kernel."""
    W = alg.weighted(alg.phi(k))
    rep = numerical_rank(W, label=f"Phi{k}", threshold=threshold)
    kernel = null_space(W, rep.rank)
    codim = W.shape[0] - rep.rank
    # the image of Phi, as weak forms, must annihilate the kernel: <h, Phi x> = 0
    # in unweighted coordinates this is h^T Phi, with h a strong kernel vector
    L = alg.cholesky(k)
    h = la.solve_triangular(L, kernel, lower=True, trans="T") if kernel.size else kernel
    phi = alg.phi(k).matrix
    if h.size:
        num = la.norm(h.T @ phi, 2)
        den = la.norm(h, 2) * la.norm(phi, 2)
        ortho = float(num / den) if den > 0 else 0.0
    else:
        ortho = 0.0
    return {"k": k, "dim_kernel": rep.nullity, "codim_image": int(codim),
            "index": int(rep.nullity - codim), "orthogonality_residual": ortho,
            "rank": rep}


def psi_homology(alg, k, threshold=DEFAULT_THRESHOLD):
    """dim ker Psi_k - rank Psi_{k+1}, ranks in L2-weighted coordinates."""
    low = _rank(alg, alg.psi(k), f"Psi{k}", threshold)
    high = _rank(alg, alg.psi(k + 1), f"Psi{k + 1}", threshold)
    kernel = alg.b.count(k) - low.rank
    comp = alg.psi(k) @ alg.psi(k + 1)
    nrm = alg.norm(alg.psi(k)) * alg.norm(alg.psi(k + 1))
    square = alg.norm(comp) / nrm if nrm > 0 else 0.0
    return kernel - high.rank, {"psi_k": low, "psi_k1": high, "square_residual": square}


def principal_angles(A, B):
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros(0)
    return la.subspace_angles(A, B)


def kernel_containment(alg, k, threshold=DEFAULT_THRESHOLD):
    """Largest principal angle between ker Phi_k and its projection into ker Psi_k."""
    Wphi = alg.weighted(alg.phi(k))
    Wpsi = alg.weighted(alg.psi(k))
    rphi = numerical_rank(Wphi, threshold=threshold)
    kphi = null_space(Wphi, rphi.rank)
    if Wpsi.shape[0] == 0:
        return 0.0
    rpsi = numerical_rank(Wpsi, threshold=threshold)
    kpsi = null_space(Wpsi, rpsi.rank)
    if kphi.shape[1] == 0:
        return 0.0
    if kpsi.shape[1] < kphi.shape[1]:
        return float(np.pi / 2)
    # angle of each kernel vector of Phi to the subspace ker Psi
    proj = kpsi @ (kpsi.T @ kphi)
    cos = la.svdvals(kphi.T @ proj) if proj.size else np.zeros(0)
    cos = np.clip(cos, -1.0, 1.0)
    return float(np.max(np.arccos(np.sqrt(np.clip(cos, 0, 1)))))


def image_containment(alg, k, threshold=DEFAULT_THRESHOLD):
    """Relative least-squares residual of im Psi_k inside im Phi_{n-k} (weak, weighted)."""
    n = alg.n
    if k == 0 or n - k > alg.m:
        return 0.0
    target = alg.weighted(alg.to_weak(k - 1) @ alg.psi(k))
    Wphi = alg.weighted(alg.phi(n - k))
    rep = numerical_rank(Wphi, threshold=threshold)
    u, _, _ = la.svd(Wphi)
    basis = u[:, : rep.rank]
    resid = target - basis @ (basis.T @ target)
    nrm = la.norm(target)
    return float(la.norm(resid) / nrm) if nrm > 0 else 0.0


def echo_dimension(alg, k, threshold=DEFAULT_THRESHOLD):
    h, _ = psi_homology(alg, k, threshold)
    kernel, _ = betti_from_phi(alg, k, threshold)
    return h - kernel


def cor3_check(alg, derived, probes=None, threshold=DEFAULT_THRESHOLD):
    """dim ker(d Phi^2) - dim ker Phi_0 on boundary functions.

    On functions Phi^2 = Psi d, so d Phi^2 is evaluated as the strong
    operator d Psi d, which needs no weak-to-strong conversion.  The
    composition through the conversion is reported as well, on the full
    space and (given ``probes``, a dict of probe spaces) compressed onto
    smooth forms on both sides; its full-space kernel contains grid-scale
    modes, and its smooth kernel converges only slowly in three dimensions.
    """
    ker_phi, _ = betti_from_phi(alg, 0, threshold)
    strong = _rank(alg, algebra.theta_strong(alg, 0), "d Psi d (k=0)", threshold)
    conv = _rank(alg, derived.Theta[0]["d_phi2"], "d Phi^2 (k=0)", threshold)
    out = {"value": strong.nullity - ker_phi, "conversion_full": conv.nullity - ker_phi,
           "ranks": [strong, conv]}
    if probes:
        pairing = algebra.Pairing(alg, probes)
        r_theta = numerical_rank(pairing.compress(derived.Theta[0]["d_phi2"]),
                                 label="d Phi^2 (k=0) on smooth probes", threshold=threshold)
        r_phi = numerical_rank(pairing.compress(alg.phi(0)), label="Phi0 on smooth probes",
                               threshold=threshold)
        out["conversion_smooth"] = r_theta.nullity - r_phi.nullity
        out["ranks"] += [r_theta, r_phi]
    return out


def theta_psitilde_cohomology(alg, derived, k, threshold=DEFAULT_THRESHOLD):
    """Cohomology dimensions of the Psi-tilde and Theta cochain complexes at degree k."""
    pt_k = derived.PsiTilde.get(k) or algebra.assemble_psi_tilde(alg, k)
    pt_prev = derived.PsiTilde.get(k - 1) if k >= 1 else None
    r_k = _rank(alg, pt_k, f"PsiTilde{k}", threshold)
    r_prev = _rank(alg, pt_prev, f"PsiTilde{k - 1}", threshold) if pt_prev is not None else None
    size = alg.b.count(alg.m - k)
    h_pt = size - r_k.rank - (r_prev.rank if r_prev else 0)
    th_k = algebra.theta_strong(alg, k)
    t_k = _rank(alg, th_k, f"Theta{k}", threshold)
    t_prev = _rank(alg, algebra.theta_strong(alg, k - 1), f"Theta{k - 1}", threshold) if k >= 1 else None
    h_th = alg.b.count(k) - t_k.rank - (t_prev.rank if t_prev else 0)
    reports = [r for r in (r_k, r_prev, t_k, t_prev) if r is not None]
    return {"psi_tilde": h_pt, "theta": h_th, "ranks": reports}


@dataclass
class TopologyReport:
    betti_abs: list
    betti_rel: list
    dim_ker_phi: list = field(default_factory=list)
    psi_homology: list = field(default_factory=list)
    echo: list = field(default_factory=list)
    cor3: int | None = None
    cor3_detail: dict = field(default_factory=dict)
    fredholm: list = field(default_factory=list)
    kernel_angles: list = field(default_factory=list)
    image_residuals: list = field(default_factory=list)
    psi_tilde_cohomology: list = field(default_factory=list)
    theta_cohomology: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    degrees: list = field(default_factory=list)

    def to_dict(self):
        return {
            "degrees": self.degrees,
            "betti_abs": self.betti_abs, "betti_rel": self.betti_rel,
            "dim_ker_phi": self.dim_ker_phi, "psi_homology": self.psi_homology,
            "echo": self.echo, "cor3": self.cor3, "cor3_detail": self.cor3_detail,
            "fredholm": [{k: v for k, v in f.items() if k != "rank"} for f in self.fredholm],
            "kernel_angles": self.kernel_angles, "image_residuals": self.image_residuals,
            "psi_tilde_cohomology": self.psi_tilde_cohomology,
            "theta_cohomology": self.theta_cohomology,
            "ranks": [r.to_dict() for r in self.ranks],
        }


def topology_report(c, b, alg, derived=None, probes=None, threshold=DEFAULT_THRESHOLD, degrees=None):
    """Operator-side dimensions next to the exact oracle.

    ``degrees`` limits the per-degree checks; a check that needs an operator
    of a degree that was not assembled is reported as None.
    """
    betti_abs, betti_rel = simplicial_oracle(c, b)
    rep = TopologyReport(betti_abs, betti_rel)
    n = c.n
    have = set(alg.dtn.Phi)
    degrees = sorted(have if degrees is None else degrees)
    rep.degrees = degrees
    for k in degrees:
        dim, rr = betti_from_phi(alg, k, threshold)
        rep.dim_ker_phi.append(dim)
        rep.ranks.append(rr)
        if k + 1 in have or k + 1 >= n:
            h, info = psi_homology(alg, k, threshold)
            rep.psi_homology.append(h)
            rep.echo.append(h - dim)
            if info["psi_k1"].policy["columns"]:
                rep.ranks.append(info["psi_k1"])
        else:
            rep.psi_homology.append(None)
            rep.echo.append(None)
        rep.fredholm.append(fredholm_check(alg, k, threshold))
        rep.kernel_angles.append(kernel_containment(alg, k, threshold))
        ok = k == 0 or (n - k) in have
        rep.image_residuals.append(image_containment(alg, k, threshold) if ok else None)
    if derived is not None and have >= set(range(n)):
        cor3 = cor3_check(alg, derived, probes, threshold)
        rep.cor3 = cor3["value"]
        rep.cor3_detail = {k: v for k, v in cor3.items() if k not in ("ranks", "value")}
        rep.ranks.extend(cor3["ranks"])
        for k in degrees:
            co = theta_psitilde_cohomology(alg, derived, k, threshold)
            rep.psi_tilde_cohomology.append(co["psi_tilde"])
            rep.theta_cohomology.append(co["theta"])
    return rep
