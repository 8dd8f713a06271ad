"""Operators derived from Phi and Psi, and the identities relating them.

Every boundary operator carries the degree and representation of its input
and output.  A *strong* j-form is a vector of Whitney coefficients on the
boundary j-simplices; a *weak* j-form is the functional v -> int v ^ x on the
complementary (n-1-j)-forms.  ``Phi`` produces weak output, ``Psi`` and the
boundary coboundary act on strong forms.  Composition checks annotations, so
a weak output can only feed a strong input through an explicit conversion.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from numbers import Number

import numpy as np
import scipy.linalg as la

log = logging.getLogger(__name__)

STRONG = "strong"
WEAK = "weak"

# Sign exponents as functions of (n, k).  ``psi_tilde`` differs from the
# literal definition (-1)^(k(n-1)): only (-1)^((k+1)(n-1)) makes it the L2
# adjoint of Psi (checked per Fourier mode on the flat cylinder).
SIGN_TABLE = {
    "phi_psi": ("(-1)^k", lambda n, k: k),
    "psi_phi": ("(-1)^(k+1)", lambda n, k: k + 1),
    "phi_squared": ("(-1)^(kn)", lambda n, k: k * n),
    "lambda": ("(-1)^(n(n-k)+k+1)", lambda n, k: n * (n - k) + k + 1),
    "pi_upper": ("(-1)^(n(n-k)+1)", lambda n, k: n * (n - k) + 1),
    "pi_lower": ("(-1)^(k+1)", lambda n, k: k + 1),
    "g": ("(-1)^(kn+k+n)", lambda n, k: k * n + k + n),
    "theta_d_phi2": ("(-1)^(kn)", lambda n, k: k * n),
    "theta_phi2_d": ("(-1)^(n(k+1))", lambda n, k: n * (k + 1)),
    "theta_phi_psi_phi": ("(-1)^((k+1)(n+1))", lambda n, k: (k + 1) * (n + 1)),
    "psi_tilde": ("(-1)^((k+1)(n-1))", lambda n, k: (k + 1) * (n - 1)),
}


def sign(name, n, k):
    return -1.0 if SIGN_TABLE[name][1](n, k) % 2 else 1.0


def sign_record():
    """Serializable record of the sign conventions in use."""
    return {
        "orientation": "boundary oriented outward-normal-first; cochains relative to sorted vertex order",
        "star": "alpha ^ *beta = <alpha, beta> vol on the boundary",
        "codifferential": "delta = (-1)^(n(k+1)+1) * d *",
        "signs": {name: expr for name, (expr, _) in SIGN_TABLE.items()},
        "deviations": {"psi_tilde": "literal (-1)^(k(n-1)) replaced by (-1)^((k+1)(n-1)) for adjointness"},
    }


class RepresentationError(TypeError):
    """Composition or sum of operators with mismatched degree/representation."""


class DomainError(ValueError):
    """Right-hand side outside the image of the operator being inverted."""


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense matrix with (degree, representation) annotations on both sides."""

    matrix: np.ndarray
    src: tuple
    dst: tuple
    label: str = ""

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if other.dst != self.src:
                raise RepresentationError(
                    f"cannot compose {self.label} {self.src}->{self.dst} after {other.label} {other.src}->{other.dst}")
            return Operator(self.matrix @ other.matrix, other.src, self.dst, f"{self.label}.{other.label}")
        return self.matrix @ np.asarray(other, dtype=float)

    def _check_same(self, other):
        if not isinstance(other, Operator) or (other.src, other.dst) != (self.src, self.dst):
            raise RepresentationError(f"cannot add {self.label} and {getattr(other, 'label', other)}")

    def __add__(self, other):
        self._check_same(other)
        return Operator(self.matrix + other.matrix, self.src, self.dst, f"({self.label}+{other.label})")

    def __sub__(self, other):
        self._check_same(other)
        return Operator(self.matrix - other.matrix, self.src, self.dst, f"({self.label}-{other.label})")

    def __neg__(self):
        return Operator(-self.matrix, self.src, self.dst, f"-{self.label}")

    def __rmul__(self, s):
        if not isinstance(s, Number):
            return NotImplemented
        return Operator(float(s) * self.matrix, self.src, self.dst, self.label)


class BoundaryAlgebra:
    """Basic boundary operators of one mesh: Phi, Psi, d, conversions, star."""

    def __init__(self, dtn, gs, b):
        self.dtn = dtn
        self.gs = gs
        self.b = b
        self.n = gs.n
        self.m = gs.n - 1
        self._chol = {}

    # sizes -------------------------------------------------------------
    def size(self, degree, rep):
        return self.b.count(degree if rep == STRONG else self.m - degree)

    def zero(self, src, dst):
        return Operator(np.zeros((self.size(*dst), self.size(*src))), src, dst, "0")

    def identity(self, degree, rep):
        return Operator(np.eye(self.size(degree, rep)), (degree, rep), (degree, rep), "1")

    # primitives ----------------------------------------------------------
    def phi(self, k):
        if k not in self.dtn.Phi:
            return self.zero((k, STRONG), (self.m - k, WEAK))
        return Operator(self.dtn.Phi[k], (k, STRONG), (self.m - k, WEAK), f"Phi{k}")

    def psi(self, k):
        if k not in self.dtn.Psi:
            return self.zero((k, STRONG), (k - 1, STRONG))
        return Operator(self.dtn.Psi[k], (k, STRONG), (k - 1, STRONG), f"Psi{k}")

    def d(self, k):
        """Boundary coboundary on strong k-forms."""
        if 0 <= k < self.m:
            return Operator(self.gs.bcoboundary[k].toarray(), (k, STRONG), (k + 1, STRONG), f"d{k}")
        return self.zero((k, STRONG), (k + 1, STRONG))

    def d_weak(self, j):
        """d on weak j-forms via int v ^ d x = (-1)^(m-j) int dv ^ x."""
        inner = self.m - 1 - j
        src, dst = (j, WEAK), (j + 1, WEAK)
        if 0 <= inner < self.m:
            mat = (-1.0) ** (self.m - j) * self.gs.bcoboundary[inner].T.toarray()
            return Operator(mat, src, dst, f"d'{j}")
        return self.zero(src, dst)

    def to_weak(self, j):
        if 0 <= j <= self.m:
            return Operator(self.gs.to_weak_matrix(j), (j, STRONG), (j, WEAK), f"W{j}")
        return self.zero((j, STRONG), (j, WEAK))

    def to_strong(self, j):
        """Galerkin conversion of weak j-forms to Whitney coefficients."""
        if 0 <= j <= self.m:
            return Operator(self.gs.to_strong_matrix(j), (j, WEAK), (j, STRONG), f"S{j}")
        return self.zero((j, WEAK), (j, STRONG))

    def star(self, j):
        """Galerkin boundary Hodge star on strong j-forms."""
        sgn = (-1.0) ** (j * (self.m - j))
        rhs = self.gs.wedge[self.m - j].toarray()
        mat = sgn * la.cho_solve(self._factor(self.m - j), rhs)
        return Operator(mat, (j, STRONG), (self.m - j, STRONG), f"*{j}")

    def _factor(self, k):
        if k not in self._chol:
            self._chol[k] = la.cho_factor(self.gs.bmass[k].toarray(), lower=True)
        return self._chol[k]

    def cholesky(self, k):
        """Lower Cholesky factor of the boundary mass matrix of degree k."""
        if not 0 <= k <= self.m:
            return np.zeros((0, 0))
        c, _ = self._factor(k)
        return np.tril(c)

    def weighted(self, op):
        """Matrix of ``op`` in L2-orthonormal coordinates on both sides."""
        mat = op.matrix
        (di, ri), (do, ro) = op.src, op.dst
        if mat.size == 0:
            return mat
        if ro == STRONG:
            mat = self.cholesky(do).T @ mat
        else:
            mat = la.solve_triangular(self.cholesky(self.m - do), mat, lower=True)
        if ri == STRONG:
            mat = la.solve_triangular(self.cholesky(di), mat.T, lower=True).T
        else:
            mat = mat @ self.cholesky(self.m - di)
        return mat

    def norm(self, op):
        w = self.weighted(op)
        return float(la.norm(w, 2)) if w.size else 0.0

    def solve(self, op, rhs, gate=1e-6, cond=1e-10):
        """Minimum-norm least-squares inverse of ``op`` applied to ``rhs``.

        ``rhs`` is an Operator whose output lies in the output space of
        ``op``; the result maps rhs.src to op.src.  A relative residual above
        ``gate`` means rhs is not in the image of ``op``.
        """
        if rhs.dst != op.dst:
            raise RepresentationError(f"right-hand side {rhs.dst} does not match {op.label} output {op.dst}")
        A, B = op.matrix, rhs.matrix
        if A.size == 0 or B.size == 0:
            return Operator(np.zeros((A.shape[1], B.shape[1])), rhs.src, op.src, f"{op.label}^+")
        X, *_ = la.lstsq(A, B, cond=cond, lapack_driver="gelsy")
        scale = la.norm(B)
        res = la.norm(A @ X - B) / scale if scale > 0 else 0.0
        if res > gate:
            raise DomainError(f"{rhs.label} not in the image of {op.label}: relative residual {res:.2e}")
        return Operator(X, rhs.src, op.src, f"{op.label}^+")


def _as_weak(alg, op):
    if op.dst[1] == WEAK:
        return op
    return alg.to_weak(op.dst[0]) @ op


@dataclass
class PiBlocks:
    """Block operator (phi, psi) -> (Phi phi +- Psi psi, Psi phi +- Phi psi), weak outputs."""

    k: int
    blocks: list

    def matrix(self):
        return np.block([[b.matrix for b in row] for row in self.blocks])

    def apply(self, phi, psi):
        (a, bb), (c, d) = self.blocks
        return a @ phi + bb @ psi, c @ phi + d @ psi


@dataclass
class DerivedOperators:
    Lambda: dict = field(default_factory=dict)
    LambdaCorrection: dict = field(default_factory=dict)
    Pi: dict = field(default_factory=dict)
    G: dict = field(default_factory=dict)
    Theta: dict = field(default_factory=dict)
    PsiTilde: dict = field(default_factory=dict)
    Hilbert: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


def lambda_correction(alg, k):
    """The term sign * Psi Phi^+ Psi of the Lambda formula (weak output)."""
    n = alg.n
    if k == 0:
        return alg.zero((0, STRONG), (alg.m, WEAK))
    rhs = alg.to_weak(k - 1) @ alg.psi(k)
    x = alg.solve(alg.phi(n - k), rhs)
    term = alg.to_weak(n - k - 1) @ alg.psi(n - k) @ x
    return sign("lambda", n, k) * term


def assemble_lambda(alg, k):
    """Lambda_k = Phi_k + (-1)^(n(n-k)+k+1) Psi Phi^+ Psi."""
    lam = alg.phi(k) + lambda_correction(alg, k)
    return Operator(lam.matrix, lam.src, lam.dst, f"Lambda{k}")


def lambda_direct(alg, k):
    """Lambda_k from the boundary value problem with i*(delta omega) = 0 imposed.

    The natural-data responses stored by ``assemble_phi_psi(with_natural=True)``
    are combined so that the trace of sigma cancels.
    """
    dtn = alg.dtn
    if k == 0:
        return Operator(dtn.Phi[0], (0, STRONG), (alg.m, WEAK), "Lambda0*")
    if k not in dtn.natural_flux:
        raise ValueError(f"natural responses for degree {k} were not assembled")
    R_sigma = dtn.natural_sigma[k]
    coef, *_ = la.lstsq(R_sigma, dtn.Psi[k], cond=1e-12, lapack_driver="gelsy")
    scale = la.norm(dtn.Psi[k])
    res = la.norm(R_sigma @ coef - dtn.Psi[k]) / scale if scale > 0 else 0.0
    if res > 1e-6:
        raise DomainError(f"direct Lambda solve cannot cancel the trace of sigma (residual {res:.2e})")
    mat = dtn.Phi[k] - dtn.natural_flux[k] @ coef
    return Operator(mat, (k, STRONG), (alg.m - k, WEAK), f"Lambda{k}*")


def assemble_pi(alg, k):
    n = alg.n
    upper = sign("pi_upper", n, k) * (alg.to_weak(n - k - 1) @ alg.psi(n - k))
    lower = sign("pi_lower", n, k) * alg.phi(n - k)
    blocks = [[alg.phi(k), upper],
              [alg.to_weak(k - 1) @ alg.psi(k), lower]]
    return PiBlocks(k, blocks)


def assemble_g(alg, k, lambdas=None, via="phi"):
    """G_k = Lambda + (-1)^(kn+k+n) d Lambda^-1 d, with the middle inverse taken of Phi or Lambda."""
    n = alg.n
    lambdas = {} if lambdas is None else lambdas
    lam = lambdas[k] if k in lambdas else assemble_lambda(alg, k)
    j = n - 2 - k
    if j < 0:
        return Operator(lam.matrix, lam.src, lam.dst, f"G{k}")
    if via == "phi":
        inner = alg.phi(j)
    elif via == "lambda":
        inner = lambdas[j] if j in lambdas else assemble_lambda(alg, j)
    else:
        raise ValueError(f"unknown construction {via!r}")
    x = alg.solve(inner, alg.to_weak(k + 1) @ alg.d(k))
    g = lam + sign("g", n, k) * (alg.to_weak(n - 1 - k) @ alg.d(j) @ x)
    return Operator(g.matrix, g.src, g.dst, f"G{k}")


def assemble_theta(alg, k):
    """Theta_k in four algebraically equivalent forms, all strong k -> weak (k+1)."""
    n, m = alg.n, alg.m
    S = alg.to_strong
    phi2 = alg.phi(m - k) @ S(m - k) @ alg.phi(k)
    forms = {
        "d_phi2": sign("theta_d_phi2", n, k) * (alg.d_weak(k) @ phi2),
        "phi2_d": sign("theta_phi2_d", n, k) * (alg.phi(m - k - 1) @ S(m - k - 1) @ alg.phi(k + 1) @ alg.d(k)),
        "phi_psi_phi": sign("theta_phi_psi_phi", n, k)
        * (alg.phi(m - k - 1) @ alg.psi(m - k) @ S(m - k) @ alg.phi(k)),
        "d_psi_d": alg.to_weak(k + 1) @ alg.d(k) @ alg.psi(k + 1) @ alg.d(k),
    }
    return forms


def theta_strong(alg, k):
    """Canonical Theta_k = d Psi d on strong forms."""
    return alg.d(k) @ alg.psi(k + 1) @ alg.d(k)


def assemble_psi_tilde(alg, k):
    """Psi-tilde on weak k-forms: the Riesz map plays the role of the boundary star."""
    m = alg.m
    src, dst = (k, WEAK), (k + 1, WEAK)
    psi = alg.psi(m - k).matrix
    if psi.size == 0:
        return alg.zero(src, dst)
    s = sign("psi_tilde", alg.n, k) * (-1.0) ** (k * (m - k))
    right = la.cho_solve(alg._factor(m - k), np.eye(psi.shape[1]))
    mat = s * (alg.gs.bmass[m - k - 1] @ (psi @ right))
    return Operator(np.asarray(mat), src, dst, f"PsiTilde{k}")


def psi_tilde_strong(alg, k):
    """Psi-tilde on strong k-forms with the Galerkin star on both sides."""
    m = alg.m
    if not 0 <= k < m:
        return alg.zero((k, STRONG), (k + 1, STRONG))
    return sign("psi_tilde", alg.n, k) * (alg.star(m - k - 1) @ alg.psi(m - k) @ alg.star(k))


def hilbert_transform(alg, k, psi, gate=1e-6):
    """d Phi_k^+ applied to weak (n-1-k)-form data in the image of Phi_k."""
    data = np.asarray(psi, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    rhs = Operator(data, ("data", WEAK), (alg.m - k, WEAK), "psi")
    x = alg.solve(alg.phi(k), rhs, gate=gate)
    out = alg.d(k).matrix @ x.matrix
    return out[:, 0] if np.ndim(psi) == 1 else out


def assemble_derived(alg, degrees=None):
    """All derived operators for the given degrees.

    An operator whose pseudo-inverse step fails the image gate is left out
    and the reason is kept in ``errors[(name, k)]``; the others are still
    assembled.
    """
    degrees = range(alg.n) if degrees is None else degrees
    der = DerivedOperators()
    for k in degrees:
        try:
            der.LambdaCorrection[k] = lambda_correction(alg, k)
        except DomainError as exc:
            der.errors[("Lambda", k)] = str(exc)
            log.warning("Lambda%d not assembled: %s", k, exc)
            continue
        der.Lambda[k] = alg.phi(k) + der.LambdaCorrection[k]
    for k in degrees:
        der.Pi[k] = assemble_pi(alg, k)
        try:
            der.G[k] = assemble_g(alg, k, der.Lambda)
        except DomainError as exc:
            der.errors[("G", k)] = str(exc)
            log.warning("G%d not assembled: %s", k, exc)
        der.Theta[k] = assemble_theta(alg, k)
        der.PsiTilde[k] = assemble_psi_tilde(alg, k)
    return der


# ---------------------------------------------------------------------------
# identity residuals


@dataclass
class IdentityReport:
    name: str
    k: int
    residual: float
    h: float
    representation: str = "weak-paired"
    lhs_norm: float = 0.0
    rhs_norm: float = 0.0

    def to_dict(self):
        return {"name": self.name, "k": self.k, "residual": self.residual, "h": self.h,
                "representation": self.representation,
                "lhs_norm": self.lhs_norm, "rhs_norm": self.rhs_norm}


class Pairing:
    """Compresses operators onto smooth probe spaces in both input and output."""

    def __init__(self, alg, probes):
        self.alg = alg
        self.probes = probes

    def _q(self, degree):
        q = self.probes.get(degree)
        if q is None:
            return np.zeros((self.alg.b.count(degree), 0))
        return q

    def compress(self, op):
        op = _as_weak(self.alg, op)
        (di, ri), (do, _) = op.src, op.dst
        q_out = self._q(self.alg.m - do)
        if ri == STRONG:
            q_in = self._q(di)
        else:
            # weak inputs are probed with the weak forms of the strong probes
            q_in = self.alg.to_weak(di).matrix @ self._q(di)
        if op.matrix.size == 0:
            return np.zeros((q_out.shape[1], q_in.shape[1]))
        return q_out.T @ op.matrix @ q_in

    def residual(self, lhs, rhs, eps=1e-300):
        a, b = self.compress(lhs), self.compress(rhs)
        na = float(la.norm(a, 2)) if a.size else 0.0
        nb = float(la.norm(b, 2)) if b.size else 0.0
        diff = float(la.norm(a - b, 2)) if a.size else 0.0
        if na + nb <= eps:
            return 0.0, na, nb
        return diff / (na + nb + eps), na, nb


def _vanishing_residual(alg, pairing, factors):
    """Residual of a product that must vanish, relative to the product of factor norms."""
    prod = factors[0]
    for f in factors[1:]:
        prod = prod @ f
    val = pairing.compress(prod)
    num = float(la.norm(val, 2)) if val.size else 0.0
    den = np.prod([alg.norm(f) for f in factors])
    return (num / den if den > 0 else 0.0), num


def identity_suite(alg, derived, pairing, h):
    """Relations between Phi, Psi, d and Lambda as weak-paired residuals."""
    n, m = alg.n, alg.m
    S = alg.to_strong
    reports = []

    def add(name, k, lhs, rhs):
        r, na, nb = pairing.residual(lhs, rhs)
        reports.append(IdentityReport(name, k, r, h, lhs_norm=na, rhs_norm=nb))

    # every relation is reported for each k in 0..n-1; out-of-range terms are empty
    for k in range(0, n):
        add("Phi Psi = (-1)^k d Phi", k, alg.phi(k - 1) @ alg.psi(k),
            sign("phi_psi", n, k) * (alg.d_weak(m - k) @ alg.phi(k)))
    for k in range(0, n):
        r, num = _vanishing_residual(alg, pairing, [alg.psi(k - 1), alg.psi(k)])
        reports.append(IdentityReport("Psi^2 = 0", k, r, h, lhs_norm=num))
    for k in range(0, n):
        add("Psi Phi = (-1)^(k+1) Phi d", k, alg.psi(m - k) @ S(m - k) @ alg.phi(k),
            sign("psi_phi", n, k) * (alg.phi(k + 1) @ alg.d(k)))
    for k in range(0, n):
        rhs = alg.d(k - 1) @ alg.psi(k) if k >= 1 else alg.zero((k, STRONG), (k, STRONG))
        if k + 1 <= m:
            rhs = rhs + alg.psi(k + 1) @ alg.d(k)
        add("Phi^2 = (-1)^(kn) (d Psi + Psi d)", k, alg.phi(m - k) @ S(m - k) @ alg.phi(k),
            sign("phi_squared", n, k) * rhs)
    # Remark-1 identities, each split as Phi-part = -(correction part)
    # (operators that could not be assembled are skipped)
    T = derived.LambdaCorrection
    for k in range(0, m):
        if k + 1 in T:
            add("Lambda d = 0", k, alg.phi(k + 1) @ alg.d(k), -(T[k + 1] @ alg.d(k)))
    for k in range(0, n):
        if k in T:
            add("d Lambda = 0", k, alg.d_weak(m - k) @ alg.phi(k), -(alg.d_weak(m - k) @ T[k]))
    for k in range(0, n):
        a = m - k
        if k not in T or a not in T:
            continue
        lhs = alg.phi(a) @ S(a) @ alg.phi(k)
        rhs = -(alg.phi(a) @ S(a) @ T[k] + T[a] @ S(a) @ derived.Lambda[k])
        add("Lambda^2 = 0", k, lhs, rhs)
    return reports


def theta_reports(alg, derived, pairing, h):
    reports = []
    for k, forms in derived.Theta.items():
        ref = forms["d_psi_d"]
        for name in ("d_phi2", "phi2_d", "phi_psi_phi"):
            r, na, nb = pairing.residual(forms[name], ref)
            reports.append(IdentityReport(f"Theta {name} = d Psi d", k, r, h, lhs_norm=na, rhs_norm=nb))
        if k + 1 < alg.n:
            r, num = _vanishing_residual(alg, pairing, [theta_strong(alg, k + 1), theta_strong(alg, k)])
            reports.append(IdentityReport("Theta^2 = 0", k, r, h, lhs_norm=num))
    return reports


def psi_tilde_reports(alg, derived, pairing, h):
    """Psi-tilde^2 = 0 and adjointness <Psi phi, psi> = <phi, Psi-tilde psi>."""
    reports = []
    m = alg.m
    for k in range(0, m):
        r, num = _vanishing_residual(alg, pairing, [derived.PsiTilde[k + 1], derived.PsiTilde[k]]) \
            if k + 1 in derived.PsiTilde else (0.0, 0.0)
        reports.append(IdentityReport("PsiTilde^2 = 0", k, r, h, lhs_norm=num))
    for k in range(0, m):
        # both sides as bilinear forms on (k+1)-forms x k-forms, i.e. weak-output operators
        left = alg.psi(k + 1).matrix.T @ alg.gs.bmass[k].toarray()
        right = alg.gs.bmass[k + 1] @ psi_tilde_strong(alg, k).matrix
        lhs = Operator(left, (k, STRONG), (m - k - 1, WEAK), f"Psi{k + 1}^T")
        rhs = Operator(np.asarray(right), (k, STRONG), (m - k - 1, WEAK), f"PsiTilde{k}")
        r, na, nb = pairing.residual(lhs, rhs)
        reports.append(IdentityReport("PsiTilde adjoint of Psi", k, r, h, lhs_norm=na, rhs_norm=nb))
    return reports
