"""Oriented simplicial manifolds with boundary.

Simplices are stored as sorted vertex tuples.  Cochain coefficients always
refer to the orientation given by that sorted order; the separate ``signs``
array of the top-dimensional simplices records whether the sorted order agrees
with the orientation of the manifold.  With this convention the trace of a
Whitney form is a plain restriction of coefficients and the boundary
coboundary is a sub-block of the bulk coboundary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class MeshError(ValueError):
    """Raised for malformed, non-manifold or non-orientable meshes."""


def _faces(simplex):
    """Codimension-one faces of a sorted simplex, with their incidence signs."""
    for i in range(len(simplex)):
        yield simplex[:i] + simplex[i + 1:], (-1) ** i


def coboundary_matrix(lower, upper, lower_index=None):
    """Signed incidence matrix mapping k-cochains on ``lower`` to (k+1)-cochains on ``upper``."""
    if lower_index is None:
        lower_index = {s: i for i, s in enumerate(lower)}
    rows, cols, vals = [], [], []
    for r, s in enumerate(upper):
        for f, sign in _faces(s):
            rows.append(r)
            cols.append(lower_index[f])
            vals.append(sign)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(upper), len(lower)), dtype=np.int64)


def signed_volume(points):
    """Signed volume of an n-simplex given by n+1 points in R^n."""
    points = np.asarray(points, dtype=float)
    edges = points[1:] - points[0]
    return np.linalg.det(edges) / factorial(len(edges))


def simplex_volume(points):
    """Unsigned d-volume of a simplex embedded in any ambient dimension."""
    points = np.asarray(points, dtype=float)
    edges = points[1:] - points[0]
    d = len(edges)
    if d == 0:
        return 1.0
    gram = edges @ edges.T
    return float(np.sqrt(max(np.linalg.det(gram), 0.0)) / factorial(d))


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Oriented simplicial n-manifold with boundary embedded in R^n.

    ``simplices[k]`` lists sorted vertex tuples for k = 0..n and
    ``coboundary[k]`` is the integer matrix D_k from k- to (k+1)-cochains.
    ``signs`` holds +1/-1 per n-simplex: the orientation of the sorted vertex
    order relative to the manifold orientation.
    """

    dim_n: int
    vertices: np.ndarray
    simplices: list
    coboundary: list
    signs: np.ndarray
    index: list = field(repr=False)

    @property
    def n(self):
        return self.dim_n

    def count(self, k):
        return len(self.simplices[k])

    @property
    def counts(self):
        return tuple(len(s) for s in self.simplices)

    @property
    def euler_characteristic(self):
        return sum((-1) ** k * c for k, c in enumerate(self.counts))

    def max_edge_length(self):
        edges = np.asarray(self.simplices[1])
        d = self.vertices[edges[:, 0]] - self.vertices[edges[:, 1]]
        return float(np.max(np.linalg.norm(d, axis=1)))

    def top_faces_count(self):
        """Number of n-simplices containing each (n-1)-simplex."""
        dn = self.coboundary[self.n - 1]
        return np.asarray(abs(dn).sum(axis=0)).ravel()


@dataclass(frozen=True, eq=False)
class BoundaryComplex:
    """Closed (n-1)-complex of boundary simplices with its inclusion maps.

    ``inclusion[k][j]`` is the bulk index of the j-th boundary k-simplex.
    ``signs`` orients each boundary (n-1)-simplex by the outward-normal-first
    convention relative to its sorted vertex order.
    """

    complex: SimplicialComplex
    inclusion: list
    signs: np.ndarray

    @property
    def n(self):
        return self.complex.dim_n + 1

    @property
    def coboundary(self):
        return self.complex.coboundary

    def count(self, k):
        if k < 0 or k > self.n - 1:
            return 0
        return self.complex.count(k)

    def components(self):
        """Connected components of the boundary, as lists of boundary vertex indices."""
        nv = self.count(0)
        if self.n - 1 == 0:
            return [[i] for i in range(nv)]
        vidx = self.complex.index[0]
        edges = np.asarray([(vidx[(a,)], vidx[(b,)]) for a, b in self.complex.simplices[1]])
        graph = sp.csr_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(nv, nv))
        ncomp, labels = sp.csgraph.connected_components(graph, directed=False)
        return [list(np.flatnonzero(labels == c)) for c in range(ncomp)]


@dataclass
class Cochain:
    """Coefficient vector of a discrete k-form on the bulk or the boundary.

    A ``strong`` cochain holds Whitney degrees of freedom.  A ``weak`` cochain
    of degree k holds the values of the functional v -> int v ^ alpha on the
    basis of the complementary degree, so its length is the simplex count of
    that degree.
    """

    degree: int
    domain: str
    representation: str
    coefficients: np.ndarray

    def __post_init__(self):
        if self.domain not in ("bulk", "boundary"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.representation not in ("strong", "weak"):
            raise ValueError(f"unknown representation {self.representation!r}")
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    def check(self, c, b=None):
        top = c.n if self.domain == "bulk" else c.n - 1
        if not 0 <= self.degree <= top:
            raise ValueError(f"degree {self.degree} outside 0..{top} for {self.domain}")
        if self.domain == "bulk":
            size = c.count(self.degree if self.representation == "strong" else c.n - self.degree)
        else:
            deg = self.degree if self.representation == "strong" else c.n - 1 - self.degree
            size = b.count(deg)
        if len(self.coefficients) != size:
            raise ValueError(f"expected {size} coefficients, got {len(self.coefficients)}")
        return self


def build_complex(vertices, cells):
    """Validate a cell list and build the oriented complex.

    Raises MeshError on degenerate cells, non-manifold facets, inconsistent
    orientation or an empty boundary.
    """
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    if vertices.ndim != 2:
        raise MeshError("vertex array must be two-dimensional")
    n = vertices.shape[1]
    if n not in (2, 3):
        raise MeshError(f"only dimensions 2 and 3 are supported, got {n}")
    if cells.ndim != 2 or cells.shape[1] != n + 1:
        raise MeshError(f"cells must have {n + 1} vertices")
    if cells.min() < 0 or cells.max() >= len(vertices):
        raise MeshError("cell refers to a nonexistent vertex")

    top = sorted({tuple(sorted(int(v) for v in c)) for c in cells})
    if len(top) != len(cells):
        raise MeshError("duplicate cells")
    if any(len(set(t)) != n + 1 for t in top):
        raise MeshError("cell with repeated vertex")

    simplices = [None] * (n + 1)
    simplices[n] = top
    for k in range(n - 1, -1, -1):
        simplices[k] = sorted({f for s in simplices[k + 1] for f, _ in _faces(s)})
    used = {v[0] for v in simplices[0]}
    if len(used) != len(vertices):
        raise MeshError("mesh contains vertices not used by any cell")
    index = [{s: i for i, s in enumerate(sk)} for sk in simplices]
    cob = [coboundary_matrix(simplices[k], simplices[k + 1], index[k]) for k in range(n)]

    signs = np.empty(len(top))
    for i, t in enumerate(top):
        vol = signed_volume(vertices[list(t)])
        if abs(vol) <= 1e-14 * max(1.0, np.abs(vertices).max()) ** n:
            raise MeshError(f"degenerate cell {t}")
        signs[i] = np.sign(vol)

    facet_counts = np.asarray(abs(cob[n - 1]).sum(axis=0)).ravel()
    if np.any(facet_counts > 2):
        bad = simplices[n - 1][int(np.argmax(facet_counts))]
        raise MeshError(f"non-manifold facet {bad} lies in {int(facet_counts.max())} cells")
    if not np.any(facet_counts == 1):
        raise MeshError("mesh has empty boundary")
    # interior facets must receive opposite induced orientations from their two cells
    induced = cob[n - 1].T @ signs
    interior = facet_counts == 2
    if np.any(np.abs(induced[interior]) > 0.5):
        raise MeshError("cells are not consistently oriented (non-orientable or folded mesh)")

    return SimplicialComplex(n, vertices, simplices, cob, signs, index)


def extract_boundary(c):
    """Boundary subcomplex of ``c`` with inclusion maps and outward orientation."""
    n = c.n
    counts = c.top_faces_count()
    facets = [c.simplices[n - 1][i] for i in np.flatnonzero(counts == 1)]
    if not facets:
        raise MeshError("mesh has empty boundary")
    simplices = [None] * n
    simplices[n - 1] = facets
    for k in range(n - 2, -1, -1):
        simplices[k] = sorted({f for s in simplices[k + 1] for f, _ in _faces(s)})
    index = [{s: i for i, s in enumerate(sk)} for sk in simplices]
    cob = [coboundary_matrix(simplices[k], simplices[k + 1], index[k]) for k in range(n - 1)]
    inclusion = [np.array([c.index[k][s] for s in simplices[k]], dtype=np.int64) for k in range(n)]

    # outward-normal-first orientation: coefficient of the facet in the boundary of its oriented cell
    dn = c.coboundary[n - 1].tocsc()
    signs = np.empty(len(facets))
    for j, fi in enumerate(inclusion[n - 1]):
        col = dn.getcol(fi)
        cell, inc = col.indices[0], col.data[0]
        signs[j] = c.signs[cell] * inc

    if n - 1 >= 1:
        ridge_counts = np.asarray(abs(cob[n - 2]).sum(axis=0)).ravel()
        if np.any(ridge_counts != 2):
            raise MeshError("boundary is not a closed manifold")
    # boundary simplices keep bulk vertex ids, so the bulk coordinate array is shared
    inner = SimplicialComplex(n - 1, c.vertices, simplices, cob, signs, index)
    return BoundaryComplex(inner, inclusion, signs)


def boundary_masks(c, b):
    """Boolean masks over bulk k-simplices marking those that lie on the boundary."""
    masks = []
    for k in range(c.n + 1):
        m = np.zeros(c.count(k), dtype=bool)
        if k < c.n:
            m[b.inclusion[k]] = True
        masks.append(m)
    return masks


def trace(c, b, omega):
    """Pull back a strong bulk k-cochain to the boundary (restriction of coefficients)."""
    if omega.domain != "bulk" or omega.representation != "strong":
        raise ValueError("trace expects a strong bulk cochain")
    if omega.degree >= c.n:
        raise ValueError(f"no boundary simplices of degree {omega.degree}")
    omega.check(c)
    return Cochain(omega.degree, "boundary", "strong", omega.coefficients[b.inclusion[omega.degree]])


def load_mesh(path):
    """Read a mesh in the ``dim / vertices / cells`` text format."""
    lines = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        s = raw.strip()
        if s and not s.startswith("#"):
            lines.append(s)
    try:
        it = iter(lines)
        key, n = next(it).split()
        if key != "dim":
            raise MeshError("expected 'dim n' header")
        n = int(n)
        key, nv = next(it).split()
        if key != "vertices":
            raise MeshError("expected 'vertices V' line")
        verts = [[float(x) for x in next(it).split()] for _ in range(int(nv))]
        key, nc = next(it).split()
        if key != "cells":
            raise MeshError("expected 'cells C' line")
        cells = [[int(x) for x in next(it).split()] for _ in range(int(nc))]
    except StopIteration:
        raise MeshError("unexpected end of mesh file") from None
    except ValueError as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"parse error: {exc}") from None
    if any(len(v) != n for v in verts):
        raise MeshError(f"every vertex needs {n} coordinates")
    if any(len(c) != n + 1 for c in cells):
        raise MeshError(f"every cell needs {n + 1} vertex indices")
    return build_complex(np.array(verts).reshape(-1, n), np.array(cells).reshape(-1, n + 1))


def write_mesh(path, vertices, cells, comment=None):
    vertices = np.asarray(vertices, dtype=float)
    cells = np.asarray(cells, dtype=np.int64)
    out = []
    if comment:
        out.append(f"# {comment}")
    out.append(f"dim {vertices.shape[1]}")
    out.append(f"vertices {len(vertices)}")
    out.extend(" ".join(repr(float(x)) for x in v) for v in vertices)
    out.append(f"cells {len(cells)}")
    out.extend(" ".join(str(int(i)) for i in c) for c in cells)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def local_subsimplices(d, k):
    """Sorted k-faces of the reference d-simplex as local vertex tuples."""
    return list(itertools.combinations(range(d + 1), k + 1))
