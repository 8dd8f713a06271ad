"""Deterministic test manifolds: disk, annulus, ball, spherical shell, solid torus.

Each generator returns ``(vertices, cells)`` with cells as vertex-index rows.
Orientation is recomputed from the embedding when the complex is built.
"""

from __future__ import annotations

import itertools

import numpy as np

# minimum accepted resolution per generator
MIN_RESOLUTION = {"disk2d": 1, "annulus2d": 2, "ball3d": 1, "shell3d": 1, "solidtorus3d": 1}
DEFAULT_RESOLUTION = {"disk2d": 29, "annulus2d": 16, "ball3d": 3, "shell3d": 2, "solidtorus3d": 2}

ANNULUS_RADII = (0.5, 1.0)
SHELL_RADII = (0.5, 1.0)


def _zip_rings(inner, outer):
    """Triangulate the band between two closed vertex rings ordered by angle."""
    tris = []
    ni, no = len(inner), len(outer)
    i = j = 0
    # advance along whichever ring has the smaller next fractional position
    while i < ni or j < no:
        if j < no and (i >= ni or (j + 1) / no <= (i + 1) / ni):
            tris.append((inner[i % ni], outer[j % no], outer[(j + 1) % no]))
            j += 1
        else:
            tris.append((inner[i % ni], outer[(j) % no], inner[(i + 1) % ni]))
            i += 1
    return tris


def disk2d(resolution):
    """Unit disk; ring j carries 6j vertices, 6 r^2 triangles in total."""
    r = int(resolution)
    verts = [(0.0, 0.0)]
    rings = [[0]]
    for j in range(1, r + 1):
        m = 6 * j
        ids = []
        for i in range(m):
            t = 2 * np.pi * i / m
            ids.append(len(verts))
            verts.append((j / r * np.cos(t), j / r * np.sin(t)))
        rings.append(ids)
    cells = [(0, rings[1][i], rings[1][(i + 1) % 6]) for i in range(6)]
    for j in range(2, r + 1):
        cells.extend(_zip_rings(rings[j - 1], rings[j]))
    return np.array(verts), np.array(cells)


def annulus2d(resolution, radii=ANNULUS_RADII):
    """Polar grid on r0 <= |x| <= r1 with ``resolution`` radial layers."""
    nr = int(resolution)
    r0, r1 = radii
    nt = int(round(2 * np.pi * (r0 + r1) / 2 / ((r1 - r0) / nr)))
    verts = []
    for i in range(nr + 1):
        rad = r0 + (r1 - r0) * i / nr
        for j in range(nt):
            t = 2 * np.pi * j / nt
            verts.append((rad * np.cos(t), rad * np.sin(t)))
    vid = lambda i, j: i * nt + (j % nt)
    cells = []
    for i in range(nr):
        for j in range(nt):
            a, b, c, d = vid(i, j), vid(i, j + 1), vid(i + 1, j), vid(i + 1, j + 1)
            if (i + j) % 2 == 0:
                cells += [(a, b, d), (a, d, c)]
            else:
                cells += [(a, b, c), (b, d, c)]
    return np.array(verts), np.array(cells)


# Freudenthal (Kuhn) subdivision of the unit cube into 6 tetrahedra along monotone paths
_KUHN = []
for perm in itertools.permutations(range(3)):
    path = [np.zeros(3, dtype=int)]
    for ax in perm:
        nxt = path[-1].copy()
        nxt[ax] = 1
        path.append(nxt)
    _KUHN.append([tuple(p) for p in path])


def _cubes_to_tets(cubes, vertex_id):
    cells = []
    for base in cubes:
        for path in _KUHN:
            cells.append(tuple(vertex_id(tuple(int(base[a] + p[a]) for a in range(3))) for p in path))
    return cells


def _grid_mesh(cubes, coords):
    """Tetrahedralize a set of unit grid cubes and map grid points through ``coords``."""
    ids = {}
    verts = []

    def vertex_id(g):
        if g not in ids:
            ids[g] = len(verts)
            verts.append(coords(g))
        return ids[g]

    cells = _cubes_to_tets(cubes, vertex_id)
    return np.array(verts, dtype=float), np.array(cells)


def _boundary_triangles(tets):
    """Triangles that belong to exactly one tetrahedron."""
    faces = np.sort(np.concatenate([tets[:, [1, 2, 3]], tets[:, [0, 2, 3]],
                                    tets[:, [0, 1, 3]], tets[:, [0, 1, 2]]]), axis=1)
    uniq, counts = np.unique(faces, axis=0, return_counts=True)
    return uniq[counts == 1]


def _split_prism(bottom, top):
    """Three tetrahedra filling a triangular prism, conforming with neighbours.

    Every quadrilateral side is cut by the diagonal through its vertex of
    smallest global index, so adjacent prisms agree on shared faces.
    """
    v = list(bottom) + list(top)
    i = int(np.argmin(v))
    if i >= 3:
        v = v[3:] + v[:3]
        i -= 3
    rot = [(i + j) % 3 for j in range(3)]
    v = [v[r] for r in rot] + [v[r + 3] for r in rot]
    if min(v[1], v[5]) < min(v[2], v[4]):
        local = [(0, 1, 2, 5), (0, 1, 5, 4), (0, 4, 5, 3)]
    else:
        local = [(0, 1, 2, 4), (0, 4, 2, 5), (0, 4, 5, 3)]
    return [tuple(v[a] for a in t) for t in local]


def _layers(surface_pts, triangles, positions, first_id=0):
    """Stack prism layers over a surface triangulation.

    ``positions(p, l)`` maps a surface point to its location on layer l; layer
    vertex ids are ``first_id + l * len(surface_pts) + i``.
    """
    ns = len(surface_pts)
    nl = positions.layers
    verts = [positions(p, l) for l in range(nl + 1) for p in surface_pts]
    cells = []
    for l in range(nl):
        lo = first_id + l * ns
        hi = first_id + (l + 1) * ns
        for tri in triangles:
            cells.extend(_split_prism([lo + t for t in tri], [hi + t for t in tri]))
    return np.array(verts, dtype=float), cells


class _Blend:
    """Layer positions interpolating between two radial profiles."""

    def __init__(self, layers, inner, outer):
        self.layers = layers
        self.inner = inner
        self.outer = outer

    def __call__(self, p, l):
        s = l / self.layers
        return (1 - s) * self.inner(p) + s * self.outer(p)


def _cube_grid(cells_per_side, half):
    """Kuhn triangulation of the cube [-half, half]^3."""
    r = cells_per_side
    cubes = list(itertools.product(range(r), repeat=3))
    return _grid_mesh(cubes, lambda g: (np.array(g, dtype=float) / r * 2 - 1) * half)


def ball3d(resolution, core=0.5):
    """Unit ball: a Kuhn-cube core of half-width ``core`` wrapped in prism layers.

    The layers blend the flat core surface into the sphere, so no element
    has all of its vertices on the boundary.
    """
    r = int(resolution)
    cverts, ctets = _cube_grid(2 * r, core)
    ctets = np.asarray(ctets)
    surf = _boundary_triangles(ctets)
    ids = np.unique(surf)
    local = {int(g): i for i, g in enumerate(ids)}
    tris = [tuple(local[int(t)] for t in tri) for tri in surf]
    pts = cverts[ids]
    blend = _Blend(r, lambda p: p, lambda p: p / np.linalg.norm(p))
    lverts, lcells = _layers(pts, tris, blend, first_id=len(cverts))
    # layer 0 coincides with the core surface: redirect those ids to core vertices
    ns = len(pts)
    remap = np.arange(len(cverts) + len(lverts))
    remap[len(cverts): len(cverts) + ns] = ids
    keep = np.ones(len(cverts) + len(lverts), dtype=bool)
    keep[len(cverts): len(cverts) + ns] = False
    verts = np.vstack([cverts, lverts])
    cells = np.vstack([ctets, remap[np.asarray(lcells)]])
    new_id = np.cumsum(keep) - 1
    return verts[keep], new_id[cells]


def shell3d(resolution, radii=SHELL_RADII):
    """Spherical shell: projected cube-surface grid extruded in radial prism layers."""
    r = int(resolution)
    cverts, ctets = _cube_grid(2 * r, 1.0)
    surf = _boundary_triangles(np.asarray(ctets))
    ids = np.unique(surf)
    local = {int(g): i for i, g in enumerate(ids)}
    tris = [tuple(local[int(t)] for t in tri) for tri in surf]
    pts = cverts[ids]
    r0, r1 = radii
    blend = _Blend(r, lambda p: r0 * p / np.linalg.norm(p), lambda p: r1 * p / np.linalg.norm(p))
    verts, cells = _layers(pts, tris, blend)
    return verts, np.array(cells)


def solidtorus3d(resolution, major=1.0, minor=0.35):
    """Square-section tube around a circle; 2r x 2r section cells, 12r segments."""
    r = int(resolution)
    ns = 2 * r
    nphi = 12 * r
    cubes = list(itertools.product(range(ns), range(ns), range(nphi)))

    def coords(g):
        x = (g[0] / ns - 0.5) * 2 * minor
        z = (g[1] / ns - 0.5) * 2 * minor
        phi = 2 * np.pi * (g[2] % nphi) / nphi
        return ((major + x) * np.cos(phi), (major + x) * np.sin(phi), z)

    ids = {}
    verts = []

    def vertex_id(g):
        g = (g[0], g[1], g[2] % nphi)
        if g not in ids:
            ids[g] = len(verts)
            verts.append(coords(g))
        return ids[g]

    cells = _cubes_to_tets(cubes, vertex_id)
    return np.array(verts, dtype=float), np.array(cells)


GENERATORS = {
    "disk2d": disk2d,
    "annulus2d": annulus2d,
    "ball3d": ball3d,
    "shell3d": shell3d,
    "solidtorus3d": solidtorus3d,
}


def generate(name, resolution=None):
    """Return ``(vertices, cells)`` for a built-in manifold."""
    if name not in GENERATORS:
        raise KeyError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[name]
    if int(resolution) < MIN_RESOLUTION[name]:
        raise ValueError(f"{name} needs resolution >= {MIN_RESOLUTION[name]}")
    return GENERATORS[name](int(resolution))
