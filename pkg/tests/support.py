"""Shared mesh pipelines for the test modules.

Building the boundary operators of a three-dimensional mesh takes seconds, so
each (mesh, resolution) pipeline is assembled once per session and reused.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from hodge_dtn import algebra, generators, probes
from hodge_dtn.dtn import assemble_all
from hodge_dtn.galerkin import assemble_galerkin
from hodge_dtn.mesh import build_complex, extract_boundary

DEFAULT_MESHES = ("disk2d", "annulus2d", "ball3d", "shell3d", "solidtorus3d")

_CACHE = {}


@dataclass
class Pipeline:
    name: str
    resolution: int
    c: object
    b: object
    gs: object
    dtn: object
    alg: object
    seconds: float
    _derived: object = None
    _probes: dict = field(default=None, repr=False)

    @property
    def derived(self):
        if self._derived is None:
            self._derived = algebra.assemble_derived(self.alg)
        return self._derived

    @property
    def probes(self):
        if self._probes is None:
            self._probes = probes.probe_spaces(self.gs)
        return self._probes

    @property
    def pairing(self):
        return algebra.Pairing(self.alg, self.probes)


def build(name, resolution=None, with_natural=False):
    """Assemble a pipeline from scratch and store it in the session cache."""
    res = generators.DEFAULT_RESOLUTION[name] if resolution is None else resolution
    t0 = time.perf_counter()
    c = build_complex(*generators.generate(name, res))
    b = extract_boundary(c)
    gs = assemble_galerkin(c, b)
    dtn = assemble_all(c, b, gs, with_natural=with_natural)
    alg = algebra.BoundaryAlgebra(dtn, gs, b)
    p = Pipeline(name, res, c, b, gs, dtn, alg, time.perf_counter() - t0)
    _CACHE[(name, res, with_natural)] = p
    if with_natural:
        _CACHE.setdefault((name, res, False), p)
    return p


def pipeline(name, resolution=None, with_natural=False):
    res = generators.DEFAULT_RESOLUTION[name] if resolution is None else resolution
    hit = _CACHE.get((name, res, with_natural))
    return hit if hit is not None else build(name, res, with_natural)
