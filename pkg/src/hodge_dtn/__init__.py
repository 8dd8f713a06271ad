"""Discrete Dirichlet-to-Neumann operators for differential forms on simplicial manifolds.

The package assembles the boundary operators Phi_k and Psi_k from a Whitney
finite element discretization, derives Lambda, Pi, G, Theta and Psi-tilde
from them, checks the identities they satisfy, and recovers Betti numbers of
the manifold from their kernels.
"""

__version__ = "0.1.0"
