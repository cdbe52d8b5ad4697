"""Moment-angle manifolds of simple polytopes.

Quadric presentations of the real moment-angle manifold, explicit vertex
atlases, collar systems with the linear-to-quadratic corner diffeomorphism,
and equivariant sign lifts of facet-compatible maps between polytopes.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    Polytope,
    VertexChart,
    combinatorial_type,
    embed_jP,
    enumerate_vertices,
    load_polytope,
    match_combinatorics,
    project_to_base,
    validate_hrep,
    vertex_chart,
)
from .gale import QuadricSystem, complement_matrix, phi_residuals  # noqa: E402
from .fixtures import load_fixture  # noqa: E402

__all__ = [
    "Polytope", "VertexChart", "combinatorial_type", "embed_jP", "enumerate_vertices",
    "load_polytope", "match_combinatorics", "project_to_base", "validate_hrep", "vertex_chart",
    "QuadricSystem", "complement_matrix", "phi_residuals", "load_fixture", "__version__",
]
