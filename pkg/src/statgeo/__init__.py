"""Numerical geometry of statistical manifolds.

The package computes the tensor calculus of dual-connection geometry from
closed-form chart data (difference tensor, conjugate connection, curvature
and interchange tensors, Tchebychev fields, Laplacians), evaluates tension
and statistical bi-tension fields of maps between such manifolds, builds
Blaschke structures of convex graph hypersurfaces, and runs a variational
solver for the bi-energy on torus lattices.
"""

from .charts import Box, ChartManifold, Torus, halton_points, load_chart
from .equiaffine import (
    GraphHypersurface,
    affine_invariants,
    blaschke,
    hypersurface_bitension,
)
from .expressions import (
    DomainError,
    ExpressionField,
    ParseError,
    eval_deriv,
    parse_expression,
)
from .geometry import (
    CodazziError,
    StatStructure,
    build_structure,
    check_curvature_identities,
    curvature,
    divergence,
    laplacian_scalar,
    ricci_and_U,
    space_form_interchange,
    tchebychev,
    validate,
)
from .maps import (
    SmoothMap,
    bitension,
    check_biharmonic,
    curve_bitension,
    lemma51_integrand,
    tension,
)
from .simplex import fisher_metric, simplex_invariants, simplex_structure
from .variational import (
    GridMap,
    adjointness_check,
    bienergy,
    first_variation_check,
    grid_bitension,
    integrate,
    minimize,
)

__version__ = "0.1.0"
