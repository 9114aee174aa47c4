"""Shape measures: lifting contour deformations to flow fields, projection and geodesic shooting."""
from .contour import (
    BoundaryScalarField,
    BoundaryVectorField,
    Contour,
    area,
    boundary_integral,
    horizontal_project,
    normal_field,
    resample_arclength,
    shape_derivative,
    tangent_field,
)
from .dynamics import (
    GeodesicPath,
    ParticleSet,
    density_uniformity,
    hessian_departure,
    integrate_flow,
    lifted_path,
    path_length,
    shoot_geodesic,
    verify_continuity,
)
from .errors import (
    DegenerateGeometry,
    FormatError,
    GeodesicBreakdown,
    IncompatibleData,
    InvalidArgument,
    MeshQualityFailure,
    OutOfDomain,
    ShapeflowError,
    SolverFailure,
)
from .mesh import TriMesh, mesh_statistics, triangulate
from .poisson import (
    ScalarField,
    VectorField,
    divergence,
    gradient,
    inner_product,
    ot_norm,
    solve_dirichlet,
    solve_neumann,
)
from .shapes import bump, circle, ellipse, parse_field, star
from .tangent import (
    TangentDecomposition,
    TangentVector,
    decompose,
    delift,
    lift,
    project_to_stan,
    scale_component,
)

__all__ = [
    "BoundaryScalarField",
    "BoundaryVectorField",
    "Contour",
    "area",
    "boundary_integral",
    "horizontal_project",
    "normal_field",
    "resample_arclength",
    "shape_derivative",
    "tangent_field",
    "GeodesicPath",
    "ParticleSet",
    "density_uniformity",
    "hessian_departure",
    "integrate_flow",
    "lifted_path",
    "path_length",
    "shoot_geodesic",
    "verify_continuity",
    "DegenerateGeometry",
    "FormatError",
    "GeodesicBreakdown",
    "IncompatibleData",
    "InvalidArgument",
    "MeshQualityFailure",
    "OutOfDomain",
    "ShapeflowError",
    "SolverFailure",
    "TriMesh",
    "mesh_statistics",
    "triangulate",
    "ScalarField",
    "VectorField",
    "divergence",
    "gradient",
    "inner_product",
    "ot_norm",
    "solve_dirichlet",
    "solve_neumann",
    "bump",
    "circle",
    "ellipse",
    "parse_field",
    "star",
    "TangentDecomposition",
    "TangentVector",
    "decompose",
    "delift",
    "lift",
    "project_to_stan",
    "scale_component",
]
