"""Content-aware image retargeting by conformal-energy minimization."""

from .energy import (
    EnergyReport,
    GradCoeffs,
    SparseSymmetricSystem,
    assemble,
    discrete_energy,
    energy_density,
    grad_coeffs,
    map_jacobians,
    orientation_determinants,
    verify_m_matrix,
)
from .errors import (
    BindFailure,
    ConstraintViolation,
    DegenerateInput,
    DegenerateTriangle,
    EmptyFreeSet,
    FlippedTriangle,
    IndexMeshMismatch,
    InvalidDimension,
    MissingParameter,
    NoComponents,
    NoConvergence,
    NonPositiveScale,
    OutOfDomain,
    OverlapViolation,
    RetargetError,
    SingularSystem,
    SizeMismatch,
)
from .mesh import (
    Role,
    SimplicialMesh,
    VertexClass,
    VertexClassification,
    build_mesh,
    classify_vertices,
    corner_chop,
    dump_mesh,
    load_mesh,
    locate_point,
    mesh_diameter,
)
from .raster import Raster, load_raster, save_raster
from .saliency import SaliencyMap, compute_saliency, threshold_rois, top_fraction_mask
from .solver import (
    ConstraintSet,
    CorrectionResult,
    RetargetResult,
    RetargetSpec,
    SimplicialMap,
    apply_constraints,
    bijection_correct,
    check_orientation,
    fallback_constraints,
    init_params,
    refine_constraints,
    retarget,
    solve_minimizer,
    target_width,
    uniform_stretch_boundary,
)
from .warp import TargetMeshIndex, build_target_index, resample

__version__ = "0.1.0"

__all__ = [
    "Role",
    "SimplicialMesh",
    "VertexClass",
    "VertexClassification",
    "build_mesh",
    "classify_vertices",
    "corner_chop",
    "dump_mesh",
    "load_mesh",
    "locate_point",
    "mesh_diameter",
    "EnergyReport",
    "GradCoeffs",
    "SparseSymmetricSystem",
    "assemble",
    "discrete_energy",
    "energy_density",
    "grad_coeffs",
    "map_jacobians",
    "orientation_determinants",
    "verify_m_matrix",
    "ConstraintSet",
    "CorrectionResult",
    "RetargetResult",
    "RetargetSpec",
    "SimplicialMap",
    "apply_constraints",
    "bijection_correct",
    "check_orientation",
    "fallback_constraints",
    "init_params",
    "refine_constraints",
    "retarget",
    "solve_minimizer",
    "target_width",
    "uniform_stretch_boundary",
    "Raster",
    "load_raster",
    "save_raster",
    "SaliencyMap",
    "compute_saliency",
    "threshold_rois",
    "top_fraction_mask",
    "TargetMeshIndex",
    "build_target_index",
    "resample",
    "RetargetError",
    "InvalidDimension",
    "DegenerateInput",
    "OverlapViolation",
    "OutOfDomain",
    "DegenerateTriangle",
    "SizeMismatch",
    "EmptyFreeSet",
    "MissingParameter",
    "ConstraintViolation",
    "SingularSystem",
    "NonPositiveScale",
    "NoConvergence",
    "FlippedTriangle",
    "IndexMeshMismatch",
    "NoComponents",
    "BindFailure",
]
