"""Dynamical-systems analysis of piecewise-linear recurrent maps.

Core objects: model variants (:mod:`pldyn.models`), eigenstructure and
closed-form orbits (:mod:`pldyn.spectral`), predecessor search
(:mod:`pldyn.inversion`), cycle search (:mod:`pldyn.cycles`), invariant
manifolds (:mod:`pldyn.manifold`), closed-form planar analysis
(:mod:`pldyn.planar`), trajectory diagnostics (:mod:`pldyn.metrics`) and
deterministic artifact I/O (:mod:`pldyn.fileio`).
"""
from .cycles import (
    Cycle,
    classify_multipliers,
    compose_pieces,
    find_cycles,
    find_fixed_points,
    solve_cycle_candidate,
)
from .errors import (
    DegenerateBasisError,
    DivergenceError,
    MarginalEigenvalueError,
    NoBorderCrossingError,
    NoCandidateError,
    NonInvertibleError,
    NoPredecessorError,
    PldynError,
    RepeatedEigenvalueError,
    SingularPieceError,
    UnitEigenvalueError,
)
from .fileio import PACKAGE_VERSION, load_model, model_from_dict, save_model
from .inversion import BacktrackContext, backtrack, backward_orbit, invert_in_region
from .manifold import (
    Manifold,
    ManifoldSegment,
    build_manifold,
    build_manifold_fallback,
    hausdorff_distance,
    membership_defect,
)
from .metrics import (
    AttractorRef,
    basin_grid,
    bifurcation_sweep,
    lyapunov_exponents,
    prediction_error,
    prediction_error_curve,
    simulate,
    state_space_divergence,
)
from .models import (
    AffinePiece,
    AlRnn,
    PiecewiseModel,
    RegionCode,
    ShallowPlrnn,
    StandardPlrnn,
    relu,
)
from .planar import (
    Map2D,
    detect_homoclinic,
    existence_stability_regions,
    fixed_points_2d,
    homoclinic_case_i,
    homoclinic_case_ii,
    homoclinic_recursive,
    invert_2d,
    matrix_power_closed_form,
)
from .spectral import (
    EigenStructure,
    JordanBlock,
    SideBasis,
    SideGroup,
    eigen_structure,
    orbit_closed_form,
    real_side_basis,
)

__version__ = PACKAGE_VERSION

__all__ = [
    "AffinePiece",
    "AlRnn",
    "AttractorRef",
    "BacktrackContext",
    "Cycle",
    "DegenerateBasisError",
    "DivergenceError",
    "EigenStructure",
    "JordanBlock",
    "Manifold",
    "ManifoldSegment",
    "Map2D",
    "MarginalEigenvalueError",
    "NoBorderCrossingError",
    "NoCandidateError",
    "NoPredecessorError",
    "NonInvertibleError",
    "PACKAGE_VERSION",
    "PiecewiseModel",
    "PldynError",
    "RegionCode",
    "RepeatedEigenvalueError",
    "ShallowPlrnn",
    "SideBasis",
    "SideGroup",
    "SingularPieceError",
    "StandardPlrnn",
    "UnitEigenvalueError",
    "backtrack",
    "backward_orbit",
    "basin_grid",
    "bifurcation_sweep",
    "build_manifold",
    "build_manifold_fallback",
    "classify_multipliers",
    "compose_pieces",
    "detect_homoclinic",
    "eigen_structure",
    "existence_stability_regions",
    "find_cycles",
    "find_fixed_points",
    "fixed_points_2d",
    "hausdorff_distance",
    "homoclinic_case_i",
    "homoclinic_case_ii",
    "homoclinic_recursive",
    "invert_2d",
    "invert_in_region",
    "load_model",
    "lyapunov_exponents",
    "matrix_power_closed_form",
    "membership_defect",
    "model_from_dict",
    "orbit_closed_form",
    "prediction_error",
    "prediction_error_curve",
    "real_side_basis",
    "relu",
    "save_model",
    "simulate",
    "solve_cycle_candidate",
    "state_space_divergence",
]
