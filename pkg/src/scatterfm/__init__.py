"""Forward-and-inverse acoustic scattering workbench (2D).

Synthesizes far-field operators for scatterers made of two components with
different physics, and reconstructs the first component by a factorization
method whose far-field operator is modified with artificial operators on
a-priori known domains, making the reconstruction work at every positive
wavenumber.
"""

__version__ = "0.1.0"

from .geometry import (Curve, ContrastSpec, Scene, circle, ellipse, kite,
                       curve_sample, validate_scene, select_phase)
from .forward_bie import (BoundarySpec, assemble_boundary_operator,
                          solve_exterior, far_field_eval, gamma2)
from .forward_medium import solve_medium_obstacle, build_volume_grid
from .farfield_ops import (DirectionGrid, FarFieldMatrix,
                           assemble_far_field_operator, artificial_operator,
                           modify_operator, add_noise, read_far_field,
                           write_far_field)
from .factorization import (build_sharp, picard_indicator, reconstruct,
                            threshold_and_score)

__all__ = [
    "Curve", "ContrastSpec", "Scene", "circle", "ellipse", "kite",
    "curve_sample", "validate_scene", "select_phase",
    "BoundarySpec", "assemble_boundary_operator", "solve_exterior",
    "far_field_eval", "gamma2",
    "solve_medium_obstacle", "build_volume_grid",
    "DirectionGrid", "FarFieldMatrix", "assemble_far_field_operator",
    "artificial_operator", "modify_operator", "add_noise",
    "read_far_field", "write_far_field",
    "build_sharp", "picard_indicator", "reconstruct", "threshold_and_score",
    "__version__",
]
