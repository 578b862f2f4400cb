"""Multimode quantum light scattering by 2D conducting cylinders.

Characteristic modes (analytic for circles, method of moments for general
smooth contours) are quantized into a few-photon Fock engine; incident
Gaussian beams are expanded over the mode basis and first-/second-order
field correlation maps expose two-photon interference.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DegenerateBeamsError, NumericalError
from .mom import (Circle, Contour, Ellipse, Superellipse, WaveContext,
                  assemble_impedance, char_near_field, classical_scatter,
                  discretize_contour, far_pattern,
                  perturbation_and_scattering, solve_modes)
from .circle import (CircleScatterer, circle_basis_field, circle_eigenvalue,
                     circle_incoming_outgoing, circle_pattern,
                     circle_perturbation)
from .beams import (GaussianBeamSpec, ModalCoefficients, PrincipalModePair,
                    beam_field_direct, excitation_coeffs, orthogonalize,
                    overlap, principal_fields, rotate_coeffs)
from .fock import (FockState, ModeFieldEvaluator, apply_eplus, build_state,
                   commutator_matrix, g1, g2, mode_transform)
from .scenario import (ScenarioConfig, load_preset, parse_config,
                       read_csv_grid, run_scenario, write_outputs)

__all__ = [
    "__version__",
    "ConfigError", "DegenerateBeamsError", "NumericalError",
    "WaveContext", "Circle", "Ellipse", "Superellipse", "Contour",
    "discretize_contour", "assemble_impedance", "solve_modes",
    "char_near_field", "far_pattern", "perturbation_and_scattering",
    "classical_scatter",
    "CircleScatterer", "circle_eigenvalue", "circle_perturbation",
    "circle_basis_field", "circle_incoming_outgoing", "circle_pattern",
    "GaussianBeamSpec", "ModalCoefficients", "PrincipalModePair",
    "excitation_coeffs", "beam_field_direct", "rotate_coeffs", "overlap",
    "orthogonalize", "principal_fields",
    "FockState", "ModeFieldEvaluator", "build_state", "apply_eplus",
    "g1", "g2", "mode_transform", "commutator_matrix",
    "ScenarioConfig", "parse_config", "load_preset", "run_scenario",
    "write_outputs", "read_csv_grid",
]
