"""Numerical analysis of vertical rigidity for functions f: R^2 -> R."""
from .classifier import RigidityCase, classify_case, detect_affine_direction
from .direction_set import (H3Profile, audit_strip_properties, estimate_h3_profile, jordan_curve,
                            sample_direction_set)
from .errors import IoError, ParseError, UsageError, VRigidError
from .family_fit import FamilyFit, best_family, fit_affine, fit_exp_affine, fit_exp_strip
from .formats import parse_grid_csv, parse_spec_text, read_grid_csv, read_spec_file
from .function_model import (Affine, ExpAffine, ExpStrip, Expression, FunctionSpec, Grid, Window,
                             directional_slope, evaluate, normalize_exp_affine, rotate_about_z)
from .sphere import Isometry3, alpha_angle, apply_isometry, decompose_isometry, psi, w_coefficient
from .translations import classify_translation_group, find_translation_witness, multiplicativity_residual
from .verdict import RigidityReport, VerificationPlan, analyze, issue_verdict, strip_transport_check
from .witness import verify_witness, witness_affine, witness_exp_affine, witness_exp_strip

__version__ = "0.1.0"
