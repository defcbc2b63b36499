"""Hoelder smoothness, Taylor approximation and quadratic-form norms in normed spaces."""

from .certifier import (CertifyConfig, EllipsoidModel, WitnessCertificate, build_witness,
                        certify, find_witness_pair, lowner_transform, mvee_origin,
                        verify_certificate)
from .corpus import (SmoothFunction, affine_shift, example51, get_function, make_linear,
                     make_power, make_quadratic, make_zero)
from .descent import DescentConfig, DescentTrace, iteration_bound, run, step_size, verify_trace
from .holder import (HolderReport, SamplingConfig, approx_ratios, coefficient_convex,
                     coefficient_euclidean, coefficient_general, estimate_constants,
                     figure1_table, holder_ratio, verify_bounds)
from .normed_space import (NormSpec, dual_norm_eval, norm_eval, parallelogram_residual,
                           steepest_ascent_direction)
from .quadnorms import (SymmetricOperator, gap_report, operator_norm, quadratic_form_norm,
                        rank2_operator)
from .verdict import Verdict

__version__ = "0.1.0"

__all__ = [
    "CertifyConfig",
    "EllipsoidModel",
    "WitnessCertificate",
    "build_witness",
    "certify",
    "find_witness_pair",
    "lowner_transform",
    "mvee_origin",
    "verify_certificate",
    "SmoothFunction",
    "affine_shift",
    "example51",
    "get_function",
    "make_linear",
    "make_power",
    "make_quadratic",
    "make_zero",
    "DescentConfig",
    "DescentTrace",
    "iteration_bound",
    "run",
    "step_size",
    "verify_trace",
    "HolderReport",
    "SamplingConfig",
    "approx_ratios",
    "coefficient_convex",
    "coefficient_euclidean",
    "coefficient_general",
    "estimate_constants",
    "figure1_table",
    "holder_ratio",
    "verify_bounds",
    "NormSpec",
    "dual_norm_eval",
    "norm_eval",
    "parallelogram_residual",
    "steepest_ascent_direction",
    "SymmetricOperator",
    "gap_report",
    "operator_norm",
    "quadratic_form_norm",
    "rank2_operator",
    "Verdict",
]
