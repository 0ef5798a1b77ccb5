"""Numerical certification of sharp Gagliardo-Nirenberg trace inequalities on the half-space."""

from .constants import DomainError, Params, affine_sharp_constant, make_params, normalization_constants
from .extremals import SGLMatrix, Transformed, hp
from .functionals import affine_gn_quotient, dual_gap, energy_terms, gn_quotient, sharp_constant_gn
from .norms import NormSpec
from .quadrature import QuadratureScheme, default_scheme
from .report import Case, Report

__version__ = "0.1.0"

__all__ = [
    "Case",
    "DomainError",
    "NormSpec",
    "Params",
    "QuadratureScheme",
    "Report",
    "SGLMatrix",
    "Transformed",
    "affine_gn_quotient",
    "affine_sharp_constant",
    "default_scheme",
    "dual_gap",
    "energy_terms",
    "gn_quotient",
    "hp",
    "make_params",
    "normalization_constants",
    "sharp_constant_gn",
]
