"""Singular Schrodinger operators with meromorphic local solutions.

Local (Frobenius) analysis at poles, transfer matrices along pole-avoiding
contours, Floquet discriminants and gap reports, and the regularized
indefinite pairing with its negative-square counts.
"""
from .errors import SmeroError
from .potential import Potential, make_family, list_singularities, singularity_profile
from .series import LaurentSeries
from .frobenius import frobenius_solution, is_smeromorphic, log_obstruction
from .contour import build_contour, propagate
from .transfer import discriminant, monodromy, periodic_spectrum_gaps, transfer_matrix
from .innerprod import gram_signature, inner_product, star_conjugate

__all__ = [
    "SmeroError", "Potential", "make_family", "list_singularities", "singularity_profile",
    "LaurentSeries", "frobenius_solution", "is_smeromorphic", "log_obstruction",
    "build_contour", "propagate", "discriminant", "monodromy", "periodic_spectrum_gaps",
    "transfer_matrix", "gram_signature", "inner_product", "star_conjugate",
]
__version__ = "0.1.0"
