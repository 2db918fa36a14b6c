"""Interdistance-based data depth and trimmed estimators for Hilbert-space data."""

__version__ = "0.1.0"

from .baselines import MedianResult, sample_mean_and_pcs, spatial_median, spherical_pcs
from .depth import (
    RadiusProfile,
    TrimConfig,
    TrimWeights,
    alpha_radii,
    max_ranks,
    soft_weight_g,
    trim_weights,
)
from .estimators import (
    TrimmedFit,
    breakdown_point,
    complement_mean,
    scores,
    trimmed_cov_pcs,
    trimmed_mean,
)
from .exceptions import DegenerateTrimError, HilbtrimError
from .hilbert import (
    Grid,
    WeightedSample,
    distance_matrix,
    gram_matrix,
    inner_product,
    pairwise_distances,
    trapezoid_weights,
)
from .pipeline import fit_trimmed, radius_profile

__all__ = [
    "Grid", "WeightedSample", "trapezoid_weights", "inner_product", "gram_matrix",
    "distance_matrix", "pairwise_distances", "RadiusProfile", "TrimConfig", "TrimWeights",
    "alpha_radii", "max_ranks", "soft_weight_g", "trim_weights", "TrimmedFit", "trimmed_mean",
    "trimmed_cov_pcs", "scores", "complement_mean", "breakdown_point", "MedianResult",
    "sample_mean_and_pcs", "spatial_median", "spherical_pcs", "radius_profile", "fit_trimmed",
    "HilbtrimError", "DegenerateTrimError",
]
