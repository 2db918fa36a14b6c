"""Convenience composition: sample -> radii -> weights -> fit."""

from __future__ import annotations

from .depth import RadiusProfile, TrimConfig, alpha_radii, trim_weights
from .estimators import TrimmedFit, trimmed_cov_pcs
from .hilbert import WeightedSample, pairwise_distances


def radius_profile(sample: WeightedSample, alpha: float) -> RadiusProfile:
    return alpha_radii(pairwise_distances(sample), alpha)


def fit_trimmed(sample: WeightedSample, config: TrimConfig, K: int = 2) -> TrimmedFit:
    """Trimmed mean and leading ``K`` trimmed components of ``sample``."""
    weights = trim_weights(radius_profile(sample, config.alpha), config)
    return trimmed_cov_pcs(sample, weights, K)
