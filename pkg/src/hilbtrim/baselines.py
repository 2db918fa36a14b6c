"""Comparison estimators: sample mean/PCs, spatial median, spherical PCs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .depth import TrimWeights
from .estimators import TrimmedFit, _repeated_flags, gram_pcs, trimmed_cov_pcs
from .exceptions import DegenerateTrimError, InvalidSampleError
from .hilbert import WeightedSample

# Distances below this are treated as "the iterate sits on a data point".
ANCHOR_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MedianResult:
    median: np.ndarray
    iterations: int
    converged: bool
    final_step: float
    objective: np.ndarray = field(repr=False, default=None)


def sample_mean_and_pcs(sample: WeightedSample, K: int) -> TrimmedFit:
    if sample.n < 2:
        raise InvalidSampleError("sample PCA needs at least two observations")
    return trimmed_cov_pcs(sample, TrimWeights.uniform(sample.n), K)


def median_objective(sample: WeightedSample, m) -> float:
    return float(np.sum(sample.norm(sample.values - m)))


def _is_optimal_anchor(sample: WeightedSample, point) -> bool:
    """Subgradient test: ``||sum_{X_i != point} u_i|| <= #{X_i == point}``."""
    dist = sample.norm(sample.values - point)
    at = dist < ANCHOR_TOL
    far = ~at
    if not np.any(far):
        return True
    r = (1.0 / dist[far]) @ (sample.values[far] - point)
    return float(sample.norm(r)) <= at.sum()


def spatial_median(sample: WeightedSample, tol: float = 1e-8, max_iter: int = 500) -> MedianResult:
    """Minimizer of ``sum_i ||X_i - m||`` by Weiszfeld iteration.

    Starts from the coordinatewise mean.  Each iteration first checks whether
    the data point nearest the iterate satisfies the subgradient condition
    ``||R|| <= multiplicity``; if so it is the minimizer and is returned
    exactly.  Points the iterate sits on (distance < 1e-12) are left out of
    the Weiszfeld map and the step is damped as in Vardi and Zhang (2000).
    Non-convergence is reported through ``converged=False``, never raised.
    """
    x = sample.values
    n = sample.n
    if n < 1:
        raise InvalidSampleError("empty sample")
    m = x.mean(axis=0)
    obj = [median_objective(sample, m)]
    if n == 1:
        return MedianResult(x[0].copy(), 0, True, 0.0, np.array(obj))

    step = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        dist = sample.norm(x - m)
        # Weiszfeld creeps towards an optimal data point only linearly; test
        # the nearest one directly.
        near = x[int(np.argmin(dist))]
        if _is_optimal_anchor(sample, near):
            # certified optimum: the next Weiszfeld step would be zero
            step = 0.0
            if np.any(near != m):
                m = near.copy()
                obj.append(median_objective(sample, m))
            converged = True
            break
        at = dist < ANCHOR_TOL
        far = ~at
        inv = 1.0 / dist[far]
        t = (inv @ x[far]) / inv.sum()
        eta = int(at.sum())
        if eta:
            # on a non-optimal data point, so ||r|| > eta here
            rnorm = float(sample.norm(inv @ (x[far] - m)))
            gamma = min(1.0, eta / rnorm)
            t = (1.0 - gamma) * t + gamma * m
        step = float(sample.norm(t - m))
        m = t
        obj.append(median_objective(sample, m))
        if step <= tol * (1.0 + float(sample.norm(m))):
            converged = True
            break
    return MedianResult(m, it, converged, step, np.array(obj))


def spherical_pcs(sample: WeightedSample, K: int, median: MedianResult = None) -> TrimmedFit:
    """Eigenfunctions of the covariance of directions ``(X_i - m)/||X_i - m||``.

    ``m`` is the spatial median.  The directions are not re-centred (their
    second-moment operator about zero is decomposed) and the reported
    eigenvalues are those of the normalized data, so only the eigenfunctions
    are estimates of anything.  ``pc_coeffs`` act on ``X - m``.
    """
    if sample.n < 2:
        raise InvalidSampleError("spherical PCA needs at least two observations")
    if median is None:
        median = spatial_median(sample)
    m = median.median
    dev = sample.values - m
    norms = sample.norm(dev)
    keep = norms >= ANCHOR_TOL
    if not np.any(keep):
        raise DegenerateTrimError("every observation coincides with the spatial median")
    scale = np.zeros(sample.n)
    scale[keep] = 1.0 / norms[keep]
    directions = sample.with_values(dev * scale[:, None])
    wt = keep / keep.sum()
    lam, coeffs, values, truncated = gram_pcs(directions, wt, np.zeros(sample.p), K)
    return TrimmedFit(
        mean=m,
        eigenvalues=lam,
        pc_coeffs=coeffs * scale,
        pc_values=values,
        weights=None,
        repeated=_repeated_flags(lam),
        truncated=truncated,
        requested=K,
    )
