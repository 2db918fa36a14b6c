"""Trimmed mean and trimmed principal components.

The trimmed covariance operator is never formed.  With normalized weights
``wt_i = w_i / sum(w)`` the n x n matrix

    G_ij = < sqrt(wt_i) (X_i - mu), sqrt(wt_j) (X_j - mu) >

has the same non-zero spectrum, and if ``c_k`` is its k-th unit eigenvector
with eigenvalue ``l_k`` then

    phi_k = sum_i (c_ki / sqrt(l_k)) sqrt(wt_i) (X_i - mu)

is the k-th eigenfunction.  This works whatever the dimension p of the
coordinates, in particular when p > n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .depth import TrimWeights, ceil_count, floor_count
from .exceptions import BreakdownHypothesisError, DegenerateTrimError, DimensionError
from .hilbert import WeightedSample

# Eigenvalues of G below this fraction of the largest are treated as null.
NULL_RTOL = 1e-12
# Neighbouring eigenvalues closer than this (relative) are flagged as repeated.
REPEAT_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class TrimmedFit:
    """Location, spectrum and eigenfunctions from one weighting of a sample.

    ``pc_coeffs[k] @ (X - center)`` reproduces ``pc_values[k]``, where
    ``center`` is ``mean`` for trimmed and sample PCA.  ``repeated[k]`` marks
    components whose eigenvalue is numerically tied with a neighbour; only
    the span of such a group is meaningful.  ``truncated`` is set when fewer
    than the requested number of components had positive eigenvalues.
    """

    mean: np.ndarray
    eigenvalues: np.ndarray
    pc_coeffs: np.ndarray
    pc_values: np.ndarray
    weights: Optional[TrimWeights]
    repeated: np.ndarray
    truncated: bool = False
    requested: int = 0

    @property
    def n_components(self) -> int:
        return self.eigenvalues.size

    @property
    def degenerate(self) -> bool:
        return self.n_components == 0 or bool(np.any(self.repeated))


def _as_array(w) -> np.ndarray:
    return np.asarray(w.w if isinstance(w, TrimWeights) else w, dtype=float)


def trimmed_mean(sample: WeightedSample, w) -> np.ndarray:
    """Weighted mean ``sum w_i X_i / sum w_i``; zero-weight rows are skipped."""
    w = _as_array(w)
    if w.shape != (sample.n,):
        raise DimensionError(f"{w.size} weights for {sample.n} observations")
    keep = w > 0
    if not np.any(keep):
        raise DegenerateTrimError("all weights are zero")
    wk = w[keep]
    return (wk @ sample.values[keep]) / wk.sum()


def complement_mean(sample: WeightedSample, w) -> np.ndarray:
    """Plain mean of the observations that received zero weight."""
    w = _as_array(w)
    cut = w == 0
    if not np.any(cut):
        raise DegenerateTrimError("no observation was trimmed")
    return sample.values[cut].mean(axis=0)


def _sign_fix(phi: np.ndarray, coeffs: np.ndarray):
    for k in range(phi.shape[0]):
        j = int(np.argmax(np.abs(phi[k])))
        if phi[k, j] < 0:
            phi[k] *= -1
            coeffs[k] *= -1


def _repeated_flags(lam: np.ndarray) -> np.ndarray:
    flags = np.zeros(lam.size, dtype=bool)
    for k in range(lam.size - 1):
        if lam[k] - lam[k + 1] < REPEAT_RTOL * lam[k]:
            flags[k] = flags[k + 1] = True
    return flags


def gram_pcs(sample: WeightedSample, wt: np.ndarray, center: np.ndarray, K: int):
    """Eigen-decomposition of the weighted, centred Gram matrix.

    ``wt`` are normalized weights (summing to one).  Returns ``(eigenvalues,
    coeffs, values, truncated)`` where coeffs is K x n over ``X - center``.
    Observations with zero weight take no part in the computation.
    """
    n = sample.n
    keep = np.flatnonzero(wt > 0)
    root = np.sqrt(wt[keep])
    y = (sample.values[keep] - center) * root[:, None]
    g = (y * sample.quad_weights) @ y.T
    g = np.triu(g) + np.triu(g, 1).T
    lam, vec = np.linalg.eigh(g)
    lam, vec = lam[::-1], vec[:, ::-1]
    top = lam[0] if lam.size else 0.0
    positive = int(np.sum(lam > NULL_RTOL * top)) if top > 0 else 0
    m = min(K, positive)
    lam, vec = lam[:m].copy(), vec[:, :m]
    sub = (vec / np.sqrt(lam)).T * root  # m x |keep|
    coeffs = np.zeros((m, n))
    coeffs[:, keep] = sub
    values = sub @ (sample.values[keep] - center)
    _sign_fix(values, coeffs)
    return lam, coeffs, values, m < K


def trimmed_cov_pcs(sample: WeightedSample, w, K: int) -> TrimmedFit:
    """Leading ``K`` eigenpairs of the trimmed covariance operator.

    Centering always uses the trimmed mean from the same weights.  Components
    with eigenvalue at most ``1e-12`` times the largest are dropped, in which
    case the fit is flagged ``truncated`` rather than raising.
    """
    wv = _as_array(w)
    if K < 0:
        raise ValueError("K must be non-negative")
    mu = trimmed_mean(sample, wv)
    wt = wv / wv.sum()
    lam, coeffs, values, truncated = gram_pcs(sample, wt, mu, K)
    return TrimmedFit(
        mean=mu,
        eigenvalues=lam,
        pc_coeffs=coeffs,
        pc_values=values,
        weights=w if isinstance(w, TrimWeights) else None,
        repeated=_repeated_flags(lam),
        truncated=truncated,
        requested=K,
    )


def scores(sample: WeightedSample, fit: TrimmedFit) -> np.ndarray:
    """Standardized scores ``<X_i - mu, phi_k> / sqrt(lambda_k)`` (n x K)."""
    centred = (sample.values - fit.mean) * sample.quad_weights
    return (centred @ fit.pc_values.T) / np.sqrt(fit.eigenvalues)


def breakdown_point(n: int, alpha: float, beta: float) -> Fraction:
    """Finite-sample breakdown point ``min(ceil(alpha n), floor(beta n) + 2) / n``.

    Valid for ``alpha <= 0.5``, ``beta <= 0.5`` and ``ceil(alpha n) >= 3``; the
    result is returned as an exact fraction.
    """
    if n < 1:
        raise BreakdownHypothesisError(f"n must be positive, got {n}")
    if not 0 < alpha <= 0.5:
        raise BreakdownHypothesisError(f"requires 0 < alpha <= 0.5, got alpha={alpha}")
    if not 0 <= beta <= 0.5:
        raise BreakdownHypothesisError(f"requires 0 <= beta <= 0.5, got beta={beta}")
    k = ceil_count(alpha * n)
    if k < 3:
        raise BreakdownHypothesisError(f"requires ceil(alpha*n) >= 3, got {k}")
    return Fraction(min(k, floor_count(beta * n) + 2), n)
