"""Alpha-radii and rank-based trimming weights.

The alpha-radius of observation i is the radius of the smallest ball centred
at X_i that holds a fraction alpha of the sample (X_i itself included).  It is
small where the data are dense and large for outlying points, and it depends
on the sample only through interdistances, so it is available in any inner
product space.

Radii are converted to ranks with the max-rank rule
``rank_i = #{j : r_j <= r_i}`` and the ranks to weights
``w_i = g(rank_i / n)`` with either a hard 0/1 cut-off or the smooth ramp
implemented by :func:`soft_weight_g`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .exceptions import DegenerateTrimError, InvalidAlphaError, InvalidConfigError

# Radii within this relative distance of each other count as tied.  This makes
# mirror-image observations share a rank even when their distances differ in
# the last bits.
TIE_RTOL = 1e-9


def ceil_count(x: float) -> int:
    """Ceiling of ``x`` that ignores representation noise (0.3 * 10 -> 3)."""
    return math.ceil(round(x, 9))


def floor_count(x: float) -> int:
    return math.floor(round(x, 9))


@dataclass(frozen=True, eq=False)
class RadiusProfile:
    alpha: float
    radii: np.ndarray
    ranks: np.ndarray

    @property
    def n(self) -> int:
        return self.radii.size

    @property
    def order(self) -> int:
        """Position of the radius in each sorted distance row (1-based)."""
        return ceil_count(self.alpha * self.n)


@dataclass(frozen=True)
class TrimConfig:
    alpha: float = 0.5
    beta: float = 0.2
    mode: Literal["hard", "soft"] = "hard"
    beta1: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.alpha <= 0.5:
            raise InvalidConfigError(f"alpha must lie in (0, 0.5], got {self.alpha}")
        if not 0 <= self.beta <= 0.5:
            raise InvalidConfigError(f"beta must lie in [0, 0.5], got {self.beta}")
        if self.mode not in ("hard", "soft"):
            raise InvalidConfigError(f"mode must be 'hard' or 'soft', got {self.mode!r}")
        if self.mode == "soft":
            if self.beta1 is None:
                raise InvalidConfigError("soft mode needs beta1")
            if not self.beta < self.beta1 <= 1:
                raise InvalidConfigError(
                    f"soft mode needs beta < beta1 <= 1, got beta={self.beta}, beta1={self.beta1}"
                )

    @property
    def label(self) -> str:
        if self.mode == "hard":
            return f"Hard({self.alpha:.2f},{self.beta:.2f})"
        return f"Soft({self.alpha:.2f},{self.beta:.2f},{self.beta1:.2f})"


@dataclass(frozen=True, eq=False)
class TrimWeights:
    w: np.ndarray
    config: TrimConfig
    profile: Optional[RadiusProfile] = None

    @property
    def effective_n(self) -> float:
        return float(self.w.sum())

    @property
    def kept(self) -> np.ndarray:
        """Boolean mask of observations with positive weight."""
        return self.w > 0

    @classmethod
    def uniform(cls, n: int) -> "TrimWeights":
        """All-ones weights (no trimming)."""
        return cls(np.ones(n), TrimConfig(alpha=0.5, beta=0.0))


def max_ranks(radii, rtol: float = TIE_RTOL) -> np.ndarray:
    """``rank_i = #{j : r_j <= r_i}`` with near-equal radii treated as ties."""
    r = np.asarray(radii, dtype=float)
    srt = np.sort(r)
    return np.searchsorted(srt, r * (1 + rtol), side="right").astype(int)


def alpha_radii(d, alpha: float) -> RadiusProfile:
    """Alpha-radius of every observation from the interdistance matrix ``d``.

    Each row, self-distance included, is sorted and its ``ceil(alpha * n)``-th
    smallest entry is returned.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if d.ndim != 2 or d.shape[1] != n:
        raise InvalidAlphaError(f"distance matrix must be square, got {d.shape}")
    if not alpha > 0:
        raise InvalidAlphaError(f"alpha must be positive, got {alpha}")
    k = ceil_count(alpha * n)
    if not 1 <= k <= n:
        raise InvalidAlphaError(f"ceil(alpha*n) = {k} is outside 1..{n}")
    radii = np.partition(d, k - 1, axis=1)[:, k - 1].copy()
    radii.setflags(write=False)
    ranks = max_ranks(radii)
    ranks.setflags(write=False)
    return RadiusProfile(float(alpha), radii, ranks)


def soft_weight_g(t, beta: float, beta1: float):
    """Smooth rejection weight: 1 up to ``1 - beta1``, 0 from ``1 - beta`` on.

    Between ``a = 1 - beta1`` and ``b = 1 - beta`` the weight is the cubic
    ``(t-b) [1/(a-b) + (t-a)(2t-(a+b))/(b-a)^3]``, which is non-increasing and
    has zero slope at both ends.  Accepts scalars or arrays.
    """
    if not 0 <= beta < beta1 <= 1:
        raise InvalidConfigError(f"need 0 <= beta < beta1 <= 1, got beta={beta}, beta1={beta1}")
    a = 1.0 - beta1
    b = 1.0 - beta
    t = np.asarray(t, dtype=float)
    ramp = (t - b) * (1.0 / (a - b) + (t - a) * (2.0 * t - (a + b)) / (b - a) ** 3)
    g = np.where(t <= a, 1.0, np.where(t >= b, 0.0, ramp))
    return float(g) if g.ndim == 0 else g


def trim_weights(profile: RadiusProfile, config: TrimConfig) -> TrimWeights:
    """Rank-based weights; raises :class:`DegenerateTrimError` if all vanish."""
    n = profile.n
    ranks = profile.ranks
    if config.mode == "hard":
        if config.beta == 0:
            w = np.ones(n)
        else:
            # rank/n < 1 - beta  <=>  rank < ceil((1 - beta) n) for integer ranks
            w = (ranks < ceil_count((1.0 - config.beta) * n)).astype(float)
    else:
        w = soft_weight_g(ranks / n, config.beta, config.beta1)
        w = np.atleast_1d(w).astype(float)
    if not np.any(w > 0):
        raise DegenerateTrimError(
            f"all weights are zero (n={n}, {config.label}); radii are heavily tied, "
            "try a smaller beta"
        )
    w.setflags(write=False)
    return TrimWeights(w, config, profile)


def radius_histogram(radii, bins=20):
    """Binned counts of the radii, returned as ``(edges, counts)``."""
    counts, edges = np.histogram(np.asarray(radii, dtype=float), bins=bins)
    return edges, counts


def histogram_valley(counts):
    """Locate two modes of a histogram and the deepest bin between them.

    Returns ``(left_peak, valley, right_peak)`` bin indices, or ``None`` when
    the counts are unimodal.  The highest bin is one mode; the other is the bin
    of largest prominence relative to it, ``min(peak, c_j) - valley``.
    """
    c = np.asarray(counts, dtype=float)
    if c.size < 3:
        return None
    top = int(np.argmax(c))
    best, best_prom = None, 0.0
    for j in range(c.size):
        if abs(j - top) < 2:
            continue
        lo, hi = sorted((top, j))
        v = lo + 1 + int(np.argmin(c[lo + 1 : hi]))
        prom = min(c[top], c[j]) - c[v]
        if prom > best_prom:
            best, best_prom = (lo, v, hi), prom
    return best


def is_bimodal(counts, ratio: float = 0.25) -> bool:
    """Valley test: deepest bin between the modes < ``ratio`` x the lower peak."""
    found = histogram_valley(counts)
    if found is None:
        return False
    lo, v, hi = found
    c = np.asarray(counts)
    return bool(c[v] < ratio * min(c[lo], c[hi]))
