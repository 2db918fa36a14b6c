"""Discretized Hilbert-space samples.

Every supported space (L2 on an interval, products of such spaces, plain R^p)
is reduced to the same representation: each observation is a row of
coordinates and the inner product is a positively weighted dot product

    <x, y> = sum_j q_j x_j y_j.

For a function observed on a grid the weights ``q`` are trapezoid quadrature
weights, for Euclidean data they are all ones, and a product space simply
concatenates the channels so its inner product is the sum of the per-channel
inner products.  Downstream code only ever sees rows plus weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DimensionError, InvalidGridError, InvalidSampleError

# Relative tolerance used when checking that a Gram matrix is PSD.
PSD_RTOL = 1e-8

# Row block size for the direct distance computation (bounds peak memory).
_DIST_BLOCK = 64


@dataclass(frozen=True)
class Grid:
    """Strictly increasing abscissae of one channel."""

    knots: np.ndarray

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float).ravel()
        if knots.size < 2:
            raise InvalidGridError(f"a grid needs at least 2 knots, got {knots.size}")
        if not np.all(np.isfinite(knots)):
            raise InvalidGridError("grid knots must be finite")
        if not np.all(np.diff(knots) > 0):
            raise InvalidGridError("grid knots must be strictly increasing")
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)

    @classmethod
    def uniform(cls, m: int, start: float = 0.0, stop: float = 1.0) -> "Grid":
        return cls(np.linspace(start, stop, m))

    def __len__(self):
        return self.knots.size

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(self.knots, other.knots)

    __hash__ = None


@dataclass(frozen=True)
class Channel:
    """A named block of coordinates ``[start, stop)`` inside a sample row."""

    name: str
    start: int
    stop: int
    grid: Optional[Grid] = None

    @property
    def size(self) -> int:
        return self.stop - self.start


def trapezoid_weights(grid: Grid) -> np.ndarray:
    """Trapezoid-rule quadrature weights for ``grid``.

    >>> trapezoid_weights(Grid([0, 0.5, 1]))
    array([0.25, 0.5 , 0.25])
    """
    if not isinstance(grid, Grid):
        grid = Grid(grid)
    t = grid.knots
    h = np.diff(t)
    q = np.empty_like(t)
    q[0] = h[0] / 2
    q[-1] = h[-1] / 2
    q[1:-1] = (t[2:] - t[:-2]) / 2
    return q


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """n observations as rows of an n x p matrix with quadrature weights.

    ``values`` and ``quad_weights`` are stored as read-only float arrays.
    ``channels`` describes how the p coordinates split into named channels;
    when omitted a single channel named ``"x"`` covering everything is used.
    """

    values: np.ndarray
    quad_weights: np.ndarray
    channels: tuple = ()
    ids: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InvalidSampleError(f"values must be 2-D, got shape {values.shape}")
        q = np.array(self.quad_weights, dtype=float).ravel()
        n, p = values.shape
        if q.size != p:
            raise DimensionError(f"{q.size} quadrature weights for {p} coordinates")
        if not np.all(q > 0) or not np.all(np.isfinite(q)):
            raise InvalidSampleError("quadrature weights must be finite and strictly positive")
        if not np.all(np.isfinite(values)):
            bad = int(np.argwhere(~np.isfinite(values))[0, 0])
            raise InvalidSampleError(f"observation {bad} has non-finite entries")
        channels = tuple(self.channels) or (Channel("x", 0, p),)
        pos = 0
        for ch in channels:
            if ch.start != pos or ch.stop <= ch.start:
                raise InvalidSampleError(f"channel {ch.name!r} does not tile the coordinates")
            if ch.grid is not None and len(ch.grid) != ch.size:
                raise InvalidSampleError(
                    f"channel {ch.name!r} has {ch.size} coordinates but a {len(ch.grid)}-knot grid"
                )
            pos = ch.stop
        if pos != p:
            raise InvalidSampleError(f"channels cover {pos} of {p} coordinates")
        ids = self.ids
        if ids is not None:
            ids = tuple(ids)
            if len(ids) != n:
                raise InvalidSampleError(f"{len(ids)} ids for {n} observations")
        values.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "quad_weights", q)
        object.__setattr__(self, "channels", channels)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def euclidean(cls, values, ids=None) -> "WeightedSample":
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        return cls(values, np.ones(values.shape[1]), ids=ids)

    @classmethod
    def on_grid(cls, values, grid: Grid, name: str = "x", ids=None) -> "WeightedSample":
        if not isinstance(grid, Grid):
            grid = Grid(grid)
        return cls(values, trapezoid_weights(grid), (Channel(name, 0, len(grid), grid),), ids)

    @classmethod
    def concat_channels(cls, parts: Sequence["WeightedSample"], names=None, ids=None):
        """Product-space sample from several samples with equal row counts."""
        if not parts:
            raise InvalidSampleError("no channels given")
        n = parts[0].n
        if any(s.n != n for s in parts):
            raise InvalidSampleError("channels have different numbers of observations")
        channels, pos = [], 0
        for k, s in enumerate(parts):
            for ch in s.channels:
                name = names[k] if names is not None and len(s.channels) == 1 else ch.name
                channels.append(Channel(name, pos + ch.start, pos + ch.stop, ch.grid))
            pos += s.p
        return cls(
            np.hstack([s.values for s in parts]),
            np.concatenate([s.quad_weights for s in parts]),
            tuple(channels),
            ids,
        )

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def with_values(self, values) -> "WeightedSample":
        """Same layout and weights, new coordinates (row count may change)."""
        values = np.asarray(values, dtype=float)
        ids = self.ids if self.ids is not None and values.shape[0] == self.n else None
        return WeightedSample(values, self.quad_weights, self.channels, ids)

    def subset(self, index) -> "WeightedSample":
        index = np.asarray(index)
        ids = None
        if self.ids is not None:
            ids = tuple(np.asarray(self.ids, dtype=object)[index])
        return WeightedSample(self.values[index], self.quad_weights, self.channels, ids)

    def inner(self, x, y) -> float:
        return inner_product(x, y, self.quad_weights)

    def norm(self, x) -> float:
        """Quadrature norm of one coordinate vector (or of each row of a matrix)."""
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.sum(self.quad_weights * x * x, axis=-1))

    def observation_ids(self) -> tuple:
        return self.ids if self.ids is not None else tuple(range(self.n))


def inner_product(x, y, q) -> float:
    """Weighted dot product sum_j q_j x_j y_j."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    if x.shape != y.shape or x.shape != q.shape or x.ndim != 1:
        raise DimensionError(f"shape mismatch: x{x.shape}, y{y.shape}, q{q.shape}")
    if not np.all(q > 0):
        raise InvalidSampleError("quadrature weights must be strictly positive")
    return float(np.sum(q * (x * y)))


def gram_matrix(sample: WeightedSample) -> np.ndarray:
    """n x n matrix of <X_i, X_j>; upper triangle computed then mirrored."""
    x = sample.values
    g = (x * sample.quad_weights) @ x.T
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def distance_matrix(gram) -> np.ndarray:
    """Interdistances from a Gram matrix, clamping negative round-off to zero."""
    g = np.asarray(gram, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError(f"Gram matrix must be square, got {g.shape}")
    diag = np.diag(g)
    d2 = diag[:, None] - 2.0 * g + diag[None, :]
    d = np.sqrt(np.maximum(d2, 0.0))
    d = np.triu(d, 1)
    return d + d.T


def pairwise_distances(sample: WeightedSample) -> np.ndarray:
    """Interdistances computed from coordinate differences.

    Mathematically equal to ``distance_matrix(gram_matrix(sample))`` but free
    of the cancellation in ``G_ii - 2 G_ij + G_jj`` when observations are far
    from the origin relative to their spread.  The result is exactly symmetric
    with a zero diagonal.
    """
    x = sample.values
    q = sample.quad_weights
    n = x.shape[0]
    d = np.zeros((n, n))
    for lo in range(0, n, _DIST_BLOCK):
        hi = min(lo + _DIST_BLOCK, n)
        diff = x[lo:hi, None, :] - x[None, :, :]
        d[lo:hi] = np.sqrt(np.einsum("ijk,ijk,k->ij", diff, diff, q))
    d = np.triu(d, 1)
    return d + d.T


def check_gram(gram, rtol: float = PSD_RTOL) -> None:
    """Raise if ``gram`` is not symmetric PSD up to ``rtol * max(diag)``."""
    g = np.asarray(gram, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError(f"Gram matrix must be square, got {g.shape}")
    if not np.array_equal(g, g.T):
        raise InvalidSampleError("Gram matrix is not symmetric")
    diag = np.diag(g)
    if np.any(diag < 0):
        raise InvalidSampleError("Gram matrix has a negative diagonal entry")
    scale = float(diag.max()) if diag.size else 0.0
    if g.size and np.linalg.eigvalsh(g).min() < -rtol * scale:
        raise InvalidSampleError("Gram matrix is not positive semidefinite")
