"""Monte Carlo study of the trimmed estimators against the baselines.

Curves are drawn from the truncated expansion

    X(t) = sum_{k=1}^{T} Z_k sqrt(lambda_k) sqrt(2) sin(pi k t)

with i.i.d. standard normal scores, on 50 equally spaced points of [0, 1].
Model 1 uses lambda_k = 1/(k(k+1)) truncated at T = 1000, Model 2 uses
lambda_k = 2^-k truncated at T = 10.  Two contamination schemes are applied:
``mean_shift`` adds 3 phi_1 to the first n*eps curves, ``pc_inflate`` adds
3 phi_2 to the first n*eps/2 curves and subtracts it from the next n*eps/2.

Random streams: replication ``r`` of model ``m`` draws from
``PCG64(SeedSequence(seed, spawn_key=(m, r)))``, so any single replication
can be regenerated on its own and parallel execution does not change the
numbers.  The same clean draw is reused across every epsilon and estimator of
a replication.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import sample_mean_and_pcs, spatial_median, spherical_pcs
from .depth import TrimConfig, alpha_radii, trim_weights
from .estimators import trimmed_cov_pcs, trimmed_mean
from .exceptions import HilbtrimError, SimConfigError
from .hilbert import Grid, WeightedSample, pairwise_distances

logger = logging.getLogger(__name__)

SHIFT = 3.0
TRUNCATION = {1: 1000, 2: 10}


def basis(k, grid: Grid) -> np.ndarray:
    """sqrt(2) sin(pi k t) on the grid; ``k`` may be an array (rows)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.sqrt(2.0) * np.sin(np.pi * np.outer(k, grid.knots))
    return out[0] if out.shape[0] == 1 else out


@dataclass(frozen=True)
class SimModel:
    id: int

    def __post_init__(self):
        if self.id not in TRUNCATION:
            raise SimConfigError("model", f"unknown model {self.id!r}; expected 1 or 2")

    @property
    def truncation(self) -> int:
        return TRUNCATION[self.id]

    def eigenvalues(self) -> np.ndarray:
        k = np.arange(1, self.truncation + 1, dtype=float)
        if self.id == 1:
            return 1.0 / (k * (k + 1.0))
        return 0.5**k

    def loadings(self, grid: Grid) -> np.ndarray:
        """T x p matrix with rows sqrt(lambda_k) phi_k evaluated on the grid."""
        k = np.arange(1, self.truncation + 1)
        return np.sqrt(self.eigenvalues())[:, None] * basis(k, grid)


def replication_rng(seed: int, model_id: int, rep: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(model_id, rep))
    return np.random.Generator(np.random.PCG64(ss))


def generate_sample(model: SimModel, n: int, grid: Grid, rng: np.random.Generator,
                    loadings: Optional[np.ndarray] = None) -> WeightedSample:
    if loadings is None:
        loadings = model.loadings(grid)
    z = rng.standard_normal((n, model.truncation))
    return WeightedSample.on_grid(z @ loadings, grid, name="x")


def _contaminated_count(n: int, eps: float, divisor: int = 1) -> int:
    count = n * eps / divisor
    k = round(count)
    if eps < 0 or abs(count - k) > 1e-9:
        raise SimConfigError("epsilons", f"n*eps{'/2' if divisor == 2 else ''} = {count:g} is not an integer")
    return int(k)


def _grid_of(sample: WeightedSample) -> Grid:
    grid = sample.channels[0].grid
    if grid is None or len(sample.channels) != 1:
        raise HilbtrimError("contamination needs a single-channel sample on a grid")
    return grid


def contaminate_mean(sample: WeightedSample, eps: float) -> WeightedSample:
    k = _contaminated_count(sample.n, eps)
    if k == 0:
        return sample
    x = sample.values.copy()
    x[:k] += SHIFT * basis(1, _grid_of(sample))
    return sample.with_values(x)


def contaminate_pc(sample: WeightedSample, eps: float) -> WeightedSample:
    h = _contaminated_count(sample.n, eps, divisor=2)
    if h == 0:
        return sample
    x = sample.values.copy()
    bump = SHIFT * basis(2, _grid_of(sample))
    x[:h] += bump
    x[h : 2 * h] -= bump
    return sample.with_values(x)


CONTAMINATIONS = {"mean_shift": contaminate_mean, "pc_inflate": contaminate_pc}


def mean_error(estimate, quad_weights) -> float:
    """Quadrature norm of a location estimate (the true mean is zero)."""
    e = np.asarray(estimate, dtype=float)
    return float(np.sqrt(np.sum(np.asarray(quad_weights) * e * e)))


def pc_error(estimate, truth, quad_weights) -> float:
    """Sign-aligned distance ``min(||f - g||, ||f + g||)``."""
    f = np.asarray(estimate, dtype=float)
    g = np.asarray(truth, dtype=float)
    return min(mean_error(f - g, quad_weights), mean_error(f + g, quad_weights))


_SPEC_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$")


@dataclass(frozen=True)
class EstimatorSpec:
    """One row of the study.

    Spelled ``mean``, ``median``, ``hard(a,b)``, ``soft(a,b[,b1])`` for location
    estimators and ``sample_pc``, ``spherical_pc``, ``hard_pc(a,b)``,
    ``soft_pc(a,b[,b1])`` for first-component estimators (``b1`` defaults to
    0.5).
    """

    kind: str
    alpha: float = 0.0
    beta: float = 0.0
    beta1: Optional[float] = None

    LOCATION = ("mean", "median", "hard", "soft")
    COMPONENT = ("sample_pc", "spherical_pc", "hard_pc", "soft_pc")

    @classmethod
    def parse(cls, text: str, where: str = "estimators") -> "EstimatorSpec":
        m = _SPEC_RE.match(str(text).lower())
        if not m:
            raise SimConfigError(where, f"cannot parse estimator {text!r}")
        kind, args = m.group(1), m.group(2)
        if kind not in cls.LOCATION + cls.COMPONENT:
            raise SimConfigError(where, f"unknown estimator {kind!r}")
        try:
            nums = [float(a) for a in args.split(",")] if args and args.strip() else []
        except ValueError:
            raise SimConfigError(where, f"non-numeric parameter in {text!r}") from None
        trimmed = kind.split("_")[0] in ("hard", "soft")
        if not trimmed:
            if nums:
                raise SimConfigError(where, f"{kind} takes no parameters")
            return cls(kind)
        soft = kind.startswith("soft")
        if len(nums) not in ((2, 3) if soft else (2,)):
            raise SimConfigError(where, f"{kind} needs (alpha, beta{', [beta1]' if soft else ''})")
        beta1 = (nums[2] if len(nums) == 3 else 0.5) if soft else None
        spec = cls(kind, nums[0], nums[1], beta1)
        try:
            spec.trim_config()
        except HilbtrimError as exc:
            raise SimConfigError(where, str(exc)) from None
        return spec

    @property
    def target(self) -> str:
        return "pc" if self.kind in self.COMPONENT else "mean"

    def trim_config(self) -> Optional[TrimConfig]:
        base = self.kind.split("_")[0]
        if base not in ("hard", "soft"):
            return None
        return TrimConfig(self.alpha, self.beta, base, self.beta1)

    @property
    def label(self) -> str:
        if self.kind in ("mean", "median", "sample_pc", "spherical_pc"):
            return self.kind
        args = f"{self.alpha:.2f},{self.beta:.2f}"
        if self.beta1 is not None and self.beta1 != 0.5:
            args += f",{self.beta1:.2f}"
        return f"{self.kind}({args})"


@dataclass(frozen=True)
class SimConfig:
    models: tuple = (1,)
    n: int = 100
    grid_points: int = 50
    epsilons: tuple = (0.0, 0.1, 0.2, 0.3, 0.4)
    contamination: str = "mean_shift"
    estimators: tuple = ("mean",)
    replications: int = 500
    seed: int = 0

    def __post_init__(self):
        for i, m in enumerate(self.models):
            if m not in TRUNCATION:
                raise SimConfigError(f"models[{i}]", f"unknown model {m!r}; expected 1 or 2")
        if not isinstance(self.n, int) or self.n < 2:
            raise SimConfigError("n", f"must be an integer >= 2, got {self.n!r}")
        if not isinstance(self.grid_points, int) or self.grid_points < 2:
            raise SimConfigError("grid_points", f"must be an integer >= 2, got {self.grid_points!r}")
        if self.contamination not in CONTAMINATIONS:
            raise SimConfigError(
                "contamination", f"expected one of {sorted(CONTAMINATIONS)}, got {self.contamination!r}"
            )
        divisor = 2 if self.contamination == "pc_inflate" else 1
        for i, eps in enumerate(self.epsilons):
            if not 0 <= eps < 1:
                raise SimConfigError(f"epsilons[{i}]", f"must lie in [0, 1), got {eps}")
            try:
                _contaminated_count(self.n, eps, divisor)
            except SimConfigError as exc:
                raise SimConfigError(f"epsilons[{i}]", str(exc).split(": ", 1)[1]) from None
        for i, e in enumerate(self.estimators):
            EstimatorSpec.parse(e, f"estimators[{i}]")
        if not isinstance(self.replications, int) or self.replications < 1:
            raise SimConfigError("replications", f"must be a positive integer, got {self.replications!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise SimConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}")

    @classmethod
    def from_mapping(cls, data: dict) -> "SimConfig":
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise SimConfigError(str(key), "unknown field")
        kwargs = dict(data)
        for key in ("models", "epsilons", "estimators"):
            if key in kwargs:
                val = kwargs[key]
                if isinstance(val, (str, int, float)):
                    val = [val]
                if not isinstance(val, (list, tuple)):
                    raise SimConfigError(key, "must be a list")
                kwargs[key] = tuple(val)
        if "epsilons" in kwargs:
            try:
                kwargs["epsilons"] = tuple(float(e) for e in kwargs["epsilons"])
            except (TypeError, ValueError):
                raise SimConfigError("epsilons", "must be numbers") from None
        return cls(**kwargs)

    def to_mapping(self) -> dict:
        d = asdict(self)
        for key in ("models", "epsilons", "estimators"):
            d[key] = list(d[key])
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_mapping(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def specs(self) -> list:
        return [EstimatorSpec.parse(e, f"estimators[{i}]") for i, e in enumerate(self.estimators)]


@dataclass
class SimRow:
    estimator: str
    model: int
    epsilon: float
    rmse: float
    reps: int
    failures: int
    seed: int
    elapsed: float = 0.0


@dataclass
class SimReport:
    rows: list
    config: SimConfig
    errors: dict = field(repr=False, default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def config_hash(self) -> str:
        return self.config.digest()

    def rmse(self, estimator: str, model: int, epsilon: float) -> float:
        return self.row(estimator, model, epsilon).rmse

    def row(self, estimator: str, model: int, epsilon: float) -> SimRow:
        label = EstimatorSpec.parse(estimator).label
        for r in self.rows:
            if r.estimator == label and r.model == model and math.isclose(r.epsilon, epsilon):
                return r
        raise KeyError((estimator, model, epsilon))


# -- per-replication work ---------------------------------------------------

def _location(spec: EstimatorSpec, sample, dist, cache):
    if spec.kind == "mean":
        return sample.values.mean(axis=0)
    if spec.kind == "median":
        res = spatial_median(sample)
        if not res.converged:
            raise HilbtrimError("spatial median did not converge")
        return res.median
    return trimmed_mean(sample, _weights(spec, dist, cache))


def _component(spec: EstimatorSpec, sample, dist, cache):
    if spec.kind == "sample_pc":
        fit = sample_mean_and_pcs(sample, 1)
    elif spec.kind == "spherical_pc":
        med = spatial_median(sample)
        if not med.converged:
            raise HilbtrimError("spatial median did not converge")
        fit = spherical_pcs(sample, 1, med)
    else:
        fit = trimmed_cov_pcs(sample, _weights(spec, dist, cache), 1)
    if fit.n_components < 1:
        raise HilbtrimError("no positive eigenvalue")
    return fit.pc_values[0]


def _weights(spec, dist, cache):
    cfg = spec.trim_config()
    if cfg.alpha not in cache:
        cache[cfg.alpha] = alpha_radii(dist, cfg.alpha)
    return trim_weights(cache[cfg.alpha], cfg)


def run_replication(config: SimConfig, model_id: int, rep: int, loadings=None):
    """Errors of every (estimator, epsilon) pair for one replication.

    Returns ``(errors, elapsed)`` arrays of shape (n_estimators, n_epsilons);
    failed estimator calls are recorded as NaN.
    """
    model = SimModel(model_id)
    grid = Grid.uniform(config.grid_points)
    specs = config.specs()
    contaminate = CONTAMINATIONS[config.contamination]
    rng = replication_rng(config.seed, model_id, rep)
    clean = generate_sample(model, config.n, grid, rng, loadings)
    q = clean.quad_weights
    phi1 = basis(1, grid)
    errors = np.full((len(specs), len(config.epsilons)), np.nan)
    elapsed = np.zeros_like(errors)
    for j, eps in enumerate(config.epsilons):
        sample = contaminate(clean, eps)
        dist = None
        if any(s.trim_config() is not None for s in specs):
            dist = pairwise_distances(sample)
        cache = {}
        for i, spec in enumerate(specs):
            t0 = time.perf_counter()
            try:
                if spec.target == "mean":
                    errors[i, j] = mean_error(_location(spec, sample, dist, cache), q)
                else:
                    errors[i, j] = pc_error(_component(spec, sample, dist, cache), phi1, q)
            except HilbtrimError as exc:
                logger.debug("model %d rep %d eps %g %s failed: %s", model_id, rep, eps, spec.label, exc)
            elapsed[i, j] = time.perf_counter() - t0
    return errors, elapsed


def _run_chunk(args):
    config, model_id, reps = args
    loadings = SimModel(model_id).loadings(Grid.uniform(config.grid_points))
    out = [run_replication(config, model_id, r, loadings) for r in reps]
    return np.stack([o[0] for o in out]), np.stack([o[1] for o in out])


def default_workers() -> int:
    env = os.environ.get("HILBTRIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            logger.warning("ignoring non-integer HILBTRIM_THREADS=%r", env)
    return 1


def run_study(config: SimConfig, workers: Optional[int] = None) -> SimReport:
    """Run every estimator on every epsilon for every replication and model.

    ``rmse = sqrt(mean(err^2))`` over the replications in which the estimator
    succeeded; failures are counted in the row.  With ``workers > 1``
    replications are split across processes, which leaves the result
    unchanged because each replication owns its random stream and the
    reduction runs in replication order.
    """
    workers = default_workers() if workers is None else max(1, workers)
    specs = config.specs()
    rows, all_errors = [], {}
    for model_id in config.models:
        reps = list(range(config.replications))
        if workers == 1:
            chunks = [_run_chunk((config, model_id, reps))]
        else:
            size = math.ceil(len(reps) / workers)
            jobs = [(config, model_id, reps[i : i + size]) for i in range(0, len(reps), size)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(_run_chunk, jobs))
        errors = np.concatenate([c[0] for c in chunks])
        elapsed = np.concatenate([c[1] for c in chunks])
        all_errors[model_id] = errors
        for i, spec in enumerate(specs):
            for j, eps in enumerate(config.epsilons):
                col = errors[:, i, j]
                ok = col[~np.isnan(col)]
                rmse = float(np.sqrt(np.mean(ok**2))) if ok.size else float("nan")
                rows.append(
                    SimRow(spec.label, model_id, float(eps), rmse, int(ok.size),
                           int(col.size - ok.size), config.seed, float(elapsed[:, i, j].sum()))
                )
        logger.info("model %d: %d replications done", model_id, config.replications)
    return SimReport(rows, config, all_errors)
