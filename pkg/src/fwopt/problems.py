"""Objectives with closed-form gradients, noise models, and replayable oracles.

The oracle realizes nabla f(x; Xi_t): true gradient plus batch-averaged noise
(or a row subsample for the finite-sum objective). Randomness is counter-based
and keyed by (seed, t), so a SharedSample can be replayed at a different point
with bit-identical noise - the property the variance-reduced updates rely on.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalError, ProvenanceError
from .tensor import ParamPoint, norm


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsotropicQuadratic:
    """F(x) = 0.5 ||x||_2^2 over vectors; gradient is x itself."""

    dim: int

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim,)

    def value(self, x: ParamPoint) -> float:
        return 0.5 * float(np.dot(x, x))

    def grad(self, x: ParamPoint) -> ParamPoint:
        self._check(x)
        return np.array(x, copy=True)

    def lipschitz(self) -> float:
        return 1.0

    def _check(self, x: ParamPoint) -> None:
        if x.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {x.shape}")


@dataclass(frozen=True)
class MatrixQuadratic:
    """F(X) = 0.5 ||X||_F^2 over matrices; gradient is X itself."""

    rows: int
    cols: int

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.rows, self.cols)

    def value(self, x: ParamPoint) -> float:
        return 0.5 * float(np.sum(x * x))

    def grad(self, x: ParamPoint) -> ParamPoint:
        self._check(x)
        return np.array(x, copy=True)

    def lipschitz(self) -> float:
        return 1.0

    def _check(self, x: ParamPoint) -> None:
        if x.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {x.shape}")


@dataclass(frozen=True)
class ConvexQuadratic:
    """F(x) = 0.5 x^T A x - b^T x with A symmetric PSD; gradient A x - b."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError("A must be a square matrix")
        if b.shape != (a.shape[0],):
            raise DimensionError("b must be a vector matching A")
        if not np.allclose(a, a.T, atol=1e-12):
            raise ValueError("A must be symmetric")
        eigmin = float(np.linalg.eigvalsh(a)[0])
        if eigmin < -1e-10:
            raise ValueError(f"A must be PSD; smallest eigenvalue {eigmin:.3e}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.a.shape[0],)

    def value(self, x: ParamPoint) -> float:
        return 0.5 * float(x @ self.a @ x) - float(self.b @ x)

    def grad(self, x: ParamPoint) -> ParamPoint:
        self._check(x)
        return self.a @ x - self.b

    def lipschitz(self) -> float:
        return float(np.linalg.eigvalsh(self.a)[-1])

    def _check(self, x: ParamPoint) -> None:
        if x.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {x.shape}")


@dataclass(frozen=True)
class LeastSquares:
    """F(x) = (1/n) sum_i 0.5 (a_i . x - y_i)^2 over design rows a_i."""

    rows: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64)
        if rows.ndim != 2:
            raise DimensionError("design must be a 2-d array of rows")
        if targets.shape != (rows.shape[0],):
            raise DimensionError("targets must match the number of design rows")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "targets", targets)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.rows.shape[1],)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def value(self, x: ParamPoint) -> float:
        r = self.rows @ x - self.targets
        return 0.5 * float(np.dot(r, r)) / self.n

    def grad(self, x: ParamPoint) -> ParamPoint:
        self._check(x)
        return self.rows.T @ (self.rows @ x - self.targets) / self.n

    def grad_rows(self, x: ParamPoint, idx: np.ndarray) -> ParamPoint:
        """Gradient of the subsample picked by row indices `idx`."""
        self._check(x)
        sub = self.rows[idx]
        return sub.T @ (sub @ x - self.targets[idx]) / len(idx)

    def lipschitz(self) -> float:
        gram = self.rows.T @ self.rows / self.n
        return float(np.linalg.eigvalsh(gram)[-1])

    def _check(self, x: ParamPoint) -> None:
        if x.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {x.shape}")


Objective = IsotropicQuadratic | MatrixQuadratic | ConvexQuadratic | LeastSquares


def grad_true(obj: Objective, x: ParamPoint) -> ParamPoint:
    """Exact gradient of the deterministic objective."""
    return obj.grad(x)


# ---------------------------------------------------------------------------
# Noise models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoNoise:
    def sample(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        return np.zeros(shape)


@dataclass(frozen=True)
class GaussianNoise:
    """Component-wise N(0, sigma^2); all moments finite."""

    sigma: float

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def sample(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        return self.sigma * rng.standard_normal(shape)


@dataclass(frozen=True)
class ParetoNoise:
    """Component-wise symmetrized Pareto: |X| = scale * U^(-1/tail_index).

    Zero mean by the independent uniform sign; the q-th moment is finite iff
    q < tail_index, so tail_index = 1.5 has unbounded variance while 2.5 does
    not.
    """

    tail_index: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.tail_index <= 1.0:
            raise ValueError("tail_index must exceed 1 (the mean must exist)")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def sample(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        u = 1.0 - rng.random(shape)  # uniform on (0, 1]
        magnitude = self.scale * u ** (-1.0 / self.tail_index)
        sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
        return sign * magnitude


NoiseModel = NoNoise | GaussianNoise | ParetoNoise


# ---------------------------------------------------------------------------
# Batch-size schedules
# ---------------------------------------------------------------------------


def constant_batches(m: int):
    """m_t = m for all t."""
    if m < 1:
        raise ValueError("batch size must be positive")
    return lambda t: m


def full_horizon_batches(horizon: int):
    """m_t = T for all t (the large-batch regime)."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    return lambda t: horizon


def warm_start_batches(horizon: int):
    """m_1 = ceil(T^(1/3)), m_t = 1 afterwards."""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    first = int(np.ceil(horizon ** (1.0 / 3.0)))
    return lambda t: first if t == 1 else 1


# ---------------------------------------------------------------------------
# Stochastic gradient oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SharedSample:
    """Handle for the randomness of one oracle call, replayable at any point.

    For additive noise the realized batch-averaged noise is cached; for the
    finite-sum objective the subsample row indices are cached.
    """

    origin: tuple
    t: int
    noise: np.ndarray | None = None
    indices: np.ndarray | None = None


@dataclass(frozen=True)
class GradOracle:
    """Stochastic first-order oracle: objective + noise model + batch schedule.

    sample_grad is a pure function of (seed, t, x): the per-step randomness
    comes from a Philox stream keyed by (seed, t), never from global state.
    """

    objective: Objective
    noise: NoiseModel = field(default_factory=NoNoise)
    batch_schedule: Callable[[int], int] = field(default_factory=lambda: constant_batches(1))
    seed: int = 0

    def _fingerprint(self) -> tuple:
        return (self.seed, self.noise, type(self.objective).__name__, self.objective.shape)

    def _rng(self, t: int) -> np.random.Generator:
        key = np.array([np.uint64(self.seed & 0xFFFFFFFFFFFFFFFF), np.uint64(t)], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def _draw_noise(self, t: int, m: int) -> np.ndarray:
        rng = self._rng(t)
        shape = self.objective.shape
        if isinstance(self.noise, NoNoise):
            return np.zeros(shape)
        if isinstance(self.noise, GaussianNoise):
            # The batch average of m iid Gaussians is exactly N(0, sigma^2/m):
            # draw the sufficient statistic instead of m separate vectors.
            return self.noise.sample(rng, shape) / np.sqrt(m)
        total = np.zeros(shape)
        for _ in range(m):
            total += self.noise.sample(rng, shape)
        return total / m

    def sample_grad(self, x: ParamPoint, t: int) -> tuple[ParamPoint, SharedSample]:
        """Stochastic gradient at x for step t, plus its replay handle."""
        if t < 1:
            raise ValueError("step index starts at 1")
        if x.shape != self.objective.shape:
            raise DimensionError(f"expected shape {self.objective.shape}, got {x.shape}")
        m = self.batch_schedule(t)
        if isinstance(self.objective, LeastSquares) and not isinstance(self.noise, NoNoise):
            raise ValueError("finite-sum objective uses subsampling noise, not an additive model")
        if isinstance(self.objective, LeastSquares):
            idx = self._rng(t).integers(0, self.objective.n, size=m)
            sample = SharedSample(origin=self._fingerprint(), t=t, indices=idx)
            g = self.objective.grad_rows(x, idx)
        else:
            noise_vec = self._draw_noise(t, m)
            sample = SharedSample(origin=self._fingerprint(), t=t, noise=noise_vec)
            g = grad_true(self.objective, x) + noise_vec
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"stochastic gradient at step {t} is non-finite")
        return g, sample

    def replay_grad(self, x: ParamPoint, sample: SharedSample) -> ParamPoint:
        """Gradient at x under the identical realized randomness of `sample`."""
        if sample.origin != self._fingerprint():
            raise ProvenanceError("sample handle does not belong to this oracle")
        if sample.indices is not None:
            return self.objective.grad_rows(x, sample.indices)
        return grad_true(self.objective, x) + sample.noise


def clip(g: ParamPoint, m: float) -> ParamPoint:
    """Rescale g onto the ball of l2/Frobenius radius m: (1 ^ m/||g||) g.

    The rescale repeats if rounding leaves the norm a few ulps above m, so the
    output always satisfies ||clip(g, m)|| <= m and clipping is exactly
    idempotent.
    """
    if m <= 0:
        raise ValueError("clipping threshold must be positive")
    kind = "l2" if g.ndim == 1 else "frobenius"
    out = g
    g_norm = norm(out, kind)
    while g_norm > m:
        out = out * (m / g_norm)
        g_norm = norm(out, kind)
    return out


__all__ = [
    "IsotropicQuadratic",
    "MatrixQuadratic",
    "ConvexQuadratic",
    "LeastSquares",
    "Objective",
    "grad_true",
    "NoNoise",
    "GaussianNoise",
    "ParetoNoise",
    "NoiseModel",
    "constant_batches",
    "full_horizon_batches",
    "warm_start_batches",
    "SharedSample",
    "GradOracle",
    "clip",
]
