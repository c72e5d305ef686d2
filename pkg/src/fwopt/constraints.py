"""Norm-ball constraint sets: LMO, diameter, dual norm, FW gap, KKT residual.

Each ball is {x : ||x|| <= radius} for its defining norm. With radius = 1/lambda
the linear minimizer over the ball is -radius times a dual-norm subgradient,
which is what turns sign and orthogonalized momentum updates into Frank-Wolfe
steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FeasibilityError
from .tensor import ParamPoint, inner, norm, polar_factor_exact, svd_thin

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class GapReport:
    """Frank-Wolfe gap at a feasible point, with the LMO witness.

    gap equals radius * ||grad||_* + <x, grad> and also radius * kkt_residual;
    both vanish exactly at KKT points of the norm-constrained problem.
    """

    gap: float
    lmo_point: ParamPoint
    kkt_residual: float
    dual_norm_value: float


@dataclass(frozen=True)
class LinfBall:
    """{v in R^dim : ||v||_inf <= radius}."""

    radius: float
    dim: int

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim,)

    def _check(self, g: ParamPoint) -> None:
        if g.ndim != 1 or g.shape != self.shape:
            raise DimensionError(f"expected vector of shape {self.shape}, got {g.shape}")

    def lmo(self, g: ParamPoint) -> ParamPoint:
        """argmin over the ball of <v, g>: -radius * sign(g), with sign(0) = 0."""
        self._check(g)
        return -self.radius * np.sign(g)

    def diameter(self) -> float:
        """Euclidean diameter: 2 * radius * sqrt(dim)."""
        return 2.0 * self.radius * float(np.sqrt(self.dim))

    def dual_norm(self, g: ParamPoint) -> float:
        self._check(g)
        return norm(g, "l1")

    def defining_norm(self, x: ParamPoint) -> float:
        self._check(x)
        return norm(x, "linf")

    def contains(self, x: ParamPoint, tol: float = FEASIBILITY_TOL) -> bool:
        return self.defining_norm(x) <= self.radius * (1.0 + tol)


@dataclass(frozen=True)
class L2Ball:
    """{v in R^dim : ||v||_2 <= radius}."""

    radius: float
    dim: int

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.dim,)

    def _check(self, g: ParamPoint) -> None:
        if g.ndim != 1 or g.shape != self.shape:
            raise DimensionError(f"expected vector of shape {self.shape}, got {g.shape}")

    def lmo(self, g: ParamPoint) -> ParamPoint:
        self._check(g)
        g_norm = norm(g, "l2")
        if g_norm == 0.0:
            return np.zeros_like(g)
        return (-self.radius / g_norm) * g

    def diameter(self) -> float:
        return 2.0 * self.radius

    def dual_norm(self, g: ParamPoint) -> float:
        self._check(g)
        return norm(g, "l2")

    def defining_norm(self, x: ParamPoint) -> float:
        self._check(x)
        return norm(x, "l2")

    def contains(self, x: ParamPoint, tol: float = FEASIBILITY_TOL) -> bool:
        return self.defining_norm(x) <= self.radius * (1.0 + tol)


@dataclass(frozen=True)
class SpectralBall:
    """{A in R^{rows x cols} : ||A||_2 <= radius} (largest singular value)."""

    radius: float
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"matrix shape must be positive, got {self.rows}x{self.cols}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.rows, self.cols)

    def _check(self, g: ParamPoint) -> None:
        if g.ndim != 2 or g.shape != self.shape:
            raise DimensionError(f"expected matrix of shape {self.shape}, got {g.shape}")

    def lmo(self, g: ParamPoint) -> ParamPoint:
        """-radius times the polar factor of g (zero matrix maps to zero)."""
        self._check(g)
        if not np.any(g):
            return np.zeros_like(g)
        return -self.radius * polar_factor_exact(g)

    def diameter(self) -> float:
        """Frobenius diameter 2 * radius * sqrt(min(rows, cols)).

        Attained at +/- radius * Q for semi-orthogonal Q, whose Frobenius norm
        is radius * sqrt(min(rows, cols)).
        """
        return 2.0 * self.radius * float(np.sqrt(min(self.rows, self.cols)))

    def dual_norm(self, g: ParamPoint) -> float:
        """Nuclear norm (dual of the spectral norm)."""
        self._check(g)
        return float(np.sum(svd_thin(g).s))

    def defining_norm(self, x: ParamPoint) -> float:
        self._check(x)
        return norm(x, "spectral")

    def contains(self, x: ParamPoint, tol: float = FEASIBILITY_TOL) -> bool:
        return self.defining_norm(x) <= self.radius * (1.0 + tol)


ConstraintSet = LinfBall | L2Ball | SpectralBall


def fw_gap(cset: ConstraintSet, x: ParamPoint, grad: ParamPoint, tol: float = FEASIBILITY_TOL) -> GapReport:
    """Frank-Wolfe gap max_{v in C} <v - x, -grad> via its closed form.

    gap = radius * ||grad||_* + <x, grad>. The KKT residual
    ||grad||_* - <-x, grad> / radius is zero (for feasible x) exactly when x
    is a KKT point of min F over the ball. Infeasible x raises.
    """
    if x.shape != grad.shape:
        raise DimensionError(f"x/grad shape mismatch: {x.shape} vs {grad.shape}")
    violation = cset.defining_norm(x) - cset.radius
    if violation > tol * cset.radius:
        raise FeasibilityError(f"point violates the constraint by {violation:.3e}")
    if isinstance(cset, SpectralBall) and np.any(grad):
        # One SVD serves both the dual norm and the LMO witness.
        res = svd_thin(grad)
        dual = float(np.sum(res.s))
        keep = res.s > 1e-12 * res.s[0]
        lmo_point = -cset.radius * (res.u[:, keep] @ res.v[:, keep].T)
    else:
        dual = cset.dual_norm(grad)
        lmo_point = cset.lmo(grad)
    ip = inner(x, grad)
    gap = cset.radius * dual + ip
    kkt_residual = dual + ip / cset.radius
    return GapReport(gap=gap, lmo_point=lmo_point, kkt_residual=kkt_residual, dual_norm_value=dual)
