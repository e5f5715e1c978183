"""Empirical measures, ECDF evaluation and the two grid norms.

Every statistic in the package is a norm of a difference of CDF-like
functions.  Two norms are provided: the uniform distance on a finite grid
(optionally including left limits, which makes the discretised supremum
exact for step-versus-continuous comparisons) and a weighted L2 distance on
a fixed grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "Sample1D",
    "Sample2D",
    "EvalGrid",
    "NormSpec",
    "ECDF",
    "JointECDF",
    "SignedSum",
    "ecdf_eval",
    "joint_ecdf_eval",
    "sup_cell_distance",
    "l2_grid_distance",
    "norm_distance",
    "sup_grid",
    "l2_norm_for_normal",
    "left_limit",
]


@dataclass(frozen=True)
class Sample1D:
    """Univariate sample in observation order."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("sample must contain at least one observation")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @cached_property
    def sorted(self) -> np.ndarray:
        return np.sort(self.values)


@dataclass(frozen=True)
class Sample2D:
    """Bivariate sample of pairs ``(x_i, y_i)`` in observation order."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size != y.size:
            raise ValueError("x and y must have the same length")
        if x.size < 1:
            raise ValueError("sample must contain at least one pair")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample coordinates must be finite")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[float, float]]) -> "Sample2D":
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def pairs(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


@dataclass(frozen=True)
class EvalGrid:
    """Points at which functions are compared.

    ``points`` is a sorted 1-D array, or an ``(m, 2)`` array of pairs for
    bivariate functions.  Left limits only make sense in one dimension.
    """

    points: np.ndarray
    include_left_limits: bool = False

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.size == 0:
            raise ValueError("evaluation grid is empty")
        if p.ndim == 1:
            if np.any(np.diff(p) < 0):
                raise ValueError("1-D grid points must be sorted ascending")
        elif not (p.ndim == 2 and p.shape[1] == 2):
            raise ValueError("grid points must be 1-D or an (m, 2) array")
        elif self.include_left_limits:
            raise ValueError("left limits are only supported on 1-D grids")
        object.__setattr__(self, "points", p)

    @property
    def ndim(self) -> int:
        return self.points.ndim


@dataclass(frozen=True)
class NormSpec:
    """A norm on functions, discretised on ``grid``.

    ``kind`` is ``"sup"`` (maximum absolute difference over the grid and,
    when flagged, its left limits) or ``"l2"`` (square root of the weighted
    sum of squared differences).
    """

    kind: str
    grid: EvalGrid
    weights: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("sup", "l2"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "l2":
            if self.weights is None:
                raise ValueError("l2 norm requires weights")
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(self.grid.points),):
                raise ValueError("weights must match the grid length")
            total = w.sum()
            if np.any(w < 0) or not np.isfinite(total) or total <= 0:
                raise ValueError("weights must be nonnegative with a positive finite sum")
            object.__setattr__(self, "weights", w)


class ECDF:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, sample: Sample1D | Sequence[float]):
        if not isinstance(sample, Sample1D):
            sample = Sample1D(sample)
        self._sorted = sample.sorted
        self.n = sample.n

    def __call__(self, x):
        return np.searchsorted(self._sorted, x, side="right") / self.n

    def left(self, x):
        """Left limit ``F(x-)``: the fraction of values strictly below ``x``."""
        return np.searchsorted(self._sorted, x, side="left") / self.n

    @property
    def jumps(self) -> np.ndarray:
        return np.unique(self._sorted)


class JointECDF:
    """Bivariate empirical distribution function ``H_n(x, y)``."""

    def __init__(self, sample: Sample2D):
        self._x = sample.x
        self._y = sample.y
        self.n = sample.n

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        below = (self._x <= x[..., None]) & (self._y <= y[..., None])
        return below.sum(axis=-1) / self.n


class SignedSum:
    """Pointwise linear combination ``sum_k c_k f_k`` of evaluable functions.

    Left limits are combined term by term, so a sum of step functions and
    continuous functions keeps exact left-limit values.
    """

    def __init__(self, terms: Sequence[tuple[float, Callable]]):
        self.terms = list(terms)

    def __call__(self, *args):
        out = 0.0
        for c, f in self.terms:
            out = out + c * f(*args)
        return out

    def left(self, x):
        out = 0.0
        for c, f in self.terms:
            out = out + c * left_limit(f, x)
        return out


def left_limit(f: Callable, x):
    """Evaluate ``f(x-)``; functions without a ``left`` method are taken as continuous."""
    lf = getattr(f, "left", None)
    return lf(x) if lf is not None else f(x)


def ecdf_eval(s: Sample1D, x):
    """Fraction of sample values ``<= x``."""
    return np.searchsorted(s.sorted, x, side="right") / s.n


def joint_ecdf_eval(s: Sample2D, x, y):
    """Fraction of pairs with ``X_i <= x`` and ``Y_i <= y``."""
    return JointECDF(s)(x, y)


def _evaluate(f: Callable, grid: EvalGrid) -> np.ndarray:
    p = grid.points
    if p.ndim == 2:
        return np.asarray(f(p[:, 0], p[:, 1]), dtype=float)
    vals = np.asarray(f(p), dtype=float)
    if grid.include_left_limits:
        vals = np.concatenate([vals, np.asarray(left_limit(f, p), dtype=float)])
    return vals


def sup_cell_distance(f: Callable, g: Callable, grid: EvalGrid) -> float:
    """Maximum of ``|f - g|`` over the grid points (and their left limits if flagged)."""
    diff = _evaluate(f, grid) - _evaluate(g, grid)
    return float(np.max(np.abs(diff)))


def l2_grid_distance(f: Callable, g: Callable, norm: NormSpec) -> float:
    """``sqrt(sum_j w_j (f(t_j) - g(t_j))^2)`` on the norm's grid."""
    if norm.kind != "l2":
        raise ValueError("l2_grid_distance requires an l2 norm")
    p = norm.grid.points
    fv = f(p[:, 0], p[:, 1]) if p.ndim == 2 else f(p)
    gv = g(p[:, 0], p[:, 1]) if p.ndim == 2 else g(p)
    d = np.asarray(fv, dtype=float) - np.asarray(gv, dtype=float)
    return float(np.sqrt(np.sum(norm.weights * d * d)))


def norm_distance(f: Callable, g: Callable, norm: NormSpec) -> float:
    """Dispatch on ``norm.kind``."""
    if norm.kind == "sup":
        return sup_cell_distance(f, g, norm.grid)
    return l2_grid_distance(f, g, norm)


def norm_of_values(values: np.ndarray, norm: NormSpec) -> np.ndarray:
    """Norm of precomputed differences along the last axis.

    For the sup norm ``values`` holds the grid values followed by left-limit
    values (if any); for the l2 norm it holds values at the grid points.
    """
    if norm.kind == "sup":
        return np.max(np.abs(values), axis=-1)
    return np.sqrt(np.sum(norm.weights * values * values, axis=-1))


def sup_grid(*samples: Sample1D | np.ndarray) -> EvalGrid:
    """Sorted distinct observations of the given samples, with left limits."""
    pts = np.unique(np.concatenate([np.asarray(getattr(s, "values", s), dtype=float).ravel() for s in samples]))
    return EvalGrid(pts, include_left_limits=True)


def l2_norm_for_normal(loc: float, scale: float = 1.0, points: int = 201,
                       tail: float = 0.001) -> NormSpec:
    """Cramer-von Mises type norm for a fitted normal ``N(loc, scale^2)``.

    Equispaced grid between the ``tail`` and ``1 - tail`` quantiles with
    trapezoid weights of the normal density, so that the squared norm
    approximates ``int (F - G)^2 dF_theta``.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    lo = loc + scale * ndtri(tail)
    hi = loc + scale * ndtri(1.0 - tail)
    t = np.linspace(lo, hi, points)
    dens = np.exp(-0.5 * ((t - loc) / scale) ** 2) / (scale * np.sqrt(2 * np.pi))
    dx = t[1] - t[0]
    w = dens * dx
    w[0] *= 0.5
    w[-1] *= 0.5
    return NormSpec("l2", EvalGrid(t), w)


def normal_cdf(x, loc=0.0, scale=1.0):
    return ndtr((np.asarray(x, dtype=float) - loc) / scale)
