"""Parametric families and the estimators used by the tests.

The minimum-distance estimator is a coarse grid scan followed by golden
section refinement inside the bracketing grid cell.  Two-parameter families
are handled by coordinate descent.  The core routine works on a batch of
targets at once so that all bootstrap replicates of a test can be fitted
together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .empirical import NormSpec, Sample1D, Sample2D, SignedSum, left_limit
from .exceptions import DegenerateDesign, NonFiniteCriterion, OutOfRange, TiesDetected

__all__ = [
    "FamilySpec",
    "FAMILIES",
    "get_family",
    "FitResult",
    "AdjustedTarget",
    "SearchBox",
    "least_squares",
    "sample_moments",
    "default_search",
    "minimum_distance",
    "minimum_distance_batch",
    "kendall_tau",
    "invert_tau",
    "clayton_tau",
    "clayton_cdf",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def clayton_cdf(u, v, theta):
    """Clayton copula ``(u^-t + v^-t - 1)^(-1/t)``; the independence copula at ``t = 0``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        safe = np.where(theta > 0, theta, 1.0)
        c = (u ** -safe + v ** -safe - 1.0) ** (-1.0 / safe)
        c = np.where((u <= 0) | (v <= 0), 0.0, c)
    return np.where(theta > 0, c, u * v)


def clayton_tau(theta: float) -> float:
    """Kendall's tau of the Clayton copula, ``theta / (theta + 2)``."""
    if theta < 0:
        raise OutOfRange("Clayton parameter must be nonnegative")
    return theta / (theta + 2.0)


@dataclass(frozen=True)
class FamilySpec:
    """A parametric family with box constraints on its parameters."""

    name: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    # strict lower bounds (e.g. a scale parameter must stay positive)
    strict_lower: tuple[bool, ...] = field(default=())

    @property
    def n_params(self) -> int:
        return len(self.lower)

    @property
    def is_copula(self) -> bool:
        return self.name == "clayton"

    def check(self, theta: Sequence[float]) -> tuple[float, ...]:
        theta = tuple(float(t) for t in np.atleast_1d(theta))
        if len(theta) != self.n_params:
            raise OutOfRange(f"{self.name} expects {self.n_params} parameter(s), got {len(theta)}")
        strict = self.strict_lower or (False,) * self.n_params
        for t, lo, hi, s in zip(theta, self.lower, self.upper, strict):
            if not np.isfinite(t) or t < lo or t > hi or (s and t <= lo):
                raise OutOfRange(f"parameter {t} outside the domain of {self.name}")
        return theta

    def cdf(self, t, theta: Sequence):
        """Distribution function at ``t``; parameters broadcast against ``t``."""
        if self.name == "normal_location":
            return ndtr(t - theta[0])
        if self.name == "normal_location_scale":
            return ndtr((t - theta[0]) / theta[1])
        raise TypeError(f"{self.name} has no univariate cdf")

    def quantile(self, u, theta: Sequence):
        if self.name == "normal_location":
            return theta[0] + ndtri(u)
        if self.name == "normal_location_scale":
            return theta[0] + theta[1] * ndtri(u)
        raise TypeError(f"{self.name} has no univariate quantile")

    def copula(self, u, v, theta: Sequence):
        if self.name != "clayton":
            raise TypeError(f"{self.name} is not a copula family")
        return clayton_cdf(u, v, theta[0])

    def curve(self, theta: Sequence) -> Callable:
        """The fitted distribution function as a plain callable."""
        theta = self.check(theta)
        if self.is_copula:
            return lambda u, v: self.copula(u, v, theta)
        return lambda t: self.cdf(np.asarray(t, dtype=float), theta)


FAMILIES = {
    "normal_location": FamilySpec("normal_location", (-np.inf,), (np.inf,)),
    "normal_location_scale": FamilySpec(
        "normal_location_scale", (-np.inf, 0.0), (np.inf, np.inf), (False, True)
    ),
    "clayton": FamilySpec("clayton", (0.0,), (np.inf,)),
}


def get_family(family: str | FamilySpec) -> FamilySpec:
    if isinstance(family, FamilySpec):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None


@dataclass(frozen=True)
class FitResult:
    theta: tuple[float, ...]
    criterion_value: float
    evaluations: int


@dataclass(frozen=True)
class SearchBox:
    """Per-coordinate search box for the minimum-distance estimator."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    grid_points: int = 101
    refine_tol: float = 1e-6
    start: tuple[float, ...] | None = None
    sweeps: int = 3

    def __post_init__(self):
        if self.grid_points < 3:
            raise ValueError("grid_points must be at least 3")
        if len(self.lo) != len(self.hi) or any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("invalid search box")


class AdjustedTarget:
    """The object matched by the minimum-distance criterion.

    Without a correction this is just ``base`` (an empirical CDF).  With a
    correction ``(subtract, add)`` it is the signed function
    ``base - subtract + add``; the bootstrap uses ``subtract = R_n`` and
    ``add = H_theta_hat``.
    """

    def __init__(self, base: Callable, correction: tuple[Callable, Callable] | None = None):
        self.base = base
        self.correction = correction
        if correction is None:
            self._f = base
        else:
            sub, add = correction
            self._f = SignedSum([(1.0, base), (-1.0, sub), (1.0, add)])

    def __call__(self, x):
        return self._f(x)

    def left(self, x):
        return left_limit(self._f, x)


def least_squares(s: Sample2D) -> tuple[float, float]:
    """Ordinary least squares fit of ``y`` on ``(1, x)``; returns ``(intercept, slope)``."""
    xc = s.x - s.x.mean()
    sxx = np.dot(xc, xc)
    if sxx == 0:
        raise DegenerateDesign("the regressor has zero empirical variance")
    slope = np.dot(xc, s.y - s.y.mean()) / sxx
    return float(s.y.mean() - slope * s.x.mean()), float(slope)


def sample_moments(s: Sample1D) -> tuple[float, float]:
    """Mean and biased (divide-by-n) standard deviation."""
    m = s.values.mean()
    return float(m), float(np.sqrt(np.mean((s.values - m) ** 2)))


def default_search(s: Sample1D, family: str | FamilySpec, grid_points: int = 101,
                   refine_tol: float = 1e-6) -> SearchBox:
    """Search box centred on the sample moments (mean +- 4 sd; scale in [sd/20, 4 sd])."""
    fam = get_family(family)
    mean, sd = sample_moments(s)
    width = sd if sd > 0 else 1.0
    if fam.name == "normal_location":
        return SearchBox((mean - 4 * width,), (mean + 4 * width,), grid_points, refine_tol)
    if fam.name == "normal_location_scale":
        return SearchBox(
            (mean - 4 * width, width / 20),
            (mean + 4 * width, 4 * width),
            grid_points,
            refine_tol,
            start=(mean, width),
        )
    raise TypeError(f"no minimum-distance search for {fam.name}")


def _criterion(family, points, right, left, weights, kind, theta):
    # points/right/left: (B, 1, m); theta: tuple of (B, K, 1) arrays
    F = family.cdf(points, theta)
    d = right - F
    if kind == "sup":
        crit = np.max(np.abs(d), axis=-1)
        if left is not None:
            crit = np.maximum(crit, np.max(np.abs(left - F), axis=-1))
        return crit
    return np.sqrt(np.sum(weights * d * d, axis=-1))


def minimum_distance_batch(right, left, points, norm_kind: str, weights, family,
                           lo, hi, grid_points: int = 101, refine_tol: float = 1e-6,
                           start=None, sweeps: int = 3):
    """Minimum-distance fits for a batch of targets.

    ``right`` and ``left`` are ``(B, m)`` target values at ``points`` (and
    their left limits; ``left`` may be None); ``points`` is ``(m,)`` or
    ``(B, m)``; ``lo``/``hi``/``start`` are ``(B, p)``.  Returns
    ``(theta (B, p), criterion (B,), failed (B,) bool, evaluations)``.
    Rows whose criterion is non-finite anywhere are flagged as failed.
    """
    fam = get_family(family)
    right = np.atleast_2d(np.asarray(right, dtype=float))
    B, m = right.shape
    points = np.broadcast_to(np.asarray(points, dtype=float), (B, m))[:, None, :]
    right = right[:, None, :]
    if left is not None:
        left = np.atleast_2d(np.asarray(left, dtype=float))[:, None, :]
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (B, fam.n_params))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (B, fam.n_params))
    if start is None:
        theta = 0.5 * (lo + hi)
    else:
        theta = np.array(np.broadcast_to(np.asarray(start, dtype=float), (B, fam.n_params)))
    failed = np.zeros(B, dtype=bool)
    evals = 0
    rows = np.arange(B)

    def crit_at(j, values):
        # values: (B, K) candidate values for coordinate j, others held at theta
        nonlocal evals
        evals += values.shape[1]
        th = tuple(
            values[:, :, None] if i == j else theta[:, i][:, None, None]
            for i in range(fam.n_params)
        )
        return _criterion(fam, points, right, left, weights, norm_kind, th)

    n_sweeps = 1 if fam.n_params == 1 else sweeps
    for _ in range(n_sweeps):
        for j in range(fam.n_params):
            grid = np.linspace(lo[:, j], hi[:, j], grid_points, axis=1)
            c = crit_at(j, grid)
            bad = ~np.all(np.isfinite(c), axis=1)
            failed |= bad
            c = np.where(np.isfinite(c), c, np.inf)
            k = np.argmin(c, axis=1)
            best_val = c[rows, k]
            best_c = grid[rows, k]
            a = grid[rows, np.maximum(k - 1, 0)]
            b = grid[rows, np.minimum(k + 1, grid_points - 1)]
            width = float(np.max(b - a)) if B else 0.0
            if width > refine_tol:
                n_it = int(math.ceil(math.log(refine_tol / width) / math.log(_INV_PHI)))
                x1 = b - _INV_PHI * (b - a)
                x2 = a + _INV_PHI * (b - a)
                f1 = crit_at(j, x1[:, None])[:, 0]
                f2 = crit_at(j, x2[:, None])[:, 0]
                for _ in range(n_it):
                    go_left = f1 < f2
                    a, b = np.where(go_left, a, x1), np.where(go_left, x2, b)
                    nx1 = np.where(go_left, b - _INV_PHI * (b - a), x2)
                    nx2 = np.where(go_left, x1, a + _INV_PHI * (b - a))
                    nf = crit_at(j, np.where(go_left, nx1, nx2)[:, None])[:, 0]
                    failed |= ~np.isfinite(nf)
                    f1, f2 = np.where(go_left, nf, f2), np.where(go_left, f1, nf)
                    x1, x2 = nx1, nx2
                mid = 0.5 * (a + b)
                fm = crit_at(j, mid[:, None])[:, 0]
                improve = np.isfinite(fm) & (fm < best_val)
                best_c = np.where(improve, mid, best_c)
                best_val = np.where(improve, fm, best_val)
            theta[:, j] = best_c
    final = crit_at(0, theta[:, :1])[:, 0]
    failed |= ~np.isfinite(final)
    return theta, final, failed, evals


def minimum_distance(target: AdjustedTarget | Callable, family: str | FamilySpec,
                     norm: NormSpec, search: SearchBox) -> FitResult:
    """Minimise ``theta -> ||target - F_theta||`` over the search box.

    The norm's grid should contain every jump of ``target`` (and flag left
    limits) for the sup distance to be exact.
    """
    fam = get_family(family)
    pts = norm.grid.points
    right = np.asarray(target(pts), dtype=float)[None, :]
    left = None
    if norm.kind == "sup" and norm.grid.include_left_limits:
        left = np.asarray(left_limit(target, pts), dtype=float)[None, :]
    theta, crit, failed, evals = minimum_distance_batch(
        right, left, pts, norm.kind, norm.weights, fam,
        np.asarray(search.lo)[None, :], np.asarray(search.hi)[None, :],
        search.grid_points, search.refine_tol,
        None if search.start is None else np.asarray(search.start)[None, :],
        search.sweeps,
    )
    if failed[0]:
        raise NonFiniteCriterion("minimum-distance criterion is not finite on the search box")
    return FitResult(tuple(float(t) for t in theta[0]), float(crit[0]), evals)


def _check_no_ties(v: np.ndarray, name: str):
    if np.unique(v).size != v.size:
        raise TiesDetected(f"{name} contains tied values")


def kendall_tau(s: Sample2D) -> float:
    """(concordant - discordant) / (n (n - 1) / 2) over unordered pairs."""
    _check_no_ties(s.x, "x")
    _check_no_ties(s.y, "y")
    n = s.n
    if n < 2:
        raise OutOfRange("Kendall's tau needs at least two pairs")
    sx = np.sign(s.x[:, None] - s.x[None, :])
    sy = np.sign(s.y[:, None] - s.y[None, :])
    # the full matrix counts every unordered pair twice
    return float(np.sum(sx * sy) / (n * (n - 1)))


def invert_tau(family: str | FamilySpec, tau: float) -> float:
    """Parameter whose Kendall's tau equals ``tau`` (Clayton: ``2 tau / (1 - tau)``)."""
    fam = get_family(family)
    if fam.name != "clayton":
        raise TypeError(f"tau inversion is not available for {fam.name}")
    if not 0.0 <= tau < 1.0:
        raise OutOfRange(f"tau = {tau} outside the Clayton range [0, 1)")
    return 2.0 * tau / (1.0 - tau)
