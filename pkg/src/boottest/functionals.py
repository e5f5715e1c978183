"""Test functionals and the observed/bootstrap statistics built from them.

All statistics are ``sqrt(n) * ||phi(.)||``.  For the independence test
``phi(H)(x, y) = H(x, y) - F(x) G(y)`` on the product grid of observed
coordinates; for the slope test ``phi`` is the least-squares slope (or its
studentised version); for goodness of fit ``phi(H, theta) = H - H_theta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .empirical import EvalGrid, NormSpec, Sample1D, Sample2D, SignedSum, norm_distance, norm_of_values
from .estimators import get_family
from .exceptions import DegenerateDesign, IncompatiblePair, TiesDetected

__all__ = [
    "FunctionalSpec",
    "FUNCTIONAL_KINDS",
    "independence_phi",
    "independence_statistic",
    "slope_phi",
    "slope_statistic",
    "gof_phi_value",
    "corrected_bootstrap_statistic",
    "gof_bootstrap_statistic",
    "ranks",
    "empirical_copula_eval",
    "empirical_copula_grid",
    "copula_phi",
    "copula_statistic",
]

FUNCTIONAL_KINDS = ("independence", "slope", "slope_studentised", "gof", "copula")


@dataclass(frozen=True)
class FunctionalSpec:
    """Which ``phi`` is tested, with its family and norm where they apply.

    ``norm`` is ``"sup"`` or ``"l2"`` for the goodness-of-fit and copula
    kinds and must be None otherwise.
    """

    kind: str
    family: str | None = None
    norm: str | None = None

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise ValueError(f"unknown functional {self.kind!r}; choose from {FUNCTIONAL_KINDS}")
        needs = self.kind in ("gof", "copula")
        if needs:
            if self.family is None:
                object.__setattr__(self, "family", "normal_location" if self.kind == "gof" else "clayton")
            if self.norm is None:
                object.__setattr__(self, "norm", "sup")
            if self.norm not in ("sup", "l2"):
                raise ValueError(f"unknown norm {self.norm!r}")
            fam = get_family(self.family)
            if fam.is_copula != (self.kind == "copula"):
                raise IncompatiblePair(f"family {self.family} does not fit a {self.kind} test")
        elif self.family is not None or self.norm is not None:
            raise ValueError(f"{self.kind} takes no family or norm")

    @property
    def sample_dim(self) -> int:
        return 1 if self.kind == "gof" else 2

    @property
    def label(self) -> str:
        if self.kind in ("gof", "copula"):
            return f"{self.kind}[{self.family},{self.norm}]"
        return self.kind


def independence_phi(x, y, ux: np.ndarray, uy: np.ndarray) -> np.ndarray:
    """``H_n(a, b) - F_n(a) G_n(b)`` for ``a`` in ``ux`` and ``b`` in ``uy``.

    ``ux`` and ``uy`` must be sorted.  The counting is exact: a point with
    ``x <= ux[i]`` is registered in every cell ``i' >= i``.
    """
    x = np.asarray(x)
    n = x.size
    kx, ky = ux.size, uy.size
    ix = np.searchsorted(ux, x, side="left")
    iy = np.searchsorted(uy, y, side="left")
    keep = (ix < kx) & (iy < ky)
    counts = np.bincount(ix[keep] * ky + iy[keep], minlength=kx * ky).reshape(kx, ky)
    joint = counts.cumsum(axis=0).cumsum(axis=1)
    fx = np.bincount(ix[ix < kx], minlength=kx).cumsum()
    gy = np.bincount(iy[iy < ky], minlength=ky).cumsum()
    return joint / n - np.outer(fx / n, gy / n)


def independence_statistic(s: Sample2D) -> float:
    """Kolmogorov-Smirnov statistic for independence on the full product grid."""
    ux, uy = np.unique(s.x), np.unique(s.y)
    return float(np.sqrt(s.n) * np.max(np.abs(independence_phi(s.x, s.y, ux, uy))))


def slope_phi(x, y, studentised: bool = False) -> float:
    """``cov_n(X, Y) / var_n(X)`` or, studentised, ``cov_n(X, Y) / sd_n(X)`` (1/n moments)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    sxx = np.dot(xc, xc)
    if sxx == 0:
        raise DegenerateDesign("the regressor has zero empirical variance")
    sxy = np.dot(xc, y - y.mean())
    if studentised:
        n = x.size
        return float((sxy / n) / np.sqrt(sxx / n))
    return float(sxy / sxx)


def slope_statistic(s: Sample2D, studentised: bool = False) -> float:
    return float(np.sqrt(s.n) * abs(slope_phi(s.x, s.y, studentised)))


def gof_phi_value(measure: Callable, theta, family, norm: NormSpec) -> float:
    """``||measure - F_theta||`` without the ``sqrt(n)`` factor."""
    fam = get_family(family)
    return norm_distance(measure, fam.curve(theta), norm)


def corrected_bootstrap_statistic(phi_star, phi_rn, n: int, norm: NormSpec | None = None) -> float:
    """``sqrt(n) * ||phi(H*_n) - phi(R_n)||``.

    ``phi_star`` and ``phi_rn`` are scalars or arrays of values on a common
    set of evaluation points.  ``phi_rn = None`` stands for the zero element
    (a null scheme), in which case no subtraction is performed at all and the
    result is the equivalent statistic.  With ``norm`` None the maximum
    absolute value is used; an l2 ``NormSpec`` applies its weights.
    """
    phi_star = np.asarray(phi_star, dtype=float)
    if phi_rn is not None and np.shape(phi_rn) != phi_star.shape:
        raise IncompatiblePair("phi values must be evaluated on the same points")
    diff = phi_star if phi_rn is None else phi_star - np.asarray(phi_rn, dtype=float)
    if diff.ndim == 0:
        return float(np.sqrt(n) * abs(diff))
    if norm is None or norm.kind == "sup":
        return float(np.sqrt(n) * np.max(np.abs(diff)))
    return float(np.sqrt(n) * norm_of_values(diff.ravel(), norm))


def gof_bootstrap_statistic(hstar: Callable, theta_star, rn: Callable | None, theta_hat,
                            family, norm: NormSpec, n: int) -> float:
    """``sqrt(n) ||H*_n - H_theta* - R_n + H_theta_hat||``.

    ``rn = None`` encodes the parametric null scheme ``R_n = H_theta_hat``:
    the last two terms cancel and are not evaluated.
    """
    fam = get_family(family)
    fstar = fam.curve(theta_star)
    if rn is None:
        return float(np.sqrt(n) * norm_distance(hstar, fstar, norm))
    fhat = fam.curve(theta_hat)
    lhs = SignedSum([(1.0, hstar), (-1.0, rn), (1.0, fhat)])
    return float(np.sqrt(n) * norm_distance(lhs, fstar, norm))


def ranks(v: np.ndarray) -> np.ndarray:
    """Ranks ``1..n``; ties are refused."""
    v = np.asarray(v)
    order = np.argsort(v, kind="stable")
    sv = v[order]
    if np.any(sv[1:] == sv[:-1]):
        raise TiesDetected("a marginal contains tied values")
    r = np.empty(v.size, dtype=np.int64)
    r[order] = np.arange(1, v.size + 1)
    return r


def empirical_copula_eval(s: Sample2D, u, v):
    """``n^-1 #{i : rank(X_i)/n <= u, rank(Y_i)/n <= v}``."""
    ru = ranks(s.x) / s.n
    rv = ranks(s.y) / s.n
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return ((ru <= u[..., None]) & (rv <= v[..., None])).sum(axis=-1) / s.n


def empirical_copula_grid(x, y) -> np.ndarray:
    """Matrix of ``C_n(i/n, j/n)`` for ``i, j = 1..n``."""
    rx = ranks(x) - 1
    ry = ranks(y) - 1
    n = rx.size
    counts = np.zeros((n, n))
    counts[rx, ry] = 1.0
    return counts.cumsum(axis=0).cumsum(axis=1) / n


def copula_phi(x, y, theta, family) -> np.ndarray:
    """``C_n - C_theta`` on the grid ``{i/n} x {j/n}``."""
    fam = get_family(family)
    n = np.asarray(x).size
    g = np.arange(1, n + 1) / n
    return empirical_copula_grid(x, y) - fam.copula(g[:, None], g[None, :], tuple(np.atleast_1d(theta)))


def copula_norm(n: int, kind: str) -> NormSpec:
    """Norm on the ``n x n`` copula grid; l2 uses equal weights ``1/n^2``."""
    g = np.arange(1, n + 1) / n
    pts = np.column_stack([np.repeat(g, n), np.tile(g, n)])
    if kind == "sup":
        return NormSpec("sup", EvalGrid(pts))
    return NormSpec("l2", EvalGrid(pts), np.full(n * n, 1.0 / (n * n)))


def copula_statistic(s: Sample2D, theta, family, norm: str = "sup") -> float:
    """``sqrt(n) ||C_n - C_theta||`` on the grid ``{i/n} x {j/n}``."""
    fam = get_family(family)
    fam.check(theta)
    return float(np.sqrt(s.n) * copula_grid_norm(copula_phi(s.x, s.y, theta, fam), norm))


def copula_grid_norm(d: np.ndarray, kind: str) -> float:
    """Same value as ``norm_of_values(d.ravel(), copula_norm(n, kind))`` without building the grid."""
    if kind == "sup":
        return float(np.max(np.abs(d)))
    return float(np.sqrt(np.sum(d * d) / d.size))
