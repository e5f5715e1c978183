"""Resampling schemes ``R_n`` and deterministic random streams.

Each bootstrap replicate draws from its own counter-based Philox stream
keyed by ``(master_seed, stream_id)``, so a replicate's sample depends only
on those two integers and never on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .empirical import ECDF, Sample1D, Sample2D
from .estimators import get_family, invert_tau, kendall_tau, least_squares, sample_moments
from .exceptions import IncompatiblePair
from .functionals import FunctionalSpec, independence_phi, slope_phi

__all__ = [
    "SCHEMES",
    "STATISTICS",
    "RngStream",
    "SchemeSpec",
    "open_uniform",
    "clayton_sample",
    "check_compatible",
    "is_valid_pairing",
    "fit_scheme",
    "draw_bootstrap",
    "phi_of_scheme",
]

SCHEMES = (
    "empirical",
    "independence",
    "parametric_null",
    "residual_pairs",
    "fixed_design_residual",
    "hybrid_null",
    "fixed_design_null",
    "copula_parametric",
)
STATISTICS = ("equivalent", "centred", "corrected")

_SLOPE_SCHEMES = frozenset(
    {"empirical", "independence", "residual_pairs", "fixed_design_residual", "hybrid_null", "fixed_design_null"}
)
COMPATIBLE = {
    "independence": frozenset({"empirical", "independence"}),
    "slope": _SLOPE_SCHEMES,
    "slope_studentised": _SLOPE_SCHEMES,
    "gof": frozenset({"empirical", "parametric_null"}),
    "copula": frozenset({"copula_parametric"}),
}
# schemes whose R_n satisfies the null, so phi(R_n) = 0
NULL_SCHEMES = frozenset({"independence", "parametric_null", "hybrid_null", "fixed_design_null", "copula_parametric"})
# schemes with phi(R_n) = phi(H_n)
CENTRED_SCHEMES = frozenset({"empirical", "residual_pairs", "fixed_design_residual"})


@dataclass(frozen=True)
class RngStream:
    """Independent random stream identified by ``(master_seed, stream_id)``."""

    master_seed: int
    stream_id: int

    def generator(self, retry: int = 0) -> np.random.Generator:
        # retries use a disjoint counter block under the same key
        key = np.array([self.master_seed % 2**64, self.stream_id % 2**64], dtype=np.uint64)
        counter = np.array([0, 0, 0, retry], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


def open_uniform(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1): midpoints of a 2^-52 lattice."""
    return (np.floor(gen.random(size) * 2.0**52) + 0.5) * 2.0**-52


def clayton_sample(gen: np.random.Generator, n: int, theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Pairs from the Clayton copula by conditional inversion."""
    u = open_uniform(gen, n)
    w = open_uniform(gen, n)
    if theta == 0:
        return u, w
    v = (u ** -theta * (w ** (-theta / (1.0 + theta)) - 1.0) + 1.0) ** (-1.0 / theta)
    return u, v


@dataclass(frozen=True)
class SchemeSpec:
    """A fitted resampling scheme."""

    kind: str
    family: str | None = None
    theta: tuple[float, ...] | None = None
    intercept: float | None = None
    slope: float | None = None
    residuals: np.ndarray | None = None


def check_compatible(kind: str, functional: FunctionalSpec) -> None:
    if kind not in SCHEMES:
        raise ValueError(f"unknown scheme {kind!r}; choose from {SCHEMES}")
    if kind not in COMPATIBLE[functional.kind]:
        raise IncompatiblePair(f"scheme {kind} is not defined for a {functional.kind} test")


def is_valid_pairing(kind: str, statistic: str) -> bool:
    """Whether the scheme/bootstrap-statistic combination is consistent.

    The corrected statistic is always valid; the equivalent one needs a null
    scheme and the centred one a scheme with ``phi(R_n) = phi(H_n)``.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {STATISTICS}")
    if statistic == "corrected":
        return True
    if statistic == "equivalent":
        return kind in NULL_SCHEMES
    return kind in CENTRED_SCHEMES


def fit_scheme(kind: str, sample, functional: FunctionalSpec, theta=None) -> SchemeSpec:
    """Fit what the scheme needs to draw samples.

    ``theta`` supplies the parameter estimate for parametric schemes; without
    it the sample moments (goodness of fit) or tau inversion (copula) are used.
    """
    check_compatible(kind, functional)
    if kind in ("empirical", "independence"):
        return SchemeSpec(kind)
    if kind == "parametric_null":
        fam = get_family(functional.family)
        if theta is None:
            mean, sd = sample_moments(sample)
            theta = (mean,) if fam.n_params == 1 else (mean, sd)
        return SchemeSpec(kind, fam.name, fam.check(theta))
    if kind == "copula_parametric":
        fam = get_family(functional.family)
        if theta is None:
            theta = (invert_tau(fam, max(kendall_tau(sample), 0.0)),)
        return SchemeSpec(kind, fam.name, fam.check(theta))
    if kind == "fixed_design_null":
        a = float(sample.y.mean())
        return SchemeSpec(kind, intercept=a, slope=0.0, residuals=sample.y - a)
    a, b = least_squares(sample)
    return SchemeSpec(kind, intercept=a, slope=b, residuals=sample.y - a - b * sample.x)


def draw_bootstrap(scheme: SchemeSpec, sample, rng: RngStream, retry: int = 0):
    """One bootstrap sample of the same shape and size as ``sample``."""
    gen = rng.generator(retry)
    n = sample.n
    kind = scheme.kind
    if kind == "empirical":
        idx = gen.integers(0, n, n)
        if isinstance(sample, Sample1D):
            return Sample1D(sample.values[idx])
        return Sample2D(sample.x[idx], sample.y[idx])
    if kind == "independence":
        ix = gen.integers(0, n, n)
        iy = gen.integers(0, n, n)
        return Sample2D(sample.x[ix], sample.y[iy])
    if kind == "parametric_null":
        fam = get_family(scheme.family)
        return Sample1D(fam.quantile(open_uniform(gen, n), scheme.theta))
    if kind == "copula_parametric":
        u, v = clayton_sample(gen, n, scheme.theta[0])
        return Sample2D(u, v)
    eps_idx = gen.integers(0, n, n)
    eps = scheme.residuals[eps_idx]
    if kind == "residual_pairs":
        x = sample.x[eps_idx]
        return Sample2D(x, scheme.intercept + scheme.slope * x + eps)
    if kind == "hybrid_null":
        # X* from its own marginal, independent of eps*; resampling (X, eps) pairs
        # jointly would reproduce the empirical bootstrap exactly
        return Sample2D(sample.x[gen.integers(0, n, n)], scheme.intercept + eps)
    if kind == "fixed_design_residual":
        return Sample2D(sample.x, scheme.intercept + scheme.slope * sample.x + eps)
    if kind == "fixed_design_null":
        return Sample2D(sample.x, scheme.intercept + eps)
    raise ValueError(f"unknown scheme {kind!r}")


def phi_of_scheme(scheme: SchemeSpec, functional: FunctionalSpec, sample):
    """The centring object ``phi(R_n)``; None encodes the zero element.

    Independence: the ``phi`` matrix on the data's product grid.  Slope: a
    scalar.  Goodness of fit: the function ``R_n`` itself (an ECDF for the
    empirical scheme), to be combined with ``H_theta_hat`` by the caller.
    """
    check_compatible(scheme.kind, functional)
    if scheme.kind in NULL_SCHEMES:
        return None
    if functional.kind == "independence":
        ux, uy = np.unique(sample.x), np.unique(sample.y)
        return independence_phi(sample.x, sample.y, ux, uy)
    if functional.kind in ("slope", "slope_studentised"):
        # the residual schemes keep cov(X*, eps*) = 0, so phi(R_n) = phi(H_n)
        return slope_phi(sample.x, sample.y, functional.kind == "slope_studentised")
    if functional.kind == "gof":
        return ECDF(sample)
    raise IncompatiblePair(f"no centring object for {scheme.kind} with {functional.kind}")
