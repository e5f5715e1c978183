"""One complete bootstrap test: observed statistic, replicates, p-value, decision."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .empirical import ECDF, NormSpec, Sample1D, Sample2D, l2_norm_for_normal, sup_grid
from .estimators import (
    AdjustedTarget,
    default_search,
    get_family,
    invert_tau,
    kendall_tau,
    minimum_distance,
    minimum_distance_batch,
    sample_moments,
)
from .exceptions import AllReplicatesNonFinite, BootTestError, IncompatiblePair
from .functionals import (
    FunctionalSpec,
    copula_grid_norm,
    copula_phi,
    corrected_bootstrap_statistic,
    independence_phi,
    slope_phi,
)
from .resampling import (
    RngStream,
    check_compatible,
    draw_bootstrap,
    fit_scheme,
    is_valid_pairing,
    phi_of_scheme,
)

__all__ = [
    "ESTIMATORS",
    "TestSpec",
    "TestResult",
    "run_test",
    "mc_pvalue",
    "order_quantile",
]

ESTIMATORS = {
    "independence": (None,),
    "slope": ("least_squares",),
    "slope_studentised": ("least_squares",),
    "gof": ("md_corrected", "md_uncorrected", "moments"),
    "copula": ("tau_inversion",),
}


@dataclass(frozen=True)
class TestSpec:
    """Everything that determines a bootstrap test apart from the data.

    Invalid scheme/statistic pairings (for instance the empirical bootstrap
    with the equivalent statistic) raise ``IncompatiblePair`` unless
    ``allow_invalid`` is set.
    """

    __test__ = False  # not a pytest class

    functional: FunctionalSpec
    scheme: str
    statistic: str = "corrected"
    estimator: str | None = None
    B: int = 100
    alpha: float = 0.05
    seed: int = 0
    allow_invalid: bool = False

    def __post_init__(self):
        if isinstance(self.functional, str):
            object.__setattr__(self, "functional", FunctionalSpec(self.functional))
        kind = self.functional.kind
        check_compatible(self.scheme, self.functional)
        allowed = ESTIMATORS[kind]
        if self.estimator is None:
            object.__setattr__(self, "estimator", allowed[0])
        elif self.estimator not in allowed:
            raise IncompatiblePair(f"estimator {self.estimator!r} does not apply to a {kind} test")
        if not is_valid_pairing(self.scheme, self.statistic) and not self.allow_invalid:
            raise IncompatiblePair(
                f"scheme {self.scheme} with the {self.statistic} statistic is not a consistent bootstrap"
            )
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["functional"] = asdict(self.functional)
        return d


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    t_obs: float
    replicates: np.ndarray = field(repr=False)
    p_value: float
    quantile_1ma: float
    reject: bool
    seed: int

    def to_dict(self) -> dict:
        return {
            "t_obs": self.t_obs,
            "replicates": [float(r) for r in self.replicates],
            "p_value": self.p_value,
            "quantile_1ma": self.quantile_1ma,
            "reject": self.reject,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestResult":
        return cls(
            float(d["t_obs"]),
            np.asarray(d["replicates"], dtype=float),
            float(d["p_value"]),
            float(d["quantile_1ma"]),
            bool(d["reject"]),
            int(d["seed"]),
        )

    def __eq__(self, other):
        if not isinstance(other, TestResult):
            return NotImplemented
        return (
            self.t_obs == other.t_obs
            and np.array_equal(self.replicates, other.replicates)
            and self.p_value == other.p_value
            and self.quantile_1ma == other.quantile_1ma
            and self.reject == other.reject
            and self.seed == other.seed
        )


def mc_pvalue(t_obs: float, replicates) -> float:
    """``(1 + #{r >= t_obs}) / (B + 1)``; ties count as exceedances."""
    r = np.asarray(replicates, dtype=float)
    if r.size == 0:
        raise ValueError("no replicates")
    if np.any(np.isnan(r)):
        raise ValueError("replicates contain NaN")
    return (1 + int(np.count_nonzero(r >= t_obs))) / (r.size + 1)


def order_quantile(replicates, level: float) -> float:
    """The k-th smallest replicate, ``k = clamp(ceil((B + 1) level), 1, B)``."""
    r = np.sort(np.asarray(replicates, dtype=float))
    if r.size == 0:
        raise ValueError("no replicates")
    k = min(max(math.ceil((r.size + 1) * level), 1), r.size)
    return float(r[k - 1])


class _Independence:
    def __init__(self, spec: TestSpec, sample: Sample2D, scheme):
        self.n = sample.n
        self.ux, self.uy = np.unique(sample.x), np.unique(sample.y)
        phi_n = independence_phi(sample.x, sample.y, self.ux, self.uy)
        self.t_obs = float(np.sqrt(self.n) * np.max(np.abs(phi_n)))
        self.center = _center(spec, phi_n, lambda: phi_of_scheme(scheme, spec.functional, sample))

    def replicates(self, samples):
        out = np.empty(len(samples))
        for i, s in enumerate(samples):
            out[i] = corrected_bootstrap_statistic(independence_phi(s.x, s.y, self.ux, self.uy), self.center, self.n)
        return out


class _Slope:
    def __init__(self, spec: TestSpec, sample: Sample2D, scheme):
        self.n = sample.n
        self.studentised = spec.functional.kind == "slope_studentised"
        phi_n = slope_phi(sample.x, sample.y, self.studentised)
        self.t_obs = float(np.sqrt(self.n) * abs(phi_n))
        self.center = _center(spec, phi_n, lambda: phi_of_scheme(scheme, spec.functional, sample))

    def replicates(self, samples):
        out = np.empty(len(samples))
        for i, s in enumerate(samples):
            try:
                out[i] = corrected_bootstrap_statistic(slope_phi(s.x, s.y, self.studentised), self.center, self.n)
            except BootTestError:
                out[i] = np.nan
        return out


def _center(spec: TestSpec, phi_n, scheme_phi):
    if spec.statistic == "equivalent":
        return None
    if spec.statistic == "centred":
        return phi_n
    return scheme_phi()


class _GoodnessOfFit:
    """Goodness of fit with estimated parameters; bootstrap fits run as one batch."""

    def __init__(self, spec: TestSpec, sample: Sample1D):
        self.spec = spec
        self.fam = get_family(spec.functional.family)
        self.n = sample.n
        self.data = sample
        self.hn = ECDF(sample)
        mean, sd = sample_moments(sample)
        if spec.functional.norm == "l2":
            scale = 1.0 if self.fam.n_params == 1 else (sd if sd > 0 else 1.0)
            self.norm = l2_norm_for_normal(mean, scale)
        else:
            self.norm = NormSpec("sup", sup_grid(sample))
        if spec.estimator == "moments":
            self.theta_hat = self.fam.check((mean,) if self.fam.n_params == 1 else (mean, sd))
        else:
            fit = minimum_distance(AdjustedTarget(self.hn), self.fam, self.norm, default_search(sample, self.fam))
            self.theta_hat = fit.theta
        self.fhat = self.fam.curve(self.theta_hat)
        self.t_obs = float(np.sqrt(self.n) * _gof_norm(self.hn, self.fhat, self.norm))
        self.scheme = fit_scheme(spec.scheme, sample, spec.functional, self.theta_hat)
        # R_n - H_theta_hat is identically zero under the parametric null; keep it structurally absent
        self.rn = phi_of_scheme(self.scheme, spec.functional, sample)
        stat = spec.statistic
        self.stat_center = None if stat == "equivalent" else (self.hn if stat == "centred" else self.rn)
        self.fit_center = self.rn if spec.estimator == "md_corrected" else None

    def _grid(self, s: Sample1D) -> np.ndarray:
        uses_data = self.stat_center is not None or self.fit_center is not None
        pts = np.concatenate([self.data.values, s.values]) if uses_data else s.values
        return np.unique(pts)

    def replicates(self, samples):
        B = len(samples)
        fam, norm = self.fam, self.norm
        if norm.kind == "sup":
            grids = [self._grid(s) for s in samples]
            m = max(g.size for g in grids)
            pts = np.array([np.pad(g, (0, m - g.size), mode="edge") for g in grids])
        else:
            pts = np.broadcast_to(norm.grid.points, (B, norm.grid.points.size))
        hstar = [ECDF(s) for s in samples]
        s_right = np.array([h(p) for h, p in zip(hstar, pts)])
        s_left = np.array([h.left(p) for h, p in zip(hstar, pts)]) if norm.kind == "sup" else None

        def shifted(center):
            # values of H*_n - R_n + H_theta_hat, or of H*_n when there is no centring
            if center is None:
                return s_right, s_left
            fh = self.fhat(pts)
            r = s_right - center(pts) + fh
            l = None if s_left is None else s_left - center.left(pts) + fh
            return r, l

        failed = np.zeros(B, dtype=bool)
        if self.spec.estimator == "moments":
            mom = np.array([sample_moments(s) for s in samples])
            theta = mom[:, :1] if fam.n_params == 1 else mom
            failed |= (fam.n_params == 2) & (mom[:, 1] <= 0)
        else:
            boxes = [default_search(s, fam) for s in samples]
            lo = np.array([b.lo for b in boxes])
            hi = np.array([b.hi for b in boxes])
            start = None if boxes[0].start is None else np.array([b.start for b in boxes])
            fr, fl = shifted(self.fit_center)
            theta, _, bad, _ = minimum_distance_batch(
                fr, fl, pts, norm.kind, norm.weights, fam, lo, hi,
                boxes[0].grid_points, boxes[0].refine_tol, start, boxes[0].sweeps,
            )
            failed |= bad
        tr, tl = shifted(self.stat_center)
        F = fam.cdf(pts, tuple(theta[:, j][:, None] for j in range(fam.n_params)))
        if norm.kind == "sup":
            stat = np.maximum(np.max(np.abs(tr - F), axis=1), np.max(np.abs(tl - F), axis=1))
        else:
            d = tr - F
            stat = np.sqrt(np.sum(norm.weights * d * d, axis=1))
        out = np.sqrt(self.n) * stat
        out[failed | ~np.isfinite(out)] = np.nan
        return out


def _gof_norm(f, g, norm: NormSpec) -> float:
    pts = norm.grid.points
    d = f(pts) - g(pts)
    if norm.kind == "sup":
        dl = f.left(pts) - g(pts)
        return float(max(np.max(np.abs(d)), np.max(np.abs(dl))))
    return float(np.sqrt(np.sum(norm.weights * d * d)))


class _Copula:
    def __init__(self, spec: TestSpec, sample: Sample2D):
        self.fam = get_family(spec.functional.family)
        self.kind = spec.functional.norm
        self.n = sample.n
        self.theta_hat = (_tau_estimate(sample, self.fam),)
        phi_n = copula_phi(sample.x, sample.y, self.theta_hat, self.fam)
        self.t_obs = float(np.sqrt(self.n) * copula_grid_norm(phi_n, self.kind))
        self.scheme = fit_scheme(spec.scheme, sample, spec.functional, self.theta_hat)
        self.center = phi_n if spec.statistic == "centred" else None

    def replicates(self, samples):
        out = np.empty(len(samples))
        for i, s in enumerate(samples):
            try:
                d = copula_phi(s.x, s.y, (_tau_estimate(s, self.fam),), self.fam)
            except BootTestError:
                out[i] = np.nan
                continue
            if self.center is not None:
                d = d - self.center
            out[i] = np.sqrt(self.n) * copula_grid_norm(d, self.kind)
        return out


def _tau_estimate(s: Sample2D, fam) -> float:
    # negative dependence lies outside the Clayton family; project onto its boundary
    return invert_tau(fam, max(kendall_tau(s), 0.0))


def _problem(spec: TestSpec, sample):
    kind = spec.functional.kind
    if (kind == "gof") != isinstance(sample, Sample1D):
        raise BootTestError(f"a {kind} test needs a {spec.functional.sample_dim}-column sample")
    if kind == "gof":
        p = _GoodnessOfFit(spec, sample)
        return p, p.scheme
    if kind == "copula":
        p = _Copula(spec, sample)
        return p, p.scheme
    scheme = fit_scheme(spec.scheme, sample, spec.functional)
    cls = _Independence if kind == "independence" else _Slope
    return cls(spec, sample, scheme), scheme


def run_test(spec: TestSpec, sample) -> TestResult:
    """Run the bootstrap test described by ``spec`` on ``sample``.

    Replicate ``b`` (1-based) draws from stream ``(spec.seed, b)``.  A
    replicate whose bootstrap estimator fails is redrawn once from a fresh
    block of the same stream; a second failure is recorded as ``+inf``.
    """
    problem, scheme = _problem(spec, sample)
    streams = [RngStream(spec.seed, b) for b in range(1, spec.B + 1)]
    reps = problem.replicates([draw_bootstrap(scheme, sample, st) for st in streams])
    bad = np.flatnonzero(np.isnan(reps))
    if bad.size:
        retry = problem.replicates([draw_bootstrap(scheme, sample, streams[i], retry=1) for i in bad])
        reps[bad] = np.where(np.isnan(retry), np.inf, retry)
    if not np.any(np.isfinite(reps)):
        raise AllReplicatesNonFinite("every bootstrap replicate failed")
    p = mc_pvalue(problem.t_obs, reps)
    return TestResult(
        t_obs=problem.t_obs,
        replicates=reps,
        p_value=p,
        quantile_1ma=order_quantile(reps, 1.0 - spec.alpha),
        reject=p <= spec.alpha,
        seed=spec.seed,
    )
