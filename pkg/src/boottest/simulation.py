"""Monte Carlo level/power studies.

A study is a sweep over data-generating processes, sample sizes and
(scheme, statistic, estimator) combinations.  Seeds are derived
hierarchically (study seed -> cell -> simulation -> replicate) from the
content of each cell, so any single cell can be rerun on its own and
reproduce its row, whatever the worker count.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .empirical import Sample1D, Sample2D
from .engine import TestSpec, run_test
from .functionals import FunctionalSpec
from .resampling import STATISTICS, RngStream, clayton_sample, open_uniform

__all__ = [
    "DGPSpec",
    "Combo",
    "StudyConfig",
    "StudyRow",
    "ConfigError",
    "generate",
    "sim_seed",
    "run_cell",
    "run_study",
    "clopper_pearson_ci",
    "two_proportion_test",
    "default_workers",
    "WORKERS_ENV",
]

WORKERS_ENV = "BOOTTEST_WORKERS"
DATA_STREAM = 0  # replicates use stream ids 1..B

_DGP_PARAMS = {
    "regression": {"b": None},
    "normal": {"mean": 0.0, "sd": 1.0},
    "t": {"df": None},
    "lognormal": {"mu": 0.0, "sigma": None},
    "mixture": {"mu": None},
    "cauchy": {"loc": 0.0, "scale": 1.0},
    "clayton": {"theta": None},
}
_BIVARIATE = {"regression", "clayton"}


class ConfigError(ValueError):
    """A study configuration failed validation."""


@dataclass(frozen=True)
class DGPSpec:
    """A data-generating process.

    ``regression``: ``X ~ N(0,1)``, ``eps ~ N(0,1)`` independent,
    ``Y = b X + eps``.  ``mixture``: equal-weight mixture of ``N(-mu, 1)``
    and ``N(mu, 1)``.  ``clayton``: uniform pairs from the Clayton copula.
    The remaining kinds are the usual univariate laws.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _DGP_PARAMS:
            raise ConfigError(f"unknown distribution {self.kind!r}; choose from {sorted(_DGP_PARAMS)}")
        allowed = _DGP_PARAMS[self.kind]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for {self.kind}")
        full = {}
        for k, default in allowed.items():
            v = self.params.get(k, default)
            if v is None:
                raise ConfigError(f"{self.kind} requires parameter {k!r}")
            full[k] = float(v)
        positive = {"sd", "df", "sigma", "scale"} & set(full)
        if any(full[k] <= 0 for k in positive) or (self.kind == "clayton" and full["theta"] < 0):
            raise ConfigError(f"parameters of {self.kind} outside their domain: {full}")
        object.__setattr__(self, "params", full)

    @property
    def bivariate(self) -> bool:
        return self.kind in _BIVARIATE

    @property
    def id(self) -> str:
        return self.kind + "(" + ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items()) + ")"

    @classmethod
    def parse(cls, text: str) -> "DGPSpec":
        """Parse ``"kind:key=value,key=value"``."""
        kind, _, rest = text.partition(":")
        params = {}
        for part in filter(None, rest.split(",")):
            k, eq, v = part.partition("=")
            if not eq:
                raise ConfigError(f"malformed parameter {part!r} in {text!r}")
            params[k.strip()] = float(v)
        return cls(kind.strip(), params)


def _fmt(v: float) -> str:
    return repr(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class Combo:
    scheme: str
    statistic: str
    estimator: str | None = None

    @property
    def id(self) -> str:
        return f"{self.scheme}/{self.statistic}/{self.estimator or 'none'}"

    @classmethod
    def parse(cls, text: str) -> "Combo":
        """Parse ``"scheme:statistic[:estimator]"``."""
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"combo must look like scheme:statistic[:estimator], got {text!r}")
        est = parts[2] if len(parts) == 3 and parts[2] != "none" else None
        return cls(parts[0], parts[1], est)


@dataclass(frozen=True)
class StudyConfig:
    functional: FunctionalSpec
    dgps: tuple[DGPSpec, ...]
    sample_sizes: tuple[int, ...]
    combos: tuple[Combo, ...]
    nsims: int = 200
    B: int = 100
    alpha: float = 0.05
    seed: int = 0
    ci_confidence: float = 0.95
    allow_invalid: bool = False

    def __post_init__(self):
        if not self.dgps:
            raise ConfigError("dgps must not be empty")
        if not self.sample_sizes or any(int(n) < 1 for n in self.sample_sizes):
            raise ConfigError("sample_sizes must be a nonempty list of positive integers")
        if not self.combos:
            raise ConfigError("combos must not be empty")
        if self.nsims < 1 or self.B < 1:
            raise ConfigError("nsims and B must be at least 1")
        if not 0 < self.ci_confidence < 1:
            raise ConfigError("ci_confidence must lie in (0, 1)")
        for d in self.dgps:
            if d.bivariate != (self.functional.sample_dim == 2):
                raise ConfigError(f"distribution {d.id} does not produce data for a {self.functional.kind} test")
        for c in self.combos:
            if c.statistic not in STATISTICS:
                raise ConfigError(f"unknown statistic {c.statistic!r}")
        # constructing the specs surfaces IncompatiblePair for invalid combos
        for c in self.combos:
            self.test_spec(c, 0)

    def test_spec(self, combo: Combo, seed: int) -> TestSpec:
        return TestSpec(
            self.functional, combo.scheme, combo.statistic, combo.estimator,
            self.B, self.alpha, seed, self.allow_invalid,
        )

    _KEYS = frozenset({
        "version", "functional", "dgps", "sample_sizes", "combos", "nsims", "B",
        "alpha", "seed", "ci_confidence", "allow_invalid",
    })

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        """Build from the configuration document (schema version 1)."""
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        unknown = set(d) - cls._KEYS
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {sorted(unknown)}")
        if d.get("version", 1) != 1:
            raise ConfigError("unsupported configuration version")
        for key in ("functional", "dgps", "sample_sizes", "combos"):
            if key not in d:
                raise ConfigError(f"missing required key {key!r}")
        try:
            fd = d["functional"]
            functional = FunctionalSpec(**fd) if isinstance(fd, dict) else FunctionalSpec(fd)
            dgps = tuple(
                DGPSpec.parse(g) if isinstance(g, str) else DGPSpec(g["kind"], {k: v for k, v in g.items() if k != "kind"})
                for g in d["dgps"]
            )
            combos = tuple(Combo.parse(c) if isinstance(c, str) else Combo(**c) for c in d["combos"])
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed configuration: {exc}") from None
        return cls(
            functional=functional,
            dgps=dgps,
            sample_sizes=tuple(int(n) for n in d["sample_sizes"]),
            combos=combos,
            nsims=int(d.get("nsims", 200)),
            B=int(d.get("B", 100)),
            alpha=float(d.get("alpha", 0.05)),
            seed=int(d.get("seed", 0)),
            ci_confidence=float(d.get("ci_confidence", 0.95)),
            allow_invalid=bool(d.get("allow_invalid", False)),
        )

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "functional": {k: v for k, v in asdict(self.functional).items() if v is not None},
            "dgps": [dict(kind=g.kind, **g.params) for g in self.dgps],
            "sample_sizes": list(self.sample_sizes),
            "combos": [asdict(c) for c in self.combos],
            "nsims": self.nsims,
            "B": self.B,
            "alpha": self.alpha,
            "seed": self.seed,
            "ci_confidence": self.ci_confidence,
            "allow_invalid": self.allow_invalid,
        }


@dataclass(frozen=True)
class StudyRow:
    dgp: str
    n: int
    scheme: str
    statistic: str
    estimator: str
    rejections: int
    nsims: int
    rate: float
    ci_lo: float
    ci_hi: float

    FIELDS = ("dgp", "n", "scheme", "statistic", "estimator", "rejections", "nsims", "rate", "ci_lo", "ci_hi")


def generate(dgp: DGPSpec, n: int, rng: RngStream):
    """Draw a sample of size ``n``; each random component uses its own block of the stream."""
    if n < 1:
        raise ValueError("n must be positive")
    p = dgp.params
    g0, g1 = rng.generator(0), rng.generator(1)
    if dgp.kind == "regression":
        x = ndtri(open_uniform(g0, n))
        eps = ndtri(open_uniform(g1, n))
        return Sample2D(x, p["b"] * x + eps)
    if dgp.kind == "clayton":
        u, v = clayton_sample(g0, n, p["theta"])
        return Sample2D(u, v)
    if dgp.kind == "normal":
        return Sample1D(p["mean"] + p["sd"] * ndtri(open_uniform(g0, n)))
    if dgp.kind == "t":
        z = ndtri(open_uniform(g0, n))
        chi2 = g1.chisquare(p["df"], n)
        return Sample1D(z / np.sqrt(chi2 / p["df"]))
    if dgp.kind == "lognormal":
        return Sample1D(np.exp(p["mu"] + p["sigma"] * ndtri(open_uniform(g0, n))))
    if dgp.kind == "mixture":
        sign = np.where(open_uniform(g0, n) < 0.5, -1.0, 1.0)
        return Sample1D(sign * p["mu"] + ndtri(open_uniform(g1, n)))
    if dgp.kind == "cauchy":
        return Sample1D(p["loc"] + p["scale"] * np.tan(np.pi * (open_uniform(g0, n) - 0.5)))
    raise ValueError(f"unknown distribution {dgp.kind!r}")


def cell_key(config: StudyConfig, dgp: DGPSpec, n: int, combo: Combo) -> str:
    return f"{config.functional.label}|{dgp.id}|{n}|{combo.id}"


def sim_seed(study_seed: int, key: str, sim: int) -> int:
    """64-bit master seed of one simulation, from the study seed, the cell and the index."""
    ss = np.random.SeedSequence([study_seed % 2**63, zlib.crc32(key.encode()), sim])
    return int(ss.generate_state(1, np.uint64)[0])


def _run_sims(config: StudyConfig, dgp: DGPSpec, n: int, combo: Combo, sims: range) -> list[float]:
    key = cell_key(config, dgp, n, combo)
    pvals = []
    for i in sims:
        seed = sim_seed(config.seed, key, i)
        sample = generate(dgp, n, RngStream(seed, DATA_STREAM))
        pvals.append(run_test(config.test_spec(combo, seed), sample).p_value)
    return pvals


def run_cell(config: StudyConfig, dgp: DGPSpec, n: int, combo: Combo) -> np.ndarray:
    """p-values of all simulations of one cell, in simulation order."""
    return np.asarray(_run_sims(config, dgp, n, combo, range(config.nsims)))


def _task(args):
    config, ci, dgp, n, combo, start, stop = args
    return ci, start, _run_sims(config, dgp, n, combo, range(start, stop))


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return 1


def run_study(config: StudyConfig, workers: int | None = None, chunk: int = 25) -> list[StudyRow]:
    """Run every cell; rows sorted by (dgp, n, combo)."""
    workers = default_workers() if workers is None else max(1, int(workers))
    cells = sorted(
        ((d, n, c) for d in config.dgps for n in config.sample_sizes for c in config.combos),
        key=lambda t: (t[0].id, t[1], t[2].id),
    )
    tasks = [
        (config, ci, d, n, c, s, min(s + chunk, config.nsims))
        for ci, (d, n, c) in enumerate(cells)
        for s in range(0, config.nsims, chunk)
    ]
    pvals: dict[int, dict[int, list[float]]] = {ci: {} for ci in range(len(cells))}
    if workers == 1:
        results = map(_task, tasks)
        for ci, start, pv in results:
            pvals[ci][start] = pv
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for ci, start, pv in ex.map(_task, tasks):
                pvals[ci][start] = pv
    rows = []
    for ci, (d, n, c) in enumerate(cells):
        pv = [p for s in sorted(pvals[ci]) for p in pvals[ci][s]]
        rows.append(summarize(config, d, n, c, pv))
    return rows


def summarize(config: StudyConfig, dgp: DGPSpec, n: int, combo: Combo, pvals) -> StudyRow:
    k = int(np.count_nonzero(np.asarray(pvals) <= config.alpha))
    N = len(pvals)
    lo, hi = clopper_pearson_ci(k, N, config.ci_confidence)
    spec = config.test_spec(combo, 0)
    return StudyRow(dgp.id, n, combo.scheme, combo.statistic, spec.estimator or "none", k, N, k / N, lo, hi)


def clopper_pearson_ci(k: int, N: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval from beta quantiles."""
    if not 0 <= k <= N or N < 1:
        raise ValueError("need 0 <= k <= N and N >= 1")
    a = 1.0 - confidence
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, N - k + 1))
    hi = 1.0 if k == N else float(stats.beta.ppf(1 - a / 2, k + 1, N - k))
    return lo, hi


def two_proportion_test(k1: int, N1: int, k2: int, N2: int) -> float:
    """Two-sided chi-square test of equal proportions with Yates' continuity correction."""
    if N1 <= 0 or N2 <= 0:
        raise ValueError("group sizes must be positive")
    if not (0 <= k1 <= N1 and 0 <= k2 <= N2):
        raise ValueError("counts must lie between 0 and the group size")
    total = k1 + k2
    if total == 0 or total == N1 + N2:
        return 1.0
    table = np.array([[k1, N1 - k1], [k2, N2 - k2]])
    return float(stats.chi2_contingency(table, correction=True).pvalue)
