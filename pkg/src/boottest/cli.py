"""Command-line interface.

Subcommands: ``test`` (one bootstrap test on a CSV file), ``simulate`` (a
study from a YAML/JSON config), ``compare`` (two combinations on one
data-generating process, with a two-proportion test).  Exit codes: 0 done,
2 usage or configuration error, 3 data error, 4 incompatible
scheme/statistic pairing.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .empirical import Sample1D, Sample2D
from .engine import TestSpec, run_test
from .exceptions import BootTestError, IncompatiblePair
from .functionals import FunctionalSpec
from .simulation import (
    Combo,
    ConfigError,
    DGPSpec,
    StudyConfig,
    StudyRow,
    clopper_pearson_ci,
    default_workers,
    run_study,
    summarize,
    two_proportion_test,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INCOMPATIBLE = 0, 2, 3, 4


class DataError(BootTestError):
    """The input data file could not be used."""


def digest(obj) -> str:
    """SHA-256 of the canonical JSON encoding of ``obj``."""
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def read_data(path: str | Path, columns: int):
    """Read a headered comma-separated file with ``columns`` numeric columns."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataError("data file needs a header and at least one row")
    header, body = rows[0], rows[1:]
    if len(header) != columns:
        raise DataError(f"expected {columns} column(s), found {len(header)}")
    try:
        arr = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise DataError(f"non-numeric value: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != columns:
        raise DataError("data file is not rectangular")
    try:
        return Sample1D(arr[:, 0]) if columns == 1 else Sample2D(arr[:, 0], arr[:, 1])
    except ValueError as exc:
        raise DataError(str(exc)) from None


def write_document(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_document(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def rows_to_csv(rows: list[StudyRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(StudyRow.FIELDS)
    for r in rows:
        w.writerow([r.dgp, r.n, r.scheme, r.statistic, r.estimator, r.rejections, r.nsims,
                    repr(r.rate), repr(r.ci_lo), repr(r.ci_hi)])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[StudyRow]:
    out = []
    for d in csv.DictReader(io.StringIO(text)):
        out.append(StudyRow(d["dgp"], int(d["n"]), d["scheme"], d["statistic"], d["estimator"],
                            int(d["rejections"]), int(d["nsims"]), float(d["rate"]),
                            float(d["ci_lo"]), float(d["ci_hi"])))
    return out


def plot_table(rows: list[StudyRow]) -> str:
    """Wide table: one line per (dgp, n), one rate column per combination."""
    combos = sorted({f"{r.scheme}/{r.statistic}/{r.estimator}" for r in rows})
    cells = {}
    for r in rows:
        cells.setdefault((r.dgp, r.n), {})[f"{r.scheme}/{r.statistic}/{r.estimator}"] = r.rate
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dgp", "n", *combos])
    for (dgp, n) in sorted(cells):
        w.writerow([dgp, n, *(repr(cells[(dgp, n)][c]) if c in cells[(dgp, n)] else "" for c in combos)])
    return buf.getvalue()


def load_config(path: str | Path) -> StudyConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return StudyConfig.from_dict(raw)


def _functional(args) -> FunctionalSpec:
    kind = args.test
    if kind == "slope" and args.studentised:
        kind = "slope_studentised"
    if kind in ("gof", "copula"):
        return FunctionalSpec(kind, args.family, args.norm)
    return FunctionalSpec(kind)


def cmd_test(args) -> int:
    functional = _functional(args)
    spec = TestSpec(functional, args.scheme, args.statistic, args.estimator,
                    args.B, args.alpha, args.seed, args.allow_invalid)
    sample = read_data(args.data, functional.sample_dim)
    result = run_test(spec, sample)
    doc = {
        "tool": "boottest",
        "version": __version__,
        "kind": "test",
        "spec": spec.to_dict(),
        "config_digest": digest(spec.to_dict()),
        "seed": spec.seed,
        "n": sample.n,
        "result": result.to_dict(),
    }
    if args.output:
        write_document(args.output, doc)
    decision = "reject" if result.reject else "do not reject"
    print(f"T_n = {result.t_obs:.6g}  p = {result.p_value:.6g}  ({decision} at alpha = {spec.alpha})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.allow_invalid and not config.allow_invalid:
        d = config.to_dict()
        d["allow_invalid"] = True
        config = StudyConfig.from_dict(d)
    rows = run_study(config, args.workers)
    text = rows_to_csv(rows)
    Path(args.output).write_text(text, encoding="utf-8", newline="")
    cfg = config.to_dict()
    meta = {
        "tool": "boottest",
        "version": __version__,
        "kind": "study",
        "config": cfg,
        "config_digest": digest(cfg),
        "seed": config.seed,
        "rows": [dict(zip(StudyRow.FIELDS, (getattr(r, f) for f in StudyRow.FIELDS))) for r in rows],
    }
    write_document(str(args.output) + ".json", meta)
    if args.plot_table:
        Path(args.plot_table).write_text(plot_table(rows), encoding="utf-8", newline="")
    print(f"wrote {len(rows)} rows to {args.output}")
    return EXIT_OK


def compare(functional: FunctionalSpec, combo_a: Combo, combo_b: Combo, dgp: DGPSpec, n: int,
            nsims: int, B: int = 100, alpha: float = 0.05, seed: int = 0,
            allow_invalid: bool = False, workers: int | None = None) -> dict:
    """Run two cells and compare their rejection rates."""
    out = {}
    for tag, combo in (("a", combo_a), ("b", combo_b)):
        cfg = StudyConfig(functional, (dgp,), (n,), (combo,), nsims, B, alpha, seed, 0.95, allow_invalid)
        out[tag] = run_study(cfg, workers)[0]
    ra, rb = out["a"], out["b"]
    out["p_value"] = two_proportion_test(ra.rejections, ra.nsims, rb.rejections, rb.nsims)
    return out


def cmd_compare(args) -> int:
    if args.nsims < 1:
        raise ConfigError("nsims must be at least 1")
    functional = _functional(args)
    res = compare(functional, Combo.parse(args.combo_a), Combo.parse(args.combo_b),
                  DGPSpec.parse(args.dgp), args.n, args.nsims, args.B, args.alpha, args.seed,
                  args.allow_invalid, args.workers)
    for tag in ("a", "b"):
        r = res[tag]
        print(f"{tag}: {r.scheme}/{r.statistic}/{r.estimator}  rate = {r.rate:.4f}  "
              f"95% CI [{r.ci_lo:.4f}, {r.ci_hi:.4f}]  ({r.rejections}/{r.nsims})")
    print(f"two-proportion p-value = {res['p_value']:.4g}")
    if args.output:
        doc = {
            "tool": "boottest",
            "version": __version__,
            "kind": "compare",
            "seed": args.seed,
            "config_digest": digest({k: v for k, v in vars(args).items() if k not in ("func", "output", "workers")}),
            "rows": [dict(zip(StudyRow.FIELDS, (getattr(res[t], f) for f in StudyRow.FIELDS))) for t in "ab"],
            "p_value": res["p_value"],
        }
        write_document(args.output, doc)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_functional_args(p):
    p.add_argument("--test", required=True, choices=["independence", "slope", "gof", "copula"])
    p.add_argument("--studentised", action="store_true", help="studentised slope statistic")
    p.add_argument("--family", default=None, help="parametric family for gof/copula tests")
    p.add_argument("--norm", default=None, choices=["sup", "l2"])
    p.add_argument("--B", type=int, default=100, help="bootstrap replicates")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-invalid", action="store_true",
                   help="permit scheme/statistic pairs that are known not to work")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boottest", description="Bootstrap hypothesis tests and simulation studies.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", help="run one bootstrap test on a data file")
    p.add_argument("--data", required=True, help="headered CSV with 1 (gof) or 2 columns")
    _add_functional_args(p)
    p.add_argument("--scheme", required=True)
    p.add_argument("--statistic", default="corrected", choices=["equivalent", "centred", "corrected"])
    p.add_argument("--estimator", default=None)
    p.add_argument("--output", default=None, help="write the result document (JSON) here")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="run a simulation study from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True, help="CSV of study rows; metadata goes to OUTPUT.json")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $BOOTTEST_WORKERS or 1)")
    p.add_argument("--plot-table", default=None, help="also write a wide n-by-combination rate table")
    p.add_argument("--allow-invalid", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="compare the rejection rates of two combinations")
    _add_functional_args(p)
    p.add_argument("--combo-a", required=True, help="scheme:statistic[:estimator]")
    p.add_argument("--combo-b", required=True, help="scheme:statistic[:estimator]")
    p.add_argument("--dgp", required=True, help="e.g. regression:b=1 or lognormal:sigma=0.8")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nsims", type=int, default=200)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IncompatiblePair as exc:
        print(f"boottest: incompatible combination: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except BootTestError as exc:
        print(f"boottest: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError) as exc:
        print(f"boottest: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
