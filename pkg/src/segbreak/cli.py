"""Command-line front end.

Exit codes: 0 success, 2 input/configuration error, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from segbreak import artifacts
from segbreak.breakscan import fit_at, scan
from segbreak.datamodel import DEFAULT_MIN_SEGMENT, Dataset
from segbreak.errors import EstimationError, InputError
from segbreak.ingest import SchemaConfig, SyntheticConfig, group_stats, load_csv, synthesize, write_group_stats
from segbreak.quantreg import QuantileSpec, quantile_tag
from segbreak.simulate import run_simulation

logger = logging.getLogger("segbreak")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3

DEFAULT_QUANTILES = (0.15, 0.30, 0.50, 0.70, 0.85)
REPLICATION_TAU = 100000.0


def _parse_p_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad quantile list {text!r}") from None
    if not values or any(not 0 < v < 1 for v in values):
        raise argparse.ArgumentTypeError("quantile levels must lie in (0, 1)")
    return values


def _parse_tau(text: str) -> float | str:
    if text == "auto":
        return text
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--tau expects dollars or 'auto', got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("--tau must be positive")
    return value


def _source_args(parser: argparse.ArgumentParser) -> None:
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="per-person CSV file")
    src.add_argument("--synthetic", type=Path, metavar="CONFIG",
                     help="JSON synthetic-data config (see README)")
    parser.add_argument("--income-col", default="income")
    parser.add_argument("--wellbeing-col", default="wellbeing")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed (overrides the synthetic config's seed)")


def _common_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-segment", type=int, default=DEFAULT_MIN_SEGMENT,
                        help="minimum distinct income brackets per segment")
    parser.add_argument("--output-dir", type=Path, default=Path("."))
    parser.add_argument("--format", choices=("csv", "json", "both"), default="both")
    parser.add_argument("--workers", type=int, default=1)


def _estimator_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--estimator", choices=("mean", "quantile"), default="mean")
    parser.add_argument("--p", type=_parse_p_list, default=DEFAULT_QUANTILES,
                        help="comma-separated quantile levels")
    parser.add_argument("--alpha", type=float, default=0.05,
                        help="test size in the Hall-Sheather bandwidth")
    parser.add_argument("--se", choices=("classical", "hc1"), default="classical",
                        help="OLS standard error flavor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segbreak", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="objective profile over candidate thresholds")
    _source_args(p_scan)
    _estimator_args(p_scan)
    _common_args(p_scan)

    p_fit = sub.add_parser("fit", help="segmented fit at a given (or scanned) threshold")
    _source_args(p_fit)
    _estimator_args(p_fit)
    p_fit.add_argument("--tau", type=_parse_tau, required=True, help="dollars/year or 'auto'")
    _common_args(p_fit)

    p_groups = sub.add_parser("groups", help="per-bracket sample means or quantiles")
    _source_args(p_groups)
    p_groups.add_argument("--statistic", choices=("mean", "quantile"), default="mean")
    p_groups.add_argument("--p", type=float, default=0.5)
    p_groups.add_argument("--dependent", choices=("raw", "zscore"), default="raw")
    p_groups.add_argument("--output-dir", type=Path, default=Path("."))
    p_groups.add_argument("--format", choices=("csv", "json", "both"), default="both")

    p_sim = sub.add_parser("simulate", help="Monte Carlo recovery and coverage study")
    p_sim.add_argument("--config", type=Path, help="JSON synthetic-data config")
    for name, default in (("a", 0.0), ("b", 0.5), ("c", None), ("d", 0.0)):
        p_sim.add_argument(f"--{name}", type=float, default=default)
    p_sim.add_argument("--jump", type=float, default=1.0,
                       help="discontinuity at the break when --c is not given")
    p_sim.add_argument("--tau-true", type=float, default=175000.0)
    p_sim.add_argument("--noise-sd", type=float, default=1.0)
    p_sim.add_argument("--n", type=int, default=2000)
    p_sim.add_argument("--reps", type=int, default=200)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--p", type=_parse_p_list, default=(),
                       help="quantile levels for sandwich coverage (default: none)")
    p_sim.add_argument("--alpha", type=float, default=0.05)
    p_sim.add_argument("--se", choices=("classical", "hc1"), default="classical")
    _common_args(p_sim)

    p_rep = sub.add_parser("replicate", help="scan, mean fits and quantile battery in one bundle")
    _source_args(p_rep)
    p_rep.add_argument("--p", type=_parse_p_list, default=DEFAULT_QUANTILES)
    p_rep.add_argument("--alpha", type=float, default=0.05)
    p_rep.add_argument("--se", choices=("classical", "hc1"), default="classical")
    _common_args(p_rep)
    return parser


def _load(args: argparse.Namespace) -> tuple[Dataset, dict, int | None]:
    if args.input is not None:
        schema = SchemaConfig(args.income_col, args.wellbeing_col)
        try:
            ds = load_csv(args.input, schema)
        except FileNotFoundError:
            raise InputError(f"input file not found: {args.input}") from None
        return ds, {"input": str(args.input), "income_col": schema.income_col,
                    "wellbeing_col": schema.wellbeing_col, "n": ds.n}, args.seed
    try:
        cfg = SyntheticConfig.from_json(args.synthetic)
    except FileNotFoundError:
        raise InputError(f"config file not found: {args.synthetic}") from None
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    ds = synthesize(cfg)
    return ds, {"synthetic": cfg.to_dict(), "n": ds.n}, cfg.seed


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _spec(estimator: str, args: argparse.Namespace, p: float | None) -> QuantileSpec | None:
    return QuantileSpec(p, args.alpha) if estimator == "quantile" else None


def cmd_scan(args: argparse.Namespace) -> int:
    ds, source, seed = _load(args)
    out = _out_dir(args.output_dir)
    if args.estimator == "quantile":
        levels = args.p
    else:
        levels = (None,)
    written = []
    for p in levels:
        profile = scan(ds, args.estimator, args.min_segment, _spec(args.estimator, args, p), args.workers)
        meta = artifacts.metadata(
            command="scan", estimator=profile.estimator_tag,
            se_flavor=None, min_segment=args.min_segment, seed=seed, source=source,
            alpha=args.alpha if p is not None else None,
            quantiles=() if p is None else (p,),
        )
        stem = "scan" if p is None else f"scan_p{p:g}"
        written += artifacts.write_profile(profile, out, args.format, meta, stem)
        lo, hi = profile.equivalence_interval
        print(f"{profile.estimator_tag}: argmin tau={profile.argmin_candidate:g}, "
              f"interval [{lo:g}, {hi:g})" + (" (tied)" if profile.has_ties else ""))
    for path in written:
        logger.info("wrote %s", path)
    return EXIT_OK


def _resolve_tau(ds: Dataset, tau: float | str, args: argparse.Namespace) -> tuple[float, dict | None]:
    if tau != "auto":
        return float(tau), None
    profile = scan(ds, "mean", args.min_segment, None, args.workers)
    return profile.argmin_candidate, artifacts.profile_payload(profile)


def _fit_battery(ds, tau, estimator, levels, args) -> list[tuple[str, dict]]:
    fits = []
    for p in levels:
        spec = _spec(estimator, args, p)
        fit = fit_at(ds, tau, estimator, spec, se=args.se, min_segment=args.min_segment)
        fits.append((f"tau={tau:g}", artifacts.fit_payload(ds, fit, p)))
    return fits


def cmd_fit(args: argparse.Namespace) -> int:
    ds, source, seed = _load(args)
    out = _out_dir(args.output_dir)
    tau, scan_payload = _resolve_tau(ds, args.tau, args)
    levels = args.p if args.estimator == "quantile" else (None,)
    fits = _fit_battery(ds, tau, args.estimator, levels, args)
    meta = artifacts.metadata(
        command="fit", estimator=args.estimator,
        se_flavor=args.se if args.estimator == "mean" else "nid-hall-sheather",
        min_segment=args.min_segment, seed=seed, source=source,
        alpha=args.alpha if args.estimator == "quantile" else None,
        quantiles=levels if args.estimator == "quantile" else (),
    )
    meta["tau_requested"] = args.tau
    extra = {"scan": scan_payload} if scan_payload else None
    artifacts.write_fits(fits, out, args.format, meta, "fit", extra)
    for _, pl in fits:
        coef, se = pl["coefficients"], pl["std_errors"]
        cells = "  ".join(f"{k}={coef[k]:.4f} ({se[k]:.4f})" for k in coef)
        print(f"{pl['estimator']} tau={pl['tau']:g}: {cells}")
    return EXIT_OK


def cmd_groups(args: argparse.Namespace) -> int:
    ds, _, _ = _load(args)
    out = _out_dir(args.output_dir)
    rows = group_stats(ds, args.statistic, args.p if args.statistic == "quantile" else None, args.dependent)
    if args.format in ("csv", "both"):
        write_group_stats(rows, out / "groups.csv", "csv")
    if args.format in ("json", "both"):
        write_group_stats(rows, out / "groups.json", "json")
    return EXIT_OK


def _sim_config(args: argparse.Namespace) -> SyntheticConfig:
    if args.config is not None:
        try:
            return SyntheticConfig.from_json(args.config)
        except FileNotFoundError:
            raise InputError(f"config file not found: {args.config}") from None
    c = args.c
    if c is None:
        c = args.a + (args.b - args.d) * math.log(args.tau_true) + args.jump
    return SyntheticConfig.from_dict({
        "a": args.a, "b": args.b, "c": c, "d": args.d, "tau": args.tau_true,
        "noise_sd": args.noise_sd, "n": args.n, "min_segment": args.min_segment,
    })


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _sim_config(args)
    if args.reps < 1:
        raise InputError("--reps must be at least 1")
    out = _out_dir(args.output_dir)
    report = run_simulation(cfg, args.reps, args.seed, args.p, args.alpha, args.se,
                            args.min_segment, args.workers)
    meta = artifacts.metadata(
        command="simulate", estimator="mean", se_flavor=args.se, min_segment=args.min_segment,
        seed=args.seed, source={"synthetic": {k: v for k, v in cfg.to_dict().items() if k != "seed"}},
        alpha=args.alpha, quantiles=args.p,
    )
    if args.format in ("csv", "both"):
        artifacts.write_rows(out / "simulate.csv", ["estimator", "coef", "bias", "rmse", "coverage"],
                             artifacts.simulation_rows(report))
    if args.format in ("json", "both"):
        artifacts.write_json(out / "simulate.json", {"metadata": meta, "report": report})
    print(f"recovery rate {report['recovery_rate']:.3f} over {report['completed']} replications; "
          f"pattern: {report['pattern']}")
    return EXIT_OK


def cmd_replicate(args: argparse.Namespace) -> int:
    ds, source, seed = _load(args)
    out = _out_dir(args.output_dir)
    profile = scan(ds, "mean", args.min_segment, None, args.workers)
    tau_auto = profile.argmin_candidate
    fits = []
    for tau in (REPLICATION_TAU, tau_auto):
        fits += _fit_battery(ds, tau, "mean", (None,), args)
    for tau in (REPLICATION_TAU, tau_auto):
        fits += _fit_battery(ds, tau, "quantile", args.p, args)
    meta = artifacts.metadata(
        command="replicate", estimator="mean+quantile", se_flavor=args.se,
        min_segment=args.min_segment, seed=seed, source=source, alpha=args.alpha, quantiles=args.p,
    )
    artifacts.write_profile(profile, out, args.format, meta, "replicate_scan")
    artifacts.write_fits(fits, out, args.format, meta, "replicate_fits",
                         {"scan": artifacts.profile_payload(profile),
                          "quantile_tags": [quantile_tag(p) for p in args.p]})
    lo, hi = profile.equivalence_interval
    print(f"scan: interval [{lo:g}, {hi:g}); fits written to {out}")
    return EXIT_OK


COMMANDS = {
    "scan": cmd_scan,
    "fit": cmd_fit,
    "groups": cmd_groups,
    "simulate": cmd_simulate,
    "replicate": cmd_replicate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"segbreak: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(f"segbreak: estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as exc:
        print(f"segbreak: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
