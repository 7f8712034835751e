"""Command-line front end: calibrate, test, power, nulldist.

Every command is a pure function of its flags, input files, and cache
state: identical invocations produce identical bytes.  A statistical
"reject" is ordinary output, never a nonzero exit status.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .calibration import (
    RegionCache,
    calibrate_many,
    ci_comparison,
    null_variance_curve,
    percentile_grid_rows,
    run_test,
    simulate_null,
)
from .classic_tests import TestId
from .distributions import parse_spec
from .ecf import DivisorConvention, DEFAULT_CONVENTION
from .errors import DataFormatError, EcftError
from .power import StudyConfig, benchmark_grid, run_study
from .seeding import Seed

DEFAULT_ALPHA = 0.05
DEFAULT_CAL_M = 100_000
DEFAULT_TEST_M = 10_000
DEFAULT_SEED = 42

CACHE_ENV_VAR = "ECFT_CACHE_DIR"


def _default_cache_path() -> Path:
    base = os.environ.get(CACHE_ENV_VAR)
    if base:
        return Path(base) / "regions.json"
    return Path.home() / ".cache" / "ecft" / "regions.json"


def _parse_alpha(text: str) -> float:
    alpha = float(text)
    if not 0.0 < alpha <= 0.5:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 0.5], got {alpha}")
    return alpha


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _parse_tests(text: str) -> list[TestId]:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if tok:
            try:
                out.append(TestId(tok))
            except ValueError:
                known = ", ".join(t.value for t in TestId)
                raise argparse.ArgumentTypeError(f"unknown test {tok!r}; expected one of: {known}")
    return out


def _parse_convention(text: str) -> DivisorConvention:
    try:
        return DivisorConvention(text.strip().lower())
    except ValueError:
        raise argparse.ArgumentTypeError(f"convention must be 'ml' or 'unbiased', got {text!r}")


def _add_common(parser: argparse.ArgumentParser, *, seed_default: int) -> None:
    parser.add_argument("--seed", type=int, default=seed_default,
                        help=f"root seed (default {seed_default})")
    parser.add_argument("--convention", type=_parse_convention, default=DEFAULT_CONVENTION,
                        help="studentization divisor: 'unbiased' (n-1, default) or 'ml' (n)")
    parser.add_argument("--cache", type=Path, default=None,
                        help=f"region cache file (default ${CACHE_ENV_VAR}/regions.json "
                             f"or ~/.cache/ecft/regions.json)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker count; never changes the results")
    parser.add_argument("--output", default="-",
                        help="output path, '-' for stdout (default)")


def _open_output(target: str):
    if target == "-":
        return sys.stdout, False
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline=""), True


def _cache_from(args) -> RegionCache:
    path = args.cache if args.cache is not None else _default_cache_path()
    return RegionCache(path)


def calibration_seed(root: int, n: int) -> Seed:
    """The dedicated calibration stream for sample size n under a root seed."""
    return Seed(root).child_from_string(f"calibrate:{n}")


def read_data_file(path: str | Path) -> np.ndarray:
    """Newline-delimited decimals; '#' comment lines and blanks are skipped."""
    values = []
    with open(path) as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {line_number}: cannot parse {line!r} as a decimal",
                    line_number=line_number,
                )
    return np.asarray(values, dtype=float)


# -- calibrate ----------------------------------------------------------------


def cmd_calibrate(args) -> int:
    cache = _cache_from(args)
    tests: list[TestId] = args.test
    root: int = args.seed
    regions = []
    for n in args.n:
        seed = calibration_seed(root, n)
        todo = [t for t in tests if cache.get(t, n, args.alpha, args.m, seed, args.convention) is None]
        if todo:
            fresh, nulls = calibrate_many(todo, n, args.alpha, args.m, seed, args.convention,
                                          workers=args.threads, return_nulls=True)
            for test in todo:
                cache.save_null_values(nulls[test])
                cache.put(fresh[test], save=False)
            cache.save()
        regions.extend(cache.get(t, n, args.alpha, args.m, seed, args.convention) for t in tests)

    stream, should_close = _open_output(args.output)
    try:
        if args.format == "json":
            json.dump({"toolkit_version": __version__,
                       "records": [r.to_json() for r in regions]}, stream, indent=2)
            stream.write("\n")
        else:
            writer = csv.writer(stream)
            multi = len(tests) > 1
            header = ["n", "p025", "p975", "m", "seed"]
            writer.writerow(["test"] + header if multi else header)
            for region in regions:
                row = percentile_grid_rows([region])[0]
                values = [row["n"], row["p025"], row["p975"], row["m"], row["seed"]]
                writer.writerow([region.test.value] + values if multi else values)
    finally:
        if should_close:
            stream.close()
    return 0


# -- test ---------------------------------------------------------------------


def cmd_test(args) -> int:
    data = read_data_file(args.datafile)
    if data.size < 2:
        raise DataFormatError(f"{args.datafile}: need at least 2 observations, got {data.size}")
    n = int(data.size)
    test: TestId = args.test
    cache = _cache_from(args)
    seed = calibration_seed(args.seed, n)

    region = cache.get(test, n, args.alpha, args.m, seed, args.convention)
    if region is None and args.no_simulate:
        print(
            f"error: no cached region for ({test.value}, n={n}, alpha={args.alpha}, "
            f"m={args.m}, seed={args.seed}, {args.convention.value}); run "
            f"'ecft calibrate --test {test.value} --n {n} --m {args.m} "
            f"--seed {args.seed}' first",
            file=sys.stderr,
        )
        return 1
    if region is None:
        region = cache.get_or_calibrate(test, n, args.alpha, args.m, seed, args.convention,
                                        workers=args.threads, store_nulls=True)

    null_values = cache.load_null_values(test, n, args.m, seed, args.convention)
    if null_values is None:
        if args.no_simulate:
            print(
                f"error: cached null values missing for ({test.value}, n={n}); "
                f"rerun calibration without --no-simulate",
                file=sys.stderr,
            )
            return 1
        nullset = simulate_null(test, n, args.m, seed, args.convention, workers=args.threads)
        cache.save_null_values(nullset)
        null_values = nullset.values

    result = run_test(data, region, null_values)

    stream, should_close = _open_output(args.output)
    try:
        if args.format == "json":
            json.dump(result.to_json(), stream, indent=2)
            stream.write("\n")
        else:
            bounds = {
                "two_sided": f"reject if outside ({region.lower!r}, {region.upper!r})",
                "upper_tail": f"reject if above {region.upper!r}",
                "lower_tail": f"reject if below {region.lower!r}",
            }[region.kind.value]
            decision = "REJECT normality" if result.reject else "fail to reject normality"
            stream.write(f"test:       {test.value}\n")
            stream.write(f"n:          {n}\n")
            stream.write(f"statistic:  {result.statistic!r}\n")
            stream.write(f"region:     {bounds} (alpha={region.alpha}, m={region.m}, "
                         f"seed={region.seed}, {region.convention.value})\n")
            stream.write(f"p-value:    {result.p_value!r}\n")
            stream.write(f"decision:   {decision} at level {region.alpha}\n")
    finally:
        if should_close:
            stream.close()
    return 0


# -- power ----------------------------------------------------------------------


def cmd_power(args) -> int:
    if args.preset == "paper":
        config = benchmark_grid(m=args.m, seed=Seed(args.seed), convention=args.convention,
                            alpha=args.alpha)
    else:
        if not args.dist or not args.n:
            raise DataFormatError("either --preset paper or both --dist and --n are required")
        config = StudyConfig(
            distributions=tuple(parse_spec(tok) for tok in args.dist.split(",") if tok.strip()),
            n_values=tuple(args.n),
            tests=tuple(args.tests),
            alpha=args.alpha,
            m=args.m,
            seed=Seed(args.seed),
            convention=args.convention,
        )

    cache = _cache_from(args)
    regions = {}
    for n in config.n_values:
        seed = calibration_seed(args.seed, n)
        todo = []
        for test in config.tests:
            hit = cache.get(test, n, config.alpha, args.cal_m, seed, config.convention)
            if hit is None:
                todo.append(test)
            else:
                regions[(test, n)] = hit
        if todo and not args.auto_calibrate:
            continue  # run_study reports all uncovered pairs at once
        if todo:
            fresh = calibrate_many(todo, n, config.alpha, args.cal_m, seed,
                                   config.convention, workers=args.threads)
            for test in todo:
                cache.put(fresh[test], save=False)
                regions[(test, n)] = fresh[test]
            cache.save()

    table = run_study(config, regions, workers=args.threads)

    stream, should_close = _open_output(args.output)
    try:
        if args.format == "json":
            table.write_json(stream)
        else:
            table.write_csv(stream)
    finally:
        if should_close:
            stream.close()
    return 0


# -- nulldist ---------------------------------------------------------------------


def cmd_nulldist(args) -> int:
    seed = Seed(args.seed)
    stream, should_close = _open_output(args.output)
    try:
        writer = csv.writer(stream)
        if args.curve == "values":
            if len(args.n) != 1:
                raise DataFormatError("--curve values needs exactly one --n")
            n = args.n[0]
            nullset = simulate_null(args.test, n, args.m, calibration_seed(args.seed, n),
                                    args.convention, workers=args.threads)
            writer.writerow(["value"])
            for v in nullset.values:
                writer.writerow([repr(float(v))])
        elif args.curve == "variance":
            writer.writerow(["n", "mc_variance", "asymptotic_variance"])
            for n, mc, asym in null_variance_curve(args.n, args.m, seed, args.convention,
                                                   workers=args.threads):
                writer.writerow([n, repr(mc), repr(asym)])
        else:  # ci
            writer.writerow(["n", "sim_lower", "sim_upper", "approx_lower", "approx_upper"])
            for rec in ci_comparison(args.n, args.m, args.level, seed, args.convention,
                                     workers=args.threads):
                writer.writerow([rec["n"], repr(rec["sim_lower"]), repr(rec["sim_upper"]),
                                 repr(rec["approx_lower"]), repr(rec["approx_upper"])])
    finally:
        if should_close:
            stream.close()
    return 0


# -- entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecft",
        description="Normality testing from the empirical characteristic function.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cal = sub.add_parser("calibrate", help="simulate null percentiles and cache rejection regions")
    p_cal.add_argument("--test", type=_parse_tests, default=[TestId.ECFT],
                       help="comma-separated test ids (default: ecft)")
    p_cal.add_argument("--n", type=_parse_int_list, required=True,
                       help="comma-separated sample sizes, e.g. 15,30,50,100")
    p_cal.add_argument("--alpha", type=_parse_alpha, default=DEFAULT_ALPHA)
    p_cal.add_argument("--m", type=int, default=DEFAULT_CAL_M,
                       help=f"replicates per (test, n) (default {DEFAULT_CAL_M})")
    p_cal.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_common(p_cal, seed_default=DEFAULT_SEED)

    p_test = sub.add_parser("test", help="test a data file for normality")
    p_test.add_argument("datafile", help="newline-delimited decimals; '#' comments ignored")
    p_test.add_argument("--test", type=TestId, default=TestId.ECFT, choices=list(TestId),
                        metavar="{ecft,ll,jb,sw,ad,dp}",
                        help="which statistic to apply (default: ecft)")
    p_test.add_argument("--alpha", type=_parse_alpha, default=DEFAULT_ALPHA)
    p_test.add_argument("--m", type=int, default=DEFAULT_TEST_M,
                        help=f"replicates if calibration is needed (default {DEFAULT_TEST_M})")
    p_test.add_argument("--no-simulate", action="store_true",
                        help="fail instead of simulating when the cache has no region")
    p_test.add_argument("--format", choices=["text", "json"], default="text")
    _add_common(p_test, seed_default=DEFAULT_SEED)

    p_pow = sub.add_parser("power", help="run a power study over a (distribution, n, test) grid")
    p_pow.add_argument("--preset", choices=["paper"], default=None,
                       help="'paper': the full benchmark grid")
    p_pow.add_argument("--dist", default=None,
                       help="comma-separated distribution specs, e.g. uniform01,t:4")
    p_pow.add_argument("--n", type=_parse_int_list, default=None)
    p_pow.add_argument("--tests", type=_parse_tests, default=list(TestId),
                       help="comma-separated test ids (default: all six)")
    p_pow.add_argument("--alpha", type=_parse_alpha, default=DEFAULT_ALPHA)
    p_pow.add_argument("--m", type=int, default=DEFAULT_TEST_M,
                       help=f"replicates per cell (default {DEFAULT_TEST_M})")
    p_pow.add_argument("--cal-m", type=int, default=DEFAULT_CAL_M,
                       help=f"replicates per calibration (default {DEFAULT_CAL_M})")
    p_pow.add_argument("--auto-calibrate", action="store_true",
                       help="calibrate any missing (test, n) pair on the fly")
    p_pow.add_argument("--format", choices=["csv", "json"], default="csv")
    _add_common(p_pow, seed_default=7)

    p_null = sub.add_parser("nulldist", help="emit raw null values or variance/CI curves")
    p_null.add_argument("--test", type=TestId, default=TestId.ECFT, choices=list(TestId),
                        metavar="{ecft,ll,jb,sw,ad,dp}")
    p_null.add_argument("--n", type=_parse_int_list, required=True)
    p_null.add_argument("--m", type=int, default=DEFAULT_CAL_M)
    p_null.add_argument("--curve", choices=["values", "variance", "ci"], default="values")
    p_null.add_argument("--level", type=float, default=0.95,
                        help="confidence level for --curve ci (default 0.95)")
    _add_common(p_null, seed_default=DEFAULT_SEED)

    return parser


_HANDLERS = {
    "calibrate": cmd_calibrate,
    "test": cmd_test,
    "power": cmd_power,
    "nulldist": cmd_nulldist,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except EcftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
