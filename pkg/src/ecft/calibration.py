"""Monte Carlo calibration: null simulation, percentiles, rejection regions.

The null distribution of every statistic is simulated from studentized
standard-normal samples, so all six tests are calibrated to exactly the
nominal level by construction.  Replicate ``i`` of a simulation with seed
``s`` always draws from the derived stream ``s.child(i)``; chunks of
replicates can therefore be produced serially or by any number of
workers and the resulting values are identical.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from ._version import __version__ as _toolkit_version
from .classic_tests import Direction, TestId, statistic, statistic_rows
from .distributions import DistributionSpec, sample_rows
from .ecf import DEFAULT_CONVENTION, DivisorConvention, as_sample, asymptotic_variance
from .errors import ArgumentError, ConfigurationError, UnsupportedSampleSizeError
from .seeding import Seed

_STANDARD_NORMAL = DistributionSpec.normal(0.0, 1.0)

#: Replicates used for the independent size check of a calibrated region.
SIZE_CHECK_M = 10_000

# chunk sizes keep the per-chunk sample matrix around 4e6 doubles
def _chunk_size(n: int) -> int:
    return max(1, int(4_000_000 / max(1, n)))


class RegionKind(Enum):
    TWO_SIDED = "two_sided"
    UPPER_TAIL = "upper_tail"
    LOWER_TAIL = "lower_tail"


_KIND_FOR_DIRECTION = {
    Direction.TWO_SIDED: RegionKind.TWO_SIDED,
    Direction.UPPER: RegionKind.UPPER_TAIL,
    Direction.LOWER: RegionKind.LOWER_TAIL,
}


@dataclass(frozen=True)
class RejectionRegion:
    """A calibrated decision rule for one (test, n, alpha) triple."""

    test: TestId
    n: int
    alpha: float
    kind: RegionKind
    lower: float | None
    upper: float | None
    m: int
    seed: Seed
    convention: DivisorConvention
    size_check_rate: float | None = None

    def __post_init__(self):
        if self.kind is RegionKind.TWO_SIDED:
            if self.lower is None or self.upper is None or not self.lower < self.upper:
                raise ConfigurationError(
                    f"two-sided region needs lower < upper, got ({self.lower}, {self.upper})"
                )
        elif self.kind is RegionKind.UPPER_TAIL and self.upper is None:
            raise ConfigurationError("upper-tail region needs a threshold")
        elif self.kind is RegionKind.LOWER_TAIL and self.lower is None:
            raise ConfigurationError("lower-tail region needs a threshold")

    def rejects(self, value: float) -> bool:
        return bool(np.any(self.rejects_many(np.asarray([value]))))

    def rejects_many(self, values: np.ndarray) -> np.ndarray:
        if self.kind is RegionKind.TWO_SIDED:
            return (values < self.lower) | (values > self.upper)
        if self.kind is RegionKind.UPPER_TAIL:
            return values > self.upper
        return values < self.lower

    def to_json(self) -> dict:
        return {
            "test": self.test.value,
            "n": self.n,
            "alpha": self.alpha,
            "kind": self.kind.value,
            "bounds": {"lower": self.lower, "upper": self.upper},
            "m": self.m,
            "seed": self.seed.to_json(),
            "convention": self.convention.value,
            "toolkit_version": _toolkit_version,
            "size_check_rate": self.size_check_rate,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RejectionRegion":
        return cls(
            test=TestId(obj["test"]),
            n=int(obj["n"]),
            alpha=float(obj["alpha"]),
            kind=RegionKind(obj["kind"]),
            lower=obj["bounds"]["lower"],
            upper=obj["bounds"]["upper"],
            m=int(obj["m"]),
            seed=Seed.from_json(obj["seed"]),
            convention=DivisorConvention(obj["convention"]),
            size_check_rate=obj.get("size_check_rate"),
        )


@dataclass(frozen=True)
class NullSampleSet:
    """Realized null-statistic values plus their generation metadata."""

    test: TestId
    n: int
    m: int
    values: np.ndarray
    seed: Seed
    convention: DivisorConvention


def _simulate_chunk(payload):
    """One contiguous block of null replicates (top level for pickling)."""
    test_names, n, start, stop, seed, convention_name = payload
    convention = DivisorConvention(convention_name)
    x = sample_rows(_STANDARD_NORMAL, n, seed, start, stop)
    return start, {name: statistic_rows(TestId(name), x, convention) for name in test_names}


def _run_null_chunks(tests: Sequence[TestId], n: int, m: int, seed: Seed,
                     convention: DivisorConvention, workers: int) -> dict[TestId, np.ndarray]:
    step = _chunk_size(n)
    payloads = [
        (tuple(t.value for t in tests), n, start, min(start + step, m), seed, convention.value)
        for start in range(0, m, step)
    ]
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            pieces = sorted(pool.map(_simulate_chunk, payloads), key=lambda item: item[0])
    else:
        pieces = [_simulate_chunk(p) for p in payloads]
    return {
        test: np.concatenate([chunk[test.value] for _, chunk in pieces])
        for test in tests
    }


def simulate_null(test: TestId, n: int, m: int, seed: Seed,
                  convention: DivisorConvention = DEFAULT_CONVENTION,
                  workers: int = 1) -> NullSampleSet:
    """Simulate ``m`` null values of ``test`` at sample size ``n``.

    The underlying normal draws depend only on (n, seed), so different
    statistics simulated at the same (n, m, seed) score the same samples.
    """
    sets = simulate_null_many([test], n, m, seed, convention, workers)
    return sets[test]


def simulate_null_many(tests: Sequence[TestId], n: int, m: int, seed: Seed,
                       convention: DivisorConvention = DEFAULT_CONVENTION,
                       workers: int = 1) -> dict[TestId, NullSampleSet]:
    """Simulate several statistics on one shared set of null samples."""
    if m < 1000:
        raise ArgumentError(f"null simulation needs m >= 1000, got {m}")
    for test in tests:
        if not test.supports(n):
            raise UnsupportedSampleSizeError(f"{test.value} does not support n = {n}")
    values = _run_null_chunks(tests, n, m, seed, convention, workers)
    return {
        test: NullSampleSet(test=test, n=n, m=m, values=vals, seed=seed, convention=convention)
        for test, vals in values.items()
    }


def percentiles(values, probs: Iterable[float]) -> list[float]:
    """Empirical quantiles, linearly interpolated at rank p(m+1).

    The estimate at probability p sits at position h = p(m+1) in the
    sorted values (1-based), interpolating linearly between neighbors
    and clamping to the extremes.
    """
    if isinstance(values, NullSampleSet):
        values = values.values
    x = np.sort(np.asarray(values, dtype=float))
    m = x.size
    if m == 0:
        raise ArgumentError("cannot take percentiles of an empty set")
    out = []
    for p in probs:
        if not 0.0 < p < 1.0:
            raise ArgumentError(f"probabilities must lie in (0, 1), got {p}")
        h = p * (m + 1)
        if h <= 1.0:
            out.append(float(x[0]))
        elif h >= m:
            out.append(float(x[-1]))
        else:
            k = int(math.floor(h))
            frac = h - k
            out.append(float(x[k - 1] + frac * (x[k] - x[k - 1])))
    return out


def _region_from_values(test: TestId, n: int, alpha: float, values: np.ndarray,
                        m: int, seed: Seed, convention: DivisorConvention) -> RejectionRegion:
    kind = _KIND_FOR_DIRECTION[test.direction]
    if kind is RegionKind.TWO_SIDED:
        lower, upper = percentiles(values, [alpha / 2.0, 1.0 - alpha / 2.0])
    elif kind is RegionKind.UPPER_TAIL:
        lower, (upper,) = None, percentiles(values, [1.0 - alpha])
    else:
        (lower,), upper = percentiles(values, [alpha]), None
    return RejectionRegion(test=test, n=n, alpha=alpha, kind=kind, lower=lower,
                           upper=upper, m=m, seed=seed, convention=convention)


def calibrate(test: TestId, n: int, alpha: float, m: int, seed: Seed,
              convention: DivisorConvention = DEFAULT_CONVENTION,
              workers: int = 1, size_check: bool = True) -> RejectionRegion:
    """Calibrate the rejection region for one (test, n, alpha) triple.

    When ``size_check`` is on, the region is re-applied to an independent
    fresh null run of ``SIZE_CHECK_M`` replicates and the observed
    rejection rate is recorded on the region.
    """
    regions = calibrate_many([test], n, alpha, m, seed, convention, workers, size_check)
    return regions[test]


def calibrate_many(tests: Sequence[TestId], n: int, alpha: float, m: int, seed: Seed,
                   convention: DivisorConvention = DEFAULT_CONVENTION,
                   workers: int = 1, size_check: bool = True,
                   return_nulls: bool = False):
    """Calibrate several tests at one (n, alpha) on shared null samples.

    Returns ``{test: region}``, or ``({test: region}, {test: null set})``
    when ``return_nulls`` is set.
    """
    if not 0.0 < alpha <= 0.5:
        raise ArgumentError(f"alpha must lie in (0, 0.5], got {alpha}")
    if m < 10_000:
        raise ArgumentError(f"calibration needs m >= 10000, got {m}")
    sets = simulate_null_many(tests, n, m, seed, convention, workers)
    regions = {
        test: _region_from_values(test, n, alpha, sets[test].values, m, seed, convention)
        for test in tests
    }
    if size_check:
        check_seed = seed.child_from_string("size-check")
        check_values = _run_null_chunks(list(tests), n, SIZE_CHECK_M, check_seed,
                                        convention, workers)
        for test in tests:
            rate = float(np.mean(regions[test].rejects_many(check_values[test])))
            regions[test] = replace(regions[test], size_check_rate=rate)
    if return_nulls:
        return regions, sets
    return regions


def null_variance_curve(n_values: Sequence[int], m: int, seed: Seed,
                        convention: DivisorConvention = DEFAULT_CONVENTION,
                        workers: int = 1) -> list[tuple[int, float, float]]:
    """Monte Carlo variance of the ECF statistic next to its asymptotic value.

    Returns one (n, mc_variance, asymptotic_variance) triple per requested
    sample size; each n uses the derived stream seed.child_from_string("var:<n>").
    """
    if m < 1000:
        raise ArgumentError(f"variance curve needs m >= 1000, got {m}")
    out = []
    for n in n_values:
        values = simulate_null(TestId.ECFT, n, m, seed.child_from_string(f"var:{n}"),
                               convention, workers).values
        out.append((int(n), float(np.var(values, ddof=1)), asymptotic_variance(n)))
    return out


def ci_comparison(n_values: Sequence[int], m: int, level: float, seed: Seed,
                  convention: DivisorConvention = DEFAULT_CONVENTION,
                  workers: int = 1) -> list[dict]:
    """Simulated central interval of the null statistic vs. the normal approximation.

    Per sample size: the empirical (1-level)/2 and 1-(1-level)/2 quantiles
    of the simulated null statistic, and +-z * sqrt(asymptotic variance)
    around zero.
    """
    if not 0.0 < level < 1.0:
        raise ArgumentError(f"level must lie in (0, 1), got {level}")
    z = float(special.ndtri(0.5 + level / 2.0))
    tail = (1.0 - level) / 2.0
    out = []
    for n in n_values:
        values = simulate_null(TestId.ECFT, n, m, seed.child_from_string(f"ci:{n}"),
                               convention, workers).values
        sim_lower, sim_upper = percentiles(values, [tail, 1.0 - tail])
        half_width = z * math.sqrt(asymptotic_variance(n))
        out.append({
            "n": int(n),
            "sim_lower": sim_lower,
            "sim_upper": sim_upper,
            "approx_lower": -half_width,
            "approx_upper": half_width,
        })
    return out


# -- persistent cache --------------------------------------------------------


def _cache_key(test: TestId, n: int, alpha: float, m: int, root: int,
               convention: DivisorConvention) -> str:
    return f"{test.value}|{n}|{alpha!r}|{m}|{root}|{convention.value}"


class RegionCache:
    """JSON-backed store of calibrated regions, plus sidecar null values.

    Records are keyed by (test, n, alpha, m, seed root, convention); a
    cache hit returns exactly the region that calibration would
    recompute, bit for bit, because calibration is deterministic.
    Writes go through a temp file and an atomic rename, so concurrent
    readers never observe a torn file.
    """

    def __init__(self, path: str | Path, null_dir: str | Path | None = None):
        self.path = Path(path)
        self.null_dir = Path(null_dir) if null_dir is not None else (
            self.path.parent / (self.path.stem + "-nulls")
        )
        self._records: dict[str, RejectionRegion] = {}
        self.load()

    def load(self) -> None:
        self._records = {}
        if self.path.exists():
            payload = json.loads(self.path.read_text())
            for obj in payload.get("records", []):
                region = RejectionRegion.from_json(obj)
                self._records[self._key_of(region)] = region

    @staticmethod
    def _key_of(region: RejectionRegion) -> str:
        return _cache_key(region.test, region.n, region.alpha, region.m,
                          region.seed.root, region.convention)

    def save(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "toolkit_version": _toolkit_version,
            "records": [r.to_json() for r in sorted(
                self._records.values(), key=lambda r: (r.test.value, r.n, r.alpha, r.m)
            )],
        }
        tmp = self.path.with_name(self.path.name + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2) + "\n")
        os.replace(tmp, self.path)

    def get(self, test: TestId, n: int, alpha: float, m: int, seed: Seed,
            convention: DivisorConvention) -> RejectionRegion | None:
        return self._records.get(_cache_key(test, n, alpha, m, seed.root, convention))

    def put(self, region: RejectionRegion, save: bool = True) -> None:
        self._records[self._key_of(region)] = region
        if save:
            self.save()

    def regions(self) -> list[RejectionRegion]:
        return list(self._records.values())

    def get_or_calibrate(self, test: TestId, n: int, alpha: float, m: int, seed: Seed,
                         convention: DivisorConvention = DEFAULT_CONVENTION,
                         workers: int = 1, store_nulls: bool = False) -> RejectionRegion:
        hit = self.get(test, n, alpha, m, seed, convention)
        if hit is not None:
            return hit
        regions, sets = calibrate_many([test], n, alpha, m, seed, convention, workers,
                                       return_nulls=True)
        if store_nulls:
            self.save_null_values(sets[test])
        self.put(regions[test])
        return regions[test]

    # null-value sidecar, used for Monte Carlo p-values

    def _null_path(self, test: TestId, n: int, m: int, seed: Seed,
                   convention: DivisorConvention) -> Path:
        name = f"{test.value}_n{n}_m{m}_s{seed.root}_{convention.value}.npy"
        return self.null_dir / name

    def save_null_values(self, nullset: NullSampleSet) -> None:
        path = self._null_path(nullset.test, nullset.n, nullset.m, nullset.seed,
                               nullset.convention)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp.npy")
        np.save(tmp, nullset.values)
        os.replace(tmp, path)

    def load_null_values(self, test: TestId, n: int, m: int, seed: Seed,
                         convention: DivisorConvention) -> np.ndarray | None:
        path = self._null_path(test, n, m, seed, convention)
        if path.exists():
            return np.load(path)
        return None


# -- applying a region to user data -------------------------------------------


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test on one sample, with its calibration provenance."""

    test: TestId
    n: int
    statistic: float
    reject: bool
    p_value: float
    region: RejectionRegion

    def to_json(self) -> dict:
        return {
            "test": self.test.value,
            "n": self.n,
            "statistic": self.statistic,
            "reject": self.reject,
            "p_value": self.p_value,
            "region": self.region.to_json(),
        }


def mc_p_value(null_values: np.ndarray, value: float, direction: Direction) -> float:
    """Monte Carlo p-value with the (r+1)/(m+1) correction.

    The add-one correction counts the observed statistic as one more
    draw from the null, which keeps p-values strictly positive.
    """
    null_values = np.asarray(null_values)
    m = null_values.size
    at_or_above = int(np.count_nonzero(null_values >= value))
    at_or_below = int(np.count_nonzero(null_values <= value))
    if direction is Direction.UPPER:
        return (at_or_above + 1) / (m + 1)
    if direction is Direction.LOWER:
        return (at_or_below + 1) / (m + 1)
    one_sided = min(at_or_above + 1, at_or_below + 1) / (m + 1)
    return min(1.0, 2.0 * one_sided)


def run_test(sample, region: RejectionRegion, null_values: np.ndarray) -> TestResult:
    """Score a sample against a calibrated region and its null values."""
    x = as_sample(sample)
    value = statistic(region.test, x, region.convention)
    return TestResult(
        test=region.test,
        n=x.size,
        statistic=value,
        reject=region.rejects(value),
        p_value=mc_p_value(null_values, value, region.test.direction),
        region=region,
    )


# -- CSV export ----------------------------------------------------------------


def percentile_grid_rows(regions: Iterable[RejectionRegion]) -> list[dict]:
    """Rows of a percentile-table CSV: one region per sample size."""
    rows = []
    for region in sorted(regions, key=lambda r: (r.test.value, r.n)):
        rows.append({
            "n": region.n,
            "p025": "" if region.lower is None else repr(region.lower),
            "p975": "" if region.upper is None else repr(region.upper),
            "m": region.m,
            "seed": str(region.seed),
        })
    return rows
