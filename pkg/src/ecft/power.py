"""The power-study harness: rejection proportions over a (distribution, n, test) grid.

Every cell draws its own samples from a stream derived from the study
seed, the distribution's canonical tag, the sample size, and the test
id -- so extending the grid never perturbs existing cells, and cells can
be computed in any order or split across workers without changing a
single count.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, TextIO

import numpy as np

from ._version import __version__ as _toolkit_version
from .calibration import RejectionRegion
from .classic_tests import TestId, statistic_rows
from .distributions import DistributionSpec, parse_spec, sample_rows
from .ecf import DEFAULT_CONVENTION, DivisorConvention
from .errors import ArgumentError, ConfigurationError, MissingCalibrationError
from .seeding import Seed

# keep per-chunk matrices near 4e6 doubles, as in calibration
def _chunk_size(n: int) -> int:
    return max(1, int(4_000_000 / max(1, n)))


@dataclass(frozen=True)
class PowerCell:
    """Rejection proportion for one (distribution, n, test) cell."""

    distribution: DistributionSpec
    n: int
    test: TestId
    rejections: int
    m: int
    seed: Seed

    @property
    def proportion(self) -> float:
        return self.rejections / self.m

    def to_json(self) -> dict:
        return {
            "distribution": self.distribution.canonical(),
            "n": self.n,
            "test": self.test.value,
            "rejections": self.rejections,
            "m": self.m,
            "proportion": self.proportion,
            "seed": self.seed.to_json(),
        }


@dataclass(frozen=True)
class StudyConfig:
    """The grid and Monte Carlo settings of one power study."""

    distributions: tuple[DistributionSpec, ...]
    n_values: tuple[int, ...]
    tests: tuple[TestId, ...]
    alpha: float
    m: int
    seed: Seed
    convention: DivisorConvention = DEFAULT_CONVENTION

    def cells(self):
        for spec in self.distributions:
            for n in self.n_values:
                for test in self.tests:
                    yield spec, n, test


@dataclass
class PowerTable:
    """All cells of a study plus the calibration provenance they share."""

    config: StudyConfig
    cells: list[PowerCell] = field(default_factory=list)
    regions: dict = field(default_factory=dict)

    def get(self, distribution: DistributionSpec | str, n: int, test: TestId) -> PowerCell:
        tag = distribution if isinstance(distribution, str) else distribution.canonical()
        for cell in self.cells:
            if cell.distribution.canonical() == tag and cell.n == n and cell.test == test:
                return cell
        raise KeyError((tag, n, test))

    def write_csv(self, stream: TextIO) -> None:
        writer = csv.writer(stream)
        writer.writerow(["distribution", "n", "test", "proportion", "m", "seed"])
        for cell in self.cells:
            writer.writerow([
                cell.distribution.canonical(), cell.n, cell.test.value,
                repr(cell.proportion), cell.m, str(cell.seed),
            ])

    def write_json(self, stream: TextIO) -> None:
        payload = {
            "toolkit_version": _toolkit_version,
            "alpha": self.config.alpha,
            "m": self.config.m,
            "seed": self.config.seed.to_json(),
            "convention": self.config.convention.value,
            "calibration": {
                f"{test.value}:{n}": region.to_json()
                for (test, n), region in sorted(
                    self.regions.items(), key=lambda kv: (kv[0][0].value, kv[0][1])
                )
            },
            "cells": [cell.to_json() for cell in self.cells],
        }
        json.dump(payload, stream, indent=2)
        stream.write("\n")


#: Alternatives of the benchmark study, in table order: three symmetric
#: families, three skewed ones, the t family, and two scale mixtures.
BENCHMARK_ALTERNATIVES: tuple[DistributionSpec, ...] = (
    DistributionSpec.uniform01(),
    DistributionSpec.laplace(),
    DistributionSpec.logistic(),
    DistributionSpec.lognormal(),
    DistributionSpec.weibull(0.5, 1.0),
    DistributionSpec.chi_squared(10),
    DistributionSpec.student_t(4),
    DistributionSpec.student_t(10),
    DistributionSpec.student_t(15),
    DistributionSpec.normal_mixture(2.0, 0.2),
    DistributionSpec.normal_mixture(0.5, 0.2),
)

BENCHMARK_N_VALUES: tuple[int, ...] = (15, 30, 100, 250, 500)


def benchmark_grid(m: int = 10_000, seed: Seed | None = None,
                   convention: DivisorConvention = DEFAULT_CONVENTION,
                   alpha: float = 0.05) -> StudyConfig:
    """The benchmark grid: eleven alternatives x five n x all six tests."""
    return StudyConfig(
        distributions=BENCHMARK_ALTERNATIVES,
        n_values=BENCHMARK_N_VALUES,
        tests=tuple(TestId),
        alpha=alpha,
        m=m,
        seed=seed if seed is not None else Seed(0),
        convention=convention,
    )


def cell_seed(study_seed: Seed, spec: DistributionSpec, n: int, test: TestId) -> Seed:
    """The dedicated stream of one cell; replicate i uses its .child(i)."""
    return study_seed.child_from_string(f"power:{spec.canonical()}:{n}:{test.value}")


def _count_rejections(spec: DistributionSpec, n: int, region: RejectionRegion,
                      m: int, seed: Seed, convention: DivisorConvention) -> int:
    step = _chunk_size(n)
    total = 0
    for start in range(0, m, step):
        stop = min(start + step, m)
        x = sample_rows(spec, n, seed, start, stop)
        values = statistic_rows(region.test, x, convention)
        total += int(np.count_nonzero(region.rejects_many(values)))
    return total


def power_cell(spec: DistributionSpec, n: int, test: TestId, region: RejectionRegion,
               m: int, seed: Seed,
               convention: DivisorConvention = DEFAULT_CONVENTION) -> PowerCell:
    """Rejection count of ``test`` over ``m`` samples of size ``n`` from ``spec``."""
    if m < 1:
        raise ArgumentError(f"m must be >= 1, got {m}")
    if region.test is not test or region.n != n:
        raise ConfigurationError(
            f"region calibrated for ({region.test.value}, n={region.n}) "
            f"cannot score ({test.value}, n={n})"
        )
    if region.convention is not convention:
        raise ConfigurationError(
            f"region calibrated under {region.convention.value} cannot be used "
            f"with the {convention.value} convention"
        )
    rejections = _count_rejections(spec, n, region, m, seed, convention)
    return PowerCell(distribution=spec, n=n, test=test, rejections=rejections,
                     m=m, seed=seed)


def _cell_task(payload):
    index, spec_tag, n, region_json, m, seed, convention_name = payload
    convention = DivisorConvention(convention_name)
    spec = parse_spec(spec_tag)
    region = RejectionRegion.from_json(region_json)
    cell = power_cell(spec, n, region.test, region, m, seed, convention)
    return index, cell


def run_study(config: StudyConfig,
              regions: Mapping[tuple[TestId, int], RejectionRegion],
              workers: int = 1) -> PowerTable:
    """Fill the whole grid; raises if any (test, n) pair lacks a region."""
    missing = [
        (test, n)
        for n in config.n_values
        for test in config.tests
        if (test, n) not in regions
    ]
    if missing:
        raise MissingCalibrationError(missing)
    for (test, n) in ((t, n) for n in config.n_values for t in config.tests):
        region = regions[(test, n)]
        if region.alpha != config.alpha:
            raise ConfigurationError(
                f"region for ({test.value}, n={n}) was calibrated at alpha="
                f"{region.alpha}, study wants {config.alpha}"
            )

    payloads = []
    for index, (spec, n, test) in enumerate(config.cells()):
        seed = cell_seed(config.seed, spec, n, test)
        payloads.append((index, spec.canonical(), n, regions[(test, n)].to_json(),
                         config.m, seed, config.convention.value))

    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = sorted(pool.map(_cell_task, payloads), key=lambda item: item[0])
    else:
        results = [_cell_task(p) for p in payloads]

    table = PowerTable(config=config, regions=dict(regions))
    table.cells = [cell for _, cell in results]
    return table
