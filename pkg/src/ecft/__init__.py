"""Normality testing from the empirical characteristic function.

The toolkit bundles the ECF-based test statistic, Monte Carlo
calibration of critical values for it and five classical normality
tests, seedable sampling from the benchmark distributions, and a
reproducible power-study harness with CSV/JSON exports.
"""

from ._version import __version__
from .calibration import (
    NullSampleSet,
    RegionCache,
    RegionKind,
    RejectionRegion,
    TestResult,
    calibrate,
    calibrate_many,
    ci_comparison,
    mc_p_value,
    null_variance_curve,
    percentiles,
    run_test,
    simulate_null,
    simulate_null_many,
)
from .classic_tests import (
    Direction,
    MomentSummary,
    TestId,
    anderson_darling_stat,
    dagostino_pearson_stat,
    jarque_bera_stat,
    lilliefors_stat,
    moment_summary,
    shapiro_wilk_stat,
    statistic,
    statistic_rows,
)
from .distributions import DistributionSpec, Family, cdf, parse_spec, sample, sample_rows
from .ecf import (
    DEFAULT_CONVENTION,
    NULL_MODULUS_AT_T1,
    STATISTIC_T,
    DivisorConvention,
    EcfStatistic,
    EcfValue,
    StudentizedSample,
    asymptotic_variance,
    ecf,
    ecf_statistic,
    null_process_variance,
    studentize,
)
from .errors import (
    ArgumentError,
    ConfigurationError,
    DataFormatError,
    DegenerateSampleError,
    EcftError,
    MissingCalibrationError,
    ModulusUnderflowError,
    ParameterError,
    UnsupportedSampleSizeError,
)
from .power import (
    BENCHMARK_ALTERNATIVES,
    BENCHMARK_N_VALUES,
    PowerCell,
    PowerTable,
    StudyConfig,
    cell_seed,
    benchmark_grid,
    power_cell,
    run_study,
)
from .seeding import Seed

__all__ = [name for name in dir() if not name.startswith("_")]
