"""Seedable sampling from the distributions of the simulation study.

Nine families are supported: the normal null and the alternatives used
in the power study (uniform, Laplace, logistic, Student t, log-normal,
Weibull, chi-squared, and a two-component normal scale mixture).

Sampling is built on two primitives of the underlying generator --
``random()`` uniforms and ziggurat ``standard_normal()`` draws -- with
closed-form inverse transforms for the uniform/Laplace/logistic/Weibull
quantile functions and normal-based constructions for t, chi-squared
(integer degrees of freedom) and the log-normal.  Each family consumes
its generator in a fixed documented order, so a sample is bitwise
reproducible from its (spec, n, seed) triple alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import ArgumentError, ParameterError
from .seeding import Seed

# Smallest positive double drawn by Generator.random() is 2**-53; clip
# uniforms away from 0 before taking logs in the inverse transforms.
_TINY_U = 2.0 ** -53


class Family(Enum):
    NORMAL = "normal"
    UNIFORM01 = "uniform01"
    LAPLACE = "laplace"
    LOGISTIC = "logistic"
    STUDENT_T = "t"
    LOGNORMAL = "lognormal"
    WEIBULL = "weibull"
    CHI_SQUARED = "chisq"
    NORMAL_MIXTURE = "mixture"


# family -> (parameter names, default values or None when required)
_PARAMS: dict[Family, tuple[tuple[str, ...], tuple[float | None, ...]]] = {
    Family.NORMAL: (("mu", "sigma"), (0.0, 1.0)),
    Family.UNIFORM01: ((), ()),
    Family.LAPLACE: (("mu", "scale"), (0.0, 1.0)),
    Family.LOGISTIC: (("mu", "scale"), (0.0, 1.0)),
    Family.STUDENT_T: (("dof",), (None,)),
    Family.LOGNORMAL: (("log_mean", "log_sd"), (0.0, 1.0)),
    Family.WEIBULL: (("shape", "scale"), (0.5, 1.0)),
    Family.CHI_SQUARED: (("dof",), (10.0,)),
    Family.NORMAL_MIXTURE: (("sigma", "alpha"), (None, None)),
}

_POSITIVE = {"sigma", "scale", "dof", "log_sd", "shape"}


@dataclass(frozen=True)
class DistributionSpec:
    """A distribution family plus its parameter values."""

    family: Family
    params: tuple[float, ...] = ()

    def __post_init__(self):
        names, defaults = _PARAMS[self.family]
        if len(self.params) != len(names):
            raise ParameterError(
                f"{self.family.value} takes {len(names)} parameter(s) "
                f"({', '.join(names)}), got {len(self.params)}"
            )
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        for name, value in zip(names, self.params):
            if not math.isfinite(value):
                raise ParameterError(f"{self.family.value}: {name} must be finite, got {value}")
            if name in _POSITIVE and value <= 0:
                raise ParameterError(f"{self.family.value}: {name} must be > 0, got {value}")
        if self.family is Family.NORMAL_MIXTURE:
            alpha = self.params[1]
            if not 0.0 <= alpha <= 1.0:
                raise ParameterError(f"mixture: alpha must be in [0, 1], got {alpha}")

    # -- constructors ----------------------------------------------------

    @classmethod
    def normal(cls, mu: float = 0.0, sigma: float = 1.0) -> "DistributionSpec":
        return cls(Family.NORMAL, (mu, sigma))

    @classmethod
    def uniform01(cls) -> "DistributionSpec":
        return cls(Family.UNIFORM01, ())

    @classmethod
    def laplace(cls, mu: float = 0.0, scale: float = 1.0) -> "DistributionSpec":
        return cls(Family.LAPLACE, (mu, scale))

    @classmethod
    def logistic(cls, mu: float = 0.0, scale: float = 1.0) -> "DistributionSpec":
        return cls(Family.LOGISTIC, (mu, scale))

    @classmethod
    def student_t(cls, dof: float) -> "DistributionSpec":
        return cls(Family.STUDENT_T, (dof,))

    @classmethod
    def lognormal(cls, log_mean: float = 0.0, log_sd: float = 1.0) -> "DistributionSpec":
        return cls(Family.LOGNORMAL, (log_mean, log_sd))

    @classmethod
    def weibull(cls, shape: float = 0.5, scale: float = 1.0) -> "DistributionSpec":
        return cls(Family.WEIBULL, (shape, scale))

    @classmethod
    def chi_squared(cls, dof: float = 10.0) -> "DistributionSpec":
        return cls(Family.CHI_SQUARED, (dof,))

    @classmethod
    def normal_mixture(cls, sigma: float, alpha: float) -> "DistributionSpec":
        """With probability ``alpha`` draw N(0,1), else N(0, sigma^2)."""
        return cls(Family.NORMAL_MIXTURE, (sigma, alpha))

    # -- canonical text form ---------------------------------------------

    def canonical(self) -> str:
        """Text form used by the CLI, e.g. ``normal:0,1`` or ``t:4``."""
        if not self.params:
            return self.family.value
        args = ",".join(_format_number(p) for p in self.params)
        return f"{self.family.value}:{args}"

    def __str__(self) -> str:
        return self.canonical()


def _format_number(x: float) -> str:
    return str(int(x)) if x == int(x) else repr(x)


def parse_spec(text: str) -> DistributionSpec:
    """Parse the canonical text form (case-insensitive).

    Parameters may be omitted when the family defines defaults, e.g.
    ``weibull`` means ``weibull:0.5,1``.
    """
    body = text.strip().lower()
    name, _, arg_text = body.partition(":")
    try:
        family = Family(name)
    except ValueError:
        known = ", ".join(f.value for f in Family)
        raise ParameterError(f"unknown distribution {name!r}; expected one of: {known}") from None
    names, defaults = _PARAMS[family]
    if arg_text:
        try:
            given = [float(tok) for tok in arg_text.split(",")]
        except ValueError:
            raise ParameterError(f"cannot parse parameters in {text!r}") from None
    else:
        given = []
    if len(given) > len(names):
        raise ParameterError(f"{family.value} takes at most {len(names)} parameter(s), got {len(given)}")
    params = list(given)
    for name_, default in zip(names[len(given):], defaults[len(given):]):
        if default is None:
            raise ParameterError(f"{family.value}: parameter {name_!r} is required in {text!r}")
        params.append(default)
    return DistributionSpec(family, tuple(params))


# -- sampling -------------------------------------------------------------


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random(n)
    # keep log() finite at the measure-zero event u == 0
    return np.maximum(u, _TINY_U)


def _chi_squared_values(rng: np.random.Generator, n: int, dof: float) -> np.ndarray:
    if dof == int(dof):
        block = rng.standard_normal((int(dof), n))
        return np.einsum("ij,ij->j", block, block)
    return 2.0 * rng.standard_gamma(dof / 2.0, n)


def _draw(spec: DistributionSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    family, p = spec.family, spec.params
    if family is Family.NORMAL:
        return p[0] + p[1] * rng.standard_normal(n)
    if family is Family.UNIFORM01:
        return rng.random(n)
    if family is Family.LAPLACE:
        u = _open_uniform(rng, n)
        return p[0] - p[1] * np.sign(u - 0.5) * np.log1p(-2.0 * np.abs(u - 0.5))
    if family is Family.LOGISTIC:
        u = _open_uniform(rng, n)
        return p[0] + p[1] * (np.log(u) - np.log1p(-u))
    if family is Family.STUDENT_T:
        # z first, then the chi-squared block, in that order
        z = rng.standard_normal(n)
        w = _chi_squared_values(rng, n, p[0])
        return z / np.sqrt(w / p[0])
    if family is Family.LOGNORMAL:
        return np.exp(p[0] + p[1] * rng.standard_normal(n))
    if family is Family.WEIBULL:
        u = rng.random(n)
        return p[1] * (-np.log1p(-u)) ** (1.0 / p[0])
    if family is Family.CHI_SQUARED:
        return _chi_squared_values(rng, n, p[0])
    if family is Family.NORMAL_MIXTURE:
        values, _ = _mixture_draw(spec, n, rng)
        return values
    raise AssertionError(f"unhandled family {family}")


def _mixture_draw(spec: DistributionSpec, n: int, rng: np.random.Generator):
    """Mixture draws plus the component labels (True = standard-normal component).

    Consumes n uniforms (component assignment) then n normals, in that order.
    """
    sigma, alpha = spec.params
    from_standard = rng.random(n) < alpha
    z = rng.standard_normal(n)
    return np.where(from_standard, z, sigma * z), from_standard


def sample(spec: DistributionSpec, n: int, seed: Seed) -> np.ndarray:
    """Draw exactly ``n`` i.i.d. values; deterministic in (spec, n, seed)."""
    if n < 1:
        raise ArgumentError(f"sample size must be >= 1, got {n}")
    return _draw(spec, int(n), seed.generator())


def sample_with_mixture_labels(spec: DistributionSpec, n: int, seed: Seed):
    """Like :func:`sample` for a mixture spec, also returning component labels."""
    if spec.family is not Family.NORMAL_MIXTURE:
        raise ArgumentError(f"labels are only defined for mixtures, got {spec}")
    if n < 1:
        raise ArgumentError(f"sample size must be >= 1, got {n}")
    return _mixture_draw(spec, int(n), seed.generator())


def sample_rows(spec: DistributionSpec, n: int, seed: Seed, start: int, stop: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the replicate matrix for (spec, n, seed).

    Row ``i`` equals ``sample(spec, n, seed.child(i))``, so any contiguous
    block can be produced independently by any worker.
    """
    if n < 1:
        raise ArgumentError(f"sample size must be >= 1, got {n}")
    if stop < start:
        raise ArgumentError(f"bad replicate range [{start}, {stop})")
    out = np.empty((stop - start, n))
    for i in range(start, stop):
        out[i - start] = _draw(spec, n, seed.child(i).generator())
    return out


# -- CDFs, for sanity tests and the comparators' internals -----------------


def cdf(spec: DistributionSpec, x) -> np.ndarray:
    """Cumulative distribution function of ``spec`` evaluated at ``x``."""
    x = np.asarray(x, dtype=float)
    family, p = spec.family, spec.params
    if family is Family.NORMAL:
        return special.ndtr((x - p[0]) / p[1])
    if family is Family.UNIFORM01:
        return np.clip(x, 0.0, 1.0)
    if family is Family.LAPLACE:
        t = (x - p[0]) / p[1]
        return np.where(t < 0, 0.5 * np.exp(t), 1.0 - 0.5 * np.exp(-t))
    if family is Family.LOGISTIC:
        return special.expit((x - p[0]) / p[1])
    if family is Family.STUDENT_T:
        return special.stdtr(p[0], x)
    if family is Family.LOGNORMAL:
        out = np.zeros_like(x, dtype=float)
        pos = x > 0
        out[pos] = special.ndtr((np.log(x[pos]) - p[0]) / p[1])
        return out
    if family is Family.WEIBULL:
        t = np.clip(x / p[1], 0.0, None)
        return -np.expm1(-(t ** p[0]))
    if family is Family.CHI_SQUARED:
        return special.gammainc(p[0] / 2.0, np.clip(x, 0.0, None) / 2.0)
    if family is Family.NORMAL_MIXTURE:
        sigma, alpha = p
        return alpha * special.ndtr(x) + (1.0 - alpha) * special.ndtr(x / sigma)
    raise AssertionError(f"unhandled family {family}")
