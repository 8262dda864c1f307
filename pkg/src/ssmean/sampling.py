"""Samplers for the distribution families the posteriors are built from.

Student-t draws use the precision-mixture construction: if G ~ Gamma(df/2,
rate df/2) and Z is standard normal, then loc + sqrt(scale_sq) * Z / sqrt(G)
is t_df(loc, scale_sq).  This is exact for every df > 0, including the df in
(0, 2] range where inverse-CDF tables get delicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, InvalidParameterError
from .rng import RngStream

__all__ = [
    "TComponent",
    "sample_student_t",
    "sample_student_t_each",
    "sample_convolution",
    "sample_quantile",
    "sample_normal",
    "sample_gamma",
    "sample_inverse_gamma",
]


@dataclass(frozen=True)
class TComponent:
    """One Student-t distribution: t_df(location, scale_sq).

    scale_sq = 0 denotes a point mass at the location.
    """

    df: float
    location: float
    scale_sq: float

    def __post_init__(self) -> None:
        for name in ("df", "location", "scale_sq"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"TComponent.{name} must be finite")
        if self.df <= 0:
            raise InvalidParameterError(f"TComponent.df must be positive, got {self.df}")
        if self.scale_sq < 0:
            raise InvalidParameterError(
                f"TComponent.scale_sq must be non-negative, got {self.scale_sq}"
            )

    def mean(self) -> float:
        """Distribution mean; defined for df > 1."""
        if self.df <= 1:
            raise InvalidParameterError(f"t mean undefined for df={self.df}")
        return self.location

    def variance(self) -> float:
        """Distribution variance; defined for df > 2."""
        if self.df <= 2:
            raise InvalidParameterError(f"t variance undefined for df={self.df}")
        return self.df / (self.df - 2.0) * self.scale_sq


def _check_count(count: int) -> int:
    if int(count) != count or count < 1:
        raise InvalidParameterError(f"count must be a positive integer, got {count}")
    return int(count)


def sample_student_t(comp: TComponent, count: int, rng: RngStream) -> np.ndarray:
    """Draw `count` independent samples from t_df(location, scale_sq)."""
    count = _check_count(count)
    if comp.scale_sq == 0.0:
        return np.full(count, comp.location)
    g = rng.generator()
    z = g.standard_normal(count)
    gam = g.gamma(comp.df / 2.0, 2.0 / comp.df, size=count)
    return comp.location + math.sqrt(comp.scale_sq) * z / np.sqrt(gam)


def sample_student_t_each(
    df: float,
    locations: np.ndarray,
    scale_sqs: np.ndarray,
    rng: RngStream,
) -> np.ndarray:
    """One t_df(location_i, scale_sq_i) draw per (location, scale_sq) pair.

    Vectorised companion to :func:`sample_student_t` for posteriors whose
    per-draw parameters differ but share a degrees-of-freedom value.
    """
    locations = np.asarray(locations, dtype=float)
    scale_sqs = np.asarray(scale_sqs, dtype=float)
    if locations.shape != scale_sqs.shape:
        raise InvalidParameterError("locations and scale_sqs must have equal shapes")
    if not (np.isfinite(locations).all() and np.isfinite(scale_sqs).all()):
        raise InvalidParameterError("non-finite t parameters")
    if df <= 0 or not math.isfinite(df):
        raise InvalidParameterError(f"df must be positive and finite, got {df}")
    if (scale_sqs < 0).any():
        raise InvalidParameterError("scale_sqs must be non-negative")
    g = rng.generator()
    z = g.standard_normal(locations.shape)
    gam = g.gamma(df / 2.0, 2.0 / df, size=locations.shape)
    return locations + np.sqrt(scale_sqs) * z / np.sqrt(gam)


def sample_convolution(
    a: TComponent, b: TComponent, count: int, rng: RngStream
) -> np.ndarray:
    """Draw from the convolution of two t components (elementwise sums)."""
    count = _check_count(count)
    g = rng.generator()

    def draws(comp: TComponent) -> np.ndarray:
        if comp.scale_sq == 0.0:
            return np.full(count, comp.location)
        z = g.standard_normal(count)
        gam = g.gamma(comp.df / 2.0, 2.0 / comp.df, size=count)
        return comp.location + math.sqrt(comp.scale_sq) * z / np.sqrt(gam)

    return draws(a) + draws(b)


def sample_quantile(samples: np.ndarray, q: float) -> float:
    """Type-7 (linear interpolation) sample quantile at level q in (0, 1)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise EmptyInputError("sample_quantile requires a non-empty sample vector")
    if not (0.0 < q < 1.0):
        raise InvalidParameterError(f"quantile level must lie in (0, 1), got {q}")
    return float(np.quantile(samples, q))


def sample_normal(mean: float, variance: float, count: int, rng: RngStream) -> np.ndarray:
    """Normal(mean, variance) draws; variance 0 is a point mass."""
    count = _check_count(count)
    if not (math.isfinite(mean) and math.isfinite(variance)):
        raise InvalidParameterError("non-finite normal parameters")
    if variance < 0:
        raise InvalidParameterError(f"variance must be non-negative, got {variance}")
    if variance == 0.0:
        return np.full(count, mean)
    return mean + math.sqrt(variance) * rng.generator().standard_normal(count)


def sample_gamma(shape: float, rate: float, count: int, rng: RngStream) -> np.ndarray:
    """Gamma(shape, rate) draws (mean shape/rate)."""
    count = _check_count(count)
    if not (math.isfinite(shape) and math.isfinite(rate)) or shape <= 0 or rate <= 0:
        raise InvalidParameterError(
            f"gamma shape and rate must be positive, got ({shape}, {rate})"
        )
    return rng.generator().gamma(shape, 1.0 / rate, size=count)


def sample_inverse_gamma(shape: float, rate: float, count: int, rng: RngStream) -> np.ndarray:
    """Inverse-Gamma(shape, rate) draws, i.e. reciprocals of Gamma(shape, rate)."""
    return 1.0 / sample_gamma(shape, rate, count, rng)
