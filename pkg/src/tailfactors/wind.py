"""Vertical extrapolation of wind speeds via the power-law profile.

Speeds measured at a reference height (10 m by default) are lifted to hub
height h with v_h = v_ref * (h / h_ref)^alpha, where alpha is the Hellmann
(friction) exponent.  The exponent can be fixed, or estimated from paired
measurements at two heights and averaged per (month, hour-of-day) group to
capture diurnal and seasonal variation.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ParameterError


@dataclass(frozen=True)
class WindPreprocessConfig:
    reference_height: float = 10.0
    target_height: float = 100.0
    fixed_exponent: float | None = None
    group_by_hour_month: bool = True

    def __post_init__(self):
        if self.reference_height <= 0 or self.target_height <= 0:
            raise ParameterError("heights must be positive")
        if self.target_height == self.reference_height:
            raise ParameterError("target height must differ from the reference height")


def hellmann_extrapolate(v_ref, alpha_sh, h: float, reference_height: float = 10.0):
    """Power-law lift of wind speeds from the reference height to height h."""
    v = np.asarray(v_ref, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise InputError("wind speeds must be finite and strictly positive")
    if h <= 0 or reference_height <= 0:
        raise ParameterError("heights must be positive")
    out = v * (h / reference_height) ** np.asarray(alpha_sh, dtype=float)
    return float(out) if out.ndim == 0 else out


def hellmann_exponent(v_ref, v_h, h: float, reference_height: float = 10.0):
    """Invert the power law: alpha = (ln v_h - ln v_ref) / (ln h - ln h_ref)."""
    v0 = np.asarray(v_ref, dtype=float)
    v1 = np.asarray(v_h, dtype=float)
    if np.any(v0 <= 0) or np.any(v1 <= 0) or not (np.all(np.isfinite(v0)) and np.all(np.isfinite(v1))):
        raise InputError("wind speeds must be finite and strictly positive")
    if h <= 0 or reference_height <= 0 or h == reference_height:
        raise ParameterError("need two distinct positive heights")
    out = (np.log(v1) - np.log(v0)) / (np.log(h) - np.log(reference_height))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ExponentTable:
    """Per-column Hellmann exponents averaged by (month, hour) group."""

    groups: dict[tuple[int, int], np.ndarray]
    global_mean: np.ndarray = field(repr=False, default=None)

    def lookup(self, month: int, hour: int) -> np.ndarray:
        key = (int(month), int(hour))
        if key in self.groups:
            return self.groups[key]
        warnings.warn(f"no exponent estimate for month={month}, hour={hour}; "
                      "falling back to the global mean", stacklevel=2)
        return self.global_mean


def estimate_exponent_table(v_ref, v_high, high_height: float, hours, months,
                            grouped: bool = True,
                            reference_height: float = 10.0) -> ExponentTable:
    """Estimate per-column exponents, averaged per (month, hour-of-day) group.

    With ``grouped`` off a single global per-column mean is used for every
    timestamp.
    """
    alphas = np.atleast_2d(hellmann_exponent(v_ref, v_high, high_height, reference_height))
    hours = np.asarray(hours, dtype=int).ravel()
    months = np.asarray(months, dtype=int).ravel()
    if hours.shape[0] != alphas.shape[0] or months.shape[0] != alphas.shape[0]:
        raise InputError("hours/months must align with the speed rows")
    global_mean = alphas.mean(axis=0)
    groups: dict[tuple[int, int], np.ndarray] = {}
    if grouped:
        for key in sorted({(int(m), int(h)) for m, h in zip(months, hours)}):
            mask = (months == key[0]) & (hours == key[1])
            groups[key] = alphas[mask].mean(axis=0)
    return ExponentTable(groups=groups, global_mean=global_mean)


def apply_extrapolation(v_ref, hours, months, exponents, target_height: float,
                        reference_height: float = 10.0) -> np.ndarray:
    """Lift a matrix of reference-height speeds to the target height.

    ``exponents`` is either a scalar exponent or an ExponentTable; with a
    table, each row uses the exponent vector of its (month, hour) group.
    """
    v = np.atleast_2d(np.asarray(v_ref, dtype=float))
    if np.isscalar(exponents) or isinstance(exponents, float):
        return hellmann_extrapolate(v, float(exponents), target_height, reference_height)
    hours = np.asarray(hours, dtype=int).ravel()
    months = np.asarray(months, dtype=int).ravel()
    if hours.shape[0] != v.shape[0] or months.shape[0] != v.shape[0]:
        raise InputError("hours/months must align with the speed rows")
    out = np.empty_like(v)
    for i in range(v.shape[0]):
        alpha = exponents.lookup(months[i], hours[i])
        out[i] = hellmann_extrapolate(v[i], alpha, target_height, reference_height)
    return out
