"""Small input checks shared across modules."""

from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np
from sklearn.utils import check_array


def check_int(name: str, value, minimum: int | None = None, maximum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_real(name: str, value, lo: float = -math.inf, hi: float = math.inf,
               tol: float = 0.0) -> float:
    if isinstance(value, bool) or not isinstance(value, (Real, np.floating, np.integer)):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value) and (math.isfinite(lo) or math.isfinite(hi)):
        raise ValueError(f"{name} must be finite, got {value}")
    if value < lo - tol or value > hi + tol:
        raise ValueError(f"{name}={value} outside [{lo}, {hi}]")
    return value


def check_populations(chi, n: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """Validate a probability vector over Dicke levels and return it as float array."""
    chi = np.asarray(chi, dtype=float)
    if chi.ndim != 1 or chi.size < 2:
        raise ValueError("populations must be a 1-D array with at least two entries")
    if n is not None and chi.size != n + 1:
        raise ValueError(f"expected {n + 1} populations, got {chi.size}")
    if not np.all(np.isfinite(chi)):
        raise ValueError("populations must be finite")
    if chi.min() < -tol:
        raise ValueError(f"negative population {chi.min():.3g}")
    if abs(chi.sum() - 1.0) > tol:
        raise ValueError(f"populations sum to {chi.sum():.15g}, not 1")
    return chi


def check_rows(X, n_features: int, name: str = "X") -> np.ndarray:
    """2-D float array with a fixed number of columns."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != n_features:
        raise ValueError(f"{name} must have {n_features} columns, got {X.shape[1]}")
    return X


def check_random_state_seed(seed) -> int:
    if seed is None:
        return 0
    return check_int("seed", seed, minimum=0)
