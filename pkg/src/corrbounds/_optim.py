"""Vectorized one-dimensional search helpers."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(fun: Callable[[np.ndarray], np.ndarray], lo, hi, tol: float = 1e-10,
               maxiter: int = 200):
    """Golden-section maximization run independently on a batch of brackets.

    ``fun`` maps an array of abscissae (same shape as ``lo``) to values.
    Returns the best abscissae and values seen.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = fun(c)
    fd = fun(d)
    for _ in range(maxiter):
        if np.all(b - a <= tol):
            break
        left = fc >= fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        c_new = np.where(left, b - INVPHI * (b - a), d)
        d_new = np.where(left, c, a + INVPHI * (b - a))
        fp = fun(np.where(left, c_new, d_new))
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_new, d_new
    xs = np.where(fc >= fd, c, d)
    fs = np.maximum(fc, fd)
    return xs, fs


def golden_min_scalar(fun: Callable[[float], float], lo: float, hi: float,
                      tol: float = 1e-12, maxiter: int = 300) -> tuple[float, float]:
    a, b = lo, hi
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(maxiter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = fun(d)
    return (c, fc) if fc <= fd else (d, fd)
