"""Central-difference gradient verification.

The checker perturbs every coordinate of theta by +/- eps, so keep the
networks small when calling it.  Relative error uses a floored denominator
so near-zero coordinate pairs do not produce spurious failures:

    err = |a - b| / max(floor, |a|, |b|)
"""
from __future__ import annotations

import numpy as np


def finite_difference_gradient(loss_fn, theta: np.ndarray, eps: float = 1e-5,
                               indices=None) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if indices is None:
        indices = range(theta.size)
    grad = np.zeros(theta.size)
    work = theta.copy()
    for i in indices:
        original = work[i]
        work[i] = original + eps
        hi = loss_fn(work)
        work[i] = original - eps
        lo = loss_fn(work)
        work[i] = original
        grad[i] = (hi - lo) / (2.0 * eps)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray,
                       floor: float = 1e-3) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(floor, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))
