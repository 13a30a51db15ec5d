"""Exact Gamma, Beta and angle samplers working in the log domain.

Gamma variates use the Marsaglia-Tsang squeeze/rejection method, which is
exact for shape >= 1 and hands back ``d * v`` as a product, so the log is
``log d + log v`` with no intermediate exponentiation. Beta variates are
formed as ``G_a / (G_a + G_b)`` with a log-sum-exp denominator.

All samplers accept an integer or an integer array for the shape
parameters and return an array broadcast to ``size`` (or a Python float
when both are scalar and ``size`` is None).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import ParameterDomainError
from .rng import RandomStream

TWO_PI = 2.0 * math.pi
_BELOW_TWO_PI = np.nextafter(TWO_PI, 0.0)


def _integer_shape(value, name):
    arr = np.asarray(value)
    if arr.dtype.kind not in "iu":
        if arr.dtype.kind == "f" and np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise ParameterDomainError(f"{name} must be a positive integer")
    if arr.size and arr.min() < 1:
        raise ParameterDomainError(f"{name} must be >= 1, got min {arr.min()}")
    return arr


@njit(cache=True, nogil=True)
def _mt_accept(d, c, idx, x, u, base_out, accept):
    """Marsaglia-Tsang acceptance; stores ``1 + c x`` for accepted entries."""
    for i in range(x.size):
        k = idx[i]
        base = 1.0 + c[k] * x[i]
        accept[i] = False
        if base <= 0.0:
            continue
        x2 = x[i] * x[i]
        # squeeze first; only the rare misses pay for the logs
        if u[i] < 1.0 - 0.0331 * x2 * x2 or math.log(u[i]) < 0.5 * x2 + d[k] * (
            1.0 - base * base * base + 3.0 * math.log(base)
        ):
            accept[i] = True
            base_out[i] = base


def _log_gamma_variates(shape: np.ndarray, gen: np.random.Generator, reps: int = 0) -> np.ndarray:
    """``log Gamma(shape)`` variates; with ``reps > 0`` the result has shape ``(reps,) + shape.shape``.

    The per-shape constants are computed once and shared by all replicates.
    The value is ``log d + 3 log(1 + c x)``; the logs are taken in one
    vectorised pass after acceptance.
    """
    d = shape.astype(np.float64).ravel() - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    size = d.size
    rows = max(reps, 1)
    idx = np.tile(np.arange(size), rows)
    base = np.empty(rows * size)
    accept = np.empty(rows * size, dtype=np.bool_)
    _mt_accept(d, c, idx, gen.standard_normal(base.size), gen.random(base.size), base, accept)
    pending = np.flatnonzero(~accept)
    while pending.size:
        val = np.empty(pending.size)
        acc = np.empty(pending.size, dtype=np.bool_)
        _mt_accept(d, c, idx[pending], gen.standard_normal(pending.size), gen.random(pending.size), val, acc)
        base[pending[acc]] = val[acc]
        pending = pending[~acc]
    out = np.log(base).reshape(rows, size)
    out *= 3.0
    out += np.log(d)
    return out.reshape(((reps,) if reps else ()) + shape.shape)


def sample_log_gamma(shape, rng: RandomStream, size=None):
    """Draw ``log X`` with ``X ~ Gamma(shape, 1)``.

    ``shape`` is an integer >= 1 or an integer array broadcastable to ``size``.
    """
    a = _integer_shape(shape, "shape")
    scalar = a.ndim == 0 and size is None
    a = np.broadcast_to(a, a.shape if size is None else size)
    out = _log_gamma_variates(np.ascontiguousarray(a), rng.generator)
    return float(out.ravel()[0]) if scalar else out


def sample_log_beta(a, b, rng: RandomStream, size=None):
    """Draw ``log X`` with ``X ~ Beta(a, b)``; the result is always <= 0."""
    a_arr = _integer_shape(a, "a")
    b_arr = _integer_shape(b, "b")
    scalar = a_arr.ndim == 0 and b_arr.ndim == 0 and size is None
    if size is None:
        size = np.broadcast_shapes(a_arr.shape, b_arr.shape)
    a_arr = np.ascontiguousarray(np.broadcast_to(a_arr, size))
    b_arr = np.ascontiguousarray(np.broadcast_to(b_arr, size))
    gen = rng.generator
    log_ga = _log_gamma_variates(a_arr, gen)
    log_gb = _log_gamma_variates(b_arr, gen)
    out = log_ga - np.logaddexp(log_ga, log_gb)
    np.minimum(out, 0.0, out=out)
    return float(out.ravel()[0]) if scalar else out


def sample_angle(rng: RandomStream, size=None):
    """Uniform angle on ``[0, 2*pi)``."""
    theta = rng.generator.random(size) * TWO_PI
    theta = np.minimum(theta, _BELOW_TWO_PI)
    return float(theta) if size is None else theta
