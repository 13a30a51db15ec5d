"""Empirical distributions, Kolmogorov-Smirnov distances and digamma."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ContractError, ParameterDomainError
from .rng import RandomStream


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform probability measure on a finite sample, stored sorted."""

    values: np.ndarray
    count: int = field(init=False)

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        if np.isnan(vals).any():
            raise ContractError("empirical measure values must be NaN-free")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "count", int(vals.size))

    @classmethod
    def pooled(cls, samples) -> "EmpiricalMeasure":
        return cls(np.concatenate([np.asarray(s, dtype=np.float64).ravel() for s in samples]))

    def __len__(self):
        return self.count


def ecdf(measure: EmpiricalMeasure, x):
    """Right-continuous empirical CDF; ``x`` may be a scalar or an array."""
    if measure.count == 0:
        raise ContractError("ecdf of an empty measure")
    res = np.searchsorted(measure.values, x, side="right") / measure.count
    return float(res) if np.ndim(x) == 0 else res


def ks_one_sample(measure: EmpiricalMeasure, cdf: Callable) -> float:
    """Sup distance between the ECDF and ``cdf``, measured at the sample points.

    ``cdf`` must accept arrays. Each distinct sample value ``x`` is a jump of
    the ECDF; the right side compares ``ECDF(x)`` with ``cdf(x)`` and the
    left side compares ``ECDF(x-)`` with ``cdf(x-)``, the latter taken one
    ulp below ``x`` so that steps in ``cdf`` itself are handled.
    """
    n = measure.count
    if n == 0:
        raise ContractError("KS statistic of an empty measure")
    x, first = np.unique(measure.values, return_index=True)
    below = np.nextafter(x, -np.inf)
    f = np.asarray(cdf(np.concatenate([x, below])), dtype=np.float64)
    f_at, f_below = f[: x.size], f[x.size :]
    right = np.append(first[1:], n) / n
    left = first / n
    return float(max(np.abs(right - f_at).max(), np.abs(f_below - left).max()))


def ks_two_sample(a: EmpiricalMeasure, b: EmpiricalMeasure) -> float:
    """Sup over the merged support of ``|ECDF_a - ECDF_b|``; symmetric in its arguments."""
    if a.count == 0 or b.count == 0:
        raise ContractError("two-sample KS needs two nonempty measures")
    support = np.union1d(a.values, b.values)
    fa = np.searchsorted(a.values, support, side="right") / a.count
    fb = np.searchsorted(b.values, support, side="right") / b.count
    return float(np.abs(fa - fb).max())


# Bernoulli-number coefficients of the asymptotic expansion:
# psi(x) ~ log x - 1/(2x) - sum_k B_2k / (2k x^2k)
_PSI_SERIES = (1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0)


def digamma(x: float) -> float:
    """Digamma function for ``x > 0``.

    Shifts the argument up to at least 10 with ``psi(x) = psi(x+1) - 1/x``,
    then sums the asymptotic series through the ``x**-8`` term.
    """
    x = float(x)
    if not x > 0.0:
        raise ParameterDomainError(f"digamma needs x > 0, got {x}")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = inv2 * (_PSI_SERIES[0] + inv2 * (_PSI_SERIES[1] + inv2 * (_PSI_SERIES[2] + inv2 * _PSI_SERIES[3])))
    return shift + math.log(x) - 0.5 / x - tail


def _halfplane_counts(points: np.ndarray, angle: float) -> np.ndarray:
    theta = np.mod(np.angle(points) - angle, 2.0 * math.pi)
    return (theta < math.pi).sum(axis=-1).astype(np.float64)


def fourth_moment_ratio(spec, halfplane_angle: float, reps: int, rng: RandomStream) -> float:
    """Monte Carlo estimate of ``E[sum_j (h(Z_j) - E h)]^4 / n^2``.

    ``h`` is the indicator of the half-plane of arguments in
    ``[halfplane_angle, halfplane_angle + pi)``. ``E h`` comes from an
    independent pilot run of ``reps`` oracle draws; the fourth moment from
    a second run of the same size.
    """
    from .oracle import oracle_spectrum

    if reps < 100:
        raise ContractError("fourth_moment_ratio needs reps >= 100")
    n = spec.n

    def run():
        pts = np.empty((reps, n), dtype=np.complex128)
        for k in range(reps):
            res = oracle_spectrum(spec, rng)
            # angles only: phases of the rescaled eigenvalues are exact
            pts[k] = res.scaled_eigenvalues
        return _halfplane_counts(pts, halfplane_angle)

    pilot = run()
    mean_h = pilot.mean() / n
    main = run()
    centred = main - n * mean_h
    return float(np.mean(centred**4) / n**2)
