"""Structural samplers for eigenvalue moduli of the two product ensembles.

For a product of ``m`` independent ``n x n`` complex Ginibre matrices the
multiset ``{|Z_j|^2}`` has the law of ``{prod_r s_{j,r}}`` with independent
``s_{j,r} ~ Gamma(j)``. For a product of top-left ``n x n`` truncations of
Haar unitaries of sizes ``n + l_r`` the same holds with
``s_{j,r} ~ Beta(j, l_r)``. Both are sampled here as sums of log variates.

Angles attached by :func:`attach_angles` are i.i.d. uniform. This reproduces
the one-point law (angle uniform and independent of modulus) and every
statement about limiting empirical measures, but NOT the joint law of the
eigenvalue arguments; joint angular statistics computed from these samples
are meaningless.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ContractError, ParameterDomainError
from .rng import RandomStream
from .sampling import _log_gamma_variates, sample_angle
from .stats import EmpiricalMeasure, digamma


class EnsembleKind(str, enum.Enum):
    GINIBRE = "ginibre"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameters of a product ensemble.

    ``gaps`` holds ``l_1..l_m`` for the truncated ensemble, where factor
    ``r`` is cut from an ``(n + l_r) x (n + l_r)`` Haar unitary.
    """

    kind: EnsembleKind
    n: int
    m: int
    gaps: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        object.__setattr__(self, "gaps", tuple(int(g) for g in self.gaps))
        if int(self.n) != self.n or self.n < 1:
            raise ContractError(f"n must be a positive integer, got {self.n}")
        if int(self.m) != self.m or self.m < 1:
            raise ContractError(f"m must be a positive integer, got {self.m}")
        if self.kind is EnsembleKind.TRUNCATED:
            if len(self.gaps) != self.m:
                raise ContractError(f"truncated ensemble needs m={self.m} gaps, got {len(self.gaps)}")
            if min(self.gaps) < 1:
                raise ContractError("every gap l_r must be >= 1 (n < n_r)")
        elif self.gaps:
            raise ContractError("gaps only apply to the truncated ensemble")

    @classmethod
    def ginibre(cls, n: int, m: int) -> "EnsembleSpec":
        return cls(EnsembleKind.GINIBRE, n, m)

    @classmethod
    def truncated(cls, n: int, gaps: Sequence[int]) -> "EnsembleSpec":
        gaps = tuple(gaps)
        return cls(EnsembleKind.TRUNCATED, n, len(gaps), gaps)

    @property
    def sizes(self) -> tuple[int, ...]:
        """Full unitary sizes ``n_r = n + l_r`` (truncated ensemble)."""
        return tuple(self.n + g for g in self.gaps)

    def log_b(self) -> float:
        """``log b_n = sum_r log(n / n_r)`` for the truncated ensemble."""
        if self.kind is not EnsembleKind.TRUNCATED:
            raise ContractError("b_n is defined for the truncated ensemble only")
        g = np.asarray(self.gaps, dtype=np.float64)
        return float(-np.log1p(g / self.n).sum())


@dataclass(frozen=True)
class LogRadialSample:
    """One draw of the ``n`` moduli, stored as ``log |Z_j|^2`` for j = 1..n."""

    spec: EnsembleSpec
    log_sq_moduli: np.ndarray
    angles: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.log_sq_moduli.shape[-1] != self.spec.n:
            raise ContractError("sample length must equal spec.n")

    @property
    def moduli(self) -> np.ndarray:
        return np.exp(0.5 * self.log_sq_moduli)


class ScalingKind(str, enum.Enum):
    GINIBRE_POWER = "ginibre-power"
    TRUNCATED_POWER = "truncated-power"
    LINEAR = "linear"


@dataclass(frozen=True)
class ScalingRule:
    """A radial map ``h_n`` applied to eigenvalue moduli.

    * ``GINIBRE_POWER``: ``h(r) = r^(2/m) / n``
    * ``TRUNCATED_POWER``: ``h(r) = (r^2 / b_n)^(1/gamma_n)``
    * ``LINEAR``: ``h(r) = r / a_n``

    ``log_scale`` holds ``log b_n`` or ``log a_n`` as appropriate.
    """

    kind: ScalingKind
    gamma_n: float = 1.0
    log_scale: float = 0.0
    m: int = 1
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ScalingKind(self.kind))
        if self.kind is ScalingKind.TRUNCATED_POWER and not self.gamma_n >= 1.0:
            raise ContractError(f"gamma_n must be >= 1, got {self.gamma_n}")

    @classmethod
    def ginibre_power(cls, spec: EnsembleSpec) -> "ScalingRule":
        return cls(ScalingKind.GINIBRE_POWER, m=spec.m, n=spec.n)

    @classmethod
    def truncated_power(cls, spec: EnsembleSpec, gamma_n: float) -> "ScalingRule":
        return cls(ScalingKind.TRUNCATED_POWER, gamma_n=float(gamma_n), log_scale=spec.log_b(), m=spec.m, n=spec.n)

    @classmethod
    def linear(cls, spec: EnsembleSpec, log_a: Optional[float] = None) -> "ScalingRule":
        """Linear scaling; the default ``a_n`` is ``n^(m/2)`` (Ginibre) or ``sqrt(b_n)`` (truncated)."""
        if log_a is None:
            if spec.kind is EnsembleKind.GINIBRE:
                log_a = 0.5 * spec.m * math.log(spec.n)
            else:
                log_a = 0.5 * spec.log_b()
        return cls(ScalingKind.LINEAR, log_scale=float(log_a), m=spec.m, n=spec.n)


def _check_rule(spec: EnsembleSpec, rule: ScalingRule):
    if rule.kind is ScalingKind.GINIBRE_POWER and spec.kind is not EnsembleKind.GINIBRE:
        raise ContractError("ginibre-power scaling requires a Ginibre product")
    if rule.kind is ScalingKind.TRUNCATED_POWER and spec.kind is not EnsembleKind.TRUNCATED:
        raise ContractError("truncated-power scaling requires a truncated-unitary product")
    if rule.kind is not ScalingKind.LINEAR and (rule.m, rule.n) != (spec.m, spec.n):
        raise ContractError("scaling rule was built for a different (n, m)")


def _factor_shapes(spec: EnsembleSpec):
    """Shape parameters laid out ``(m, n)`` so the sum over factors runs on whole rows."""
    j = np.arange(1, spec.n + 1, dtype=np.int64)[None, :]
    a = np.ascontiguousarray(np.broadcast_to(j, (spec.m, spec.n)))
    if spec.kind is EnsembleKind.GINIBRE:
        return a, None
    b = np.ascontiguousarray(np.broadcast_to(np.asarray(spec.gaps, dtype=np.int64)[:, None], (spec.m, spec.n)))
    return a, b


def sample_log_sq_moduli(spec: EnsembleSpec, rng: RandomStream, reps: int = 1) -> np.ndarray:
    """Array of shape ``(reps, n)``; row ``k`` is one independent draw.

    Entry ``[k, j-1]`` is ``sum_r log s_{j,r}``.
    """
    if reps < 1:
        raise ContractError("reps must be >= 1")
    a, b = _factor_shapes(spec)
    gen = rng.generator
    log_s = _log_gamma_variates(a, gen, reps)
    if b is not None:
        log_b = _log_gamma_variates(b, gen, reps)
        log_s -= np.logaddexp(log_s, log_b)
        np.minimum(log_s, 0.0, out=log_s)
    return log_s.sum(axis=1)


def sample_radii(spec: EnsembleSpec, rng: RandomStream) -> LogRadialSample:
    """One exact draw of the eigenvalue moduli (as ``log |Z_j|^2``), no angles."""
    return LogRadialSample(spec, sample_log_sq_moduli(spec, rng, 1)[0])


def attach_angles(sample: LogRadialSample, rng: RandomStream) -> LogRadialSample:
    """Fill in i.i.d. uniform angles, independent of the moduli."""
    if sample.angles is not None:
        raise ContractError("angles already attached")
    theta = sample_angle(rng, size=sample.log_sq_moduli.shape)
    return replace(sample, angles=theta)


def scaled_log_values(log_sq_moduli, spec: EnsembleSpec, rule: ScalingRule) -> np.ndarray:
    """``log h_n(|Z_j|)`` computed from ``log |Z_j|^2`` without leaving the log domain."""
    _check_rule(spec, rule)
    x = np.asarray(log_sq_moduli, dtype=np.float64)
    if rule.kind is ScalingKind.GINIBRE_POWER:
        return x / rule.m - math.log(rule.n)
    if rule.kind is ScalingKind.TRUNCATED_POWER:
        return (x - rule.log_scale) / rule.gamma_n
    return 0.5 * x - rule.log_scale


def apply_scaling(sample: LogRadialSample, rule: ScalingRule) -> EmpiricalMeasure:
    """Empirical measure of the scaled radii ``h_n(|Z_j|)``."""
    return EmpiricalMeasure(np.exp(scaled_log_values(sample.log_sq_moduli, sample.spec, rule)))


def exact_moment_per_j(spec: EnsembleSpec, t: float) -> np.ndarray:
    """``E |Z_j|^{2t}`` for each structural index j = 1..n."""
    if not t > -1.0:
        raise ParameterDomainError(f"moment order must satisfy t > -1, got {t}")
    j = np.arange(1, spec.n + 1, dtype=np.float64)
    lg = np.vectorize(math.lgamma, otypes=[np.float64])
    if spec.kind is EnsembleKind.GINIBRE:
        log_m = spec.m * (lg(j + t) - lg(j))
    else:
        log_m = np.zeros(spec.n)
        for l in spec.gaps:
            # B(j+t, l) / B(j, l) = Gamma(j+t) Gamma(j+l) / (Gamma(j) Gamma(j+t+l))
            log_m += lg(j + t) - lg(j) + lg(j + l) - lg(j + t + l)
    return np.exp(log_m)


def exact_moment(spec: EnsembleSpec, t: float) -> float:
    """``E |Z_J|^{2t}`` with J uniform on ``{1..n}``."""
    return float(exact_moment_per_j(spec, t).mean())


def exact_log_mean(spec: EnsembleSpec, j: int) -> float:
    """``E log |Z_j|^2`` for structural index ``j`` (1-based)."""
    if not 1 <= j <= spec.n:
        raise ContractError(f"index j must lie in 1..{spec.n}, got {j}")
    if spec.kind is EnsembleKind.GINIBRE:
        return spec.m * digamma(j)
    psi_j = digamma(j)
    return sum(psi_j - digamma(j + l) for l in spec.gaps)
