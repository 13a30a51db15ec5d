"""Kernel utilities for rotation-invariant determinantal point processes.

A density proportional to ``prod_{j<k} |z_j - z_k|^2 prod_j phi(|z_j|)``
is determinantal with kernel ``K(z, w) = sum_{k<n} (z conj(w))^k / c_k``
against the background measure ``phi(|z|) dz``, where
``c_k = 2 pi int_0^inf x^(2k+1) phi(x) dx``. Constants are kept as logs
because ``c_k`` grows like ``k!`` for the Gaussian weight.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import ContractError, NumericError, ParameterDomainError


class WeightKind(str, enum.Enum):
    GINIBRE_M1 = "ginibre"
    TRUNCATED_M1 = "truncated"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class RadialWeight:
    """Radial weight ``phi``.

    * ``GINIBRE_M1``: ``phi(x) = exp(-x^2)`` on ``[0, inf)``
    * ``TRUNCATED_M1``: ``phi(x) = (l / pi) (1 - x^2)^(l-1)`` on ``[0, 1)``
    * ``TABULATED``: linear interpolation of ``(x, phi)`` pairs, zero past the last x
    """

    kind: WeightKind
    l: int = 1
    x: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if self.kind is WeightKind.TRUNCATED_M1 and (int(self.l) != self.l or self.l < 1):
            raise ParameterDomainError(f"truncation gap l must be a positive integer, got {self.l}")
        if self.kind is WeightKind.TABULATED:
            x = np.asarray(self.x, dtype=np.float64)
            phi = np.asarray(self.phi, dtype=np.float64)
            if x.ndim != 1 or x.shape != phi.shape or x.size < 2:
                raise ContractError("tabulated weight needs matching 1-d x and phi arrays")
            if np.any(np.diff(x) <= 0.0) or x[0] < 0.0:
                raise ContractError("tabulated x must be nonnegative and strictly increasing")
            if np.any(phi < 0.0) or not np.all(np.isfinite(phi)):
                raise ContractError("tabulated phi must be finite and nonnegative")
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "phi", phi)

    @classmethod
    def ginibre(cls) -> "RadialWeight":
        return cls(WeightKind.GINIBRE_M1)

    @classmethod
    def truncated(cls, l: int) -> "RadialWeight":
        return cls(WeightKind.TRUNCATED_M1, l=int(l))

    @classmethod
    def tabulated(cls, x, phi) -> "RadialWeight":
        return cls(WeightKind.TABULATED, x=x, phi=phi)

    @classmethod
    def from_csv(cls, path) -> "RadialWeight":
        """Read a ``x,phi`` CSV (header required; ``#`` lines ignored)."""
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        header = [h.strip() for h in rows[0]]
        if header != ["x", "phi"]:
            raise ContractError(f"weight CSV header must be 'x,phi', got {','.join(header)}")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls.tabulated(data[:, 0], data[:, 1])

    @property
    def support_max(self) -> float:
        if self.kind is WeightKind.GINIBRE_M1:
            return math.inf
        if self.kind is WeightKind.TRUNCATED_M1:
            return 1.0
        return float(self.x[-1])

    def log_phi(self, r):
        """``log phi(r)``, ``-inf`` where the weight vanishes."""
        r = np.asarray(r, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind is WeightKind.GINIBRE_M1:
                out = -r * r
            elif self.kind is WeightKind.TRUNCATED_M1:
                inside = r < 1.0
                base = np.where(inside, 1.0 - r * r, 1.0)
                out = math.log(self.l / math.pi) + (self.l - 1) * np.log(base)
                out = np.where(inside, out, -np.inf)
            else:
                vals = np.interp(r, self.x, self.phi, left=self.phi[0], right=0.0)
                vals = np.where(r > self.x[-1], 0.0, vals)
                out = np.log(vals)
        return out

    def __call__(self, r):
        return np.exp(self.log_phi(r))


def _closed_form_log_ck(weight: RadialWeight, k: int) -> Optional[float]:
    if weight.kind is WeightKind.GINIBRE_M1:
        return math.log(math.pi) + math.lgamma(k + 1)
    if weight.kind is WeightKind.TRUNCATED_M1:
        l = weight.l
        return math.log(l) + math.lgamma(k + 1) + math.lgamma(l) - math.lgamma(k + 1 + l)
    return None


def _piecewise_log_ck(weight: RadialWeight, k: int) -> float:
    # phi is linear on each segment, so x^(2k+1) phi(x) is a polynomial of
    # degree 2k+2 there and k+2 Gauss-Legendre nodes integrate it exactly.
    nodes, wts = np.polynomial.legendre.leggauss(k + 2)
    a, b = weight.x[:-1, None], weight.x[1:, None]
    half = 0.5 * (b - a)
    x = a + half * (nodes + 1.0)
    phi = np.interp(x, weight.x, weight.phi)
    with np.errstate(divide="ignore"):
        logs = (2 * k + 1) * np.log(x) + np.log(phi) + np.log(half * wts)
    total = logsumexp(logs)
    if not np.isfinite(total):
        raise ParameterDomainError(f"moment integral for k={k} is zero or divergent")
    return math.log(2.0 * math.pi) + float(total)


def _quadrature_log_ck(weight: RadialWeight, k: int) -> float:
    if weight.kind is WeightKind.TABULATED:
        return _piecewise_log_ck(weight, k)
    # u = x^2: c_k = pi * int_0^U u^k phi(sqrt u) du. The integrand is
    # rescaled by its value at the mode so quad works on O(1) numbers.
    upper = weight.support_max
    upper_u = upper * upper

    def log_integrand(u):
        if u <= 0.0:
            return -math.inf if k > 0 else float(weight.log_phi(0.0))
        return k * math.log(u) + float(weight.log_phi(math.sqrt(u)))

    if math.isinf(upper_u):
        probe = np.concatenate([np.linspace(0.0, 4.0 * (k + 1), 801)[1:], np.geomspace(4.0 * (k + 1), 1e4 * (k + 1), 200)])
    else:
        probe = np.linspace(0.0, upper_u, 2001)[1:]
    logs = np.array([log_integrand(u) for u in probe])
    if not np.any(np.isfinite(logs)):
        raise NumericError("weight moment integrand vanishes", {"k": k})
    imax = int(np.nanargmax(np.where(np.isfinite(logs), logs, -np.inf)))
    peak, u_peak = logs[imax], probe[imax]

    def scaled(u):
        v = log_integrand(u) - peak
        return math.exp(v) if v > -745.0 else 0.0

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if math.isinf(upper_u):
                width = math.sqrt(k + 1.0)
                split = u_peak + 40.0 * width + 40.0
                head, e1 = integrate.quad(scaled, 0.0, split, points=[u_peak], epsabs=0.0, epsrel=1e-13, limit=500)
                tail, e2 = integrate.quad(scaled, split, math.inf, epsabs=0.0, epsrel=1e-13, limit=500)
                total, err = head + tail, e1 + e2
            else:
                brk = [u_peak] if 0.0 < u_peak < upper_u else None
                total, err = integrate.quad(scaled, 0.0, upper_u, points=brk, epsabs=0.0, epsrel=1e-13, limit=2000)
        except integrate.IntegrationWarning as exc:
            raise NumericError("weight moment quadrature did not converge", {"k": k, "reason": str(exc)}) from exc
    if not total > 0.0 or not math.isfinite(total):
        raise ParameterDomainError(f"moment integral for k={k} is zero or divergent")
    if err > 1e-9 * total:
        raise NumericError("weight moment quadrature inaccurate", {"k": k, "value": total, "error": err})
    return math.log(math.pi) + peak + math.log(total)


def compute_ck(weight: RadialWeight, k: int, method: str = "auto") -> float:
    """``log c_k``; closed form where available unless ``method='quadrature'``."""
    if int(k) != k or k < 0:
        raise ParameterDomainError(f"k must be a nonnegative integer, got {k}")
    if method not in ("auto", "closed", "quadrature"):
        raise ContractError(f"unknown method {method!r}")
    if method != "quadrature":
        closed = _closed_form_log_ck(weight, int(k))
        if closed is not None:
            return closed
        if method == "closed":
            raise ContractError("no closed form for a tabulated weight")
    return _quadrature_log_ck(weight, int(k))


@dataclass(frozen=True)
class KernelSpec:
    """Constants ``log c_0 .. log c_{n-1}`` and the weight they come from."""

    n: int
    log_c: np.ndarray
    weight: RadialWeight

    @classmethod
    def build(cls, n: int, weight: RadialWeight, method: str = "auto") -> "KernelSpec":
        if n < 1:
            raise ParameterDomainError("n must be >= 1")
        log_c = np.array([compute_ck(weight, k, method) for k in range(n)])
        log_c.flags.writeable = False
        return cls(n, log_c, weight)


def normalizing_constant(n: int, weight: RadialWeight) -> float:
    """``log C`` with ``1/C = n! c_0 ... c_{n-1}``."""
    if n < 1:
        raise ParameterDomainError("n must be >= 1")
    return -(math.lgamma(n + 1) + sum(compute_ck(weight, k) for k in range(n)))


def kernel_eval(spec: KernelSpec, z: complex, w: complex) -> complex:
    """``K(z, w)`` by Horner's rule on the ratios ``c_{k-1} / c_k``."""
    u = complex(z) * complex(w).conjugate()
    ratios = np.exp(np.diff(spec.log_c))  # c_k / c_{k-1}
    acc = 1.0 + 0.0j
    for k in range(spec.n - 1, 0, -1):
        acc = 1.0 + u * acc / ratios[k - 1]
    return acc * math.exp(-spec.log_c[0])


def radial_density_Pn(spec: KernelSpec, r):
    """Density of ``|Z_1|``: the uniform mixture of ``p_j(y) ~ y^(2j-1) phi(y)``."""
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(r_arr < 0.0):
        raise ContractError("P_n is defined for r >= 0")
    j = np.arange(1, spec.n + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_r = np.log(r_arr)[..., None]
        # p_j(y) = 2 pi y^(2j-1) phi(y) / c_{j-1}
        terms = math.log(2.0 * math.pi) + (2.0 * j - 1.0) * log_r - spec.log_c
    log_p = logsumexp(terms, axis=-1) - math.log(spec.n) + spec.weight.log_phi(r_arr)
    out = np.exp(log_p)
    return float(out) if r_arr.ndim == 0 else out


def one_point_density(spec: KernelSpec, z: complex) -> float:
    """Density (w.r.t. area) of one eigenvalue: ``K(z, z) phi(|z|) / n``."""
    r = abs(complex(z))
    with np.errstate(divide="ignore"):
        log_r2 = 2.0 * math.log(r) if r > 0.0 else -math.inf
    k = np.arange(spec.n, dtype=np.float64)
    terms = k * log_r2 - spec.log_c if r > 0.0 else np.where(k == 0, -spec.log_c, -np.inf)
    log_k = logsumexp(terms)
    return float(math.exp(log_k - math.log(spec.n) + float(spec.weight.log_phi(r))))
