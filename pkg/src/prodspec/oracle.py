"""Brute-force ground truth: actual random matrices and their eigenvalues.

Only meant for small ``n``; the structural samplers in :mod:`ensembles`
are checked against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _eig
from .ensembles import EnsembleKind, EnsembleSpec
from .errors import ContractError, NumericError, OracleGuardError
from .rng import RandomStream

ORACLE_MAX_N = 64
DEFLATION_TOL = 1e-12


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues of ``exp(log_scale) * M_scaled``.

    ``scaled_eigenvalues`` belong to the rescaled matrix; the true moduli
    are recovered in log form by :attr:`log_sq_moduli`. ``residual`` is the
    largest subdiagonal entry discarded during deflation, relative to the
    Frobenius norm of the (balanced) Hessenberg matrix.
    """

    scaled_eigenvalues: np.ndarray
    residual: float
    log_scale: float = 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.scaled_eigenvalues * math.exp(self.log_scale)

    @property
    def log_sq_moduli(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 2.0 * (np.log(np.abs(self.scaled_eigenvalues)) + self.log_scale)

    @property
    def arguments(self) -> np.ndarray:
        return np.mod(np.angle(self.scaled_eigenvalues), 2.0 * math.pi)


def sample_ginibre_matrix(n: int, rng: RandomStream) -> np.ndarray:
    """``n x n`` matrix of i.i.d. standard complex normals (E|x|^2 = 1)."""
    if n < 1:
        raise ContractError("n must be >= 1")
    g = rng.generator.standard_normal((2, n, n))
    return (g[0] + 1j * g[1]) * math.sqrt(0.5)


def sample_haar_unitary(n: int, rng: RandomStream) -> np.ndarray:
    """Haar unitary from the QR factorisation of a Ginibre draw.

    Columns of Q are rotated by the phases of diag(R), which makes the
    factorisation unique and the result Haar distributed.
    """
    for attempt in range(2):
        z = sample_ginibre_matrix(n, rng)
        if attempt:
            z = z + 1e-8 * sample_ginibre_matrix(n, rng)
        q, r = np.linalg.qr(z)
        d = np.diagonal(r)
        ad = np.abs(d)
        if ad.min() > 1e-300 * max(1.0, ad.max()):
            return q * (d / ad)
    raise NumericError("rank-deficient Ginibre draw while sampling a Haar unitary", {"n": n})


def truncate_top_left(M: np.ndarray, n: int) -> np.ndarray:
    """Leading principal ``n x n`` block."""
    if n < 1 or n > M.shape[0]:
        raise ContractError(f"cannot take a {n}x{n} block of a {M.shape[0]}x{M.shape[0]} matrix")
    return M[:n, :n].copy()


def eigenvalues(M: np.ndarray, tol: float = DEFLATION_TOL, log_scale: float = 0.0) -> SpectrumResult:
    """All eigenvalues of a square complex matrix.

    Balancing, Hessenberg reduction and shifted QR; at most ``30 n`` sweeps.
    """
    a = np.array(M, dtype=np.complex128, order="C", copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError("eigenvalues needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix has non-finite entries")
    if not tol > 0.0:
        raise ContractError("tol must be positive")
    n = a.shape[0]
    _eig.balance(a)
    _eig.hessenberg(a)
    fro = float(np.linalg.norm(a))
    eig = np.zeros(n, dtype=np.complex128)
    status, sweeps, neglected, hi = _eig.hessenberg_qr(a, tol, 30 * n, eig)
    if status != _eig.STATUS_OK:
        raise NumericError(
            "QR iteration did not converge",
            {"sweeps": sweeps, "undeflated_rows": hi + 1, "converged": eig[hi + 1 :].copy(), "status": status},
        )
    residual = neglected / fro if fro > 0.0 else 0.0
    return SpectrumResult(eig, residual, log_scale)


def _accumulate_product(factors) -> tuple[np.ndarray, float]:
    """``X_m ... X_1`` with the running max row norm split off into a log scale."""
    prod = None
    log_scale = 0.0
    for x in factors:
        prod = x if prod is None else x @ prod
        s = float(np.sqrt((np.abs(prod) ** 2).sum(axis=1)).max())
        if s > 0.0:
            prod = prod / s
            log_scale += math.log(s)
    return prod, log_scale


def sample_factors(spec: EnsembleSpec, rng: RandomStream):
    """The ``m`` factor matrices ``X_1, ..., X_m`` of one draw."""
    if spec.kind is EnsembleKind.GINIBRE:
        return [sample_ginibre_matrix(spec.n, rng) for _ in range(spec.m)]
    return [truncate_top_left(sample_haar_unitary(size, rng), spec.n) for size in spec.sizes]


def oracle_spectrum(spec: EnsembleSpec, rng: RandomStream) -> SpectrumResult:
    """Eigenvalues of one sampled product ``X_m ... X_1``."""
    if spec.n > ORACLE_MAX_N:
        raise OracleGuardError(
            f"oracle refuses n={spec.n} > {ORACLE_MAX_N}: dense eigensolves are for validation at desk scale; "
            "use ensembles.sample_radii for large n"
        )
    prod, log_scale = _accumulate_product(sample_factors(spec, rng))
    return eigenvalues(prod, log_scale=log_scale)


def oracle_spectra(spec: EnsembleSpec, rng: RandomStream, reps: int) -> list[SpectrumResult]:
    return [oracle_spectrum(spec, rng) for _ in range(reps)]


def oracle_log_sq_moduli(spec: EnsembleSpec, rng: RandomStream, reps: int) -> np.ndarray:
    """``(reps, n)`` array of ``log |Z|^2`` from independent oracle draws."""
    out = np.empty((reps, spec.n))
    for k, res in enumerate(oracle_spectra(spec, rng, reps)):
        out[k] = res.log_sq_moduli
    return out


def spectrum_rows(results, first_replicate: int = 0):
    """Rows ``replicate, re, im, log_sq_modulus, argument`` for CSV export."""
    for rep, res in enumerate(results, first_replicate):
        ev = res.eigenvalues
        for z, lsq, arg in zip(ev, res.log_sq_moduli, res.arguments):
            yield rep, z.real, z.imag, lsq, arg
