"""Finite-n scaling functions and limiting radial profiles.

For the truncated-unitary product the scaled radius
``(|Z|^2 / b_n)^(1/gamma_n)`` has a limiting CDF equal to the inverse of
``F = lim F_n``. A :class:`LimitProfile` bundles ``F``, its inverse, the
radial density ``f* = d/dy F^{-1}(y)`` and the density of the limiting
planar point ``Z`` (which is constant in the angle).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .ensembles import EnsembleKind, EnsembleSpec
from .errors import ContractError, NumericError, ParameterDomainError

INVERT_TOL = 1e-13
FD_STEP = 1e-6
FD_EDGE = 1e-4
QUAD_TOL = 1e-10


class Regime(str, enum.Enum):
    GINIBRE_POWER = "GinibrePower"
    ARC_LAW = "ArcLaw"
    GENERAL_F = "GeneralF"
    CIRCULAR_LAW = "CircularLaw"


def invert_monotone(F: Callable[[float], float], y: float, tol: float = INVERT_TOL, check: bool = True) -> float:
    """Solve ``F(x) = y`` on (0, 1) by bisection.

    ``F`` must increase from 0 to 1. The loop stops once ``|F(x) - y| <= tol``
    or after ``ceil(log2(1/tol)) + 2`` halvings, whichever comes first.
    """
    if not 0.0 < y < 1.0:
        raise ContractError(f"y must lie in (0, 1), got {y}")
    if not tol > 0.0:
        raise ContractError("tol must be positive")
    if check:
        probe = np.array([F(x) for x in np.linspace(0.0, 1.0, 33)[1:-1]])
        if np.any(np.diff(probe) < 0.0) or not np.all(np.isfinite(probe)):
            raise ContractError("F is not nondecreasing on the probe grid")
    lo, hi = 0.0, 1.0
    best, best_err = 0.5, math.inf
    for _ in range(math.ceil(math.log2(1.0 / tol)) + 2):
        mid = 0.5 * (lo + hi)
        fm = F(mid)
        err = abs(fm - y)
        if err < best_err:
            best, best_err = mid, err
        if err <= tol:
            break
        if fm < y:
            lo = mid
        else:
            hi = mid
    return best


def _fd_derivative(g: Callable[[float], float], y: float) -> float:
    h = FD_STEP
    if y < FD_EDGE:
        return (g(y + h) - g(y)) / h
    if y > 1.0 - FD_EDGE:
        return (g(y) - g(y - h)) / h
    return (g(y + h) - g(y - h)) / (2.0 * h)


@dataclass
class LimitProfile:
    """A limiting radial law.

    ``F_inverse`` is the CDF of the limiting scaled radius. ``planar_density``
    is the density of the limiting complex point at modulus ``rho``.
    ``planar_coordinate`` maps a planar modulus to the radial coordinate
    whose CDF is ``F_inverse`` (e.g. ``rho**2`` for the circular law).
    """

    regime: Regime
    params: dict
    F: Optional[Callable[[float], float]] = None
    F_inverse: Optional[Callable[[float], float]] = None
    radial_density: Optional[Callable[[float], float]] = None
    planar_density: Optional[Callable[[float], float]] = None
    planar_coordinate: Callable[[float], float] = field(default=lambda rho: rho)
    support: tuple = (0.0, 1.0)


def _exp_or_inf(x):
    # planar densities blow up at the origin; past the float range report inf
    return math.exp(x) if x < 709.0 else math.inf


def _identity(x):
    return x


def _disk_density(value: float):
    def density(rho):
        return value if 0.0 <= rho <= 1.0 else 0.0

    return density


# ---------------------------------------------------------------- finite n


def fn_finite(spec: EnsembleSpec, gamma_n: float, x: float) -> float:
    """``F_n(x) = (prod_r n_r x / (n x + l_r))^(1/gamma_n)``."""
    if spec.kind is not EnsembleKind.TRUNCATED:
        raise ContractError("F_n is defined for the truncated-unitary product")
    if not 0.0 <= x <= 1.0:
        raise ParameterDomainError(f"x must lie in [0, 1], got {x}")
    if not gamma_n >= 1.0:
        raise ContractError(f"gamma_n must be >= 1, got {gamma_n}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    return fn_finite_from_sizes(spec.n, spec.sizes, gamma_n, x)


def fn_finite_from_sizes(n: int, sizes, gamma_n: float, x):
    """Vectorised ``F_n`` over ``x`` in (0, 1] for unitary sizes ``n_r``."""
    ratio = n / np.asarray(sizes, dtype=np.float64)
    x_arr = np.asarray(x, dtype=np.float64)
    xs = np.atleast_1d(x_arr)
    # n_r x / (n x + l_r) = x / (1 - (n/n_r)(1 - x))
    with np.errstate(divide="ignore"):
        log_terms = np.log(xs)[:, None] - np.log1p(-ratio[None, :] * (1.0 - xs)[:, None])
    out = np.exp(log_terms.sum(axis=1) / gamma_n)
    out = np.where(xs == 1.0, 1.0, out)
    return float(out[0]) if x_arr.ndim == 0 else out


# ----------------------------------------------------------------- Ginibre


def ginibre_limit(m: int) -> LimitProfile:
    """Limit of ``|Z|^(2/m) / n`` for the m-fold Ginibre product: uniform on [0, 1].

    The planar density refers to the linear scaling ``Z / n^(m/2)``.
    """
    if m < 1:
        raise ParameterDomainError("m must be >= 1")
    expo = 2.0 / m - 2.0

    def planar(rho):
        if not 0.0 < rho <= 1.0:
            return 0.0
        return rho**expo / (m * math.pi)

    return LimitProfile(
        regime=Regime.GINIBRE_POWER,
        params={"m": m},
        F=_identity,
        F_inverse=_identity,
        radial_density=lambda y: 1.0 if 0.0 <= y <= 1.0 else 0.0,
        planar_density=planar,
        planar_coordinate=lambda rho: rho ** (2.0 / m),
    )


# ------------------------------------------------------ fixed m, n_j ~ n/alpha


def _general_profile(regime_params, F, F_inverse=None, radial_density=None, planar_density=None) -> LimitProfile:
    """GeneralF profile; missing pieces filled by inversion and differencing."""
    probe = np.array([F(x) for x in np.linspace(0.0, 1.0, 33)[1:-1]])
    if np.any(np.diff(probe) < 0.0):
        raise ContractError("F is not nondecreasing on the probe grid")

    if F_inverse is None:

        def F_inverse(y):
            if y <= 0.0:
                return 0.0
            if y >= 1.0:
                return 1.0
            return invert_monotone(F, y, INVERT_TOL, check=False)

    if radial_density is None:

        def radial_density(y):
            if not 0.0 < y < 1.0:
                return 0.0
            return _fd_derivative(F_inverse, y)

    if planar_density is None:

        def planar_density(rho):
            if not 0.0 < rho < 1.0:
                return 0.0
            return radial_density(rho) / (2.0 * math.pi * rho)

    return LimitProfile(
        regime=Regime.GENERAL_F,
        params=regime_params,
        F=F,
        F_inverse=F_inverse,
        radial_density=radial_density,
        planar_density=planar_density,
    )


def arc_law(params: dict) -> LimitProfile:
    return LimitProfile(regime=Regime.ARC_LAW, params=params, support=(1.0, 1.0))


def corollary1_limit(m: int, alphas: Sequence[float]) -> LimitProfile:
    """Fixed ``m`` with ``n / n_j -> alpha_j``; scaling ``gamma_n = 2``."""
    alphas = [float(a) for a in alphas]
    if len(alphas) != m:
        raise ContractError(f"need {m} alphas, got {len(alphas)}")
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise ParameterDomainError("every alpha must lie in [0, 1]")
    params = {"m": m, "alphas": alphas}
    if all(a == 1.0 for a in alphas):
        return arc_law(params)
    al = np.asarray(alphas)

    def F(x):
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        return float(math.exp(0.5 * np.sum(math.log(x) - np.log1p(-al * (1.0 - x)))))

    if all(a == alphas[0] for a in alphas):
        alpha = alphas[0]
        p = 2.0 / m

        def F_inverse(y):
            if y <= 0.0:
                return 0.0
            if y >= 1.0:
                return 1.0
            yp = y**p
            return (1.0 - alpha) * yp / (1.0 - alpha * yp)

        def radial_density(y):
            if not 0.0 < y <= 1.0:
                return 0.0
            yp = y**p
            return 2.0 * (1.0 - alpha) / m * y ** (p - 1.0) / (1.0 - alpha * yp) ** 2

        return _general_profile(params, F, F_inverse, radial_density)
    return _general_profile(params, F)


# ------------------------------------------------------- m -> inf along q(t)


class QProfile:
    """A continuous ``q: [0, 1] -> [0, 1]``, closed form or tabulated.

    Tabulated profiles are linearly interpolated between grid points.
    """

    def __init__(self, func: Optional[Callable] = None, grid=None, values=None, tag: str = "custom"):
        if (func is None) == (grid is None):
            raise ContractError("give either a closed-form q or a tabulated grid")
        self.tag = tag
        self.grid = None if grid is None else np.asarray(grid, dtype=np.float64)
        self.values = None if values is None else np.asarray(values, dtype=np.float64)
        self._func = func
        self._validate()

    @classmethod
    def constant(cls, alpha: float) -> "QProfile":
        return cls(lambda t: np.full_like(np.asarray(t, dtype=np.float64), alpha), tag=f"const:{alpha!r}")

    @classmethod
    def linear(cls, slope: float) -> "QProfile":
        return cls(lambda t: slope * np.asarray(t, dtype=np.float64), tag=f"linear:{slope!r}")

    @classmethod
    def tabulate(cls, func: Callable, points: int = 1001, tag: Optional[str] = None) -> "QProfile":
        grid = np.linspace(0.0, 1.0, points)
        return cls(grid=grid, values=func(grid), tag=tag or "tabulated")

    def _validate(self):
        if self.grid is not None:
            g, v = self.grid, self.values
            if g.shape != v.shape or g.size < 2:
                raise ContractError("q grid and values must have equal length >= 2")
            if np.any(np.diff(g) <= 0.0) or g[0] > 0.0 or g[-1] < 1.0:
                raise ContractError("q grid must be strictly increasing and cover [0, 1]")
        probe_t = np.linspace(0.0, 1.0, 1001)
        probe = self(probe_t)
        if np.any(probe < 0.0) or np.any(probe > 1.0):
            raise ContractError("q must take values in [0, 1]")
        if np.any(np.abs(np.diff(probe)) >= 0.1):
            raise ContractError("q jumps by >= 0.1 between grid points 1e-3 apart")
        inner = probe[1:-1]
        if np.any(inner <= 0.0) or np.any(inner >= 1.0):
            raise ContractError("q must satisfy 0 < q(t) < 1 on (0, 1)")

    def __call__(self, t):
        if self._func is not None:
            return self._func(t)
        return np.interp(t, self.grid, self.values)


def _quad(func, points=None):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            kwargs = {"epsabs": QUAD_TOL, "epsrel": QUAD_TOL, "limit": 4000}
            if points is not None and len(points):
                kwargs["points"] = points
            val, err = integrate.quad(func, 0.0, 1.0, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise NumericError("quadrature did not converge", {"reason": str(exc)}) from exc
    if err > 10 * QUAD_TOL:
        raise NumericError("quadrature error estimate above tolerance", {"estimate": err, "value": val})
    return val


class _PiecewiseRule:
    """Composite Gauss-Legendre on the pieces of a tabulated ``q``.

    ``q`` is linear on each piece, so smooth integrands of ``q(t)`` are
    integrated to near machine precision by 8 and 16 nodes per piece; when
    the two disagree by more than the tolerance (a near-singular piece) the
    caller falls back to adaptive quadrature.
    """

    def __init__(self, grid, values):
        self.rules = []
        for order in (8, 16):
            nodes, weights = np.polynomial.legendre.leggauss(order)
            a, b = grid[:-1, None], grid[1:, None]
            t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            w = 0.5 * (b - a) * weights
            self.rules.append((np.interp(t, grid, values), w))

    def integrate(self, kernel):
        (q8, w8), (q16, w16) = self.rules
        coarse = float(np.sum(w8 * kernel(q8)))
        fine = float(np.sum(w16 * kernel(q16)))
        return fine if abs(fine - coarse) <= QUAD_TOL else None


def _q_integral(q: QProfile, rule, kernel):
    """``int_0^1 kernel(q(t)) dt`` with ``kernel`` acting elementwise on arrays."""
    if rule is not None:
        val = rule.integrate(kernel)
        if val is not None:
            return val
        return _quad(lambda t: float(kernel(np.interp(t, q.grid, q.values))), q.grid[1:-1])
    return _quad(lambda t: float(kernel(np.asarray(q(t), dtype=np.float64))))


def corollary2_limit(q: QProfile) -> LimitProfile:
    """``m_n -> inf`` with ``n / n_j`` tracking ``q(j / m_n)``; scaling ``gamma_n = m_n``."""
    rule = None if q.grid is None else _PiecewiseRule(q.grid, q.values)

    def F(x):
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        integral = _q_integral(q, rule, lambda v: np.log1p(-v * (1.0 - x)))
        return x * math.exp(-integral)

    def f(x):
        if x <= 0.0:
            return 0.0
        integral = _q_integral(q, rule, lambda v: (1.0 - v) / (1.0 - v * (1.0 - x)))
        return F(x) / x * integral

    base = _general_profile({"q": q.tag}, F)
    F_inverse = base.F_inverse

    def radial_density(y):
        if not 0.0 < y < 1.0:
            return 0.0
        return 1.0 / f(F_inverse(y))

    def planar_density(rho):
        if not 0.0 < rho < 1.0:
            return 0.0
        return 1.0 / (2.0 * math.pi * rho * f(F_inverse(rho)))

    base.radial_density = radial_density
    base.planar_density = planar_density
    base.slope = f
    return base


# ---------------------------------------------------- n_j / n -> 1, m -> inf


def corollary3_limit(beta: float) -> LimitProfile:
    """``n / n_j -> 1`` uniformly with ``(1/n) sum l_j -> beta``.

    ``beta = 0``: arc law (``gamma_n = 2``). Finite ``beta > 0``: ``gamma_n = 2``.
    ``beta = inf``: ``gamma_n = (1/n) sum l_j``, giving the ``beta = 2`` shape.
    """
    beta = float(beta)
    if math.isnan(beta) or beta < 0.0:
        raise ParameterDomainError(f"beta must be >= 0 or infinite, got {beta}")
    params = {"beta": beta}
    if beta == 0.0:
        return arc_law(params)
    b = 2.0 if math.isinf(beta) else beta

    def F(x):
        if x <= 0.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        return math.exp(0.5 * b * (x - 1.0) / x)

    def F_inverse(y):
        if y <= 0.0:
            return 0.0
        if y >= 1.0:
            return 1.0
        return 1.0 / (1.0 - 2.0 / b * math.log(y))

    def radial_density(y):
        if not 0.0 < y <= 1.0:
            return 0.0
        return 2.0 * b / (y * (b - 2.0 * math.log(y)) ** 2)

    if math.isinf(beta):

        def planar_density(rho):
            if not 0.0 < rho < 1.0:
                return 0.0
            return _exp_or_inf(-math.log(2.0 * math.pi) - 2.0 * math.log(rho) - 2.0 * math.log1p(-math.log(rho)))

    else:

        def planar_density(rho):
            if not 0.0 < rho < 1.0:
                return 0.0
            return _exp_or_inf(math.log(b / math.pi) - 2.0 * math.log(rho) - 2.0 * math.log(b - 2.0 * math.log(rho)))

    return _general_profile(params, F, F_inverse, radial_density, planar_density)


# --------------------------------------------------------- n << n_j, m -> inf


def corollary4_limit() -> LimitProfile:
    """``max n / n_j -> 0``, ``gamma_n = m_n``: ``R`` uniform and ``sqrt(R) e^{i Theta}`` on the unit disk."""
    return LimitProfile(
        regime=Regime.CIRCULAR_LAW,
        params={},
        F=_identity,
        F_inverse=_identity,
        radial_density=lambda y: 1.0 if 0.0 <= y <= 1.0 else 0.0,
        planar_density=_disk_density(1.0 / math.pi),
        planar_coordinate=lambda rho: rho * rho,
    )


# ------------------------------------------------------------- evaluation


def limit_radial_cdf(profile: LimitProfile, y: float) -> float:
    """CDF of the limiting scaled radius at ``y``."""
    if profile.regime is Regime.ARC_LAW:
        return 1.0 if y >= 1.0 else 0.0
    if profile.regime is Regime.GENERAL_F:
        if y <= 0.0:
            return 0.0
        if y >= 1.0:
            return 1.0
        return profile.F_inverse(y)
    return min(y, 1.0) if y > 0.0 else 0.0


def radial_cdf_vector(profile: LimitProfile) -> Callable[[np.ndarray], np.ndarray]:
    """Array version of :func:`limit_radial_cdf`, for KS statistics."""
    if profile.regime in (Regime.GINIBRE_POWER, Regime.CIRCULAR_LAW):
        return lambda y: np.clip(np.asarray(y, dtype=np.float64), 0.0, 1.0)
    if profile.regime is Regime.ARC_LAW:
        return lambda y: (np.asarray(y) >= 1.0).astype(np.float64)
    return np.vectorize(lambda y: limit_radial_cdf(profile, float(y)), otypes=[np.float64])


def profile_table(profile: LimitProfile, points: int = 1001) -> dict:
    """Tabulate a profile on an equispaced grid of [0, 1] for export.

    Endpoints where a map is undefined are reported as ``None``.
    """
    grid = np.linspace(0.0, 1.0, points)

    def column(fn):
        if fn is None:
            return None
        out = []
        for x in grid:
            try:
                v = float(fn(float(x)))
            except (ZeroDivisionError, ValueError, OverflowError):
                v = None
            out.append(v if v is None or math.isfinite(v) else None)
        return out

    table = {"x": [float(x) for x in grid]}
    if profile.regime is Regime.ARC_LAW:
        table["F_inverse"] = [limit_radial_cdf(profile, float(x)) for x in grid]
        return table
    table["F"] = column(profile.F)
    table["F_inverse"] = column(profile.F_inverse)
    table["f_star"] = column(profile.radial_density)
    table["planar_density"] = column(profile.planar_density)
    return table


def numerics_record(points: int = 1001) -> dict:
    return {
        "grid_points": points,
        "grid_step": 1.0 / (points - 1),
        "inversion_tol": INVERT_TOL,
        "finite_difference_step": FD_STEP,
        "finite_difference_edge": FD_EDGE,
        "quadrature_tol": QUAD_TOL,
    }
