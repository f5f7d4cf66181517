"""Bivariate copula families used to couple borrowers to the common factor.

Five families cover the engine's needs: the independence copula, the
comonotone (upper Frechet) copula, the Gaussian copula with non-negative
correlation, and the Clayton copula together with its survival copula.
All of them are stochastically increasing (SI), i.e. concave in the second
argument, which is what makes the factor construction monotone.

Every object is a frozen dataclass; operations are pure and accept scalars
or numpy arrays (broadcasting elementwise, returning floats for scalar
input).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ._normal import bvn_cdf, norm_cdf, norm_ppf

__all__ = [
    "Copula",
    "Independence",
    "Comonotone",
    "Gaussian",
    "Clayton",
    "SurvivalClayton",
    "CheckTolerances",
    "CHECK_TOLS",
    "clayton_theta_matching_gaussian",
    "is_pointwise_leq",
    "check_si",
]


@dataclass(frozen=True)
class CheckTolerances:
    """Constants shared by the grid-based copula and profile checks.

    ``absolute`` is the slack applied to sign conditions (2-increasingness,
    concavity, pointwise ordering) whose exact value is zero up to floating
    point noise.  ``grid_step_factor`` multiplies the grid step wherever a
    discretized quantity (e.g. a Lipschitz difference quotient) picks up a
    genuine O(h) discretization term.
    """

    absolute: float = 1e-9
    grid_step_factor: float = 1.0


CHECK_TOLS = CheckTolerances()


def _as_unit(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} contains NaN")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def _as_open_unit(x, name):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} contains NaN")
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError(f"{name} must lie in the open interval (0, 1)")
    return arr


def _scalar_or_array(x, *inputs):
    if all(np.ndim(i) == 0 for i in inputs):
        return float(x)
    return x


class Copula(ABC):
    """Bivariate copula interface: CDF, conditionals, survival transform."""

    @abstractmethod
    def _cdf(self, u, v):
        """C(u, v) on validated arrays."""

    @abstractmethod
    def _conditional(self, u, v):
        """C(u | v) = d C(u, v) / dv on validated arrays, v in (0, 1)."""

    @abstractmethod
    def _inverse_conditional(self, t, v):
        """Generalized inverse of u -> C(u | v) on validated arrays."""

    @abstractmethod
    def survival(self) -> "Copula":
        """The survival copula u + v - 1 + C(1-u, 1-v), as a family member."""

    @abstractmethod
    def kendall_tau(self) -> float:
        """Kendall's tau from the family's closed form."""

    def cdf(self, u, v):
        """Evaluate C(u, v) for u, v in [0, 1]."""
        u = _as_unit(u, "u")
        v = _as_unit(v, "v")
        return _scalar_or_array(self._cdf(u, v), u, v)

    def conditional(self, u, v):
        """Evaluate C(u | v) = P(U <= u | V = v) for u in [0, 1], v in (0, 1).

        The conditional CDF only exists for almost every v, so the
        endpoints v = 0 and v = 1 are rejected rather than extended by
        limits.
        """
        u = _as_unit(u, "u")
        v = _as_open_unit(v, "v")
        return _scalar_or_array(self._conditional(u, v), u, v)

    def inverse_conditional(self, t, v):
        """Evaluate inf{u : C(u | v) >= t} for t in [0, 1], v in (0, 1)."""
        t = _as_unit(t, "t")
        v = _as_open_unit(v, "v")
        return _scalar_or_array(self._inverse_conditional(t, v), t, v)


@dataclass(frozen=True)
class Independence(Copula):
    """Product copula: C(u, v) = u v."""

    def _cdf(self, u, v):
        return u * v

    def _conditional(self, u, v):
        return np.broadcast_arrays(u, v)[0].copy()

    def _inverse_conditional(self, t, v):
        return np.broadcast_arrays(t, v)[0].copy()

    def survival(self):
        return Independence()

    def kendall_tau(self):
        return 0.0


@dataclass(frozen=True)
class Comonotone(Copula):
    """Upper Frechet copula: C(u, v) = min(u, v)."""

    def _cdf(self, u, v):
        return np.minimum(u, v)

    def _conditional(self, u, v):
        return np.where(u >= v, 1.0, 0.0)

    def _inverse_conditional(self, t, v):
        t, v = np.broadcast_arrays(t, v)
        return np.where(t > 0.0, v, 0.0)

    def survival(self):
        return Comonotone()

    def kendall_tau(self):
        return 1.0


@dataclass(frozen=True)
class Gaussian(Copula):
    """Gaussian copula with correlation parameter r in [0, 1].

    Only non-negative parameters are admitted because the factor
    construction requires the SI property, which the Gaussian copula has
    exactly for r >= 0.
    """

    r: float

    def __post_init__(self):
        if not (0.0 <= self.r <= 1.0) or math.isnan(self.r):
            raise ValueError(f"Gaussian copula parameter must lie in [0, 1], got {self.r}")

    def _cdf(self, u, v):
        if self.r == 0.0:
            return u * v
        if self.r == 1.0:
            return np.minimum(u, v)
        u, v = np.broadcast_arrays(u, v)
        out = np.zeros(u.shape)
        inner = (u > 0.0) & (v > 0.0)
        out[inner] = bvn_cdf(norm_ppf(u[inner]), norm_ppf(v[inner]), self.r)
        # uniform margins are exact on the boundary
        at_top_u = (u >= 1.0) & (v > 0.0)
        out[at_top_u] = v[at_top_u]
        at_top_v = (v >= 1.0) & (u > 0.0)
        out[at_top_v] = u[at_top_v]
        return out

    def _conditional(self, u, v):
        if self.r == 1.0:
            return np.where(u >= v, 1.0, 0.0)
        u, v = np.broadcast_arrays(u, v)
        out = np.empty(u.shape)
        inner = (u > 0.0) & (u < 1.0)
        s = math.sqrt(1.0 - self.r * self.r)
        out[inner] = norm_cdf((norm_ppf(u[inner]) - self.r * norm_ppf(v[inner])) / s)
        out[u <= 0.0] = 0.0
        out[u >= 1.0] = 1.0
        return out

    def _inverse_conditional(self, t, v):
        if self.r == 1.0:
            t, v = np.broadcast_arrays(t, v)
            return np.where(t > 0.0, v, 0.0)
        t, v = np.broadcast_arrays(t, v)
        out = np.empty(t.shape)
        inner = (t > 0.0) & (t < 1.0)
        s = math.sqrt(1.0 - self.r * self.r)
        out[inner] = norm_cdf(self.r * norm_ppf(v[inner]) + s * norm_ppf(t[inner]))
        out[t <= 0.0] = 0.0
        out[t >= 1.0] = 1.0
        return out

    def survival(self):
        # the bivariate normal is radially symmetric
        return Gaussian(self.r)

    def kendall_tau(self):
        return 2.0 / math.pi * math.asin(self.r)


def _log_expm1(x):
    """log(exp(x) - 1) for x >= 0 without overflow."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 30.0, x, np.log(np.expm1(np.minimum(x, 30.0))))


def _clayton_log_s(u, v, theta):
    """log(u^-theta + v^-theta - 1), stable for large theta and small u, v."""
    with np.errstate(divide="ignore"):
        a = -theta * np.log(u)
        b = -theta * np.log(v)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


@dataclass(frozen=True)
class Clayton(Copula):
    """Clayton copula with parameter theta > 0 (lower tail dependent)."""

    theta: float

    def __post_init__(self):
        if not (self.theta > 0.0) or math.isinf(self.theta):
            raise ValueError(f"Clayton parameter must be a finite positive real, got {self.theta}")

    def _cdf(self, u, v):
        u, v = np.broadcast_arrays(u, v)
        out = np.zeros(u.shape)
        inner = (u > 0.0) & (v > 0.0) & (u < 1.0) & (v < 1.0)
        out[inner] = np.exp(-_clayton_log_s(u[inner], v[inner], self.theta) / self.theta)
        # exact uniform margins on the boundary
        at_top_u = (u >= 1.0) & (v > 0.0)
        out[at_top_u] = v[at_top_u]
        at_top_v = (v >= 1.0) & (u > 0.0)
        out[at_top_v] = u[at_top_v]
        return out

    def _conditional(self, u, v):
        u, v = np.broadcast_arrays(u, v)
        out = np.empty(u.shape)
        inner = (u > 0.0) & (u < 1.0)
        th = self.theta
        log_s = _clayton_log_s(u[inner], v[inner], th)
        log_c = -(th + 1.0) * np.log(v[inner]) - (1.0 / th + 1.0) * log_s
        out[inner] = np.minimum(1.0, np.exp(log_c))
        out[u <= 0.0] = 0.0
        out[u >= 1.0] = 1.0
        return out

    def _inverse_conditional(self, t, v):
        t, v = np.broadcast_arrays(t, v)
        out = np.empty(t.shape)
        inner = (t > 0.0) & (t < 1.0)
        th = self.theta
        # u^-theta = v^-theta (t^(-theta/(theta+1)) - 1) + 1
        log_w = _log_expm1(-th / (th + 1.0) * np.log(t[inner]))
        log_uinv = np.logaddexp(-th * np.log(v[inner]) + log_w, 0.0)
        out[inner] = np.exp(-log_uinv / th)
        out[t <= 0.0] = 0.0
        out[t >= 1.0] = 1.0
        return out

    def survival(self):
        return SurvivalClayton(self.theta)

    def kendall_tau(self):
        return self.theta / (self.theta + 2.0)


@dataclass(frozen=True)
class SurvivalClayton(Copula):
    """Survival Clayton copula with parameter theta > 0 (upper tail dependent)."""

    theta: float

    def __post_init__(self):
        if not (self.theta > 0.0) or math.isinf(self.theta):
            raise ValueError(f"Clayton parameter must be a finite positive real, got {self.theta}")

    def _base(self):
        return Clayton(self.theta)

    def _cdf(self, u, v):
        return np.maximum(0.0, u + v - 1.0 + self._base()._cdf(1.0 - u, 1.0 - v))

    def _conditional(self, u, v):
        u, v = np.broadcast_arrays(u, v)
        out = np.empty(u.shape)
        inner = (u > 0.0) & (u < 1.0)
        out[inner] = 1.0 - self._base()._conditional(1.0 - u[inner], 1.0 - v[inner])
        out[u <= 0.0] = 0.0
        out[u >= 1.0] = 1.0
        return np.clip(out, 0.0, 1.0)

    def _inverse_conditional(self, t, v):
        # C(u|v) = 1 - C_cl(1-u | 1-v) is continuous and strictly increasing
        # in u, so the generalized inverse reduces to the Clayton one.
        t, v = np.broadcast_arrays(t, v)
        out = np.empty(t.shape)
        inner = (t > 0.0) & (t < 1.0)
        out[inner] = 1.0 - self._base()._inverse_conditional(1.0 - t[inner], 1.0 - v[inner])
        out[t <= 0.0] = 0.0
        out[t >= 1.0] = 1.0
        return out

    def survival(self):
        return Clayton(self.theta)

    def kendall_tau(self):
        return self.theta / (self.theta + 2.0)


def clayton_theta_matching_gaussian(asset_corr: float) -> float:
    """Clayton parameter with the same Kendall's tau as the Gaussian copula
    implied by an asset correlation.

    The Gaussian copula parameter is the factor loading sqrt(asset_corr);
    its tau is (2/pi) arcsin(r), and theta = 2 tau / (1 - tau) inverts the
    Clayton tau formula theta / (theta + 2).
    """
    if not (0.0 < asset_corr < 1.0) or math.isnan(asset_corr):
        raise ValueError(f"asset correlation must lie in (0, 1), got {asset_corr}")
    tau = Gaussian(math.sqrt(asset_corr)).kendall_tau()
    return 2.0 * tau / (1.0 - tau)


def _open_grid(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / (n + 1.0)


def is_pointwise_leq(a: Copula, b: Copula, grid_n: int = 64) -> bool:
    """True iff a.cdf <= b.cdf (within tolerance) on a uniform grid over (0,1)^2."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    g = _open_grid(grid_n)
    u = g[:, None]
    v = g[None, :]
    return bool(np.all(a.cdf(u, v) <= b.cdf(u, v) + CHECK_TOLS.absolute))


def check_si(c: Copula, grid_n: int = 64) -> bool:
    """True iff v -> C(u, v) is concave on the grid for every grid u.

    Concavity of the CDF in the conditioning argument is equivalent to the
    copula being stochastically increasing.
    """
    if grid_n < 3:
        raise ValueError("grid_n must be at least 3")
    g = _open_grid(grid_n)
    cvals = c.cdf(g[:, None], g[None, :])
    second = cvals[:, 2:] - 2.0 * cvals[:, 1:-1] + cvals[:, :-2]
    return bool(np.all(second <= CHECK_TOLS.absolute))
