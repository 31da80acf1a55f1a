"""Domain types and the elementary SINR/STINR value transforms.

Everything here is immutable once constructed and cheap to validate, so the
other modules can accept these records without re-checking them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, RangeError


class Scale(str, enum.Enum):
    """Scale on which moment-measure thresholds are expressed."""

    STINR = "stinr"
    SINR = "sinr"


class RatioScale(str, enum.Enum):
    STIR = "stir"
    STINR = "stinr"


class Direction(str, enum.Enum):
    STINR_TO_SINR = "stinr_to_sinr"
    SINR_TO_STINR = "sinr_to_stinr"


@dataclass(frozen=True)
class NetworkParams:
    """Physical inputs of the single-tier Poisson network.

    Parameters
    ----------
    lam : float
        Base-station density per unit area.
    beta : float
        Path-loss exponent, strictly greater than 2.
    K : float
        Path-loss constant in ``l(r) = (K r)**beta``.
    W : float
        Noise power.
    fading_moment : float
        ``E[S**(2/beta)]`` of the fading/shadowing mark ``S``.
    """

    lam: float = 1.0
    beta: float = 4.0
    K: float = 1.0
    W: float = 0.0
    fading_moment: float = 1.0

    def __post_init__(self):
        for name in ("lam", "beta", "K", "W", "fading_moment"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise RangeError(name, f"must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.lam <= 0:
            raise RangeError("lam", "density must be > 0")
        if self.beta <= 2:
            raise RangeError("beta", "path-loss exponent must satisfy beta > 2")
        if self.K <= 0:
            raise RangeError("K", "path-loss constant must be > 0")
        if self.W < 0:
            raise RangeError("W", "noise power must be >= 0")
        if self.fading_moment <= 0:
            raise RangeError("fading_moment", "E[S^(2/beta)] must be > 0")
        if not (0.0 < self.a < math.inf):
            raise RangeError("lam", "derived propagation constant a is not finite and positive")

    @property
    def a(self) -> float:
        """Propagation constant ``lam * pi * E[S^(2/beta)] / K**2``."""
        return self.lam * math.pi * self.fading_moment / self.K**2

    @property
    def alpha(self) -> float:
        return 2.0 / self.beta

    def pd_params(self) -> PDParams:
        """The Poisson-Dirichlet parameters ``(2/beta, 0)`` of the STIR process."""
        return PDParams(alpha=2.0 / self.beta, theta=0.0)

    def with_noise(self, W: float) -> NetworkParams:
        return replace(self, W=W)

    @classmethod
    def from_a(cls, a: float, beta: float, W: float = 0.0) -> NetworkParams:
        """Build parameters with unit ``K`` and fading that realise a given ``a``."""
        return cls(lam=a / math.pi, beta=beta, K=1.0, W=W, fading_moment=1.0)


def validate_network_params(raw) -> NetworkParams:
    """Validate a mapping (or an existing record) and return a `NetworkParams`.

    Accepts ``lambda`` as an alias of ``lam``. Raises `RangeError` naming the
    first offending field.
    """
    if isinstance(raw, NetworkParams):
        return NetworkParams(**{k: getattr(raw, k) for k in ("lam", "beta", "K", "W", "fading_moment")})
    data = dict(raw)
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    unknown = set(data) - {"lam", "beta", "K", "W", "fading_moment"}
    if unknown:
        raise RangeError(sorted(unknown)[0], "unknown network parameter")
    return NetworkParams(**data)


@dataclass(frozen=True)
class PDParams:
    """Two-parameter Poisson-Dirichlet parameters with 0 <= alpha < 1, theta > -alpha."""

    alpha: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "theta", float(self.theta))
        if not (0.0 <= self.alpha < 1.0):
            raise RangeError("alpha", "must satisfy 0 <= alpha < 1")
        if not (self.theta > -self.alpha) or not math.isfinite(self.theta):
            raise RangeError("theta", "must satisfy theta > -alpha")


@dataclass(frozen=True)
class MomentQuery:
    """Order ``n`` and thresholds ``(t_1, ..., t_n)`` of a factorial moment query."""

    n: int
    thresholds: tuple
    scale: Scale = Scale.STINR

    def __post_init__(self):
        scale = Scale(self.scale)
        object.__setattr__(self, "scale", scale)
        t = tuple(float(x) for x in np.atleast_1d(self.thresholds))
        object.__setattr__(self, "thresholds", t)
        if int(self.n) != self.n or self.n < 1:
            raise RangeError("n", "order must be an integer >= 1")
        object.__setattr__(self, "n", int(self.n))
        if len(t) != self.n:
            raise RangeError("thresholds", f"expected {self.n} thresholds, got {len(t)}")
        if scale is Scale.STINR:
            if any(not (0.0 < x <= 1.0) for x in t):
                raise RangeError("thresholds", "STINR thresholds must lie in (0, 1]")
        elif any(not (0.0 < x < math.inf) for x in t):
            raise RangeError("thresholds", "SINR thresholds must lie in (0, inf)")

    def stinr_thresholds(self) -> np.ndarray:
        t = np.asarray(self.thresholds, dtype=float)
        if self.scale is Scale.SINR:
            return t / (1.0 + t)
        return t

    def in_simplex(self) -> bool:
        """True when the STINR thresholds sum to strictly less than one."""
        return float(np.sum(self.stinr_thresholds())) < 1.0


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PropagationSample:
    """Increasing propagation-loss values and the total received power.

    ``total_power`` is the stored sum of ``1/y`` plus ``tail_correction``,
    the analytic expected power of the points that were not generated.
    """

    y: np.ndarray
    total_power: float
    tail_correction: float = 0.0
    truncated: bool = False

    def __post_init__(self):
        y = _frozen_array(self.y)
        object.__setattr__(self, "y", y)
        if y.ndim != 1:
            raise ValueError("y must be one-dimensional")
        if y.size and (y[0] <= 0 or not np.all(np.isfinite(y))):
            raise ValueError("propagation values must be finite and positive")
        if y.size > 1 and not np.all(np.diff(y) > 0):
            raise ValueError("propagation values must be strictly increasing (duplicate indicates a sampler bug)")
        if self.tail_correction < 0:
            raise ValueError("tail_correction must be >= 0")
        stored = float(np.sum(1.0 / y)) if y.size else 0.0
        if self.total_power < stored * (1 - 1e-12):
            raise ValueError("total_power is below the stored received power")

    @property
    def stored_power(self) -> float:
        return float(np.sum(1.0 / self.y)) if self.y.size else 0.0


@dataclass(frozen=True)
class RatioSample:
    """Decreasing STIR/STINR values ``Z'_(1) >= Z'_(2) >= ...`` on (0, 1].

    ``tail_mass`` is the share of ``W + I`` carried by the analytic tail of
    the propagation sample, so that ``sum(z) + tail_mass == I / (W + I)``.
    """

    z: np.ndarray
    scale: RatioScale
    w_over_i: float
    tail_mass: float = 0.0

    def __post_init__(self):
        z = _frozen_array(self.z)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "scale", RatioScale(self.scale))
        if z.ndim != 1:
            raise ValueError("z must be one-dimensional")
        if z.size and (np.any(z <= 0) or np.any(z > 1)):
            raise DomainError("ratio values must lie in (0, 1]")
        if z.size > 1 and not np.all(np.diff(z) < 0):
            raise ValueError("ratio values must be strictly decreasing")

    def total(self) -> float:
        """Sum of the ratio values including the analytic tail share."""
        return float(np.sum(self.z)) + self.tail_mass


def stinr_to_sinr(z_prime):
    """Map ``Z'`` in (0, 1) to ``Z = Z' / (1 - Z')``."""
    zp = np.asarray(z_prime, dtype=float)
    if np.any(~(zp > 0)) or np.any(~(zp < 1)):
        raise DomainError("STINR values must lie in the open interval (0, 1)")
    out = zp / (1.0 - zp)
    return float(out) if out.ndim == 0 else out


def sinr_to_stinr(z):
    """Map ``Z`` in (0, inf) to ``Z' = Z / (1 + Z)``."""
    zz = np.asarray(z, dtype=float)
    if np.any(~(zz > 0)) or np.any(~np.isfinite(zz)):
        raise DomainError("SINR values must lie in (0, inf)")
    out = zz / (1.0 + zz)
    return float(out) if out.ndim == 0 else out


def sinr_stinr_transform(value, direction: Direction | str):
    """Apply the SINR/STINR bijection in the requested direction."""
    direction = Direction(direction)
    if direction is Direction.STINR_TO_SINR:
        return stinr_to_sinr(value)
    return sinr_to_stinr(value)


def hat_transform(thresholds: Sequence[float]) -> np.ndarray:
    """``t_i / (1 - sum_j t_j)`` for thresholds strictly inside the simplex."""
    t = np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise DomainError("thresholds must be a non-empty vector")
    if np.any(t <= 0):
        raise DomainError("thresholds must be positive")
    rest = 1.0 - float(np.sum(t))
    if rest <= 0:
        raise DomainError("thresholds must sum to less than one")
    return t / rest


def unhat_transform(t_hat: Sequence[float]) -> np.ndarray:
    """Inverse of `hat_transform`: ``t_hat_i / (1 + sum_j t_hat_j)``."""
    h = np.asarray(t_hat, dtype=float)
    if np.any(h <= 0):
        raise DomainError("transformed thresholds must be positive")
    return h / (1.0 + float(np.sum(h)))
