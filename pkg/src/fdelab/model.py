"""Model parameters for u_t = Δ(u^m) in the very fast diffusion range."""
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooSmall, ExponentOutOfRange, NonpositiveFloor


@dataclass(frozen=True)
class ExponentWindows:
    """The three critical singularity exponents, in increasing order.

    ``gamma_low = 2/(1-m)`` is the weakest admissible singular strength,
    ``gamma_cauchy = n`` separates relaxation to the floor from other
    behaviour, and ``gamma_high = (n-2)/m`` is the strength beyond which the
    solution grows without bound on compact sets.
    """

    gamma_low: float
    gamma_cauchy: float
    gamma_high: float

    def as_tuple(self):
        return (self.gamma_low, self.gamma_cauchy, self.gamma_high)


@dataclass(frozen=True)
class ModelParams:
    n: int
    m: float
    mu0: float

    def __post_init__(self):
        _check(self.n, self.m, self.mu0)

    @property
    def m_critical(self):
        """Upper end (n-2)/n of the admissible m range (excluded)."""
        return (self.n - 2) / self.n

    @property
    def windows(self):
        return exponent_windows(self)

    def to_dict(self):
        return {"n": self.n, "m": self.m, "mu0": self.mu0}


def _check(n, m, mu0):
    if int(n) != n or n < 3:
        raise DimensionTooSmall(f"dimension n={n} must be an integer >= 3")
    bound = (n - 2) / n
    if not (np.isfinite(m) and 0.0 < m < bound):
        raise ExponentOutOfRange(
            f"m={m} violates 0 < m < (n-2)/n = {bound:.6g} for n={n}"
        )
    if not (np.isfinite(mu0) and mu0 > 0.0):
        raise NonpositiveFloor(f"floor mu0={mu0} must be > 0")


def validate_params(n, m, mu0):
    """Return a validated :class:`ModelParams` or raise.

    The endpoint ``m == (n-2)/n`` is rejected.
    """
    _check(n, m, mu0)
    return ModelParams(int(n), float(m), float(mu0))


def exponent_windows(p):
    return ExponentWindows(
        gamma_low=2.0 / (1.0 - p.m),
        gamma_cauchy=float(p.n),
        gamma_high=(p.n - 2) / p.m,
    )
