"""Fractional exponent bookkeeping: s, p, the Riesz normalization c_s, critical exponent."""
from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Raised when a parameter lies outside its admissible range."""


def cs_constant(s: float) -> float:
    """Normalization constant of the fractional Laplacian in three dimensions.

    ``c_s = s 2^{2s} Gamma((3+2s)/2) / (pi^{3/2} Gamma(1-s))``, chosen so that the
    singular integral has Fourier symbol ``|xi|^{2s}``.
    """
    s = float(s)
    if not (0.0 < s < 1.0) or math.isnan(s):
        raise DomainError(f"s must lie in (0, 1), got {s!r}")
    log_val = (
        math.log(s)
        + 2.0 * s * math.log(2.0)
        + math.lgamma((3.0 + 2.0 * s) / 2.0)
        - 1.5 * math.log(math.pi)
        - math.lgamma(1.0 - s)
    )
    return math.exp(log_val)


def critical_exponent(s: float) -> float:
    """Fractional Sobolev exponent 6/(3-2s)."""
    return 6.0 / (3.0 - 2.0 * s)


@dataclass(frozen=True)
class FractionalParams:
    s: float
    p: float

    def __post_init__(self):
        if not (0.0 < self.s < 1.0):
            raise DomainError(f"s must lie in (0, 1), got {self.s!r}")
        p_crit = critical_exponent(self.s)
        # small slack so that p = p_crit computed in a different order still passes
        if not (2.0 < self.p <= p_crit * (1 + 1e-14)):
            raise DomainError(f"p must satisfy 2 < p <= {p_crit:.6g}, got {self.p!r}")

    @property
    def c_s(self) -> float:
        return cs_constant(self.s)

    @property
    def p_crit(self) -> float:
        return critical_exponent(self.s)

    @property
    def is_critical(self) -> bool:
        return abs(self.p - self.p_crit) <= 1e-12 * self.p_crit

    @classmethod
    def critical(cls, s: float) -> "FractionalParams":
        return cls(s=s, p=critical_exponent(s))

    def to_dict(self) -> dict:
        return {"s": self.s, "p": self.p, "c_s": self.c_s, "p_crit": self.p_crit}
