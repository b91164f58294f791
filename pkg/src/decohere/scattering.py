"""Dephasing by elastic boson scattering.

Only the Markovian low-density Born rate is modelled,

    gamma = pi int |f(w)|^4 n(w) dw = pi int F(w)^2 n(w) dw,    F = |f|^2,

together with a family of box profiles that keeps gamma fixed while the
coupling norm ||f||^2 shrinks like sqrt(width). The underlying two-channel
Fock-space dynamics is not simulated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import formfactor as ff
from .errors import DivergentIntegral, InvalidTarget, InvalidWeight
from .formfactor import Kind, SpectralWeight

__all__ = [
    "Density",
    "ScatteringChannel",
    "FamilyMember",
    "scattering_rate",
    "box_weight",
    "small_norm_family",
]


@dataclass(frozen=True)
class Density:
    """Boson occupation n(w) >= 0.

    ``ir_exponent`` is the order of n near w = 0 (0 for bounded densities,
    -1 for the Bose function ~ T/w). ``regular`` returns n(w) w^-ir_exponent
    and must stay finite at w = 0; it defaults to ``fn`` when the exponent
    is 0.
    """

    fn: Callable[[float], float]
    ir_exponent: float = 0.0
    label: str = "custom"
    regular: Callable[[float], float] | None = None

    def __call__(self, w):
        return self.fn(w)

    @classmethod
    def constant(cls, n0: float) -> "Density":
        if n0 < 0:
            raise InvalidWeight(f"density must be >= 0, got {n0}")
        return cls(lambda w: n0 + 0.0 * np.asarray(w, dtype=float), 0.0, f"constant({n0})")

    @classmethod
    def thermal(cls, T: float) -> "Density":
        """Bose-Einstein occupation 1 / (exp(w/T) - 1)."""
        if not T > 0:
            raise InvalidWeight(f"temperature must be > 0, got {T}")

        def regular(w):
            return T if w == 0.0 else w / math.expm1(w / T)

        return cls(lambda w: 1.0 / np.expm1(np.asarray(w, dtype=float) / T), -1.0,
                   f"thermal({T})", regular)

    def regular_part(self, w: float) -> float:
        if self.regular is not None:
            return float(self.regular(w))
        if self.ir_exponent != 0.0:
            raise InvalidWeight(f"density {self.label} needs an explicit regular part")
        return float(self.fn(w))


@dataclass(frozen=True)
class ScatteringChannel:
    F: SpectralWeight
    n: Density

    def __post_init__(self):
        if not self.F.converges(0):
            raise InvalidWeight("scattering formfactor must have finite ||f||^2")


class FamilyMember(NamedTuple):
    width: float
    norm_sq: float
    rate: float


def scattering_rate(ch: ScatteringChannel) -> float:
    F, n = ch.F, ch.n
    if F.is_zero:
        return 0.0
    if F.kind is Kind.TABULATED:
        w = F.table[0]
        total = sum(
            ff._quad(lambda x: float(F(x)) ** 2 * float(n(x)), a, b) for a, b in zip(w[:-1], w[1:])
        )
        return math.pi * total
    e = 2 * F.ir_exponent + n.ir_exponent
    if F.omega_min == 0.0 and not e > -1.0:
        raise DivergentIntegral(
            f"int F^2 n dw diverges at w -> 0 (integrand ~ w^{e:g}) for {F.kind.value}, {n.label}"
        )
    return math.pi * ff._power_integral(F.amplitude**2, e, n.regular_part, F.omega_min, F.omega_c)


def box_weight(height: float, width: float, center: float) -> SpectralWeight:
    """F = height on [center - width/2, center + width/2]."""
    lo = center - width / 2
    if lo < 0:
        raise InvalidTarget(f"box of width {width} at {center} extends below w = 0")
    return SpectralWeight.flat(height, center + width / 2, lo)


def small_norm_family(gamma_target: float, widths, omega0: float, n: Density) -> list[FamilyMember]:
    """Box profiles of shrinking width with the same scattering rate.

    Height H = sqrt(gamma_target / (pi w n(omega0))) makes the rate
    gamma_target when n is flat over the box; then ||f||^2 = H w.
    """
    widths = [float(w) for w in widths]
    if not gamma_target > 0:
        raise InvalidTarget(f"gamma_target must be > 0, got {gamma_target}")
    n0 = float(n(omega0))
    if not n0 > 0:
        raise InvalidTarget(f"n(omega0) must be > 0, got {n0}")
    if not widths or any(w <= 0 for w in widths):
        raise InvalidTarget("widths must be positive")
    if any(b >= a for a, b in zip(widths, widths[1:])):
        raise InvalidTarget("widths must be strictly decreasing")
    out = []
    for w in widths:
        H = math.sqrt(gamma_target / (math.pi * w * n0))
        F = box_weight(H, w, omega0)
        out.append(FamilyMember(w, ff.moment(F, 0), scattering_rate(ScatteringChannel(F, n))))
    return out
