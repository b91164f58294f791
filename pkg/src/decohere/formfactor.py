"""Coupling spectral weights J(w) = |g(w)|^2.

Only the modulus squared of the formfactor is represented: every quantity
computed in this package (norms, dressing energy, dephasing functional,
spectral densities) is insensitive to the phase of g, so g is taken as the
real non-negative root sqrt(J).

Convergence of every integral is decided analytically from the infrared
exponent of the weight, never by watching a quadrature blow up.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import (
    DivergentIntegral,
    IntegrationFailure,
    InvalidWeight,
    NonPositiveFrequency,
)

__all__ = [
    "Kind",
    "SpectralWeight",
    "StabilityClass",
    "ThermalDensity",
    "moment",
    "classify",
    "spectral_density_vacuum",
    "spectral_density_thermal",
    "integrate_weighted",
    "oscillatory_integral",
]

RTOL = 1e-10
SUBDIVISION_LIMIT = 500
GL_ORDER = 20
MIN_PANELS = 64
THERMAL_VALIDITY_RATIO = 0.1

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


class Kind(str, enum.Enum):
    POWER_LAW = "PowerLaw"
    FLAT = "Flat"
    OHMIC = "Ohmic"
    INVERSE_SQUARE = "InverseSquare"
    TABULATED = "Tabulated"

    @classmethod
    def parse(cls, name: str) -> "Kind":
        key = name.replace("-", "").replace("_", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise InvalidWeight(f"unknown spectral weight kind {name!r}")


@dataclass(frozen=True)
class SpectralWeight:
    """Squared formfactor J(w) supported on [omega_min, omega_c].

    Use the classmethod constructors rather than calling this directly.
    ``amplitude = 0`` is allowed and represents no coupling.
    """

    kind: Kind
    amplitude: float = 1.0
    omega_c: float = 1.0
    omega_min: float = 0.0
    kappa: float | None = None
    table: tuple[tuple[float, ...], tuple[float, ...]] | None = None
    _interp: PchipInterpolator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.amplitude) or self.amplitude < 0:
            raise InvalidWeight(f"amplitude must be finite and >= 0, got {self.amplitude}")
        if not (0 <= self.omega_min < self.omega_c) or not np.isfinite(self.omega_c):
            raise InvalidWeight(
                f"need 0 <= omega_min < omega_c < inf, got [{self.omega_min}, {self.omega_c}]"
            )
        if self.kind is Kind.POWER_LAW:
            if self.kappa is None or not self.kappa > 0:
                raise InvalidWeight(f"PowerLaw needs kappa > 0, got {self.kappa}")
        if self.kind is Kind.TABULATED:
            if self.table is None:
                raise InvalidWeight("Tabulated weight needs a table")
            w, j = (np.asarray(a, dtype=float) for a in self.table)
            if w.ndim != 1 or w.shape != j.shape or w.size < 2:
                raise InvalidWeight("table must hold two equal-length columns, >= 2 rows")
            if not np.all(np.isfinite(w)) or not np.all(np.isfinite(j)):
                raise InvalidWeight("table entries must be finite")
            if np.any(np.diff(w) <= 0):
                raise InvalidWeight("table frequencies must be strictly increasing")
            if w[0] < 0 or np.any(j < 0):
                raise InvalidWeight("table needs w >= 0 and J >= 0")
            object.__setattr__(self, "_interp", PchipInterpolator(w, j, extrapolate=False))

    # -- constructors -------------------------------------------------------

    @classmethod
    def flat(cls, amplitude=1.0, omega_c=1.0, omega_min=0.0) -> "SpectralWeight":
        return cls(Kind.FLAT, float(amplitude), float(omega_c), float(omega_min))

    @classmethod
    def power_law(cls, amplitude=1.0, kappa=0.5, omega_c=1.0, omega_min=0.0) -> "SpectralWeight":
        return cls(Kind.POWER_LAW, float(amplitude), float(omega_c), float(omega_min), float(kappa))

    @classmethod
    def ohmic(cls, amplitude=1.0, omega_c=1.0, omega_min=0.0) -> "SpectralWeight":
        return cls(Kind.OHMIC, float(amplitude), float(omega_c), float(omega_min))

    @classmethod
    def inverse_square(cls, amplitude=1.0, omega_c=1.0, omega_min=0.0) -> "SpectralWeight":
        return cls(Kind.INVERSE_SQUARE, float(amplitude), float(omega_c), float(omega_min))

    @classmethod
    def tabulated(cls, omega, values) -> "SpectralWeight":
        w = tuple(float(v) for v in omega)
        j = tuple(float(v) for v in values)
        if len(w) < 2:
            raise InvalidWeight("table must hold at least two rows")
        return cls(Kind.TABULATED, 1.0, w[-1], w[0], table=(w, j))

    @classmethod
    def from_csv(cls, path) -> "SpectralWeight":
        """Read a two-column (omega, J) CSV; '#' lines and a text header are skipped."""
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise InvalidWeight(f"malformed table row {rec!r} in {path}")
        if not rows:
            raise InvalidWeight(f"no data rows in {path}")
        w, j = zip(*rows)
        return cls.tabulated(w, j)

    # -- evaluation ---------------------------------------------------------

    @property
    def ir_exponent(self) -> float:
        """Exponent e of the infrared behaviour J ~ w^e."""
        return {
            Kind.FLAT: 0.0,
            Kind.TABULATED: 0.0,
            Kind.POWER_LAW: (self.kappa or 0.0) - 1.0,
            Kind.OHMIC: -1.0,
            Kind.INVERSE_SQUARE: -2.0,
        }[self.kind]

    @property
    def is_zero(self) -> bool:
        if self.kind is Kind.TABULATED:
            return not any(self.table[1])
        return self.amplitude == 0.0

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        inside = (w >= self.omega_min) & (w <= self.omega_c)
        out = np.zeros_like(w)
        if self.kind is Kind.TABULATED:
            vals = self._interp(w[inside])
            out[inside] = np.clip(np.nan_to_num(vals), 0.0, None)
        else:
            with np.errstate(divide="ignore"):
                out[inside] = self.amplitude * np.power(w[inside], self.ir_exponent)
        return out if out.ndim else float(out)

    def scaled(self, factor: float) -> "SpectralWeight":
        """Same shape, amplitude multiplied by ``factor``."""
        if self.kind is Kind.TABULATED:
            w, j = self.table
            return SpectralWeight.tabulated(w, [factor * v for v in j])
        return SpectralWeight(
            self.kind, self.amplitude * factor, self.omega_c, self.omega_min, self.kappa
        )

    def converges(self, power: float, damping: float = 0.0) -> bool:
        """Whether int w^power J(w) h(w) dw is finite, where h ~ w^damping near 0."""
        if self.omega_min > 0 or self.is_zero:
            return True
        return self.ir_exponent + power + damping > -1.0


class StabilityClass(NamedTuple):
    label: str
    norm_sq: float
    dressing_energy: float

    @property
    def stable(self) -> bool:
        return self.label == "Stable"


class ThermalDensity(NamedTuple):
    value: float
    valid: bool


# -- quadrature ---------------------------------------------------------------


def _quad(f, a, b):
    if a == b:
        return 0.0
    val, err, *rest = integrate.quad(
        f, a, b, epsabs=0.0, epsrel=RTOL, limit=SUBDIVISION_LIMIT, full_output=1
    )
    if len(rest) > 1 and not (err <= max(10 * RTOL * abs(val), 1e-300)):
        raise IntegrationFailure(f"quadrature on [{a}, {b}] did not converge: {rest[1]}")
    return val


def _power_integral(coef: float, e: float, h: Callable, lo: float, hi: float) -> float:
    """int_lo^hi coef * w^e * h(w) dw for smooth bounded h.

    The power is absorbed by w = u^(1/(e+1)) (or w = exp(v) when e = -1) so
    the quadrature sees only h, which removes integrable endpoint
    singularities and the steep 1/w^2 peak near a small lower cutoff.
    """
    if coef == 0.0 or lo == hi:
        return 0.0
    if e == 0.0:
        return coef * _quad(lambda w: h(w), lo, hi)
    if e == -1.0:
        return coef * _quad(lambda v: h(math.exp(v)), math.log(lo), math.log(hi))
    q = e + 1.0
    ulo, uhi = lo**q, hi**q
    return coef / q * _quad(lambda u: h(u ** (1.0 / q)), ulo, uhi)


def integrate_weighted(J: SpectralWeight, h: Callable | None = None, power: float = 0.0,
                       damping: float = 0.0) -> float:
    """int J(w) w^power h(w) dw over the support of J.

    ``h`` must be smooth and bounded with h(w) ~ w^damping as w -> 0; the
    analytic convergence check uses ``power + damping``. The power factor is
    folded into the singularity substitution.
    """
    if not J.converges(power, damping):
        raise DivergentIntegral(
            f"int w^{power} J(w) dw diverges at w -> 0 for {J.kind.value} weight "
            f"with omega_min = {J.omega_min}"
        )
    if J.is_zero:
        return 0.0
    if h is None:
        def h(w):
            return 1.0
    lo, hi = J.omega_min, J.omega_c
    if J.kind is Kind.TABULATED:
        w = J.table[0]
        total = 0.0
        for a, b in zip(w[:-1], w[1:]):
            total += _quad(lambda x: float(J._interp(x)) * x**power * h(x), a, b)
        return total
    e = J.ir_exponent + power
    if damping and e <= -1.0 and lo == 0.0:
        # w^e alone is not integrable at 0; keep the power inside the integrand
        return J.amplitude * _quad(lambda w: w**e * h(w) if w > 0 else 0.0, lo, hi)
    return _power_integral(J.amplitude, e, h, lo, hi)


def _panel_edges(J: SpectralWeight, width: float) -> np.ndarray:
    lo, hi = J.omega_min, J.omega_c
    n = max(MIN_PANELS, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n + 1)
    if J.kind is Kind.TABULATED:
        edges = np.union1d(edges, np.asarray(J.table[0]))
    elif J.ir_exponent <= -1.0 and lo > 0.0:
        # geometric grading resolves the 1/w, 1/w^2 rise above a small cutoff
        first = edges[1]
        k = int(math.ceil(math.log2(first / lo)))
        if k > 0:
            edges = np.union1d(edges, lo * np.geomspace(1.0, first / lo, k + 1))
    return edges


def oscillatory_integral(J: SpectralWeight, h: Callable[[np.ndarray], np.ndarray],
                         t: float, damping: float = 0.0) -> float:
    """int J(w) h(w) dw where h oscillates with angular period 2 pi / t.

    Fixed-order Gauss-Legendre on panels no wider than pi / (4 t).
    ``h`` is vectorised; ``damping`` is its small-w order (see
    ``integrate_weighted``). PowerLaw weights are integrated in the variable
    u = w^kappa, where J dw = (A / kappa) du.
    """
    if not J.converges(0.0, damping):
        raise DivergentIntegral(
            f"oscillatory integral diverges for {J.kind.value} weight with omega_min = {J.omega_min}"
        )
    if J.is_zero:
        return 0.0
    width = math.pi / (4.0 * t) if t * J.omega_c > 1e-12 else math.inf
    edges = _panel_edges(J, width)
    if J.kind is Kind.POWER_LAW:
        k = J.kappa
        edges = edges**k
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) * 0.5 + half * _GL_X[None, :]
    if J.kind is Kind.POWER_LAW:
        vals = (J.amplitude / k) * h(nodes ** (1.0 / k))
    else:
        vals = J(nodes) * h(nodes)
    return float(np.sum(half * (vals @ _GL_W)[:, None]))


# -- operations ---------------------------------------------------------------


def moment(J: SpectralWeight, p: int) -> float:
    """int w^p J(w) dw; p = 0 gives ||g||^2, p = 1 the dressing energy E_g."""
    if int(p) != p or p < 0:
        raise ValueError(f"moment order must be a non-negative integer, got {p}")
    return integrate_weighted(J, power=float(p))


def classify(J: SpectralWeight) -> StabilityClass:
    norm_sq = moment(J, 0) if J.converges(0) else math.inf
    energy = moment(J, 1) if J.converges(1) else math.inf
    if math.isfinite(norm_sq) and math.isfinite(energy):
        return StabilityClass("Stable", norm_sq, energy)
    return StabilityClass("VanHoveSingular", norm_sq, energy)


def spectral_density_vacuum(J: SpectralWeight, omega):
    """Zero-temperature spectral density 2 pi w^2 J(w)."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise NonPositiveFrequency("spectral density is defined here for w >= 0")
    if J.kind is Kind.TABULATED:
        out = 2 * np.pi * w**2 * J(w)
    else:
        inside = (w >= J.omega_min) & (w <= J.omega_c)
        out = np.zeros_like(w)
        out[inside] = 2 * np.pi * J.amplitude * np.power(w[inside], 2.0 + J.ir_exponent)
    return out if out.ndim else float(out)


def spectral_density_thermal(J: SpectralWeight, omega: float, T: float) -> ThermalDensity:
    """Low-frequency thermal spectral density (T / w) R_0(w).

    Only meaningful for w << T; ``valid`` is False once w > T / 10.
    """
    if not omega > 0:
        raise NonPositiveFrequency(f"need w > 0, got {omega}")
    if not T > 0:
        raise NonPositiveFrequency(f"need T > 0, got {T}")
    value = (T / omega) * spectral_density_vacuum(J, omega)
    return ThermalDensity(float(value), omega <= THERMAL_VALIDITY_RATIO * T)
