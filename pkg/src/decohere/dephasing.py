"""Exact pure-dephasing dynamics of a spin linearly coupled to a boson field.

Starting from psi (x) vacuum, the spin's reduced state keeps its diagonal
and the coherence is multiplied by exp(-gamma_t) with

    gamma_t = 2 ||g - g_t||^2 = 4 int J(w) (1 - cos wt) dw,     g_t = e^{-iwt} g.

For a normalisable formfactor gamma_t stays below 8 ||g||^2 (false
decoherence: a dressing cloud forms and nothing irreversible happens).
Linear growth of gamma_t needs J ~ w^-2 in the infrared, i.e. ||g|| = inf.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import formfactor as ff
from .errors import BoundViolation, DivergentIntegral, WindowTooNarrow
from .formfactor import Kind, SpectralWeight

log = logging.getLogger(__name__)

__all__ = [
    "QubitAmplitudes",
    "DephasingTrajectory",
    "RateEstimate",
    "Overlap",
    "gamma_t",
    "global_phase",
    "reduced_state",
    "trajectory",
    "ground_overlap",
    "coherent_overlap",
    "false_decoherence_bound",
    "asymptotic_rate",
    "infrared_coefficient",
]

NORM_TOL = 1e-12
MIN_RATE_SAMPLES = 8


@dataclass(frozen=True)
class QubitAmplitudes:
    """Spin amplitudes on the sigma_3 eigenbasis (e_+, e_-)."""

    psi_plus: complex
    psi_minus: complex

    def __post_init__(self):
        norm = abs(self.psi_plus) ** 2 + abs(self.psi_minus) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"amplitudes not normalised: |psi+|^2 + |psi-|^2 = {norm!r}")

    @classmethod
    def normalized(cls, psi_plus, psi_minus) -> "QubitAmplitudes":
        a, b = complex(psi_plus), complex(psi_minus)
        n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if n == 0:
            raise ValueError("zero vector cannot be normalised")
        return cls(a / n, b / n)

    def projector(self) -> np.ndarray:
        v = np.array([self.psi_plus, self.psi_minus])
        return np.outer(v, v.conj())


@dataclass
class DephasingTrajectory:
    times: np.ndarray
    gamma: np.ndarray
    phase: np.ndarray
    states: np.ndarray  # (n, 2, 2)

    @property
    def purity(self) -> np.ndarray:
        return np.einsum("nij,nji->n", self.states, self.states).real


class RateEstimate(NamedTuple):
    slope: float
    intercept: float
    window: tuple[float, float]
    residual: float
    analytic_candidate: float | None
    pi_candidate: float | None


class Overlap(NamedTuple):
    value: float
    disjoint: bool


def gamma_t(J: SpectralWeight, t):
    """Decoherence functional 4 int J(w)(1 - cos wt) dw; vectorised over t."""
    ts = np.asarray(t, dtype=float)
    if np.any(ts < 0):
        raise ValueError("gamma_t needs t >= 0")
    out = np.empty_like(ts)
    for i, tv in np.ndenumerate(ts):
        if tv == 0.0:
            out[i] = 0.0
            continue
        # 1 - cos x = 2 sin^2(x/2): no cancellation at small wt
        val = ff.oscillatory_integral(J, lambda w: 2.0 * np.sin(0.5 * w * tv) ** 2, tv, damping=2.0)
        out[i] = 4.0 * max(val, 0.0)
    return out if out.ndim else float(out)


def global_phase(J: SpectralWeight, t):
    """Phase t E_g - Im<g, g_t> = t E_g + int J(w) sin(wt) dw."""
    if not J.converges(1):
        raise DivergentIntegral("dressing energy E_g is infinite; the global phase is undefined")
    e_g = ff.moment(J, 1)
    ts = np.asarray(t, dtype=float)
    out = np.empty_like(ts)
    for i, tv in np.ndenumerate(ts):
        if tv == 0.0:
            out[i] = 0.0
            continue
        s = ff.oscillatory_integral(J, lambda w: np.sin(w * tv), abs(tv), damping=1.0)
        out[i] = tv * e_g + math.copysign(1.0, tv) * s
    return out if out.ndim else float(out)


def _state(psi: QubitAmplitudes, g: float) -> np.ndarray:
    a, b = psi.psi_plus, psi.psi_minus
    c = a * b.conjugate() * math.exp(-g)
    return np.array([[abs(a) ** 2, c], [c.conjugate(), abs(b) ** 2]], dtype=complex)


def reduced_state(psi: QubitAmplitudes, J: SpectralWeight, t: float) -> np.ndarray:
    """Spin density matrix at time t, basis order (e_+, e_-)."""
    return _state(psi, gamma_t(J, t))


def false_decoherence_bound(J: SpectralWeight) -> float:
    """8 ||g||^2, the ceiling of gamma_t for a normalisable formfactor (inf otherwise)."""
    if not J.converges(0):
        return math.inf
    return 8.0 * ff.moment(J, 0)


def trajectory(psi: QubitAmplitudes, J: SpectralWeight, times) -> DephasingTrajectory:
    """Sample gamma_t, the global phase and rho_t on ``times``.

    The phase is NaN when E_g is infinite. Raises BoundViolation if any
    gamma_t exceeds 8 ||g||^2 for a stable weight.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a strictly increasing 1-d grid")
    gam = np.atleast_1d(gamma_t(J, times))
    bound = false_decoherence_bound(J)
    if math.isfinite(bound) and np.any(gam > bound * (1 + 1e-12)):
        worst = float(np.max(gam))
        raise BoundViolation(f"gamma_t reached {worst!r} > 8||g||^2 = {bound!r}")
    if J.converges(1):
        phase = np.atleast_1d(global_phase(J, times))
    else:
        phase = np.full_like(times, np.nan)
    states = np.stack([_state(psi, g) for g in gam])
    return DephasingTrajectory(times, gam, phase, states)


def ground_overlap(J: SpectralWeight) -> Overlap:
    """|<psi (x) vacuum | dressed ground state>|^2 = exp(-||g||^2).

    For ||g|| = inf the dressed states are disjoint from the Fock space;
    the overlap is reported as 0 with ``disjoint`` set.
    """
    cls = ff.classify(J)
    if not math.isfinite(cls.norm_sq):
        return Overlap(0.0, True)
    return Overlap(math.exp(-cls.norm_sq), False)


def coherent_overlap(J_f: SpectralWeight, J_g: SpectralWeight) -> float:
    """|<W(f)vac, W(g)vac>|^2 = exp(-||f - g||^2) with f = sqrt(J_f), g = sqrt(J_g)."""
    for J in (J_f, J_g):
        if not J.converges(0):
            raise DivergentIntegral(f"{J.kind.value} weight has infinite norm")
    lo = min(J_f.omega_min, J_g.omega_min)
    hi = max(J_f.omega_c, J_g.omega_c)
    pts = sorted({lo, hi, J_f.omega_min, J_f.omega_c, J_g.omega_min, J_g.omega_c})

    def diff_sq(w):
        return (math.sqrt(J_f(w)) - math.sqrt(J_g(w))) ** 2

    # lowest exponent at the origin sets the substitution for the first piece
    e = min(
        (J.ir_exponent for J in (J_f, J_g) if J.omega_min == 0.0 and not J.is_zero),
        default=0.0,
    )
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if a == 0.0 and -1.0 < e < 0.0:
            # w = u^(1/q) turns the w^e endpoint singularity into a bounded integrand
            q = e + 1.0
            total += ff._quad(lambda u: diff_sq(u ** (1 / q)) * u ** (1 / q - 1) / q, 0.0, b**q)
        else:
            total += ff._quad(diff_sq, a, b)
    return math.exp(-total)


def infrared_coefficient(J: SpectralWeight) -> float | None:
    """lim_{w -> 0} w^2 J(w) extrapolating the infrared law below omega_min.

    None when no finite limit is defined (tabulated weights not starting at 0).
    """
    if J.kind is Kind.INVERSE_SQUARE:
        return J.amplitude
    if J.kind is Kind.TABULATED:
        return 0.0 if J.omega_min == 0.0 else None
    return 0.0


def asymptotic_rate(J: SpectralWeight, window, samples: int = 64) -> RateEstimate:
    """Least-squares line through (t, gamma_t) on ``samples`` points of ``window``.

    ``residual`` is the RMS deviation from the line; it stays small only
    when gamma_t grows linearly. ``analytic_candidate`` is the slope implied
    by the exact functional, 2 pi lim w^2 J(w); ``pi_candidate`` is half
    of it, pi lim w^2 J(w).
    """
    t1, t2 = (float(x) for x in window)
    if not t2 > t1 > 0:
        raise ValueError(f"need t2 > t1 > 0, got window {window}")
    if samples < MIN_RATE_SAMPLES:
        raise WindowTooNarrow(f"need at least {MIN_RATE_SAMPLES} samples, got {samples}")
    ts = np.linspace(t1, t2, int(samples))
    gam = np.asarray(gamma_t(J, ts))
    slope, intercept = np.polyfit(ts, gam, 1)
    resid = float(np.sqrt(np.mean((gam - (slope * ts + intercept)) ** 2)))
    lim = infrared_coefficient(J)
    return RateEstimate(
        float(slope),
        float(intercept),
        (t1, t2),
        resid,
        None if lim is None else 2 * math.pi * lim,
        None if lim is None else math.pi * lim,
    )
