"""Dephasing by an environment of M-level systems with random spectra.

For a spin coupled through sigma_3 (x) Q to a microcanonical bath the
spectral function is

    R(w) = (pi / M) sum_{m, m'} |<m|Q|m'>|^2 delta((e_m - e_m') - w),

and the dephasing rate is gamma = R(0) / 2. With level repulsion (Wigner
surmise) R(w) ~ pi Qbar^2 p(w) vanishes linearly at w = 0, so gamma = 0;
Poisson spacings give p(0) = 1 / delta and a finite rate.

Seeding: a master seed feeds ``np.random.SeedSequence(seed).spawn(R)``;
realisation r spawns two children, the first for the levels and the
second for Q.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import BroadeningTooSmall, InvalidSize, WindowOutsideGrid

__all__ = [
    "LEVEL_KINDS",
    "LevelEnsemble",
    "CouplingMatrix",
    "SpectralFunctionEstimate",
    "SpectrumRateFit",
    "sample_levels",
    "sample_coupling",
    "realization_seeds",
    "sample_realizations",
    "spectral_function",
    "ensemble_spectral_function",
    "dephasing_rate_from_spectrum",
    "default_grid",
    "wigner_pdf",
    "wigner_cdf",
]

LEVEL_KINDS = ("wigner", "poisson", "goe")
TAIL_SIGMAS = 8.0
THREADS_ENV = "DECOHERE_THREADS"


def wigner_pdf(s, delta=1.0):
    """Normalised surmise (pi s / 2 delta^2) exp(-pi s^2 / 4 delta^2)."""
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0, np.pi * s / (2 * delta**2) * np.exp(-np.pi * s**2 / (4 * delta**2)), 0.0)


def wigner_cdf(s, delta=1.0):
    s = np.asarray(s, dtype=float)
    return np.where(s >= 0, -np.expm1(-np.pi * s**2 / (4 * delta**2)), 0.0)


@dataclass(frozen=True)
class LevelEnsemble:
    levels: np.ndarray
    delta: float
    kind: str
    seed: object = None

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.levels)


@dataclass(frozen=True)
class CouplingMatrix:
    Q: np.ndarray
    seed: object = None

    @property
    def nearest_neighbour_sq(self) -> np.ndarray:
        """|<m+1|Q|m>|^2 for m = 0 .. M-2."""
        return np.abs(np.diagonal(self.Q, 1)) ** 2


@dataclass
class SpectralFunctionEstimate:
    omega: np.ndarray
    R: np.ndarray
    stderr: np.ndarray
    sigma: float
    diagonal_excluded: bool
    delta: float = 1.0
    samples: np.ndarray | None = None  # per-realisation curves, shape (R, len(omega))
    qbar_sq: float = math.nan
    q_spacing_correlation: float = math.nan

    @property
    def realizations(self) -> int:
        return 0 if self.samples is None else len(self.samples)


class SpectrumRateFit(NamedTuple):
    gamma: float
    gamma_stderr: float
    slope: float
    slope_stderr: float
    intercept: float
    intercept_stderr: float
    window: tuple[float, float]


def _rng(seed):
    return np.random.default_rng(seed)


def _unfold_goe(eigs: np.ndarray, M: int) -> np.ndarray:
    # integrated semicircle for off-diagonal variance 1: radius 2 sqrt(M)
    R = 2.0 * math.sqrt(M)
    e = np.clip(eigs, -R, R)
    return (e * np.sqrt(R**2 - e**2) + R**2 * np.arcsin(e / R)) / (4 * np.pi) + M / 2


def sample_levels(kind: str, M: int, delta: float = 1.0, seed=None) -> LevelEnsemble:
    """M sorted levels with mean nearest-neighbour spacing ``delta``.

    wigner / poisson: cumulative sums of i.i.d. spacings (surmise by inverse
    CDF, exponential). goe: eigenvalues of a real symmetric Gaussian matrix
    unfolded with the semicircle counting function.
    """
    kind = kind.lower()
    if kind not in LEVEL_KINDS:
        raise InvalidSize(f"unknown level kind {kind!r}; expected one of {LEVEL_KINDS}")
    if int(M) != M or M < 2:
        raise InvalidSize(f"need M >= 2 levels, got {M}")
    if not delta > 0:
        raise InvalidSize(f"need delta > 0, got {delta}")
    M = int(M)
    rng = _rng(seed)
    if kind == "wigner":
        u = rng.random(M - 1)
        s = delta * np.sqrt(-(4.0 / np.pi) * np.log1p(-u))
        levels = np.concatenate(([0.0], np.cumsum(s)))
    elif kind == "poisson":
        levels = np.concatenate(([0.0], np.cumsum(rng.exponential(delta, M - 1))))
    else:
        A = rng.standard_normal((M, M))
        H = (A + A.T) / math.sqrt(2.0)
        levels = delta * _unfold_goe(np.linalg.eigvalsh(H), M)
    if np.any(np.diff(levels) <= 0):
        # a zero spacing (u == 0 draw or eigenvalue collision) would merge levels
        raise InvalidSize("sampled spectrum has coincident levels; use another seed")
    return LevelEnsemble(levels, float(delta), kind, seed)


def sample_coupling(M: int, seed=None) -> CouplingMatrix:
    """Real symmetric Gaussian Q (off-diagonal variance 1, diagonal 2), made traceless."""
    if int(M) != M or M < 2:
        raise InvalidSize(f"need M >= 2, got {M}")
    M = int(M)
    A = _rng(seed).standard_normal((M, M))
    Q = (A + A.T) / math.sqrt(2.0)
    Q -= (np.trace(Q) / M) * np.eye(M)
    return CouplingMatrix(Q, seed)


def realization_seeds(seed: int, realizations: int):
    """(levels_seed, coupling_seed) per realisation, from one master seed."""
    return [tuple(child.spawn(2)) for child in np.random.SeedSequence(seed).spawn(realizations)]


def sample_realizations(kind, M, delta, realizations, seed):
    for s_lev, s_q in realization_seeds(seed, realizations):
        yield sample_levels(kind, M, delta, s_lev), sample_coupling(M, s_q)


def _gauss(x, sigma):
    return np.exp(-0.5 * (x / sigma) ** 2) / (math.sqrt(2 * math.pi) * sigma)


def _single_curve(levels: np.ndarray, Q: np.ndarray, omega: np.ndarray, sigma: float,
                  exclude_diagonal: bool) -> np.ndarray:
    M = levels.size
    reach = float(np.max(np.abs(omega))) + TAIL_SIGMAS * sigma
    out = np.zeros_like(omega)
    if not exclude_diagonal:
        out += np.sum(np.abs(np.diagonal(Q)) ** 2) * _gauss(omega, sigma)
    for k in range(1, M):
        d = levels[k:] - levels[:-k]
        near = d < reach
        if not near.any():
            # levels are sorted, so larger k only gives larger gaps
            break
        d = d[near]
        w = np.abs(np.diagonal(Q, k)[near]) ** 2
        # ordered pairs (m+k, m) at +d and (m, m+k) at -d
        out += w @ (_gauss(d[:, None] - omega[None, :], sigma) + _gauss(d[:, None] + omega[None, :], sigma))
    return (math.pi / M) * out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def spectral_function(realizations: Iterable, omega, sigma: float,
                      exclude_diagonal: bool = True) -> SpectralFunctionEstimate:
    """Gaussian-broadened R(w) averaged over (LevelEnsemble, CouplingMatrix) pairs.

    ``stderr`` is the standard error of the mean over realisations (NaN for
    a single realisation). Diagonal (m = m') terms only produce a static
    spike at w = 0 and are excluded by default.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1 or omega.size < 1:
        raise WindowOutsideGrid("frequency grid must be a non-empty 1-d array")
    if not sigma > 0:
        raise BroadeningTooSmall(f"sigma must be > 0, got {sigma}")
    if omega.size > 1:
        step = float(np.max(np.diff(omega)))
        if sigma < step:
            raise BroadeningTooSmall(f"sigma = {sigma} is below the grid step {step}")
    pairs = list(realizations)
    if not pairs:
        raise InvalidSize("need at least one realisation")

    def one(pair):
        lev, cq = pair
        if cq.Q.shape != (lev.levels.size,) * 2:
            raise InvalidSize("coupling matrix and level ensemble differ in size")
        return _single_curve(lev.levels, cq.Q, omega, sigma, exclude_diagonal)

    nthreads = _threads()
    if nthreads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            curves = list(pool.map(one, pairs))
    else:
        curves = [one(p) for p in pairs]
    curves = np.array(curves)
    mean = curves.mean(axis=0)
    if len(curves) > 1:
        stderr = curves.std(axis=0, ddof=1) / math.sqrt(len(curves))
    else:
        stderr = np.full_like(mean, np.nan)

    q_nn = np.concatenate([cq.nearest_neighbour_sq for _, cq in pairs])
    spac = np.concatenate([lev.spacings for lev, _ in pairs])
    corr = float(np.corrcoef(q_nn, spac)[0, 1]) if q_nn.size > 2 and np.ptp(q_nn) > 0 else math.nan
    return SpectralFunctionEstimate(
        omega, mean, stderr, float(sigma), bool(exclude_diagonal),
        delta=float(pairs[0][0].delta), samples=curves,
        qbar_sq=float(q_nn.mean()), q_spacing_correlation=corr,
    )


def default_grid(delta: float, sigma: float, omega_max: float | None = None) -> np.ndarray:
    """Grid from 0 to ``omega_max`` (default 3 delta) with step sigma / 2."""
    top = 3.0 * delta if omega_max is None else omega_max
    n = int(round(top / (0.5 * sigma)))
    return np.linspace(0.0, n * 0.5 * sigma, n + 1)


def ensemble_spectral_function(kind: str, M: int, delta: float = 1.0, realizations: int = 100,
                               seed: int = 0, sigma: float | None = None, omega=None,
                               exclude_diagonal: bool = True) -> SpectralFunctionEstimate:
    """Sample ``realizations`` independent baths and estimate R(w); sigma defaults to delta/20."""
    sigma = delta / 20 if sigma is None else sigma
    omega = default_grid(delta, sigma) if omega is None else omega
    return spectral_function(
        sample_realizations(kind, M, delta, realizations, seed), omega, sigma, exclude_diagonal
    )


def _linear_fit(x, y):
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return coef


def dephasing_rate_from_spectrum(est: SpectralFunctionEstimate, fit_window=None) -> SpectrumRateFit:
    """Fit R ~ a + b w on ``fit_window`` (default [2 sigma, delta / 2]); gamma = a / 2.

    Uncertainties come from the spread of per-realisation fits, which keeps
    the correlation between broadened neighbouring bins; without stored
    realisations they are propagated from the per-bin stderr instead.
    """
    lo, hi = fit_window if fit_window is not None else (2 * est.sigma, est.delta / 2)
    if not hi > lo:
        raise WindowOutsideGrid(f"empty fit window [{lo}, {hi}]")
    if lo < est.sigma * (1 - 1e-12):
        raise WindowOutsideGrid(f"fit window starts below the broadening width {est.sigma}")
    w = est.omega
    eps = 1e-9 * max(abs(hi), 1.0)
    if lo < w.min() - eps or hi > w.max() + eps:
        raise WindowOutsideGrid(f"fit window [{lo}, {hi}] outside grid [{w.min()}, {w.max()}]")
    sel = (w >= lo - eps) & (w <= hi + eps)
    if sel.sum() < 3:
        raise WindowOutsideGrid("fit window holds fewer than 3 grid points")
    x = w[sel]
    a, b = _linear_fit(x, est.R[sel])
    if est.samples is not None and len(est.samples) > 1:
        per = np.array([_linear_fit(x, c[sel]) for c in est.samples])
        se_a, se_b = per.std(axis=0, ddof=1) / math.sqrt(len(per))
    else:
        X = np.column_stack([np.ones_like(x), x])
        cov = np.linalg.pinv(X) @ np.diag(est.stderr[sel] ** 2) @ np.linalg.pinv(X).T
        se_a, se_b = np.sqrt(np.diag(cov))
    return SpectrumRateFit(
        float(a / 2), float(se_a / 2), float(b), float(se_b), float(a), float(se_a), (float(lo), float(hi))
    )
