"""Markovian master equations for a Brownian particle (hbar = k_B = 1).

Caldeira-Leggett:

    d rho/dt = -i[H, rho] - i eta [X, {P, rho}] - 2 M eta T [X, [X, rho]],
    H = P^2 / 2M + V(X),

integrated on a truncated harmonic-oscillator basis, and its heavy-particle
form (pure decoherence)

    d rho/dt = -i[V(X), rho] - gamma [X, [X, rho]],

integrated on a uniform position grid, where it also has the closed form
rho(x, x', t) = rho0(x, x') exp(-i(V(x) - V(x'))t - gamma (x - x')^2 t).

The heavy-particle limit (M -> inf at fixed M eta) is identified with
gamma = 2 M eta T. All integration is fixed-step classical RK4.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GridMismatch, StepTooLarge, TruncationLeak

log = logging.getLogger(__name__)

__all__ = [
    "GridDensityMatrix",
    "OscillatorOperators",
    "CLParams",
    "CLTrajectory",
    "GridTrajectory",
    "cat_state",
    "coherent_state",
    "evolve_pure_decoherence_exact",
    "evolve_pure_decoherence_numeric",
    "evolve_caldeira_leggett",
    "heavy_particle_gamma",
    "position_basis",
    "coherence_decay_rates",
]

PURE_STEP_LIMIT = 0.1
RK4_STABILITY = 2.5
LEAK_TOL = 1e-6
NEGATIVE_EIG_LOG = -1e-6


def _rk4_step(rhs, rho, dt):
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _n_steps(t, dt):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    # tolerate t/dt landing a hair above an integer
    return int(math.ceil(t / dt - 1e-9))


def _herm_dev(rho):
    return float(np.max(np.abs(rho - rho.conj().T)))


# -- position grid ------------------------------------------------------------


@dataclass
class GridDensityMatrix:
    """rho(x, x') sampled on a uniform grid; trace is sum(diag) * dx."""

    x: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.rho = np.asarray(self.rho, dtype=complex)
        n = self.x.size
        if self.x.ndim != 1 or n < 2:
            raise GridMismatch("x must be a 1-d grid with at least two points")
        if self.rho.shape != (n, n):
            raise GridMismatch(f"rho has shape {self.rho.shape}, grid has {n} points")
        steps = np.diff(self.x)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * abs(steps[0]):
            raise GridMismatch("position grid must be uniform and increasing")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def trace(self) -> float:
        return float(np.trace(self.rho).real * self.dx)

    def purity(self) -> float:
        return float(np.sum(np.abs(self.rho) ** 2).real * self.dx**2)


@dataclass
class GridTrajectory:
    times: np.ndarray
    trace_dev: np.ndarray
    herm_dev: np.ndarray
    min_eig: np.ndarray
    purity: np.ndarray
    coherence: np.ndarray
    final: GridDensityMatrix


def cat_state(x, separation: float = 2.0, width: float = 0.5) -> GridDensityMatrix:
    """Pure superposition of two Gaussians centred at +-separation/2."""
    x = np.asarray(x, dtype=float)
    psi = np.exp(-((x - separation / 2) ** 2) / (4 * width**2)) + np.exp(
        -((x + separation / 2) ** 2) / (4 * width**2)
    )
    dx = x[1] - x[0]
    psi = psi / math.sqrt(np.sum(psi**2) * dx)
    return GridDensityMatrix(x, np.outer(psi, psi).astype(complex))


def _potential_on(V, x):
    if callable(V):
        v = np.asarray(V(x), dtype=float)
        if v.shape == ():
            v = np.full_like(x, float(v))
    else:
        v = np.asarray(V, dtype=float)
    if v.shape != x.shape:
        raise GridMismatch(f"potential has shape {v.shape}, grid has {x.shape}")
    return v


def evolve_pure_decoherence_exact(rho0: GridDensityMatrix, V, gamma: float, t: float) -> GridDensityMatrix:
    if gamma < 0 or t < 0:
        raise ValueError("need gamma >= 0 and t >= 0")
    x = rho0.x
    v = _potential_on(V, x)
    dv = v[:, None] - v[None, :]
    dx2 = (x[:, None] - x[None, :]) ** 2
    return GridDensityMatrix(x, rho0.rho * np.exp(-1j * dv * t) * np.exp(-gamma * dx2 * t))


def _pure_rhs(x, v, gamma):
    def comm(d, rho):
        # [diag(d), rho]
        return d[:, None] * rho - rho * d[None, :]

    def rhs(rho):
        return -1j * comm(v, rho) - gamma * comm(x, comm(x, rho))

    return rhs


def evolve_pure_decoherence_numeric(rho0: GridDensityMatrix, V, gamma: float, t: float,
                                    dt: float, stride: int = 0):
    """RK4 integration of the pure-decoherence equation on the grid of ``rho0``.

    Returns the final GridDensityMatrix, or a GridTrajectory of diagnostics
    every ``stride`` steps when ``stride > 0``. Raises StepTooLarge unless
    dt * (max|V| + gamma * span(x)^2) < 0.1.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    x = rho0.x
    v = _potential_on(V, x)
    stiffness = float(np.max(np.abs(v)) + gamma * np.ptp(x) ** 2)
    if dt * stiffness >= PURE_STEP_LIMIT:
        raise StepTooLarge(
            f"dt * (max|V| + gamma span^2) = {dt * stiffness:.3g} >= {PURE_STEP_LIMIT}"
        )
    n = _n_steps(t, dt)
    h = t / n if n else 0.0
    rhs = _pure_rhs(x, v, gamma)
    rho = rho0.rho.copy()
    if stride <= 0:
        for _ in range(n):
            rho = _rk4_step(rhs, rho, h)
        return GridDensityMatrix(x, rho)

    i_a = int(np.argmin(np.abs(x - x.max() / 2)))
    i_b = int(np.argmin(np.abs(x - x.min() / 2)))
    tr0 = rho0.trace()
    rec = {k: [] for k in ("t", "trace", "herm", "eig", "pur", "coh")}

    def record(step, rho):
        g = GridDensityMatrix(x, rho)
        rec["t"].append(step * h)
        rec["trace"].append(g.trace() - tr0)
        rec["herm"].append(_herm_dev(rho))
        rec["eig"].append(float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] * g.dx))
        rec["pur"].append(g.purity())
        rec["coh"].append(abs(rho[i_a, i_b]) * g.dx)

    record(0, rho)
    for step in range(1, n + 1):
        rho = _rk4_step(rhs, rho, h)
        if step % stride == 0 or step == n:
            record(step, rho)
    return GridTrajectory(
        np.array(rec["t"]), np.array(rec["trace"]), np.array(rec["herm"]),
        np.array(rec["eig"]), np.array(rec["pur"]), np.array(rec["coh"]),
        GridDensityMatrix(x, rho),
    )


# -- truncated oscillator basis -----------------------------------------------


@dataclass(frozen=True)
class OscillatorOperators:
    """Position and momentum on the lowest ``n`` levels of a reference oscillator.

    X = (a + a^+) / sqrt(2 m w),  P = i sqrt(m w / 2) (a^+ - a).
    [X, P] = i holds except in the last row and column.
    """

    n: int
    X: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    mass: float = 1.0
    omega: float = 1.0

    @classmethod
    def build(cls, n: int, mass: float = 1.0, omega: float = 1.0) -> "OscillatorOperators":
        if n < 2:
            raise ValueError("truncation needs n >= 2")
        a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1)
        ad = a.T
        X = (a + ad) / math.sqrt(2 * mass * omega)
        P = 1j * math.sqrt(mass * omega / 2) * (ad - a)
        return cls(n, X, P.astype(complex), mass, omega)

    def potential(self, V) -> np.ndarray:
        """V(X) from a callable on positions (via the X eigenbasis) or a matrix."""
        if callable(V):
            x, U = np.linalg.eigh(self.X)
            return (U * np.asarray(V(x), dtype=float)) @ U.T
        m = np.asarray(V)
        if m.shape != (self.n, self.n):
            raise GridMismatch(f"potential matrix has shape {m.shape}, basis has n = {self.n}")
        return m


@dataclass(frozen=True)
class CLParams:
    M: float
    eta: float
    T: float
    V: Callable | np.ndarray | None = None

    def __post_init__(self):
        if not (self.M > 0 and self.eta >= 0 and self.T > 0):
            raise ValueError(f"need M > 0, eta >= 0, T > 0; got M={self.M}, eta={self.eta}, T={self.T}")


@dataclass
class CLTrajectory:
    times: np.ndarray
    states: np.ndarray
    trace_dev: np.ndarray
    herm_dev: np.ndarray
    min_eig: np.ndarray
    purity: np.ndarray
    leak: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def coherent_state(n: int, alpha: complex) -> np.ndarray:
    """Density matrix of a coherent state truncated to n levels and renormalised."""
    k = np.arange(n)
    logfact = np.array([math.lgamma(i + 1) for i in k])
    amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * logfact) * np.power(complex(alpha), k)
    amp /= np.linalg.norm(amp)
    return np.outer(amp, amp.conj())


def _cl_generator_bound(H, X, P, p: CLParams) -> float:
    nx = np.linalg.norm(X, 2)
    return (
        2 * np.linalg.norm(H, 2)
        + 4 * p.eta * nx * np.linalg.norm(P, 2)
        + 8 * p.M * p.eta * p.T * nx**2
    )


def evolve_caldeira_leggett(rho0, ops: OscillatorOperators, params: CLParams, t: float,
                            dt: float, stride: int = 1, leak_tol: float = LEAK_TOL) -> CLTrajectory:
    """RK4 integration of the Caldeira-Leggett equation in the oscillator basis.

    Population of the top two basis levels is checked every step and
    TruncationLeak is raised once it exceeds ``leak_tol``. The generator is
    not completely positive, so negative eigenvalues are logged, not fatal.
    """
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (ops.n, ops.n):
        raise GridMismatch(f"rho0 has shape {rho.shape}, basis has n = {ops.n}")
    X, P = ops.X, ops.P
    V = ops.potential(params.V) if params.V is not None else np.zeros((ops.n, ops.n))
    H = P @ P / (2 * params.M) + V
    bound = _cl_generator_bound(H, X, P, params)
    if dt * bound > RK4_STABILITY:
        raise StepTooLarge(f"dt * ||L|| = {dt * bound:.3g} exceeds {RK4_STABILITY}")
    fric = params.eta
    diff = 2 * params.M * params.eta * params.T

    def rhs(r):
        xr = X @ r - r @ X
        out = -1j * (H @ r - r @ H)
        if fric:
            anti = P @ r + r @ P
            out -= 1j * fric * (X @ anti - anti @ X)
        if diff:
            out -= diff * (X @ xr - xr @ X)
        return out

    n = _n_steps(t, dt)
    h = t / n if n else 0.0
    tr0 = np.trace(rho).real
    rec = {k: [] for k in ("t", "rho", "trace", "herm", "eig", "pur", "leak")}

    def record(step, r):
        eig = float(np.linalg.eigvalsh(0.5 * (r + r.conj().T))[0])
        if eig < NEGATIVE_EIG_LOG:
            log.info("t=%.6g: min eigenvalue %.3g (CL generator is not CP)", step * h, eig)
        rec["t"].append(step * h)
        rec["rho"].append(r.copy())
        rec["trace"].append(float(np.trace(r).real - tr0))
        rec["herm"].append(_herm_dev(r))
        rec["eig"].append(eig)
        rec["pur"].append(float(np.real(np.vdot(r, r))))
        rec["leak"].append(float(np.real(r[-1, -1] + r[-2, -2])))

    record(0, rho)
    for step in range(1, n + 1):
        rho = _rk4_step(rhs, rho, h)
        leak = float(np.real(rho[-1, -1] + rho[-2, -2]))
        if leak > leak_tol:
            raise TruncationLeak(
                f"top-level population {leak:.3g} > {leak_tol:g} at t = {step * h:.6g}; raise n"
            )
        if step % max(stride, 1) == 0 or step == n:
            record(step, rho)
    return CLTrajectory(
        np.array(rec["t"]), np.array(rec["rho"]), np.array(rec["trace"]),
        np.array(rec["herm"]), np.array(rec["eig"]), np.array(rec["pur"]),
        np.array(rec["leak"]),
    )


# -- heavy-particle comparison -----------------------------------------------


def heavy_particle_gamma(params: CLParams) -> float:
    """Decoherence rate of the M -> inf limit at fixed M eta: gamma = 2 M eta T."""
    return 2 * params.M * params.eta * params.T


def position_basis(ops: OscillatorOperators):
    """Eigenvalues and eigenvectors of the truncated X (Gauss-Hermite nodes)."""
    return np.linalg.eigh(ops.X)


def coherence_decay_rates(traj: CLTrajectory, ops: OscillatorOperators, pairs):
    """Measured rates -ln|rho_ij(t)/rho_ij(0)| / t in the X eigenbasis.

    Returns (measured, node_separations_squared), one entry per (i, j).
    """
    x, U = position_basis(ops)
    r0 = U.T @ traj.states[0] @ U
    r1 = U.T @ traj.states[-1] @ U
    t = traj.times[-1]
    meas = np.array([-math.log(abs(r1[i, j]) / abs(r0[i, j])) / t for i, j in pairs])
    sep2 = np.array([(x[i] - x[j]) ** 2 for i, j in pairs])
    return meas, sep2
