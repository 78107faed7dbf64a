"""Gaussian states: squeezed pure states, symplectic propagation,
reduction to the system mode, and scalar diagnostics (area, entropy,
purity, energy).

Squeezing convention: r = Delta x / Delta p in natural units, so a pure
state with r = 1 is the round vacuum-like state with both variances
hbar/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NonPhysical",
    "SqueezeSpec",
    "GaussianState",
    "Diagnostics",
    "squeezed_pure",
    "product_state",
    "propagate",
    "reduce_system",
    "area_ratio",
    "entropy_exact",
    "entropy_approx",
    "linear_entropy",
    "purity",
    "energy",
    "diagnostics",
    "diagnostics_from_area",
]


class NonPhysical(ValueError):
    """A covariance matrix failed a physicality check."""


@dataclass(frozen=True)
class SqueezeSpec:
    """Pure-state squeezing: ratio r = dx/dp and orientation angle."""

    r: float = 1.0
    angle: float = 0.0

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("squeezing ratio r must be > 0")


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and symmetric covariance for 1 or 2 modes."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if mean.shape[0] not in (2, 4) or cov.shape != (mean.shape[0],) * 2:
            raise ValueError("state must have 1 or 2 modes")
        if np.abs(cov - cov.T).max() > 1e-12 * max(1.0, np.abs(cov).max()):
            raise NonPhysical("covariance matrix not symmetric")

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2


@dataclass(frozen=True)
class Diagnostics:
    """Scalar state diagnostics of a reduced 1-mode state."""

    a: float
    A: float
    S: float
    S_approx: float
    varsigma: float
    purity: float
    E: float


def squeezed_pure(spec: SqueezeSpec, hbar: float = 1.0) -> GaussianState:
    """Zero-mean pure Gaussian state with dx/dp = r, rotated by angle."""
    c, s = math.cos(spec.angle), math.sin(spec.angle)
    rot = np.array([[c, -s], [s, c]])
    cov = rot @ np.diag([hbar * spec.r / 2.0, hbar / (2.0 * spec.r)]) @ rot.T
    return GaussianState(mean=np.zeros(2), cov=cov)


def product_state(sys: GaussianState, env: GaussianState) -> GaussianState:
    """Unentangled two-mode state from two one-mode factors."""
    if sys.n_modes != 1 or env.n_modes != 1:
        raise ValueError("product_state expects two 1-mode states")
    mean = np.concatenate([sys.mean, env.mean])
    cov = np.zeros((4, 4))
    cov[:2, :2] = sys.cov
    cov[2:, 2:] = env.cov
    return GaussianState(mean=mean, cov=cov)


def propagate(state: GaussianState, T: np.ndarray) -> GaussianState:
    """Push means and covariances through a linear phase-space map."""
    T = np.asarray(T)
    if T.shape != (state.mean.shape[0],) * 2:
        raise ValueError("transition matrix shape does not match state")
    cov = T @ state.cov @ T.T
    cov = 0.5 * (cov + cov.T)
    return GaussianState(mean=T @ state.mean, cov=cov)


def reduce_system(state: GaussianState) -> GaussianState:
    """Marginal of the system mode (upper-left block)."""
    return GaussianState(mean=state.mean[:2].copy(), cov=state.cov[:2, :2].copy())


def area_ratio(state: GaussianState, hbar: float = 1.0) -> float:
    """Phase-space area in units of hbar/2: A = sqrt(det cov)/(hbar/2)."""
    if state.n_modes != 1:
        raise ValueError("area_ratio expects a 1-mode state")
    radicand = float(np.linalg.det(state.cov))
    if radicand < -1e-12:
        raise NonPhysical(f"negative area radicand {radicand:.3e}")
    return math.sqrt(max(radicand, 0.0)) / (hbar / 2.0)


def entropy_exact(A: float) -> float:
    """Von Neumann entropy of a 1-mode Gaussian state with scaled area A."""
    if A < 1.0 - 1e-9:
        raise ValueError(f"scaled area A = {A} < 1")
    e = A - 1.0
    if e <= 0.0:
        return 0.0
    return 0.5 * ((A + 1.0) * math.log(A + 1.0) - e * math.log(e)) - math.log(2.0)


def entropy_approx(A: float) -> float:
    """ln A: within 1 - ln 2 of the exact entropy, exact at A = 1."""
    if A < 1.0 - 1e-9:
        raise ValueError(f"scaled area A = {A} < 1")
    return math.log(max(A, 1.0))


def linear_entropy(A: float) -> float:
    """1 - Tr rho^2 = 1 - 1/A."""
    if A < 1.0 - 1e-9:
        raise ValueError(f"scaled area A = {A} < 1")
    return 1.0 - 1.0 / max(A, 1.0)


def purity(A: float) -> float:
    """Tr rho^2 = 1/A."""
    if A < 1.0 - 1e-9:
        raise ValueError(f"scaled area A = {A} < 1")
    return 1.0 / max(A, 1.0)


def energy(state: GaussianState, m_s: float, omega: float) -> float:
    """Mean oscillator energy of a 1-mode state (means included)."""
    dx2 = state.cov[0, 0] + state.mean[0] ** 2
    dp2 = state.cov[1, 1] + state.mean[1] ** 2
    return 0.5 * (m_s * omega**2 * dx2 + dp2 / m_s)


def diagnostics(
    state: GaussianState, m_s: float, omega: float, hbar: float = 1.0
) -> Diagnostics:
    """All scalar diagnostics of a reduced 1-mode state at once."""
    return diagnostics_from_area(area_ratio(state, hbar), state, m_s, omega, hbar)


def diagnostics_from_area(
    A: float, state: GaussianState, m_s: float, omega: float, hbar: float = 1.0
) -> Diagnostics:
    """Diagnostics with the scaled area supplied by the caller.

    For callers that can evaluate the area more accurately than the
    determinant of the stored covariance allows (the determinant loses
    all precision once the covariance entries dwarf the area).
    """
    return Diagnostics(
        a=A * hbar / 2.0,
        A=A,
        S=entropy_exact(A),
        S_approx=entropy_approx(A),
        varsigma=linear_entropy(A),
        purity=purity(A),
        E=energy(state, m_s, omega),
    )
