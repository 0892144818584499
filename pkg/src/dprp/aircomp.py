"""One round of over-the-air aggregation.

All signals are real baseband.  Each client pre-rotates by its channel phase
(perfect CSI), so after superposition only the gains ``|h_i|`` remain and the
simulator carries ``kappa_i = P_i |h_i|^2`` instead of complex coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .projection import DimensionError, ProjectionMatrix, back_project, project

KAPPA_FLOOR = 1e-6
_BUDGET_TOL = 1e-12


class AlignmentError(ValueError):
    """Raised when some client's SNR is too small to align the round."""


class PowerBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelRound:
    kappas: np.ndarray
    sigma2_channel: float = 1.0
    r: int = 1
    powers: np.ndarray | None = None

    def __post_init__(self):
        kappas = np.asarray(self.kappas, dtype=np.float64)
        if kappas.ndim != 1 or kappas.size == 0:
            raise ValueError("kappas must be a non-empty 1-d array")
        if np.any(kappas < 0):
            raise ValueError("kappas must be nonnegative")
        if self.sigma2_channel < 0:
            raise ValueError("channel noise variance must be nonnegative")
        if self.r < 1:
            raise DimensionError("r must be >= 1")
        powers = np.ones_like(kappas) if self.powers is None else np.broadcast_to(
            np.asarray(self.powers, dtype=np.float64), kappas.shape).copy()
        if np.any(powers <= 0):
            raise ValueError("transmit powers must be positive")
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "powers", powers)

    @property
    def n(self) -> int:
        return self.kappas.size

    @property
    def gains(self) -> np.ndarray:
        """Channel magnitudes ``|h_i| = sqrt(kappa_i / P_i)``."""
        return np.sqrt(self.kappas / self.powers)

    @property
    def kappa_min(self) -> float:
        return float(self.kappas.min())


@dataclass(frozen=True)
class PowerSplit:
    gamma: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=np.float64)
        zeta = np.asarray(self.zeta, dtype=np.float64)
        if gamma.shape != zeta.shape:
            raise ValueError("gamma and zeta must have the same shape")
        if np.any((gamma < 0) | (gamma > 1)) or np.any((zeta < 0) | (zeta > 1)):
            raise ValueError("power fractions must lie in [0, 1]")
        if np.any(gamma + zeta > 1 + _BUDGET_TOL):
            raise PowerBudgetError("gamma_i + zeta_i exceeds 1")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "zeta", zeta)


@dataclass(frozen=True)
class RoundResult:
    g_hat: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    c: float
    sigma2_effective: float


def draw_kappas(n: int, rng: np.random.Generator, powers=1.0) -> np.ndarray:
    """Rayleigh fading: ``|h|^2`` of a CN(0, 1) coefficient is Exp(1)."""
    return np.asarray(powers, dtype=np.float64) * rng.exponential(1.0, size=n)


def align(kappas, grad_bound: float = 1.0, floor: float = KAPPA_FLOOR):
    """Signal fractions that make every client arrive with the same amplitude.

    Returns ``(gamma, c)`` with ``gamma_i = kappa_min / kappa_i`` and
    ``c = sqrt(kappa_min) / L``, so ``sqrt(gamma_i kappa_i) / L == c``.
    """
    kappas = np.asarray(kappas, dtype=np.float64)
    if kappas.size == 0:
        raise ValueError("no clients")
    if grad_bound <= 0:
        raise ValueError("gradient bound must be positive")
    kappa_min = float(kappas.min())
    if kappa_min <= 0 or kappa_min < floor:
        raise AlignmentError(f"kappa_min={kappa_min:g} is below the floor {floor:g}")
    gamma = kappa_min / kappas
    return gamma, math.sqrt(kappa_min) / grad_bound


def effective_noise_variance(kappas, zeta, r: int, sigma2_channel: float = 1.0) -> float:
    """Per-channel-use noise at the receiver, ``sum_i zeta_i kappa_i / r + sigma^2``."""
    return float(np.dot(zeta, kappas)) / r + sigma2_channel


def equivalent_noise_variance(kappas, zeta, r: int, n: int, c: float,
                              sigma2_channel: float = 1.0) -> float:
    """Per-coordinate variance of the noise in the decoded gradient."""
    return effective_noise_variance(kappas, zeta, r, sigma2_channel) / (n * c) ** 2


def transmit(z, gamma: float, zeta: float, power: float, grad_bound: float,
             rng: np.random.Generator) -> np.ndarray:
    """Channel input ``sqrt(gamma P)/L * z + sqrt(zeta P / r) * m`` with ``m ~ N(0, I_r)``."""
    z = np.asarray(z, dtype=np.float64)
    if gamma < 0 or zeta < 0:
        raise ValueError("power fractions must be nonnegative")
    if gamma + zeta > 1 + _BUDGET_TOL:
        raise PowerBudgetError(f"gamma + zeta = {gamma + zeta:g} exceeds 1")
    if not np.all(np.isfinite(z)):
        raise ValueError("projected gradient is not finite")
    r = z.size
    x = (math.sqrt(gamma * power) / grad_bound) * z
    if zeta > 0:
        x = x + math.sqrt(zeta * power / r) * rng.standard_normal(r)
    return x


def mac_superpose(signals, channel: ChannelRound, rng: np.random.Generator) -> np.ndarray:
    """Receiver output ``y = sum_i |h_i| x_i + n`` with ``n ~ N(0, sigma^2 I_r)``."""
    signals = np.asarray(signals, dtype=np.float64)
    if signals.ndim != 2 or signals.shape != (channel.n, channel.r):
        raise DimensionError(
            f"expected {channel.n} signals of length {channel.r}, got shape {signals.shape}")
    y = np.sum(channel.gains[:, None] * signals, axis=0)
    if channel.sigma2_channel > 0:
        y = y + math.sqrt(channel.sigma2_channel) * rng.standard_normal(channel.r)
    return y


def ps_decode(y, m: ProjectionMatrix, n: int, c: float) -> np.ndarray:
    """Global-gradient estimate ``T^T y / (n c)``."""
    if c <= 0:
        raise ValueError("alignment constant must be positive")
    if n < 1:
        raise ValueError("need at least one client")
    return back_project(m, y) / (n * c)


def run_round(grads, m: ProjectionMatrix, channel: ChannelRound, zeta, grad_bound: float,
              client_rngs, noise_rng: np.random.Generator,
              floor: float = KAPPA_FLOOR) -> RoundResult:
    """Project, transmit, superpose and decode one round of local gradients.

    ``client_rngs`` supplies one generator per client for its artificial noise.
    """
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != (channel.n, m.d):
        raise DimensionError(f"expected gradients of shape {(channel.n, m.d)}, got {grads.shape}")
    if channel.r != m.r:
        raise DimensionError("channel uses and projection dimension disagree")
    gamma, c = align(channel.kappas, grad_bound, floor)
    split = PowerSplit(gamma, np.broadcast_to(np.asarray(zeta, dtype=np.float64), gamma.shape))
    signals = np.stack([
        transmit(project(m, g), split.gamma[i], split.zeta[i], channel.powers[i], grad_bound,
                 client_rngs[i])
        for i, g in enumerate(grads)
    ])
    y = mac_superpose(signals, channel, noise_rng)
    g_hat = ps_decode(y, m, channel.n, c)
    sigma2 = effective_noise_variance(channel.kappas, split.zeta, m.r, channel.sigma2_channel)
    return RoundResult(g_hat, y, c, sigma2)
