"""Convergence-rate bounds for SGD on a smooth, strongly convex loss.

With step size ``1/(lambda t)`` the optimality gap after ``T`` rounds obeys
``xi(T) <= 2L / (lambda^2 T^2) * sum_t E||g_hat^t||^2``; this module supplies the
per-round second-moment bounds for each projection law and the closed-form
utility/privacy trade-off that follows for static channels.

``noise_sum`` is the per-channel-use artificial noise ``sum_i zeta_i kappa_i / r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .projection import DistributionKind


@dataclass(frozen=True)
class LossProfile:
    smoothness: float
    strong_convexity: float

    def __post_init__(self):
        if self.strong_convexity <= 0:
            raise ValueError("strong convexity must be positive")
        if self.smoothness < self.strong_convexity:
            raise ValueError("smoothness must be at least the strong-convexity constant")


@dataclass(frozen=True)
class BoundReport:
    xi_bound: float
    term_gradient: float
    term_noise: float
    kind: str
    r: int | None
    T: int
    per_round: tuple = field(default=(), repr=False)


def _gradient_term(kind: DistributionKind, d: int, r: int, L: float) -> float:
    if kind.name == "gaussian":
        return L ** 2 * (1 + (d + 1) / r)
    if kind.name == "identity":
        # U_r^T U_r = r I exactly: no projection distortion
        return L ** 2
    return L ** 2 * (1 + (d + kind.sparsity - 2) / r)


def _noise_term(d: int, n: int, c: float, noise_sum: float, sigma2: float) -> float:
    return d / (n * c) ** 2 * (noise_sum + sigma2)


def _check_round(d, r, n, c, noise_sum, sigma2):
    if d < 1 or r < 1 or n < 1:
        raise ValueError("d, r and n must be positive")
    if c <= 0:
        raise ValueError("alignment constant must be positive")
    if noise_sum < 0 or sigma2 < 0:
        raise ValueError("noise terms must be nonnegative")


def second_moment_bound(kind: DistributionKind, d: int, r: int, n: int, c: float,
                        noise_sum: float, sigma2: float, L: float) -> float:
    """Upper bound on ``E||g_hat||^2`` for one round."""
    _check_round(d, r, n, c, noise_sum, sigma2)
    return _gradient_term(kind, d, r, L) + _noise_term(d, n, c, noise_sum, sigma2)


def baseline_second_moment_bound(d: int, n: int, c: float, beta_noise_sum: float,
                                 sigma2: float, L: float) -> float:
    """Same bound without projection; ``beta_noise_sum = sum beta_i kappa_i / d``."""
    _check_round(d, 1, n, c, beta_noise_sum, sigma2)
    return L ** 2 + _noise_term(d, n, c, beta_noise_sum, sigma2)


def convergence_bound(kind: DistributionKind, profile: LossProfile,
                      per_round: Sequence[tuple]) -> BoundReport:
    """Sum the per-round bounds over ``per_round = [(d, r, n, c, noise_sum, sigma2), ...]``."""
    rounds = list(per_round)
    if not rounds:
        raise ValueError("need at least one round")
    L, lam = profile.smoothness, profile.strong_convexity
    grad_terms, noise_terms = [], []
    for d, r, n, c, noise_sum, sigma2 in rounds:
        _check_round(d, r, n, c, noise_sum, sigma2)
        grad_terms.append(_gradient_term(kind, d, r, L))
        noise_terms.append(_noise_term(d, n, c, noise_sum, sigma2))
    T = len(rounds)
    tg, tn = math.fsum(grad_terms), math.fsum(noise_terms)
    xi = 2 * L / (lam ** 2 * T ** 2) * (tg + tn)
    rs = {r for _, r, *_ in rounds}
    r = rs.pop() if len(rs) == 1 else None
    return BoundReport(xi, tg, tn, str(kind), r, T, tuple(zip(grad_terms, noise_terms)))


def running_bound(kind: DistributionKind, profile: LossProfile,
                  per_round: Iterable[tuple]) -> list[float]:
    """Bound after each prefix ``t = 1..T`` of the rounds."""
    L, lam = profile.smoothness, profile.strong_convexity
    out, acc = [], 0.0
    for t, (d, r, n, c, noise_sum, sigma2) in enumerate(per_round, start=1):
        acc += second_moment_bound(kind, d, r, n, c, noise_sum, sigma2, L)
        out.append(2 * L / (lam ** 2 * t ** 2) * acc)
    return out


def static_bound(kind: DistributionKind, profile: LossProfile, d: int, r: int, n: int, c: float,
                 noise_sum: float, sigma2: float, T: int) -> float:
    """``(2L / lambda^2 T) * M`` for ``T`` identical rounds."""
    m = second_moment_bound(kind, d, r, n, c, noise_sum, sigma2, profile.smoothness)
    return 2 * profile.smoothness / (profile.strong_convexity ** 2 * T) * m


def static_baseline_bound(profile: LossProfile, d: int, n: int, c: float, beta_noise_sum: float,
                          sigma2: float, T: int) -> float:
    m = baseline_second_moment_bound(d, n, c, beta_noise_sum, sigma2, profile.smoothness)
    return 2 * profile.smoothness / (profile.strong_convexity ** 2 * T) * m


def _tradeoff_coefficients(profile, d, r, s, n, eps_total, delta_t, eps_jl):
    if eps_total <= 0:
        raise ValueError("total epsilon must be positive")
    if r < 1 or d < 1 or n < 1:
        raise ValueError("d, r and n must be positive")
    L, lam = profile.smoothness, profile.strong_convexity
    a = 2 * L ** 3 / lam ** 2 * (1 + (d + s - 2) / r)
    b = 16 * d * L ** 3 * math.log(1.25 / delta_t) * (1 + eps_jl) / (lam ** 2 * n ** 2 * eps_total ** 2)
    return a, b


def utility_privacy_terms(profile: LossProfile, d: int, r: int, s: int, n: int, T: int,
                          eps_total: float, delta_t: float, eps_jl: float) -> tuple[float, float]:
    """The optimization and privacy-noise terms of the trade-off bound at horizon ``T``."""
    a, b = _tradeoff_coefficients(profile, d, r, s, n, eps_total, delta_t, eps_jl)
    return a / T, b * T


def utility_privacy_bound(profile: LossProfile, d: int, r: int, s: int, n: int, T: int,
                          eps_total: float, delta_t: float, eps_jl: float) -> float:
    """Gap bound for a static channel expressed through the T-fold epsilon."""
    return sum(utility_privacy_terms(profile, d, r, s, n, T, eps_total, delta_t, eps_jl))


def baseline_utility_privacy_bound(profile: LossProfile, d: int, n: int, T: int,
                                   eps_total: float, delta_t: float) -> float:
    """Trade-off bound of the scheme without projection."""
    if eps_total <= 0:
        raise ValueError("total epsilon must be positive")
    L, lam = profile.smoothness, profile.strong_convexity
    return (2 * L ** 3 / (lam ** 2 * T)
            + 16 * d * L ** 3 * math.log(1.25 / delta_t) * T / (lam ** 2 * n ** 2 * eps_total ** 2))


def optimal_T(profile: LossProfile, d: int, r: int, s: int, n: int, eps_total: float,
              delta_t: float, eps_jl: float, max_T: int = 10 ** 6) -> int:
    """Integer horizon minimizing :func:`utility_privacy_bound` (capped at ``max_T``).

    The bound has the form ``A/T + B T``; the continuous minimizer ``sqrt(A/B)``
    is rounded to the better neighbouring integer.
    """
    if math.isinf(eps_total):
        return max_T
    a, b = _tradeoff_coefficients(profile, d, r, s, n, eps_total, delta_t, eps_jl)
    if b <= 0:
        return max_T
    t_cont = math.sqrt(a / b)
    if t_cont >= max_T:
        return max_T
    candidates = {max(1, math.floor(t_cont) + k) for k in (-1, 0, 1, 2)}
    candidates = {t for t in candidates if t <= max_T}
    return min(sorted(candidates), key=lambda t: a / t + b * t)
