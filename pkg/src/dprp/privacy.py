"""Local differential privacy of the projected over-the-air mechanism.

The per-iteration guarantees are Gaussian-mechanism bounds
``eps = (Delta / sigma) * sqrt(2 ln(1.25 / delta))`` where the receiver-side
noise variance is ``sum_i zeta_i kappa_i / r + sigma_nu^2`` and the sensitivity
``Delta`` is ``2 sqrt(kappa_min)`` inflated by the projection's norm distortion.

Throughout, ``noise_sum`` is the *per-channel-use* artificial noise
``sum_i zeta_i kappa_i / r`` and ``beta_noise_sum`` is ``sum_i beta_i kappa_i / d``.
The privacy-loss random variable itself has no runtime representation; only
the resulting (epsilon, delta) numbers are computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .projection import DistributionKind, sample_entries

REGIME_JL = "jl"
REGIME_SQRT = "tail-sqrt"
REGIME_LINEAR = "tail-linear"
REGIME_BASELINE = "baseline"


@dataclass(frozen=True)
class PrivacyParams:
    delta_t: float
    delta_prime: float
    eps_jl: float = 0.5
    a: float = 1.0
    grad_bound: float = 1.0

    def __post_init__(self):
        _check_prob("delta_t", self.delta_t)
        _check_prob("delta_prime", self.delta_prime)
        if not 0 < self.eps_jl < 1:
            raise ValueError("eps_jl must lie in (0, 1)")
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.grad_bound <= 0:
            raise ValueError("grad_bound must be positive")

    @property
    def sensitivity_base(self) -> float:
        """Worst-case gradient difference ``||g - g'|| <= 2L``."""
        return 2.0 * self.grad_bound


@dataclass(frozen=True)
class PrivacyReport:
    eps_per_iter: float
    eps_total: float
    delta_total: float
    regime: str


def _check_prob(name, p):
    if not 0 < p < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {p}")


def _gaussian_core(kappa_min, noise, delta_t):
    # sqrt(2 kappa_min ln(1.25/delta) / noise)
    if kappa_min <= 0:
        raise ValueError("kappa_min must be positive")
    if noise <= 0:
        raise ValueError("total receiver noise must be positive")
    _check_prob("delta_t", delta_t)
    return math.sqrt(2.0 * kappa_min * math.log(1.25 / delta_t) / noise)


def jl_min_dim(n: int, eps_jl: float, a: float) -> int:
    """Smallest ``r`` with ``r >= (4 + 2a) (eps^2/2 - eps^3/3)^-1 ln n``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < eps_jl < 1:
        raise ValueError("eps_jl must lie in (0, 1)")
    if a <= 0:
        raise ValueError("a must be positive")
    bound = (4 + 2 * a) / (eps_jl ** 2 / 2 - eps_jl ** 3 / 3) * math.log(n)
    return max(1, math.ceil(bound))


def ldp_jl(kappa_min: float, noise_sum: float, sigma2_channel: float, delta_t: float,
           eps_jl: float) -> float:
    """Per-iteration epsilon when ``r`` satisfies the JL condition.

    The caller is responsible for ``r >= jl_min_dim(...)``.
    """
    if noise_sum < 0:
        raise ValueError("noise_sum must be nonnegative")
    if not 0 <= eps_jl < 1:
        raise ValueError("eps_jl must lie in [0, 1)")
    return 2.0 * math.sqrt(1.0 + eps_jl) * _gaussian_core(
        kappa_min, noise_sum + sigma2_channel, delta_t)


def distortion_factor(s: int, r: int, delta_prime: float) -> tuple[float, str]:
    """Squared-norm inflation of the projected sensitivity holding w.p. ``1 - delta'``.

    ``1 + 8 s sqrt(ln(1/delta')/r)`` for ``r >= ln(1/delta')`` and
    ``1 + 8 s ln(1/delta')/r`` below the knee.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if not 0 < delta_prime <= 1:
        raise ValueError(f"delta_prime must lie in (0, 1], got {delta_prime}")
    log_term = math.log(1.0 / delta_prime)
    if r >= log_term:
        return 1.0 + 8.0 * s * math.sqrt(log_term / r), REGIME_SQRT
    return 1.0 + 8.0 * s * log_term / r, REGIME_LINEAR


def ldp_general(kind: DistributionKind, r: int, delta_prime: float, kappa_min: float,
                noise_sum: float, sigma2_channel: float, delta_t: float) -> float:
    """Per-iteration epsilon for any ``r`` from the sub-exponential tail bound."""
    if noise_sum < 0:
        raise ValueError("noise_sum must be nonnegative")
    factor, _ = distortion_factor(kind.sparsity, r, delta_prime)
    return 2.0 * math.sqrt(factor) * _gaussian_core(kappa_min, noise_sum + sigma2_channel, delta_t)


def ldp_baseline(d: int, kappa_min: float, beta_noise_sum: float, sigma2_channel: float,
                 delta_t: float) -> float:
    """Per-iteration epsilon of the scheme without dimensionality reduction.

    ``d`` only documents the scale of ``beta_noise_sum = sum beta_i kappa_i / d``.
    """
    if d < 1:
        raise ValueError("d must be positive")
    if beta_noise_sum < 0:
        raise ValueError("beta_noise_sum must be nonnegative")
    return 2.0 * _gaussian_core(kappa_min, beta_noise_sum + sigma2_channel, delta_t)


def crossover_r(zeta_kappas, beta_kappas, d: int, sigma2: float, delta_prime: float, s: int,
                eps_jl: float) -> tuple[float, float]:
    """Largest reduced dimensions below which projection beats no projection.

    Returns ``(r_general, r_jl)``: projection with the tail-bound epsilon
    (resp. the JL epsilon) is strictly more private than the baseline exactly
    when ``r < r_general`` (resp. ``r < r_jl``), for a fixed artificial-noise
    budget ``sum zeta_i kappa_i`` spread over ``r`` channel uses.
    """
    zeta_kappas = np.asarray(zeta_kappas, dtype=np.float64)
    beta_kappas = np.asarray(beta_kappas, dtype=np.float64)
    if zeta_kappas.shape != beta_kappas.shape:
        raise ValueError("zeta_kappas and beta_kappas must have the same length")
    budget = float(zeta_kappas.sum())
    base = float(beta_kappas.sum()) / d
    if budget <= 0:
        return 0.0, 0.0

    # jl: (1+eps)(B + s2) < Z/r + s2
    jl_den = (1 + eps_jl) * base + eps_jl * sigma2
    r_jl = math.inf if jl_den <= 0 else budget / jl_den

    # general: h(r) = r (F(r)(B + s2) - s2) - Z is increasing, root is the threshold
    log_term = math.log(1.0 / delta_prime)
    scale = base + sigma2
    knee = log_term * base + 8 * s * log_term * scale - budget  # h at r = ln(1/delta')
    if knee >= 0:
        # root lies below the knee, where h is linear in r
        r_general = 0.0 if base <= 0 else max(0.0, (budget - 8 * s * log_term * scale) / base)
    else:
        # positive root of base x^2 + b x - budget in x = sqrt(r), cancellation-free
        b = 8 * s * scale * math.sqrt(log_term)
        x = 2 * budget / (b + math.sqrt(b * b + 4 * base * budget))
        r_general = x * x
    return r_general, r_jl


def approximate_thresholds(zeta_kappas, beta_kappas, d: int, delta_prime: float, s: int,
                           eps_jl: float) -> tuple[float, float]:
    """Approximate closed-form thresholds ``(r_general, r_jl)``.

    Reported next to :func:`crossover_r` for comparison.  They are not the
    exact crossover of the epsilon formulas: the JL form uses ``eps^2`` where
    the exact condition has ``eps * sigma^2``.
    """
    z = float(np.sum(zeta_kappas))
    b = float(np.sum(beta_kappas)) / d
    if z <= 0:
        return 0.0, 0.0
    log_term = math.log(1.0 / delta_prime)
    general = z / (1 + math.sqrt(1 + (1 + b) / z ** 2)) / (z / d + 32 * s ** 2 * log_term)
    jl = z / ((1 + eps_jl) * b + eps_jl ** 2)
    return general, jl


def ldp_jl_upper(r: int, n: int, kappa_min: float, min_zeta_kappa: float, delta_t: float,
                 eps_jl: float) -> float:
    """Simplified bound ``2 sqrt(r(1+eps)/n) sqrt(2 kappa_min ln(1.25/delta)/min_i zeta_i kappa_i)``."""
    return 2.0 * math.sqrt(r * (1 + eps_jl) / n) * _gaussian_core(kappa_min, min_zeta_kappa, delta_t)


def compose(eps_per_iter, delta_per_iter, tail_term: float = 0.0) -> tuple[float, float]:
    """Basic composition plus the sensitivity-failure tail (``T/n^a`` or ``T delta'``)."""
    eps = [float(e) for e in eps_per_iter]
    deltas = [float(d) for d in delta_per_iter]
    if len(eps) != len(deltas):
        raise ValueError("epsilon and delta lists differ in length")
    return math.fsum(eps), math.fsum(deltas) + tail_term


def per_iteration_delta(delta_total: float, T: int, tail_term: float = 0.0) -> float:
    """Split a total delta budget equally over ``T`` iterations after the tail."""
    remaining = delta_total - tail_term
    if remaining <= 0:
        raise ValueError("tail term exhausts the delta budget")
    return remaining / T


def jl_tail(T: int, n: int, a: float) -> float:
    return T / n ** a


def static_report(eps_iter: float, T: int, delta_t: float, tail_term: float,
                  regime: str) -> PrivacyReport:
    """T-fold report for a static channel and allocation."""
    eps_total, delta_total = compose([eps_iter] * T, [delta_t] * T, tail_term)
    return PrivacyReport(eps_iter, eps_total, delta_total, regime)


def sensitivity_threshold(kind: DistributionKind, r: int, delta_prime: float,
                          diff_norm: float) -> float:
    """Value of ``||U_r (g - g')||^2`` exceeded with probability at most ``delta'``."""
    factor, _ = distortion_factor(kind.sparsity, r, delta_prime)
    return r * diff_norm ** 2 * factor


def _projected_square_norms(kind, r, d, direction, trials, rng, chunk=1 << 16):
    # S = ||U_r v||^2 for a unit v, drawn without materializing U when the law
    # of each row-inner-product <U_k, v> is available in closed form.
    out = np.empty(trials)
    for start in range(0, trials, chunk):
        m = min(chunk, trials - start)
        if isinstance(direction, np.ndarray):
            u = sample_entries(kind, (m, r, d), rng)
            dots = u @ direction
        elif direction == "sparse":
            dots = sample_entries(kind, (m, r), rng)
        elif direction == "flat":
            dots = _flat_row_sums(kind, d, (m, r), rng) / math.sqrt(d)
        else:
            raise ValueError(f"unknown direction {direction!r}")
        out[start:start + m] = np.einsum("ij,ij->i", dots, dots)
    return out


def _flat_row_sums(kind, d, size, rng):
    """Law of ``sum_j U_kj`` over a row of ``d`` entries."""
    if kind.name == "gaussian":
        return math.sqrt(d) * rng.standard_normal(size)
    if kind.name == "rademacher":
        return 2.0 * rng.binomial(d, 0.5, size) - d
    if kind.name == "achlioptas":
        nonzero = rng.binomial(d, 1.0 / kind.s, size)
        plus = rng.binomial(nonzero, 0.5)
        return math.sqrt(kind.s) * (2.0 * plus - nonzero)
    raise ValueError(f"no row-sum law for {kind}")


def sensitivity_tail_check(kind: DistributionKind, r: int, d: int, delta_prime: float,
                           trials: int, rng: np.random.Generator, grad_bound: float = 1.0,
                           directions=("sparse", "flat")) -> float:
    """Empirical rate at which the projected squared sensitivity exceeds its bound.

    The gradient difference is fixed at norm ``2L`` and pointed along each of
    ``directions`` (``"sparse"`` = a coordinate axis, ``"flat"`` = the all-ones
    direction, or an explicit vector); the largest violation rate is returned.
    """
    if trials < 10_000:
        raise ValueError("need at least 10^4 trials")
    diff_norm = 2.0 * grad_bound
    worst = 0.0
    for direction in directions:
        if isinstance(direction, np.ndarray):
            direction = direction / np.linalg.norm(direction)
        s = _projected_square_norms(kind, r, d, direction, trials, rng) * diff_norm ** 2
        threshold = sensitivity_threshold(kind, r, delta_prime, diff_norm)
        worst = max(worst, float(np.mean(s >= threshold)))
    return worst
