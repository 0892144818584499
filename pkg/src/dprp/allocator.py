"""Static choice of the reduced dimension and artificial-noise fractions.

For a fixed ``r`` the objective only grows with the aggregate noise
``sum_i zeta_i kappa_i / r``, so the best allocation meets the privacy
constraint with equality: clients are filled, largest spare power first, until
the per-channel-use noise reaches the water level ``Omega``.  The outer search
walks ``r`` upward from the JL minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import convergence
from .convergence import LossProfile
from .privacy import jl_min_dim
from .projection import achlioptas

_FEAS_TOL = 1e-12


@dataclass(frozen=True)
class AllocationProblem:
    kappas: np.ndarray
    gammas: np.ndarray
    d: int
    s: int
    L: float
    lam: float
    T: int
    eps_target: np.ndarray
    delta_t: float
    eps_jl: float
    a: float
    c: float
    sigma2: float = 1.0
    r_max: int | None = None

    def __post_init__(self):
        kappas = np.asarray(self.kappas, dtype=np.float64)
        gammas = np.asarray(self.gammas, dtype=np.float64)
        eps = np.broadcast_to(np.asarray(self.eps_target, dtype=np.float64), kappas.shape).copy()
        if kappas.ndim != 1 or gammas.shape != kappas.shape:
            raise ValueError("kappas and gammas must be 1-d arrays of equal length")
        if np.any(kappas <= 0):
            raise ValueError("kappas must be positive")
        if np.any((gammas <= 0) | (gammas > 1)):
            raise ValueError("gammas must lie in (0, 1]")
        if np.any(eps <= 0):
            raise ValueError("epsilon targets must be positive")
        if self.c <= 0:
            raise ValueError("alignment constant must be positive")
        object.__setattr__(self, "kappas", kappas)
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "eps_target", eps)

    @property
    def n(self) -> int:
        return self.kappas.size

    @property
    def headroom(self) -> np.ndarray:
        """Power left after alignment, ``kappa_i (1 - gamma_i)``."""
        return np.clip(self.kappas * (1.0 - self.gammas), 0.0, None)

    @property
    def r_min(self) -> int:
        return jl_min_dim(self.n, self.eps_jl, self.a) if self.n >= 2 else 1

    @property
    def r_cap(self) -> int:
        return self.d if self.r_max is None else min(self.d, self.r_max)


@dataclass(frozen=True)
class AllocationResult:
    r_star: int | None
    zeta_star: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    Omega: float
    objective: float
    feasible: bool
    r_stop: int | None = None
    objective_stop: float = math.nan
    r_min: int = 1
    diagnostics: str = ""

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "r_star": self.r_star,
            "objective": self.objective,
            "r_stop": self.r_stop,
            "objective_stop": self.objective_stop,
            "r_min": self.r_min,
            "Omega": self.Omega,
            "zeta_star": [float(z) for z in self.zeta_star],
            "omega": [float(w) for w in self.omega],
            "diagnostics": self.diagnostics,
        }


def required_noise(kappas, eps_target, T: int, delta_t: float, eps_jl: float) -> np.ndarray:
    """Per-client lower bound on ``sum zeta kappa / r + sigma^2`` from the LDP target."""
    kappa_min = float(np.min(kappas))
    per_iter = np.asarray(eps_target, dtype=np.float64) / T
    return (1 + eps_jl) * 8 * kappa_min * math.log(1.25 / delta_t) / per_iter ** 2


def water_level(problem: AllocationProblem) -> float:
    """Required artificial noise per channel use; 0 when the target is already met."""
    need = required_noise(problem.kappas, problem.eps_target, problem.T, problem.delta_t,
                          problem.eps_jl)
    return max(0.0, float(need.max()) - problem.sigma2)


def water_fill(headroom, r: int, level: float) -> tuple[np.ndarray, float]:
    """Greedy fill of ``level`` with per-client caps ``headroom / r``.

    Clients are visited by decreasing headroom (ties by index).  Returns the
    per-client noise ``omega`` in original order and the unmet part of ``level``.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    headroom = np.asarray(headroom, dtype=np.float64)
    order = np.argsort(-headroom, kind="stable")
    caps = headroom[order] / r
    before = np.concatenate(([0.0], np.cumsum(caps)[:-1]))
    filled = np.minimum(caps, np.clip(level - before, 0.0, None))
    omega = np.empty_like(headroom)
    omega[order] = filled
    residual = max(0.0, level - float(filled.sum()))
    return omega, residual


def fill(problem: AllocationProblem, r: int) -> tuple[np.ndarray, float]:
    return water_fill(problem.headroom, r, water_level(problem))


def objective(problem: AllocationProblem, r: int, noise_per_use: float) -> float:
    """Convergence bound for ``T`` static rounds at dimension ``r``."""
    profile = LossProfile(problem.L, problem.lam)
    return convergence.static_bound(achlioptas(problem.s), profile, problem.d, r, problem.n,
                                    problem.c, noise_per_use, problem.sigma2, problem.T)


def solve(problem: AllocationProblem) -> AllocationResult:
    """Search ``r`` upward from the JL minimum, water-filling at each step.

    Two answers are kept: the argmin of the objective over every feasible
    candidate (``r_star``, the returned allocation) and the answer of the
    sequential stopping rule (``r_stop``): keep increasing ``r`` while the
    fill is feasible and return the last feasible value, or the first one
    when no noise is needed at all.
    """
    omega_level = water_level(problem)
    r_lo, r_hi = problem.r_min, problem.r_cap
    n = problem.n
    empty = np.zeros(n)
    if r_lo > r_hi:
        return AllocationResult(None, empty, empty, omega_level, math.inf, False, r_min=r_lo,
                                diagnostics=f"JL minimum r={r_lo} exceeds the cap {r_hi}")

    best = None
    r_stop = None
    for r in range(r_lo, r_hi + 1):
        omega, residual = water_fill(problem.headroom, r, omega_level)
        if residual > _FEAS_TOL * max(1.0, omega_level):
            break  # total capacity sum(headroom)/r only shrinks with r
        value = objective(problem, r, float(omega.sum()))
        if best is None or value < best[1]:
            best = (r, value, omega)
        r_stop = r
        if omega_level == 0:
            # nothing to allocate: the stopping rule ends at the first candidate
            r_stop = r_lo
    if best is None:
        omega, residual = water_fill(problem.headroom, r_lo, omega_level)
        return AllocationResult(
            None, empty, omega, omega_level, math.inf, False, r_min=r_lo,
            diagnostics=(f"noise demand {omega_level:.6g} per channel use exceeds capacity "
                         f"{problem.headroom.sum() / r_lo:.6g} at r={r_lo}; unmet {residual:.6g}"))

    r_star, value, omega = best
    zeta = np.minimum(r_star * omega / problem.kappas, 1.0 - problem.gammas)
    zeta = np.clip(zeta, 0.0, None)
    stop_omega, _ = water_fill(problem.headroom, r_stop, omega_level)
    return AllocationResult(
        r_star, zeta, omega, omega_level, value, True, r_stop=r_stop,
        objective_stop=objective(problem, r_stop, float(stop_omega.sum())), r_min=r_lo)
