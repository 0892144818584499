"""Monte Carlo and brute-force oracles for the closed-form results.

Each estimator here draws from the same entry laws as :mod:`dprp.projection`
but evaluates the quantity of interest directly (batched matrices, exact
binomial laws, exhaustive grids), independent of the formulas being checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import aircomp, allocator
from .convergence import second_moment_bound
from .projection import DistributionKind, ProjectionSpec, generate, sample_entries
from .rng import derive_seed, stream

_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return (f"[{status}] {self.name}: measured={self.measured:.6g} "
                f"expected={self.expected:.6g} tol={self.tolerance:.3g}{extra}")


def _batches(trials, per_trial):
    chunk = max(1, _CHUNK_ENTRIES // max(1, per_trial))
    for start in range(0, trials, chunk):
        yield min(chunk, trials - start)


def norm_ratio_mean(kind: DistributionKind, d: int, r: int, trials: int,
                    rng: np.random.Generator, g=None) -> float:
    """Mean of ``||U_r g||^2 / (r ||g||^2)`` over independent matrices."""
    g = rng.standard_normal(d) if g is None else np.asarray(g, dtype=np.float64)
    g = g / np.linalg.norm(g)
    total = 0.0
    for m in _batches(trials, r * d):
        z = sample_entries(kind, (m, r, d), rng) @ g
        total += float(np.sum(z * z)) / r
    return total / trials


def gram_mean(kind: DistributionKind, d: int, r: int, trials: int,
              rng: np.random.Generator) -> np.ndarray:
    """Sample mean of ``U_r^T U_r``."""
    acc = np.zeros((d, d))
    for m in _batches(trials, r * d):
        u = sample_entries(kind, (m, r, d), rng)
        acc += np.einsum("tqj,tqk->jk", u, u)
    return acc / trials


def cross_second_moment(kind: DistributionKind, d: int, r: int, trials: int,
                        rng: np.random.Generator) -> float:
    """Mean of ``(U_{r,j}^T U_{r,k})^2`` over all column pairs ``j != k``."""
    acc, count = 0.0, 0
    off = ~np.eye(d, dtype=bool)
    for m in _batches(trials, r * d):
        u = sample_entries(kind, (m, r, d), rng)
        gram = np.einsum("tqj,tqk->tjk", u, u)
        acc += float(np.sum(gram[:, off] ** 2))
        count += m * int(off.sum())
    return acc / count


def column_square_norms(kind: DistributionKind, r: int, trials: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Samples of ``||U_{r,j}||^2`` for a single column."""
    u = sample_entries(kind, (trials, r), rng)
    return np.sum(u * u, axis=1)


def _round_inputs(seed, n, d, grad_scale=1.0):
    rng = stream(seed, "inputs")
    grads = grad_scale * rng.standard_normal((n, d))
    kappas = rng.exponential(1.0, n) + 0.2
    return grads, kappas


def simulate_rounds(kind: DistributionKind, grads, kappas, zeta, sigma2: float, r: int,
                    trials: int, seed: int, grad_bound: float | None = None) -> np.ndarray:
    """Decoded gradients of ``trials`` independent rounds through :mod:`dprp.aircomp`."""
    grads = np.asarray(grads, dtype=np.float64)
    n, d = grads.shape
    L = grad_bound if grad_bound is not None else float(np.linalg.norm(grads, axis=1).max())
    channel = aircomp.ChannelRound(kappas, sigma2, r)
    out = np.empty((trials, d))
    for k in range(trials):
        m = generate(ProjectionSpec(kind, d, r, derive_seed(seed, "rpm", k)))
        rng = stream(seed, "round", k)
        res = aircomp.run_round(grads, m, channel, zeta, L, [rng] * n, rng)
        out[k] = res.g_hat
    return out


def second_moment_identity(d: int, n: int, r: int, zeta, sigma2: float, trials: int,
                           seed: int) -> tuple[float, float, float]:
    """(empirical E||g_hat||^2, exact Rademacher identity, per-round upper bound)."""
    grads, kappas = _round_inputs(seed, n, d)
    L = float(np.linalg.norm(grads, axis=1).max())
    zeta = np.broadcast_to(np.asarray(zeta, dtype=np.float64), (n,))
    gamma, c = aircomp.align(kappas, L)
    zeta = np.minimum(zeta, 1.0 - gamma)
    g_hat = simulate_rounds(DistributionKind("rademacher"), grads, kappas, zeta, sigma2, r,
                            trials, seed, L)
    empirical = float(np.mean(np.sum(g_hat ** 2, axis=1)))
    total = grads.sum(axis=0)
    noise_var = aircomp.equivalent_noise_variance(kappas, zeta, r, n, c, sigma2)
    exact = (r * r + r * (d - 1)) / (n * r) ** 2 * float(total @ total) + d * noise_var
    noise_sum = float(np.dot(zeta, kappas)) / r
    bound = second_moment_bound(DistributionKind("rademacher"), d, r, n, c, noise_sum, sigma2, L)
    return empirical, exact, bound


def brute_force_allocation(problem: allocator.AllocationProblem, r_span: int = 200,
                           step: float = 0.01) -> tuple[float, int | None]:
    """Exhaustive search over ``r`` and a ``step``-grid of noise fractions.

    Meet-in-the-middle over two halves of the clients finds, for every ``r``,
    the smallest grid-achievable ``sum zeta_i kappa_i`` that meets the water level.
    Returns ``(objective, r)``; ``(inf, None)`` when nothing on the grid is feasible.
    """
    n = problem.n
    level = allocator.water_level(problem)
    grids = []
    for i in range(n):
        top = math.floor((1.0 - problem.gammas[i]) / step + 1e-9)
        grids.append(np.arange(top + 1) * step * problem.kappas[i])

    def sums(indices):
        acc = np.zeros(1)
        for i in indices:
            acc = (acc[:, None] + grids[i][None, :]).ravel()
        return np.sort(acc)

    left, right = sums(range(n // 2)), sums(range(n // 2, n))
    best, best_r = math.inf, None
    r_hi = min(problem.r_cap, problem.r_min + r_span)
    for r in range(problem.r_min, r_hi + 1):
        need = r * level * (1 - 1e-12)
        idx = np.searchsorted(left, need - right)
        ok = idx < left.size
        if not np.any(ok):
            continue
        total = float(np.min(left[idx[ok]] + right[ok]))
        value = allocator.objective(problem, r, total / r)
        if value < best:
            best, best_r = value, r
    return best, best_r


def random_allocation_problem(seed: int, n: int = 5, d: int = 1000, r_span: int = 200,
                              eps_jl: float = 0.5, a: float = 1.0, delta_t: float = 5e-5,
                              sigma2: float = 1.0) -> allocator.AllocationProblem:
    """Instance with SNRs ``Exp(1) + 0.1`` whose water level falls inside the r-window.

    The per-iteration targets are chosen so that the largest feasible ``r``
    lands uniformly inside ``[r_min, r_min + r_span]``.
    """
    rng = stream(seed, "allocation-instance")
    kappas = rng.exponential(1.0, n) + 0.1
    gammas, _ = aircomp.align(kappas)
    L = 1.0
    c = math.sqrt(kappas.min()) / L
    r_min = allocator.jl_min_dim(n, eps_jl, a)
    r_edge = rng.uniform(r_min + 1, r_min + r_span)
    level = float(np.sum(kappas * (1 - gammas))) / r_edge
    # targets per client; the strictest one sets the water level
    spread = rng.uniform(1.0, 1.5, n)
    spread[rng.integers(n)] = 1.0
    per_iter = np.sqrt((1 + eps_jl) * 8 * kappas.min() * math.log(1.25 / delta_t)
                       / (level + sigma2)) * spread
    T = 100
    return allocator.AllocationProblem(kappas, gammas, d, 2, L, 0.01, T, per_iter * T, delta_t,
                                       eps_jl, a, c, sigma2)
