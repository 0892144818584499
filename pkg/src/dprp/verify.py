"""The Monte Carlo verification suite run by ``dprp verify``.

Each check compares an independent estimate (Monte Carlo or exhaustive search)
against the closed form it is meant to confirm.  ``scale`` shrinks the trial
counts proportionally (never below 10^4) for quick runs; ``corrupt`` divides
every tolerance by 10^6 to exercise the failure path.
"""

from __future__ import annotations

import math

import numpy as np

from . import aircomp, allocator, checks, privacy
from .checks import Check
from .projection import DistributionKind, achlioptas, gaussian, rademacher, sample_entries
from .rng import derive_seed, stream

KINDS = (rademacher(), gaussian(), achlioptas(2), achlioptas(3))
CORRUPT_FACTOR = 1e-6


def _trials(full: int, scale: float) -> int:
    return max(10_000, int(full * scale))


def _within(name, measured, expected, tol, detail=""):
    return Check(name, measured, expected, tol, abs(measured - expected) <= tol, detail)


def _at_most(name, measured, limit, tol, detail=""):
    return Check(name, measured, limit, tol, measured <= limit + tol, detail)


def check_jl_dim(tight=1.0):
    value = privacy.jl_min_dim(1000, 0.5, 1.0)
    return [_within("jl_min_dim(1000, 0.5, 1)", value, 498, 0.0 * tight)]


def check_unbiasedness(seed, scale=1.0, tight=1.0, d=64, r=16):
    trials = _trials(100_000, scale)
    out = []
    for kind in KINDS:
        rng = stream(seed, "verify", "norm", str(kind))
        m = checks.norm_ratio_mean(kind, d, r, trials, rng)
        out.append(_within(f"E||Ug||^2/(r||g||^2) [{kind}]", m, 1.0, 0.01 * tight,
                           f"d={d} r={r} trials={trials}"))
    return out


def check_moments(seed, scale=1.0, tight=1.0, d=8, r=4):
    trials = _trials(100_000, scale)
    out = []
    for kind in KINDS:
        rng = stream(seed, "verify", "gram", str(kind))
        g = checks.gram_mean(kind, d, r, trials, rng)
        dev = float(np.max(np.abs(g - r * np.eye(d)))) / r
        out.append(_within(f"E[U^T U] = rI [{kind}]", dev, 0.0, 0.05 * tight,
                           "max entry deviation / r"))
        rng = stream(seed, "verify", "cross", str(kind))
        cross = checks.cross_second_moment(kind, d, r, trials, rng)
        out.append(_within(f"E[(U_j^T U_k)^2] = r [{kind}]", cross / r, 1.0, 0.03 * tight,
                           "ratio to r"))
        rng = stream(seed, "verify", "column", str(kind))
        norms = checks.column_square_norms(kind, r, trials, rng)
        mean, var = _column_law(kind, r)
        out.append(_within(f"column norm mean [{kind}]", float(norms.mean()) / mean, 1.0,
                           0.05 * tight))
        emp_var = float(norms.var(ddof=1))
        if var == 0:
            out.append(_within(f"column norm constant [{kind}]", emp_var, 0.0, 0.0))
        else:
            out.append(_within(f"column norm variance [{kind}]", emp_var / var, 1.0,
                               0.05 * tight))
    return out


def _column_law(kind: DistributionKind, r: int) -> tuple[float, float]:
    """Mean and variance of ``||U_j||^2``: constant r, s * Binomial(r, 1/s), or chi^2(r)."""
    if kind.name == "gaussian":
        return float(r), 2.0 * r
    return float(r), float(r * (kind.sparsity - 1))


def check_second_moment(seed, scale=1.0, tight=1.0):
    trials = _trials(100_000, scale)
    emp, exact, bound = checks.second_moment_identity(6, 3, 3, 0.5, 1.0, trials, seed)
    out = [_within("E||g_hat||^2 identity (d=6 n=3 r=3)", emp / exact, 1.0, 0.03 * tight,
                   f"empirical={emp:.6g} exact={exact:.6g}")]
    # per-round bound against smaller runs over a few configurations
    configs = [(6, 3, 3, 0.5, 1.0), (6, 3, 3, 0.0, 0.0), (10, 4, 2, 0.9, 0.5), (8, 2, 8, 0.2, 2.0)]
    small = _trials(20_000, scale)
    for k, (d, n, r, zeta, sigma2) in enumerate(configs):
        e, _, b = checks.second_moment_identity(d, n, r, zeta, sigma2, small,
                                                derive_seed(seed, "bound", k))
        out.append(_at_most(f"per-round bound >= E||g_hat||^2 (d={d} n={n} r={r})", e, b, 0.0))
    return out


def check_decoder_unbiased(seed, scale=1.0, tight=1.0, d=10, n=4):
    trials = _trials(20_000, scale)
    rng = stream(seed, "verify", "decoder")
    grads = rng.standard_normal((n, d))
    kappas = rng.exponential(1.0, n) + 0.2
    g_hat = checks.simulate_rounds(rademacher(), grads, kappas, 0.0, 0.0, d, trials,
                                   derive_seed(seed, "decoder"))
    target = grads.mean(axis=0)
    dev = float(np.max(np.abs(g_hat.mean(axis=0) - target))) / float(np.linalg.norm(target))
    return [_within("E[g_hat] = mean gradient", dev, 0.0, 0.03 * tight,
                    "max coordinate deviation / ||mean||")]


def check_power_budget(seed, scale=1.0, tight=1.0, n=4, d=64, r=32):
    """Monte Carlo ``E||x_i||^2`` at ``||g|| = L`` and full power use ``gamma + zeta = 1``."""
    trials = _trials(50_000, scale)
    rng = stream(seed, "verify", "power")
    kappas = rng.exponential(1.0, n) + 0.05
    gamma, _ = aircomp.align(kappas)
    zeta = 1.0 - gamma
    g = rng.standard_normal(d)
    g /= np.linalg.norm(g)
    out = []
    for i in range(n):
        acc = 0.0
        for m in checks._batches(trials, r * d):
            z = sample_entries(rademacher(), (m, r, d), rng) @ g / math.sqrt(r)
            for row in z:
                x = aircomp.transmit(row, gamma[i], zeta[i], 1.0, 1.0, rng)
                acc += float(x @ x)
        out.append(_at_most(f"E||x||^2 <= P [client {i}]", acc / trials, 1.0, 0.01 * tight,
                            f"gamma={gamma[i]:.3g} zeta={zeta[i]:.3g}"))
    return out


def check_sensitivity(seed, scale=1.0, tight=1.0, d=1000):
    trials = _trials(100_000, scale)
    out = []
    for kind in (rademacher(), gaussian(), achlioptas(3)):
        for r in (10, 50, 200):
            for dp in (0.05, 0.01):
                rng = stream(seed, "verify", "tail", str(kind), r, dp)
                rate = privacy.sensitivity_tail_check(kind, r, d, dp, trials, rng)
                slack = 3.0 * math.sqrt(dp * (1 - dp) / trials)
                out.append(_at_most(f"sensitivity tail [{kind} r={r} delta'={dp}]", rate, dp,
                                    slack * tight))
    return out


def check_allocator(seed, instances=20, tight=1.0):
    out = []
    for k in range(instances):
        problem = checks.random_allocation_problem(derive_seed(seed, "alloc", k))
        result = allocator.solve(problem)
        brute, brute_r = checks.brute_force_allocation(problem)
        if not result.feasible or brute_r is None:
            out.append(Check(f"allocator vs brute force #{k}", math.nan, brute, 0.0, False,
                             "no feasible allocation"))
            continue
        rel = (result.objective - brute) / brute
        out.append(_within(f"allocator vs brute force #{k}", rel, 0.0, 0.01 * tight,
                            f"solve r={result.r_star} brute r={brute_r}"))
    return out


def run_suite(seed: int = 0, scale: float = 1.0, corrupt: bool = False) -> list[Check]:
    """All checks for one root seed; ``scale < 1`` also trims the allocator instances."""
    tight = CORRUPT_FACTOR if corrupt else 1.0
    allocator_instances = 20 if scale >= 1 else max(2, round(20 * scale))
    results = []
    results += check_jl_dim(tight)
    results += check_unbiasedness(seed, scale, tight)
    results += check_moments(seed, scale, tight)
    results += check_second_moment(seed, scale, tight)
    results += check_decoder_unbiased(seed, scale, tight)
    results += check_power_budget(seed, scale, tight)
    results += check_sensitivity(seed, scale, tight)
    results += check_allocator(seed, allocator_instances, tight)
    return results
