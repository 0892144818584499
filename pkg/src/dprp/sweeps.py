"""Sweep drivers producing the privacy, convergence and trade-off curves.

Every sweep draws its channel from the config seed (one static realization per
draw) and returns a :class:`Table`; :func:`write_csv` serializes it with the
resolved configuration as ``#`` comment lines and the config fingerprint in
every row.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import aircomp, allocator, privacy, trainer
from .config import ExperimentConfig
from .convergence import (LossProfile, static_baseline_bound, static_bound,
                          baseline_utility_privacy_bound, utility_privacy_bound)
from .projection import achlioptas, gaussian, parse_kind
from .rng import stream


@dataclass(frozen=True)
class Table:
    columns: tuple
    rows: list
    notes: tuple = ()


@dataclass(frozen=True)
class ChannelDraw:
    kappas: np.ndarray
    gammas: np.ndarray
    c: float
    zeta: np.ndarray
    beta: np.ndarray

    @property
    def kappa_min(self) -> float:
        return float(self.kappas.min())

    @property
    def budget(self) -> float:
        """Artificial-noise power ``sum zeta_i kappa_i`` per round."""
        return float(np.dot(self.zeta, self.kappas))

    def baseline_noise(self, d: int) -> float:
        return float(np.dot(self.beta, self.kappas)) / d


def draw_channel(cfg: ExperimentConfig, draw: int = 0, max_redraws: int = 100) -> ChannelDraw:
    """One alignable SNR realization; noise fractions use the full headroom ``1 - gamma``."""
    powers = np.full(cfg.n, cfg.power)
    for attempt in range(max_redraws):
        if cfg.channel == "unit":
            kappas = powers.copy()
        else:
            kappas = aircomp.draw_kappas(cfg.n, stream(cfg.seed, "sweep-channel", draw, attempt),
                                         powers)
        if kappas.min() >= aircomp.KAPPA_FLOOR:
            gammas, c = aircomp.align(kappas, cfg.L)
            headroom = 1.0 - gammas
            return ChannelDraw(kappas, gammas, c, headroom, headroom.copy())
    raise aircomp.AlignmentError(f"no alignable channel in {max_redraws} draws")


def _aggregate(per_draw: list[list[float]]) -> tuple[list[float], list[float]]:
    values = np.asarray(per_draw, dtype=np.float64)
    mean = values.mean(axis=0)
    if len(per_draw) < 2:
        return mean.tolist(), [0.0] * values.shape[1]
    se = values.std(axis=0, ddof=1) / math.sqrt(len(per_draw))
    return mean.tolist(), se.tolist()


def _multi_draw(cfg, axis_name, axis, value_names, evaluate, extra=None):
    """Evaluate ``evaluate(channel, x) -> values`` over draws; append ``_se`` columns if draws > 1."""
    channels = [draw_channel(cfg, k) for k in range(cfg.draws)]
    columns = [axis_name, *value_names]
    if cfg.draws > 1:
        columns += [f"{v}_se" for v in value_names]
    extra = extra or (lambda ch, x: {})
    extra_names = list(extra(channels[0], axis[0]).keys()) if axis else []
    columns += extra_names
    rows = []
    for x in axis:
        mean, se = _aggregate([evaluate(ch, x) for ch in channels])
        row = [x, *mean]
        if cfg.draws > 1:
            row += se
        row += list(extra(channels[0], x).values())
        rows.append(row)
    return columns, rows, channels


def sweep_ldp(cfg: ExperimentConfig) -> Table:
    """T-fold epsilon versus ``r`` for the projected scheme and the baseline."""
    kind = achlioptas(cfg.s)
    r_jl_min = privacy.jl_min_dim(cfg.n, cfg.eps_jl, cfg.a) if cfg.n >= 2 else 1

    def evaluate(ch: ChannelDraw, r: int):
        noise = ch.budget / r
        general = privacy.ldp_general(kind, r, cfg.delta_prime, ch.kappa_min, noise, cfg.sigma2,
                                      cfg.delta)
        jl = privacy.ldp_jl(ch.kappa_min, noise, cfg.sigma2, cfg.delta, cfg.eps_jl)
        base = privacy.ldp_baseline(cfg.d, ch.kappa_min, ch.baseline_noise(cfg.d), cfg.sigma2,
                                    cfg.delta)
        return [cfg.T * general, cfg.T * jl, cfg.T * base]

    def extra(ch: ChannelDraw, r: int):
        r_gen, r_jl = privacy.crossover_r(ch.zeta * ch.kappas, ch.beta * ch.kappas, cfg.d,
                                          cfg.sigma2, cfg.delta_prime, cfg.s, cfg.eps_jl)
        _, regime = privacy.distortion_factor(cfg.s, r, cfg.delta_prime)
        return {
            "regime_general": regime,
            "jl_valid": int(r >= r_jl_min),
            "delta_total_general": cfg.T * (cfg.delta + cfg.delta_prime),
            "delta_total_jl": cfg.T * cfg.delta + privacy.jl_tail(cfg.T, cfg.n, cfg.a),
            "delta_total_baseline": cfg.T * cfg.delta,
            "r_cross_general": r_gen,
            "r_cross_jl": r_jl,
        }

    names = ["eps_total_general", "eps_total_jl", "eps_total_baseline"]
    columns, rows, channels = _multi_draw(cfg, "r", cfg.r_values(), names, evaluate, extra)
    return Table(tuple(columns), rows, _channel_notes(channels))


def sweep_convergence(cfg: ExperimentConfig) -> Table:
    """Static-channel gap bound versus ``r`` per projection law, with the baseline."""
    profile = LossProfile(cfg.L, cfg.lam)
    kinds = [achlioptas(1), gaussian()]
    if cfg.s != 1:
        kinds.insert(1, achlioptas(cfg.s))
    names = ["xi_" + str(k).replace(":", "") for k in kinds] + ["xi_baseline"]

    def evaluate(ch: ChannelDraw, r: int):
        noise = ch.budget / r
        values = [static_bound(k, profile, cfg.d, r, cfg.n, ch.c, noise, cfg.sigma2, cfg.T)
                  for k in kinds]
        values.append(static_baseline_bound(profile, cfg.d, cfg.n, ch.c,
                                            ch.baseline_noise(cfg.d), cfg.sigma2, cfg.T))
        return values

    columns, rows, channels = _multi_draw(cfg, "r", cfg.r_values(), names, evaluate)
    return Table(tuple(columns), rows, _channel_notes(channels))


def sweep_tradeoff(cfg: ExperimentConfig) -> Table:
    """Gap bound versus total per-client epsilon at fixed horizon ``T``.

    The trade-off bound depends on no channel quantity, so ``draws`` is ignored.
    """
    profile = LossProfile(cfg.L, cfg.lam)
    dims = [r for r in cfg.tradeoff_dims() if 1 <= r <= cfg.d]
    columns = ["eps_total", *[f"xi_r{r}" for r in dims], "xi_baseline",
               *[f"rel_gap_r{r}" for r in dims]]
    rows = []
    for eps in cfg.eps_values():
        base = baseline_utility_privacy_bound(profile, cfg.d, cfg.n, cfg.T, eps, cfg.delta)
        xis = [utility_privacy_bound(profile, cfg.d, r, cfg.s, cfg.n, cfg.T, eps, cfg.delta,
                                     cfg.eps_jl) for r in dims]
        rows.append([eps, *xis, base, *[(x - base) / base for x in xis]])
    return Table(tuple(columns), rows)


def allocation_problem(cfg: ExperimentConfig, draw: int = 0) -> allocator.AllocationProblem:
    ch = draw_channel(cfg, draw)
    return allocator.AllocationProblem(
        ch.kappas, ch.gammas, cfg.d, cfg.s, cfg.L, cfg.lam, cfg.T, cfg.eps_target,
        cfg.delta, cfg.eps_jl, cfg.a, ch.c, cfg.sigma2, cfg.r_max or None)


def allocate(cfg: ExperimentConfig) -> tuple[allocator.AllocationResult, Table]:
    """Solve the allocation for the drawn channel; one table row per client."""
    problem = allocation_problem(cfg)
    result = allocator.solve(problem)
    columns = ("client", "kappa", "gamma", "zeta_star", "omega", "r_star", "r_stop", "Omega",
               "objective", "feasible")
    rows = [[i, float(problem.kappas[i]), float(problem.gammas[i]),
             float(result.zeta_star[i]), float(result.omega[i]),
             result.r_star, result.r_stop, result.Omega, result.objective, int(result.feasible)]
            for i in range(problem.n)]
    notes = (f"r_min = {result.r_min}",) + ((f"diagnostics = {result.diagnostics}",)
                                           if result.diagnostics else ())
    return result, Table(columns, rows, notes)


def simulate(cfg: ExperimentConfig) -> tuple[trainer.TrainTrace, Table]:
    """Train on the synthetic ridge task and tabulate gap, bound and epsilon per round."""
    task = trainer.make_task(cfg.n, cfg.d, cfg.m_per_client, cfg.lam, cfg.seed)
    norm = float(np.linalg.norm(task.w_star))
    radius = cfg.radius_factor * norm if cfg.radius_factor > 0 and norm > 0 else None
    clip = task.gradient_bound(radius) if radius is not None else cfg.L
    tc = trainer.TrainConfig(cfg.r, cfg.T, parse_kind(cfg.kind), cfg.seed, cfg.channel, cfg.power,
                             cfg.zeta, clip, cfg.sigma2, cfg.delta, cfg.delta_prime,
                             radius=radius)
    trace = trainer.run(task, tc)
    notes = tuple(f"{k} = {v}" for k, v in trace.meta.items()) + (f"radius = {radius}",)
    columns = ("iteration", "gap", "bound", "epsilon_spent")
    return trace, Table(columns, [list(row) for row in trace.rows()], notes)


def _channel_notes(channels) -> tuple:
    return tuple(f"draw {k}: kappa_min = {ch.kappa_min!r}, c = {ch.c!r}, "
                 f"noise_budget = {ch.budget!r}" for k, ch in enumerate(channels))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(table: Table, cfg: ExperimentConfig, command: str) -> str:
    """Comment preamble (command, resolved config, notes), header row, data rows."""
    buf = io.StringIO()
    buf.write(f"# dprp {command}\n")
    for line in cfg.header_lines():
        buf.write(f"# {line}\n")
    for note in table.notes:
        buf.write(f"# {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    fingerprint = cfg.fingerprint()
    writer.writerow([*table.columns, "config_hash"])
    for row in table.rows:
        writer.writerow([*(_cell(v) for v in row), fingerprint])
    return buf.getvalue()


def write_csv(path, table: Table, cfg: ExperimentConfig, command: str) -> str:
    text = render_csv(table, cfg, command)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def read_csv(text: str) -> tuple[list[str], list[dict]]:
    """Parse :func:`render_csv` output back into ``(columns, rows)``."""
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader.fieldnames or []), list(reader)
