"""End-to-end private, projected FedSGD on a synthetic ridge-regression task.

Client ``i`` holds ``(A_i, b_i)`` with ``m`` rows and the local loss
``L_i(w) = ||A_i w - b_i||^2 / (2m) + lam/2 ||w||^2``.  All clients hold the
same number of rows, so the global loss is the plain average of local losses
and matches the unweighted aggregation at the server.

Local gradients are clipped to norm ``clip`` (the transmit normalizer); this is
recorded in the trace metadata because clipping is a simulator choice.  With
``radius`` set, iterates are also projected onto the ball ``||w|| <= radius``;
taking ``clip = task.gradient_bound(radius)`` then makes the gradient bound hold
on every iterate, so clipping never changes a gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import aircomp, privacy
from .convergence import LossProfile, running_bound
from .projection import DistributionKind, generate, parse_kind, round_spec
from .rng import stream


@dataclass(frozen=True)
class SyntheticTask:
    A: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    lam: float
    w_star: np.ndarray = field(repr=False)
    smoothness: float
    loss_star: float

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[2]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def loss(self, w) -> float:
        resid = self.A @ w - self.b
        return float(np.mean(np.sum(resid ** 2, axis=1)) / (2 * self.m)
                     + 0.5 * self.lam * np.dot(w, w))

    def full_gradient(self, w) -> np.ndarray:
        return np.mean([raw_gradient(self, i, w) for i in range(self.n)], axis=0)

    def gradient_bound(self, radius: float) -> float:
        """Largest local-gradient norm over the ball ``||w|| <= radius``."""
        out = 0.0
        for A, b in zip(self.A, self.b):
            hess = A.T @ A / self.m + self.lam * np.eye(self.d)
            out = max(out, float(np.linalg.norm(hess, 2)) * radius
                      + float(np.linalg.norm(A.T @ b)) / self.m)
        return out

    def client_optimum(self, i: int) -> np.ndarray:
        A, b = self.A[i], self.b[i]
        return np.linalg.solve(A.T @ A / self.m + self.lam * np.eye(self.d), A.T @ b / self.m)


def make_task(n: int, d: int, m_per_client: int, lam: float, seed: int,
              zero_targets: bool = False) -> SyntheticTask:
    """Random Gaussian design; optimum and smoothness computed in closed form."""
    if n < 1 or d < 1 or m_per_client < 1:
        raise ValueError("n, d and m_per_client must be positive")
    if lam <= 0:
        raise ValueError("lam must be positive")
    rng = stream(seed, "task")
    A = rng.standard_normal((n, m_per_client, d))
    b = np.zeros((n, m_per_client)) if zero_targets else rng.standard_normal((n, m_per_client))
    gram = np.einsum("imj,imk->jk", A, A) / (n * m_per_client)
    rhs = np.einsum("imj,im->j", A, b) / (n * m_per_client)
    w_star = np.linalg.solve(gram + lam * np.eye(d), rhs)
    smoothness = lam + float(np.linalg.eigvalsh(gram)[-1])
    task = SyntheticTask(A, b, lam, w_star, smoothness, 0.0)
    return SyntheticTask(A, b, lam, w_star, smoothness, task.loss(w_star))


def raw_gradient(task: SyntheticTask, i: int, w) -> np.ndarray:
    A, b = task.A[i], task.b[i]
    return A.T @ (A @ w - b) / task.m + task.lam * w


def local_gradient(task: SyntheticTask, i: int, w, clip: float | None = None) -> np.ndarray:
    """Exact local gradient, rescaled to norm ``clip`` when it is longer."""
    if not 0 <= i < task.n:
        raise IndexError(f"client index {i} out of range")
    g = raw_gradient(task, i, np.asarray(w, dtype=np.float64))
    if clip is not None:
        norm = float(np.linalg.norm(g))
        if norm > clip:
            g = g * (clip / norm)
    return g


@dataclass(frozen=True)
class TrainConfig:
    r: int
    T: int
    kind: DistributionKind | str = "rademacher"
    seed: int = 0
    channel: str = "iid"  # "iid", "static" or "unit"
    power: float = 1.0
    zeta: float | tuple = 0.0
    clip: float = 1.0
    sigma2_channel: float = 1.0
    delta_t: float = 5e-5
    delta_prime: float = 5e-5
    kappa_floor: float = aircomp.KAPPA_FLOOR
    max_redraws: int = 100
    radius: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", parse_kind(self.kind))
        if self.channel not in ("iid", "static", "unit"):
            raise ValueError(f"unknown channel mode {self.channel!r}")
        if self.T < 1 or self.r < 1:
            raise ValueError("T and r must be positive")
        if self.clip <= 0 or self.power <= 0:
            raise ValueError("clip and power must be positive")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("radius must be positive")

    def learning_rate(self, t: int, lam: float) -> float:
        return 1.0 / (lam * t)


@dataclass(frozen=True)
class TrainTrace:
    gaps: np.ndarray = field(repr=False)
    bounds: np.ndarray = field(repr=False)
    eps_spent: np.ndarray = field(repr=False)
    final_gap: float
    w: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def rows(self):
        for t in range(len(self.gaps)):
            yield t + 1, float(self.gaps[t]), float(self.bounds[t]), float(self.eps_spent[t])


class _Channel:
    """Per-round SNRs for the configured fading mode."""

    def __init__(self, config: TrainConfig, n: int):
        self.config = config
        self.n = n
        self.redraws = 0
        self._static = None
        if config.channel == "static":
            kappas = aircomp.draw_kappas(n, stream(config.seed, "fading", 0), config.power)
            if kappas.min() < config.kappa_floor:
                raise aircomp.AlignmentError("static channel draw is not alignable")
            self._static = kappas

    def kappas(self, t: int) -> np.ndarray:
        cfg = self.config
        if cfg.channel == "unit":
            return np.full(self.n, cfg.power)
        if self._static is not None:
            return self._static
        for attempt in range(cfg.max_redraws):
            kappas = aircomp.draw_kappas(self.n, stream(cfg.seed, "fading", t, attempt), cfg.power)
            if kappas.min() >= cfg.kappa_floor:
                return kappas
            self.redraws += 1
        raise aircomp.AlignmentError(f"round {t}: no alignable channel in {cfg.max_redraws} draws")


def _zetas(config: TrainConfig, gamma: np.ndarray) -> tuple[np.ndarray, int]:
    zeta = np.broadcast_to(np.asarray(config.zeta, dtype=np.float64), gamma.shape)
    clamped = np.minimum(zeta, 1.0 - gamma)
    return clamped, int(np.count_nonzero(clamped < zeta))


def run(task: SyntheticTask, config: TrainConfig) -> TrainTrace:
    """Run ``T`` rounds of projected over-the-air FedSGD from ``w = 0``.

    Noise fractions larger than a client's post-alignment headroom are clamped
    to ``1 - gamma_i``; the number of clamps is recorded in ``meta``.
    """
    n, d = task.n, task.d
    if config.r > d:
        raise ValueError("r cannot exceed d")
    channel = _Channel(config, n)
    bound_L = max(task.smoothness, config.clip)
    w = np.zeros(d)
    gaps, eps_spent, rounds = [], [], []
    eps_acc, clamps = 0.0, 0
    for t in range(1, config.T + 1):
        grads = np.stack([local_gradient(task, i, w, config.clip) for i in range(n)])
        kappas = channel.kappas(t)
        gamma, c = aircomp.align(kappas, config.clip, config.kappa_floor)
        zeta, k = _zetas(config, gamma)
        clamps += k
        ch = aircomp.ChannelRound(kappas, config.sigma2_channel, config.r,
                                  np.full(n, config.power))
        m = generate(round_spec(config.kind, d, config.r, config.seed, t))
        client_rngs = [stream(config.seed, "client", t, i) for i in range(n)]
        result = aircomp.run_round(grads, m, ch, zeta, config.clip, client_rngs,
                                   stream(config.seed, "channel-noise", t), config.kappa_floor)
        w = w - config.learning_rate(t, task.lam) * result.g_hat
        if config.radius is not None:
            norm = float(np.linalg.norm(w))
            if norm > config.radius:
                w = w * (config.radius / norm)
        gaps.append(task.loss(w) - task.loss_star)

        noise_sum = float(np.dot(zeta, kappas)) / config.r
        rounds.append((d, config.r, n, c, noise_sum, config.sigma2_channel))
        if config.sigma2_channel + noise_sum > 0:
            eps_acc += privacy.ldp_general(config.kind, config.r, config.delta_prime,
                                           float(kappas.min()), noise_sum, config.sigma2_channel,
                                           config.delta_t)
        else:
            eps_acc = math.inf
        eps_spent.append(eps_acc)

    bounds = running_bound(config.kind, LossProfile(bound_L, task.lam), rounds)
    meta = {
        "clipping": "norm clip of local gradients",
        "clip": config.clip,
        "smoothness_true": task.smoothness,
        "bound_L": bound_L,
        "zeta_clamped": clamps,
        "channel_redraws": channel.redraws,
    }
    return TrainTrace(np.array(gaps), np.array(bounds), np.array(eps_spent), gaps[-1], w, meta)


def run_fedsgd(task: SyntheticTask, T: int, clip: float | None = None) -> np.ndarray:
    """Noiseless, uncompressed FedSGD; returns the gap after every round."""
    w = np.zeros(task.d)
    gaps = []
    for t in range(1, T + 1):
        grads = np.stack([local_gradient(task, i, w, clip) for i in range(task.n)])
        w = w - (1.0 / (task.lam * t)) * (np.sum(grads, axis=0) / task.n)
        gaps.append(task.loss(w) - task.loss_star)
    return np.array(gaps)
