import numpy as np
import pytest

from dprp import aircomp, privacy, trainer
from dprp.projection import DistributionKind, ProjectionSpec, generate, rademacher
from dprp.rng import derive_seed, stream
from dprp.trainer import TrainConfig, local_gradient, make_task, run, run_fedsgd


def test_zero_targets_give_zero_optimum():
    task = make_task(3, 5, 4, 0.1, 0, zero_targets=True)
    assert np.array_equal(task.w_star, np.zeros(5))
    assert task.loss_star == 0.0


def test_optimum_matches_long_gradient_descent():
    task = make_task(2, 3, 6, 0.2, 11)
    w = np.zeros(3)
    step = 1.0 / task.smoothness
    for _ in range(20_000):
        w = w - step * task.full_gradient(w)
    assert np.max(np.abs(w - task.w_star)) < 1e-8
    assert np.linalg.norm(task.full_gradient(task.w_star)) < 1e-10


def test_regularizer_scales_strong_convexity():
    a = make_task(3, 4, 5, 0.1, 2)
    b = make_task(3, 4, 5, 0.2, 2)
    assert np.array_equal(a.A, b.A)
    assert b.lam == 2 * a.lam
    grad_a = a.full_gradient(np.ones(4)) - a.full_gradient(np.zeros(4))
    grad_b = b.full_gradient(np.ones(4)) - b.full_gradient(np.zeros(4))
    assert np.allclose(grad_b - grad_a, 0.1 * np.ones(4))


def test_smoothness_is_largest_hessian_eigenvalue():
    task = make_task(4, 6, 8, 0.3, 1)
    hess = sum(A.T @ A for A in task.A) / (task.n * task.m) + task.lam * np.eye(6)
    assert task.smoothness == pytest.approx(np.linalg.eigvalsh(hess)[-1])


def test_gradient_vanishes_at_client_optimum():
    task = make_task(3, 4, 6, 0.1, 5)
    assert np.linalg.norm(local_gradient(task, 1, task.client_optimum(1))) < 1e-10


def test_gradient_against_central_differences():
    task = make_task(2, 10, 12, 0.05, 3)
    w = stream(0, "w").standard_normal(10)
    A, b = task.A[0], task.b[0]

    def loss(v):
        return np.sum((A @ v - b) ** 2) / (2 * task.m) + 0.5 * task.lam * v @ v

    h = 1e-5
    fd = np.array([(loss(w + h * e) - loss(w - h * e)) / (2 * h) for e in np.eye(10)])
    g = local_gradient(task, 0, w)
    assert np.max(np.abs(fd - g) / np.maximum(np.abs(g), 1e-3)) < 1e-5


def test_clipping_preserves_direction():
    task = make_task(2, 5, 5, 0.1, 4)
    w = 10 * np.ones(5)
    raw = local_gradient(task, 0, w)
    clip = np.linalg.norm(raw) / 2
    clipped = local_gradient(task, 0, w, clip)
    assert np.linalg.norm(clipped) == pytest.approx(clip)
    assert np.allclose(clipped / clip, raw / np.linalg.norm(raw))
    with pytest.raises(IndexError):
        local_gradient(task, 2, w)


def test_degenerate_run_reproduces_fedsgd_bit_for_bit():
    task = make_task(4, 16, 10, 0.5, 9)
    config = TrainConfig(16, 60, DistributionKind("identity"), 9, "unit", zeta=0.0, clip=1.0,
                         sigma2_channel=0.0)
    trace = run(task, config)
    assert np.array_equal(trace.gaps, run_fedsgd(task, 60, clip=1.0))


def test_trace_shape_and_accounting():
    task = make_task(5, 8, 6, 1.0, 2)
    config = TrainConfig(4, 30, "rademacher", 2, "static", zeta=0.2, clip=5.0)
    trace = run(task, config)
    assert len(trace.gaps) == len(trace.bounds) == len(trace.eps_spent) == 30
    assert trace.final_gap == trace.gaps[-1]
    per_round = np.diff(np.concatenate(([0.0], trace.eps_spent)))
    assert np.allclose(per_round, per_round[0])
    assert np.all(trace.bounds > 0)
    rows = list(trace.rows())
    assert rows[0][0] == 1 and rows[-1][0] == 30


def test_run_is_deterministic():
    task = make_task(5, 8, 6, 1.0, 2)
    config = TrainConfig(4, 40, "achlioptas:2", 7, "iid", zeta=0.3, clip=5.0)
    a, b = run(task, config), run(task, config)
    assert np.array_equal(a.gaps, b.gaps)
    assert np.array_equal(a.eps_spent, b.eps_spent)
    assert a.meta == b.meta


def test_metadata_records_clipping_and_clamps():
    task = make_task(5, 8, 6, 1.0, 2)
    trace = run(task, TrainConfig(4, 10, "rademacher", 1, "iid", zeta=0.9, clip=2.0))
    assert trace.meta["clip"] == 2.0
    assert trace.meta["zeta_clamped"] > 0
    assert trace.meta["smoothness_true"] == task.smoothness


def test_static_channel_aborts_when_unalignable():
    task = make_task(3, 4, 4, 1.0, 0)
    config = TrainConfig(2, 5, "rademacher", 0, "static", kappa_floor=10.0)
    with pytest.raises(aircomp.AlignmentError):
        run(task, config)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(2, 5, channel="fast")
    with pytest.raises(ValueError):
        TrainConfig(0, 5)
    with pytest.raises(ValueError):
        run(make_task(2, 3, 3, 1.0, 0), TrainConfig(4, 5))
    assert TrainConfig(2, 5).learning_rate(4, 0.5) == 0.5


def test_rounds_unbiased_at_fixed_point():
    task = make_task(6, 10, 8, 0.5, 12)
    w = stream(0, "fixed-w").standard_normal(10)
    grads = np.stack([local_gradient(task, i, w) for i in range(task.n)])
    target = grads.mean(axis=0)
    kappas = aircomp.draw_kappas(task.n, stream(0, "fixed-k")) + 0.1
    channel = aircomp.ChannelRound(kappas, 0.0, 10)
    L = float(np.linalg.norm(grads, axis=1).max())
    total = np.zeros(10)
    for k in range(1000):
        m = generate(ProjectionSpec(rademacher(), 10, 10, derive_seed(4, "rpm", k)))
        rngs = [stream(4, "client", k, i) for i in range(task.n)]
        total += aircomp.run_round(grads, m, channel, 0.0, L, rngs, stream(4, "noise", k)).g_hat
    assert np.max(np.abs(total / 1000 - target)) <= 0.03 * np.linalg.norm(target)


def test_more_privacy_noise_raises_gap():
    gaps = {0.2: [], 0.4: []}
    for seed in range(20):
        task = make_task(10, 20, 20, 1.0, seed)
        radius = 1.5 * float(np.linalg.norm(task.w_star))
        clip = task.gradient_bound(radius)
        for zeta in gaps:
            config = TrainConfig(10, 200, "rademacher", seed, "iid", zeta=zeta, clip=clip,
                                 radius=radius)
            gaps[zeta].append(run(task, config).final_gap)
    assert np.mean(gaps[0.4]) > np.mean(gaps[0.2])


def test_eps_matches_privacy_module():
    task = make_task(4, 6, 5, 1.0, 3)
    config = TrainConfig(3, 5, "rademacher", 3, "unit", zeta=0.5, clip=3.0)
    trace = run(task, config)
    gamma, _ = aircomp.align(np.ones(4), 3.0)
    zeta = np.minimum(0.5, 1 - gamma)
    eps = privacy.ldp_general(rademacher(), 3, 5e-5, 1.0, float(zeta.sum()) / 3, 1.0, 5e-5)
    assert trace.eps_spent[-1] == pytest.approx(5 * eps)
