import math

import numpy as np
import pytest

from dprp import privacy, sweeps
from dprp.config import build
from dprp.convergence import LossProfile, baseline_utility_privacy_bound, utility_privacy_bound

SMALL_PAPER = {"n": "200", "d": "2000", "r_grid": "10:2000:10"}


def column(table, name):
    i = table.columns.index(name)
    return np.array([row[i] for row in table.rows], dtype=float)


def test_full_dimension_without_distortion_matches_baseline():
    cfg = build(preset="reference")
    ch = sweeps.draw_channel(cfg)
    r = cfg.d
    eps = privacy.ldp_jl(ch.kappa_min, ch.budget / r, cfg.sigma2, cfg.delta, 0.0)
    base = privacy.ldp_baseline(cfg.d, ch.kappa_min, ch.baseline_noise(cfg.d), cfg.sigma2,
                                cfg.delta)
    assert eps / base == pytest.approx(1.0, rel=1e-12)


def test_ldp_curve_follows_envelope():
    cfg = build(preset="reference", overrides=SMALL_PAPER)
    table = sweeps.sweep_ldp(cfg)
    ch = sweeps.draw_channel(cfg)
    r = column(table, "r")
    jl = column(table, "eps_total_jl")
    assert np.all(np.diff(jl) > 0)
    # the envelope only needs sum(zeta kappa) >= n * floor; the weakest client has no headroom
    floor = ch.budget / cfg.n
    upper = np.array([cfg.T * privacy.ldp_jl_upper(int(k), cfg.n, ch.kappa_min, floor, cfg.delta,
                                                   cfg.eps_jl) for k in r])
    assert np.all(jl <= upper)
    assert np.all(np.diff(upper) > 0)


def test_ldp_curve_columns():
    cfg = build(preset="reference", overrides=SMALL_PAPER)
    table = sweeps.sweep_ldp(cfg)
    assert table.columns[:4] == ("r", "eps_total_general", "eps_total_jl", "eps_total_baseline")
    valid = column(table, "jl_valid")
    r_min = privacy.jl_min_dim(cfg.n, cfg.eps_jl, cfg.a)
    assert np.array_equal(valid, (column(table, "r") >= r_min).astype(float))
    assert np.allclose(column(table, "delta_total_general"), cfg.T * 1e-4)


def test_convergence_curve_ordering():
    cfg = build(preset="reference", overrides={**SMALL_PAPER, "s": "2"})
    table = sweeps.sweep_convergence(cfg)
    assert table.columns == ("r", "xi_achlioptas1", "xi_achlioptas2", "xi_gaussian", "xi_baseline")
    base = column(table, "xi_baseline")
    for name in table.columns[1:4]:
        xi = column(table, name)
        assert np.all(xi >= base)
        assert np.all(np.diff(xi) < 0)
    assert np.all(column(table, "xi_gaussian") >= column(table, "xi_achlioptas1"))


def test_tradeoff_large_eps_limit():
    cfg = build(preset="reference", overrides={"eps_grid": "1e12"})
    table = sweeps.sweep_tradeoff(cfg)
    base = column(table, "xi_baseline")[0]
    for r in cfg.tradeoff_dims():
        ratio = column(table, f"xi_r{r}")[0] / base
        assert ratio == pytest.approx(1 + (cfg.d + cfg.s - 2) / r, rel=1e-9)


def test_tradeoff_intermediate_point():
    cfg = build(preset="reference", overrides={"eps_grid": "0.5"})
    row = sweeps.sweep_tradeoff(cfg).rows[0]
    L, lam, d, n, T = 1.0, 0.001, 10000, 1000, 1000
    log = math.log(1.25 / 5e-5)
    second = 16 * d * L ** 3 * log * T / (lam ** 2 * n ** 2 * 0.25)
    expected_base = 2 * L ** 3 / (lam ** 2 * T) + second
    expected_100 = 2 * L ** 3 / (lam ** 2 * T) * (1 + (d - 1) / 100) + 1.5 * second
    assert row[3] == pytest.approx(expected_base, rel=1e-12)
    assert row[1] == pytest.approx(expected_100, rel=1e-12)
    profile = LossProfile(L, lam)
    assert row[1] == pytest.approx(utility_privacy_bound(profile, d, 100, 1, n, T, 0.5, 5e-5, 0.5))
    assert row[3] == pytest.approx(baseline_utility_privacy_bound(profile, d, n, T, 0.5, 5e-5))


def test_multi_draw_mode_adds_standard_errors():
    cfg = build(preset="reference", overrides={**SMALL_PAPER, "draws": "4", "r_grid": "100:300:100"})
    table = sweeps.sweep_convergence(cfg)
    assert "xi_baseline_se" in table.columns
    se = column(table, "xi_achlioptas1_se")
    assert np.all(se > 0)
    single = sweeps.sweep_convergence(build(preset="reference", overrides={**SMALL_PAPER,
                                                                       "r_grid": "100:300:100"}))
    assert "xi_baseline_se" not in single.columns


def test_allocate_table():
    cfg = build(preset="reference", overrides={"n": "50", "d": "2000", "eps_target": "3000"})
    result, table = sweeps.allocate(cfg)
    assert len(table.rows) == 50
    assert result.feasible
    assert column(table, "r_star")[0] == result.r_star


def test_simulate_table():
    cfg = build(preset="small", overrides={"T": "20"})
    trace, table = sweeps.simulate(cfg)
    assert table.columns == ("iteration", "gap", "bound", "epsilon_spent")
    assert len(table.rows) == 20
    assert any(note.startswith("clipping") for note in table.notes)


def test_csv_rendering_round_trip():
    cfg = build(preset="reference", overrides={"eps_grid": "0.1,0.2"})
    text = sweeps.render_csv(sweeps.sweep_tradeoff(cfg), cfg, "tradeoff")
    assert text.startswith("# dprp tradeoff\n")
    assert "# n = 1000\n" in text
    columns, rows = sweeps.read_csv(text)
    assert columns[-1] == "config_hash"
    assert all(row["config_hash"] == cfg.fingerprint() for row in rows)
    assert float(rows[1]["eps_total"]) == 0.2
