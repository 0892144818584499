import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from dprp import checks
from dprp.projection import (DimensionError, DistributionKind, ProjectionMatrix, ProjectionSpec,
                             achlioptas, back_project, gaussian, generate, parse_kind, project,
                             rademacher, round_spec, sample_entries)
from dprp.rng import derive_seed, stream

KINDS = [rademacher(), gaussian(), achlioptas(2), achlioptas(3)]


def test_rademacher_support():
    m = generate(ProjectionSpec(rademacher(), 4, 2, 7))
    assert m.rows.shape == (2, 4)
    assert set(np.unique(m.rows)) <= {-1.0, 1.0}


def test_achlioptas_zero_fraction():
    m = generate(ProjectionSpec(achlioptas(3), 1000, 100, 1))
    zeros = float(np.mean(m.rows == 0))
    assert abs(zeros - (1 - 1 / 3)) < 0.01
    assert set(np.unique(m.rows)) <= {-math.sqrt(3), 0.0, math.sqrt(3)}


def test_gaussian_entry_moments():
    m = generate(ProjectionSpec(gaussian(), 256, 64, 2))
    assert abs(m.rows.mean()) < 0.02
    assert abs(m.rows.var() - 1) < 0.02


def test_achlioptas_one_is_rademacher_law():
    u = sample_entries(achlioptas(1), 10_000, stream(0, "law"))
    assert set(np.unique(u)) == {-1.0, 1.0}
    assert abs(u.mean()) < 0.03


@pytest.mark.parametrize("kind", KINDS, ids=str)
def test_entry_mean_zero_variance_one(kind):
    u = sample_entries(kind, 200_000, stream(3, "moments", str(kind)))
    assert abs(u.mean()) < 0.01
    assert abs(u.var() - 1) < 0.02


@pytest.mark.parametrize("r", [0, 5])
def test_invalid_dimensions(r):
    with pytest.raises(DimensionError):
        ProjectionSpec(rademacher(), 4, r, 1)


def test_generate_is_deterministic():
    spec = ProjectionSpec(gaussian(), 30, 7, 11)
    assert np.array_equal(generate(spec).rows, generate(spec).rows)
    assert not generate(spec).rows.flags.writeable


def test_round_spec_follows_seed_chain():
    spec = round_spec(rademacher(), 10, 3, 5, 2)
    assert spec.seed == derive_seed(5, "rpm", 2)
    assert round_spec(rademacher(), 10, 3, 5, 3).seed != spec.seed


def test_parse_kind():
    assert parse_kind("rademacher") == rademacher()
    assert parse_kind("achlioptas:4") == achlioptas(4)
    assert str(achlioptas(4)) == "achlioptas:4"
    with pytest.raises(ValueError):
        parse_kind("cauchy")
    with pytest.raises(ValueError):
        achlioptas(0)


def test_project_zero_and_one_by_one():
    m = generate(ProjectionSpec(rademacher(), 1, 1, 3))
    assert np.array_equal(project(m, np.zeros(1)), np.zeros(1))
    z = project(m, np.array([2.5]))
    assert z[0] == pytest.approx(2.5 * m.rows[0, 0])
    assert abs(z[0]) == 2.5


def test_back_project_zero_and_shapes():
    m = generate(ProjectionSpec(gaussian(), 6, 3, 1))
    assert np.array_equal(back_project(m, np.zeros(3)), np.zeros(6))
    with pytest.raises(DimensionError):
        project(m, np.ones(5))
    with pytest.raises(DimensionError):
        back_project(m, np.ones(4))


def test_round_trip_on_fixed_orthogonal_draw():
    rows = np.array([[1.0, 1.0], [1.0, -1.0]])
    m = ProjectionMatrix(ProjectionSpec(rademacher(), 2, 2, 0), rows)
    g = np.array([0.3, -1.7])
    assert np.allclose(back_project(m, project(m, g)), rows.T @ rows @ g / 2)
    assert np.allclose(back_project(m, project(m, g)), g)


def test_identity_kind_is_exact_when_square():
    m = generate(ProjectionSpec(DistributionKind("identity"), 5, 5, 0))
    assert np.allclose(m.gram(), 5 * np.eye(5))


@pytest.mark.parametrize("kind", KINDS, ids=str)
def test_norm_unbiasedness(kind):
    mean = checks.norm_ratio_mean(kind, 64, 16, 100_000, stream(0, "norm", str(kind)))
    assert 0.99 <= mean <= 1.01


def test_back_projection_unbiased_per_coordinate():
    g = np.array([1.0, -2.0, 0.5, 1.5, -1.0, 2.0, 0.8, -0.6])
    gram = checks.gram_mean(rademacher(), 8, 4, 100_000, stream(1, "gram"))
    estimate = gram @ g / 4
    assert np.all(np.abs(estimate - g) <= 0.01 * np.abs(g) + 0.01)


@pytest.mark.parametrize("kind", [gaussian(), achlioptas(3)], ids=str)
def test_gram_mean_is_r_identity(kind):
    gram = checks.gram_mean(kind, 8, 4, 100_000, stream(2, "gram", str(kind)))
    assert np.max(np.abs(gram - 4 * np.eye(8))) < 0.05 * 4


def test_rademacher_columns_have_constant_norm():
    norms = checks.column_square_norms(rademacher(), 9, 1000, stream(0, "col"))
    assert np.all(norms == 9)


def test_achlioptas_column_law_goodness_of_fit():
    s, r = 3, 12
    norms = checks.column_square_norms(achlioptas(s), r, 10_000, stream(0, "gof"))
    counts = np.bincount(np.rint(norms / s).astype(int), minlength=r + 1)
    expected = stats.binom.pmf(np.arange(r + 1), r, 1 / s) * norms.size
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    assert stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 1e-3


def test_gaussian_column_law_moments():
    norms = checks.column_square_norms(gaussian(), 10, 100_000, stream(0, "chi2"))
    assert abs(norms.mean() / 10 - 1) < 0.05
    assert abs(norms.var() / 20 - 1) < 0.05


@settings(max_examples=30, deadline=None)
@given(d=st.integers(1, 20), data=st.data())
def test_project_is_linear(d, data):
    r = data.draw(st.integers(1, d))
    seed = data.draw(st.integers(0, 2**32))
    m = generate(ProjectionSpec(gaussian(), d, r, seed))
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(d), rng.standard_normal(d)
    assert np.allclose(project(m, 2 * a - b), 2 * project(m, a) - project(m, b))
    y = rng.standard_normal(r)
    # adjoint identity <Ta, y> = <a, T^T y>
    assert np.dot(project(m, a), y) == pytest.approx(np.dot(a, back_project(m, y)), abs=1e-9)
