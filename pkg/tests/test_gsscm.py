import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gspca.gsscm import EllipticalSpec, g_transform, population_gsscm, sample_gsscm
from gspca.location import kstep_lts
from gspca.radial import BOUNDED_KINDS, Cutoffs, RadialKind, estimate_cutoffs

from conftest import random_orthogonal

ALL_KINDS = list(RadialKind)


def test_identity_transform(rng):
    X = rng.standard_normal((7, 3))
    c = rng.standard_normal(3)
    np.testing.assert_array_equal(g_transform(X, c, "identity"), X - c)


def test_sign_transform():
    G = g_transform(np.array([[3.0, 0.0], [0.0, -4.0], [0.0, 0.0]]), np.zeros(2), "sscm")
    np.testing.assert_array_equal(G, [[1.0, 0.0], [0.0, -1.0], [0.0, 0.0]])


def test_ball_transform():
    X = np.array([[1.0, 0.0], [0.0, 3.0]])
    G = g_transform(X, np.zeros(2), "ball", Cutoffs(0.5, 2.0, 2.5, 3.0))
    np.testing.assert_array_equal(G, [[1.0, 0.0], [0.0, 0.0]])


def test_identity_sample_is_covariance_about_center(rng):
    X = rng.standard_normal((40, 3))
    S = sample_gsscm(X, "identity")
    D = X - S.center
    np.testing.assert_allclose(S.values, D.T @ D / 40, rtol=1e-13)


def test_three_point_sign_matrix():
    # the spatial median sits at the origin; an LTS step with h = 2 would
    # break the distance tie toward the first row and leave the origin
    S = sample_gsscm(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]]), "sscm", location_k=0)
    np.testing.assert_array_equal(S.center, [0.0, 0.0])
    np.testing.assert_allclose(S.values, np.diag([2.0, 0.0]) / 3.0, atol=1e-15)


def test_cutoffs_recorded(rng):
    X = rng.standard_normal((30, 2))
    S = sample_gsscm(X, "winsor")
    d = np.linalg.norm(X - kstep_lts(X).center, axis=1)
    assert S.cutoffs == estimate_cutoffs(d)
    assert sample_gsscm(X, "sscm").cutoffs is None


def test_needs_two_rows():
    with pytest.raises(ValueError):
        sample_gsscm(np.zeros((1, 2)), "winsor")


@pytest.mark.slow
def test_winsor_large_sample_matches_population():
    gamma = 0.5
    pop = population_gsscm(EllipticalSpec.bivariate(gamma), "winsor").values
    rng = np.random.default_rng(11)
    reps = []
    for _ in range(30):
        X = rng.standard_normal((100_000, 2)) * np.sqrt([1.0, gamma])
        reps.append(sample_gsscm(X, "winsor").values)
    reps = np.array(reps)
    se = reps.std(axis=0, ddof=1)
    assert np.all(np.abs(reps[0] - pop) <= 3.0 * se + 1e-15)
    # the replicate mean is a tighter check on the quadrature value
    assert np.all(np.abs(reps.mean(axis=0) - pop) <= 3.0 * se / np.sqrt(30) + 1e-15)


@pytest.mark.parametrize("gamma", [0.05, 0.3, 0.5, 0.8, 0.95])
@pytest.mark.parametrize("method", ["polar", "hermite"])
def test_population_identity(gamma, method):
    S = population_gsscm(EllipticalSpec.bivariate(gamma), "identity", method=method).values
    np.testing.assert_allclose(S, np.diag([1.0, gamma]), atol=1e-8)


def test_population_sign_isotropic():
    S = population_gsscm(EllipticalSpec.bivariate(1.0), "sscm").values
    np.testing.assert_allclose(S, 0.5 * np.eye(2), atol=1e-12)


def test_hermite_agrees_on_sign_kind():
    spec = EllipticalSpec.bivariate(0.4)
    a = population_gsscm(spec, "sscm").values
    b = population_gsscm(spec, "sscm", method="hermite").values
    # the sign integrand is not smooth at the origin, which limits the grid
    np.testing.assert_allclose(a, b, atol=5e-3)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("gamma", [0.1, 0.5, 0.9])
def test_population_diagonal_and_ordered(kind, gamma):
    S = population_gsscm(EllipticalSpec.bivariate(gamma), kind).values
    assert abs(S[0, 1]) < 1e-13
    assert S[0, 0] > S[1, 1] > 0


def test_population_rejects_unsupported():
    with pytest.raises(NotImplementedError):
        population_gsscm(EllipticalSpec((1.0, 0.5, 0.2)), "winsor")
    with pytest.raises(NotImplementedError):
        population_gsscm(EllipticalSpec((1.0, 0.5), family="student_t", df=3), "winsor")
    with pytest.raises(ValueError):
        EllipticalSpec((1.0, 0.0))


samples = st.tuples(st.integers(0, 10_000), st.integers(5, 60), st.integers(2, 6))


@given(samples, st.sampled_from(ALL_KINDS))
def test_symmetric_psd_and_trace(args, kind):
    seed, n, p = args
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) * rng.uniform(0.2, 4.0, p)
    S = sample_gsscm(X, kind)
    V = S.values
    np.testing.assert_allclose(V, V.T, atol=1e-12)
    tr = np.trace(V)
    assert np.linalg.eigvalsh(V).min() >= -1e-10 * max(tr, 1e-300)
    G = g_transform(X, S.center, kind, S.cutoffs)
    np.testing.assert_allclose(tr, np.mean(np.sum(G**2, axis=1)), rtol=1e-12)


@given(samples, st.sampled_from(ALL_KINDS))
def test_orthogonal_equivariance(args, kind):
    seed, n, p = args
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) * rng.uniform(0.5, 3.0, p)
    U = random_orthogonal(rng, p)
    a = sample_gsscm(X @ U.T, kind).values
    b = U @ sample_gsscm(X, kind).values @ U.T
    np.testing.assert_allclose(a, b, atol=1e-8)


@given(samples, st.sampled_from(BOUNDED_KINDS))
def test_explosion_bound(args, kind):
    seed, n, p = args
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)) * rng.uniform(0.2, 4.0, p)
    S = sample_gsscm(X, kind)
    d = np.linalg.norm(X - S.center, axis=1)
    med = np.median(d)
    bound = (med + 1.4826 * np.median(np.abs(d - med))) ** 2
    assert np.linalg.eigvalsh(S.values).max() <= bound


@given(samples)
def test_ball_ignores_far_rows(args):
    seed, n, p = args
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    S = sample_gsscm(X, "ball")
    diff = X - S.center
    d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    keep = d <= S.cutoffs.q2
    G_all = g_transform(X, S.center, "ball", S.cutoffs)
    G_kept = g_transform(X[keep], S.center, "ball", S.cutoffs)
    np.testing.assert_allclose(G_kept.T @ G_kept, G_all.T @ G_all, atol=1e-12)
