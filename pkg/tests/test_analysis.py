import csv
import math

import numpy as np
import pytest
from scipy import stats

from gspca.analysis import (
    asv_offdiag,
    build_model,
    contaminated_loadings,
    curve,
    efficiency,
    ges,
    if_combined_covariance,
    if_corrected_eigenvalue,
    if_loading,
    mad_influence,
    sup_influence,
    symmetry_integral_check,
    write_curve_csv,
)
from gspca.radial import BOUNDED_KINDS, RadialKind

ALL_KINDS = list(RadialKind)
CUTOFF_KINDS = [k for k in ALL_KINDS if k.needs_cutoffs]

# 1 / (4 q phi(q)) at the upper normal quartile, evaluated from its definition
Q75 = 0.6744897501960817
MAD_IF = 1.0 / (4.0 * Q75 * math.exp(-0.5 * Q75**2) / math.sqrt(2.0 * math.pi))


@pytest.fixture(scope="module")
def models():
    return {k: build_model(0.5, k) for k in ALL_KINDS}


def test_model_fields(models):
    m = models[RadialKind.LR]
    assert m.lambda_g[0] > m.lambda_g[1] > 0
    assert m.cutoffs.q1 <= m.cutoffs.q2 <= m.cutoffs.q3 <= m.cutoffs.q3star
    assert models[RadialKind.SSCM].cutoffs is None
    with pytest.raises(ValueError):
        build_model(1.0, "lr")


@pytest.mark.parametrize("kind", CUTOFF_KINDS)
def test_model_reproducible(kind, models):
    again = build_model(0.5, kind)
    finer = build_model(0.5, kind, n_theta=1024, n_gl=60)
    ref = np.array(models[kind].cutoffs.as_tuple())
    np.testing.assert_allclose(again.cutoffs.as_tuple(), ref, rtol=0, atol=1e-12)
    np.testing.assert_allclose(finer.cutoffs.as_tuple(), ref, rtol=0, atol=1e-6)
    np.testing.assert_allclose(finer.lambda_g, models[kind].lambda_g, atol=1e-6)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_axis_points_have_no_influence(kind, models):
    x = np.array([[0.5, 0.0], [0.0, -2.0], [3.0, 0.0]])
    np.testing.assert_array_equal(if_loading(models[kind], x, 1), 0.0)
    off = if_combined_covariance(models[kind], x)[:, 0, 1]
    np.testing.assert_array_equal(off, 0.0)


def test_identity_influence_is_classical(models):
    x = np.array([[0.3, 1.2], [-2.0, 0.7]])
    want = np.zeros_like(x)
    want[:, 1] = x[:, 0] * x[:, 1] / (1.0 - 0.5)
    np.testing.assert_allclose(if_loading(models[RadialKind.IDENTITY], x, 1), want, rtol=1e-12)
    want2 = np.zeros_like(x)
    want2[:, 0] = x[:, 0] * x[:, 1] / (0.5 - 1.0)
    np.testing.assert_allclose(if_loading(models[RadialKind.IDENTITY], x, 2), want2, rtol=1e-12)


def test_ball_influence_vanishes_outside(models):
    m = models[RadialKind.BALL]
    t = np.linspace(0, 2 * np.pi, 37)
    x = 1.0001 * m.cutoffs.q2 * np.column_stack([np.cos(t), np.sin(t)])
    np.testing.assert_array_equal(if_loading(m, x, 1), 0.0)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_first_loading_influence_orthogonal(kind, models, rng):
    x = rng.standard_normal((50, 2)) * 2.0
    assert np.all(if_loading(models[kind], x, 1)[:, 0] == 0.0)


def test_component_index_checked(models):
    with pytest.raises(ValueError):
        if_loading(models[RadialKind.LR], [1.0, 1.0], 3)


FD_POINTS = [(0.7, 0.4), (1.0, 1.0), (-0.5, 1.2), (2.0, -0.3), (0.3, 0.2), (1.5, 2.5)]


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("point", FD_POINTS)
def test_influence_matches_finite_difference(kind, point, models):
    m = models[kind]
    eps = 1e-5
    fd = contaminated_loadings(m, point, eps)[:, 0] / eps
    fd[0] = (fd[0] * eps - 1.0) / eps
    iff = if_loading(m, np.asarray(point), 1)
    assert np.all(np.abs(fd - iff) <= 1e-3 * max(1.0, np.abs(iff).max())), (fd, iff)


# values of the gross-error sensitivity table at gamma = 0.5
GES_TABLE = {
    RadialKind.SSCM: (2.914213, 0.005),
    RadialKind.WINSOR: (3.100523, 0.005),
    RadialKind.QUAD: (6.569927, 0.01),
    RadialKind.LR: (10.74909, 0.01),
    RadialKind.BALL: (29.27686, 0.01),
    RadialKind.SHELL: (12.42133, 0.01),
}


@pytest.mark.parametrize("kind", list(GES_TABLE))
def test_ges_table(kind, models):
    value, tol = GES_TABLE[kind]
    assert ges(models[kind]) == pytest.approx(value, rel=tol)


def test_identity_ges_unbounded(models):
    m = models[RadialKind.IDENTITY]
    assert ges(m) == math.inf
    caps = [sup_influence(m, radius=c, n_radii=200, n_angles=72) for c in (10.0, 100.0, 1000.0)]
    assert caps[0] < caps[1] < caps[2]
    assert caps[2] > 1e5


@pytest.mark.parametrize("gamma", [0.2, 0.5, 0.8])
def test_identity_asv_closed_form(gamma):
    m = build_model(gamma, "identity")
    assert asv_offdiag(m) == pytest.approx(gamma / (1.0 - gamma) ** 2, rel=1e-10)
    assert efficiency(m) == 1.0


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["winsor", "ball", "sscm"])
def test_asv_against_monte_carlo(kind, models):
    m = models[RadialKind.parse(kind)]
    rng = np.random.default_rng(99)
    vals = []
    for _ in range(10):
        x = rng.standard_normal((1_000_000, 2)) * np.sqrt([1.0, 0.5])
        vals.append(if_loading(m, x, 1)[:, 1] ** 2)
    vals = np.concatenate(vals)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - asv_offdiag(m)) <= 3.0 * se


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_asv_is_second_moment_of_influence(kind, models):
    m = models[kind]
    breaks = m.cutoffs.as_tuple() if m.cutoffs else ()
    x1, x2, r, w = m.rule.nodes(breaks)
    iff = if_loading(m, np.stack([x1, x2], axis=-1), 1)
    assert np.sum(w * iff[..., 1] ** 2) == pytest.approx(asv_offdiag(m), rel=1e-6)


def test_efficiency_ordering_at_half(models):
    e = {k: efficiency(models[k]) for k in BOUNDED_KINDS + (RadialKind.SSCM,)}
    assert e[RadialKind.WINSOR] > e[RadialKind.SSCM] > e[RadialKind.QUAD]
    assert e[RadialKind.QUAD] > max(e[RadialKind.LR], e[RadialKind.SHELL])
    assert min(e[RadialKind.LR], e[RadialKind.SHELL]) > e[RadialKind.BALL]


@pytest.mark.parametrize("gamma", [0.55, 0.7, 0.9])
def test_efficiency_levels(gamma):
    assert efficiency(build_model(gamma, "sscm")) == pytest.approx(0.5, abs=0.05)
    assert efficiency(build_model(gamma, "quad")) == pytest.approx(0.3, abs=0.05)
    if gamma == 0.9:
        assert efficiency(build_model(gamma, "winsor")) == pytest.approx(0.7, abs=0.05)


def test_mad_influence():
    assert mad_influence(stats.norm.ppf(0.75)) == 0.0
    u = np.array([-3.0, -0.2, 0.2, 3.0])
    np.testing.assert_allclose(mad_influence(u), [MAD_IF, -MAD_IF, -MAD_IF, MAD_IF], rtol=1e-12)
    np.testing.assert_array_equal(mad_influence(u), mad_influence(-u))
    assert MAD_IF == pytest.approx(1.166, abs=1e-3)


def test_corrected_eigenvalue_plateau(models):
    m = models[RadialKind.WINSOR]
    assert if_corrected_eigenvalue(m, [1e6, 0.0], 1) == pytest.approx(2.0 * MAD_IF, rel=1e-12)
    assert if_corrected_eigenvalue(m, [0.0, 5.0], 1) == pytest.approx(-2.0 * MAD_IF, rel=1e-12)
    assert if_corrected_eigenvalue(m, [0.0, 5.0], 2) == pytest.approx(2.0 * 0.5 * MAD_IF, rel=1e-12)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_combined_covariance_influence(kind, models, rng):
    m = models[kind]
    x = rng.standard_normal((40, 2)) * 1.5
    out = if_combined_covariance(m, x)
    np.testing.assert_array_equal(out, np.swapaxes(out, -1, -2))
    np.testing.assert_allclose(out[:, 0, 0], if_corrected_eigenvalue(m, x, 1))
    np.testing.assert_allclose(out[:, 1, 1], if_corrected_eigenvalue(m, x, 2))
    # (1 - gamma) times the loading influence numerator over the gap
    g_prod = if_loading(m, x, 1)[:, 1] * m.gap
    np.testing.assert_allclose(out[:, 0, 1], (1 - 0.5) * g_prod / m.gap, rtol=1e-12)


def test_symmetry_integral(models):
    assert symmetry_integral_check(models[RadialKind.IDENTITY]) == 0.0
    assert symmetry_integral_check(models[RadialKind.SSCM]) == 0.0
    for kind in BOUNDED_KINDS:
        for point in [(1.0, 1.0), (0.4, -2.0), (3.0, 0.5)]:
            assert symmetry_integral_check(models[kind], point) < 1e-4


def test_curve_and_csv(tmp_path):
    gammas = [0.3, 0.6]
    series = curve("efficiency", gammas, ["identity", "winsor"])
    np.testing.assert_array_equal(series["identity"], [1.0, 1.0])
    path = tmp_path / "eff.csv"
    write_curve_csv(path, "gamma", gammas, series)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["series", "gamma", "y"]
    assert len(rows) == 5
    assert rows[3][:2] == ["winsor", "0.29999999999999999"]
    assert float(rows[4][2]) == series["winsor"][1]
    with pytest.raises(ValueError):
        curve("bias", gammas, ["lr"])
