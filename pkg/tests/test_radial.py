import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gspca.quadrature import population_cutoffs
from gspca.radial import BOUNDED_KINDS, Cutoffs, RadialKind, estimate_cutoffs, weight

C = Cutoffs(q1=1.0, q2=2.0, q3=3.0, q3star=4.0)


def test_collapsed_cutoffs():
    c = estimate_cutoffs([5.0, 5.0, 5.0, 5.0])
    np.testing.assert_allclose(c.as_tuple(), (5.0, 5.0, 5.0, 5.0), rtol=1e-14)


def test_one_to_five_by_hand():
    d = np.arange(1.0, 6.0)
    u = d ** (2.0 / 3.0)
    med_u = 3.0 ** (2.0 / 3.0)
    # |u - med_u| sorted; the third smallest is the raw MAD
    mad = sorted(abs(u - med_u))[2]
    c = estimate_cutoffs(d)
    assert c.q2 == 3.0
    np.testing.assert_allclose(c.q1, (med_u - mad) ** 1.5, rtol=1e-13)
    np.testing.assert_allclose(c.q3, (med_u + mad) ** 1.5, rtol=1e-13)
    np.testing.assert_allclose(c.q3star, (med_u + 1.4826 * mad) ** 1.5, rtol=1e-13)


def test_even_n_uses_midpoint_median():
    c = estimate_cutoffs([1.0, 2.0, 3.0, 10.0])
    assert c.q2 == 2.5


def test_q1_bracket_clamped():
    # mad(u) exceeds med(u), so the lower bracket is negative
    c = estimate_cutoffs([0.0, 0.0, 0.001, 50.0, 60.0])
    assert c.q1 == 0.0


@pytest.mark.parametrize("bad", [[1.0], [1.0, -1.0], [1.0, np.nan], [[1.0, 2.0]]])
def test_invalid_distances(bad):
    with pytest.raises(ValueError):
        estimate_cutoffs(bad)


def test_winsor_inside_q2():
    assert weight("winsor", 1.5, C) == 1.0
    assert weight("winsor", 2.0, C) == 1.0
    assert weight("winsor", 4.0, C) == 0.5


def test_quad_tail():
    assert weight("quad", 4.0, C) == 0.25


def test_ball_outside_q2():
    assert weight("ball", 2.0, C) == 1.0
    assert weight("ball", 2.0000001, C) == 0.0


def test_lr_midpoint():
    r = 0.5 * (C.q2 + C.q3star)
    assert weight("lr", r, C) == pytest.approx(0.5, abs=1e-15)
    assert weight("lr", 5.0, C) == 0.0


def test_shell_window():
    assert weight("shell", 0.5, C) == 0.0
    assert weight("shell", 1.0, C) == 1.0
    assert weight("shell", 3.0, C) == 1.0
    assert weight("shell", 3.5, C) == 0.0


def test_identity_and_sign():
    np.testing.assert_array_equal(weight("identity", [0.0, 3.0]), [1.0, 1.0])
    np.testing.assert_array_equal(weight("sscm", [0.0, 4.0]), [0.0, 0.25])


def test_lr_with_collapsed_cutoffs():
    c = Cutoffs(5.0, 5.0, 5.0, 5.0)
    np.testing.assert_array_equal(weight("lr", [4.0, 5.0, 6.0], c), [1.0, 1.0, 0.0])


def test_array_shape_preserved():
    r = np.linspace(0, 5, 12).reshape(3, 4)
    assert weight("quad", r, C).shape == (3, 4)


def test_cutoffs_required():
    with pytest.raises(ValueError):
        weight("ball", 1.0)


def test_parse():
    assert RadialKind.parse("LR") is RadialKind.LR
    assert RadialKind.parse("spatialsign") is RadialKind.SSCM
    with pytest.raises(ValueError):
        RadialKind.parse("huber")


@pytest.mark.slow
def test_population_cutoffs_against_monte_carlo():
    rng = np.random.default_rng(7)
    n, batches = 10_000_000, 20
    X = rng.standard_normal((n, 2)) * np.sqrt([1.0, 0.5])
    d = np.hypot(X[:, 0], X[:, 1])
    del X
    full = np.array(estimate_cutoffs(d).as_tuple())
    parts = np.array([estimate_cutoffs(b).as_tuple() for b in np.split(d, batches)])
    se = parts.std(axis=0, ddof=1) / np.sqrt(batches)
    pop = np.array(population_cutoffs((1.0, 0.5)).as_tuple())
    assert np.all(np.abs(full - pop) <= 3.0 * se), (full, pop, se)


distances = st.lists(st.floats(0.0, 1e3, allow_nan=False), min_size=2, max_size=80)


@given(distances)
def test_cutoff_ordering(d):
    c = estimate_cutoffs(d)
    assert 0.0 <= c.q1 <= c.q2 * (1 + 1e-12) + 1e-300
    assert c.q2 <= c.q3 * (1 + 1e-12) + 1e-300
    assert c.q3 <= c.q3star * (1 + 1e-12) + 1e-300


@given(distances, st.sampled_from(BOUNDED_KINDS))
def test_bounded_weights(d, kind):
    d = np.asarray(d)
    c = estimate_cutoffs(d)
    w = weight(kind, d, c)
    assert np.all((w >= 0.0) & (w <= 1.0))
    cap = c.q3 if kind is RadialKind.SHELL else c.q3star
    assert np.all(d * w <= cap * (1 + 1e-12))
    if kind is RadialKind.SHELL:
        inside = np.sum((d >= c.q1) & (d <= c.q3))
        assert np.sum(w == 1.0) >= inside
    else:
        assert np.sum(w == 1.0) >= (d.size + 1) // 2


@given(st.sampled_from([RadialKind.WINSOR, RadialKind.QUAD, RadialKind.BALL, RadialKind.LR]),
       st.lists(st.floats(0.0, 1e3), min_size=3, max_size=60))
def test_monotone_weights(kind, d):
    c = estimate_cutoffs(d)
    r = np.linspace(0.0, 2.0 * max(c.q3star, 1.0), 500)
    w = weight(kind, r, c)
    assert np.all(np.diff(w) <= 1e-15)
