import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from boottest.empirical import (
    ECDF,
    EvalGrid,
    JointECDF,
    NormSpec,
    Sample1D,
    Sample2D,
    SignedSum,
    ecdf_eval,
    joint_ecdf_eval,
    l2_norm_for_normal,
    left_limit,
    norm_distance,
    normal_cdf,
    sup_grid,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_ecdf_steps_and_left_limits():
    f = ECDF([3.0, 1.0, 2.0, 2.0])
    assert f(0.5) == 0.0
    assert f(1.0) == 0.25
    assert f(2.0) == 0.75
    assert f.left(2.0) == 0.25
    assert f(10.0) == 1.0
    np.testing.assert_array_equal(f.jumps, [1.0, 2.0, 3.0])


def test_ecdf_eval_matches_counting():
    s = Sample1D([0.2, -1.0, 0.2, 5.0])
    for x in (-2, -1, 0, 0.2, 4, 5, 6):
        assert ecdf_eval(s, x) == np.mean(s.values <= x)


def test_joint_ecdf_counts_pairs():
    s = Sample2D.from_pairs([(0, 0), (1, 1), (1, 0)])
    assert joint_ecdf_eval(s, 0, 0) == pytest.approx(1 / 3)
    assert joint_ecdf_eval(s, 1, 0) == pytest.approx(2 / 3)
    assert joint_ecdf_eval(s, 1, 1) == 1.0
    assert JointECDF(s)(-1, 5) == 0.0


@pytest.mark.parametrize("bad", [[], [np.nan], [1.0, np.inf]])
def test_sample_rejects_bad_values(bad):
    with pytest.raises(ValueError):
        Sample1D(bad)


def test_sample2d_needs_equal_lengths():
    with pytest.raises(ValueError):
        Sample2D([1.0, 2.0], [1.0])


def test_grid_validation():
    with pytest.raises(ValueError):
        EvalGrid(np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        EvalGrid(np.zeros((3, 2)), include_left_limits=True)
    with pytest.raises(ValueError):
        NormSpec("l2", EvalGrid(np.array([0.0, 1.0])))
    with pytest.raises(ValueError):
        NormSpec("l2", EvalGrid(np.array([0.0, 1.0])), np.array([-1.0, 2.0]))
    with pytest.raises(ValueError):
        NormSpec("max", EvalGrid(np.array([0.0])))


def test_sup_distance_sees_the_jump_from_the_left():
    # ECDF of {0} against the constant 1: they agree at 0 but differ by 1 just left of it
    f = ECDF([0.0])
    one = lambda x: np.ones(np.shape(x))  # noqa: E731
    assert norm_distance(f, one, NormSpec("sup", EvalGrid(np.array([0.0])))) == 0.0
    assert norm_distance(f, one, NormSpec("sup", sup_grid(Sample1D([0.0])))) == 1.0


@settings(max_examples=60, deadline=None)
@given(st.lists(finite, min_size=1, max_size=30), st.lists(finite, min_size=1, max_size=30))
def test_sup_distance_between_ecdfs_is_two_sample_ks(a, b):
    fa, fb = ECDF(a), ECDF(b)
    grid = sup_grid(Sample1D(a), Sample1D(b))
    # brute force: the two-sample KS distance is attained at a data point
    pts = np.unique(np.concatenate([a, b]))
    brute = max(abs(np.mean(np.asarray(a) <= t) - np.mean(np.asarray(b) <= t)) for t in pts)
    assert norm_distance(fa, fb, NormSpec("sup", grid)) == pytest.approx(brute, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=1, max_size=20))
def test_signed_sum_left_limit(vals):
    f, g = ECDF(vals), ECDF([0.0])
    h = SignedSum([(1.0, f), (-1.0, g)])
    x = np.array(sorted(set(vals)))
    np.testing.assert_allclose(h.left(x), f.left(x) - g.left(x))
    np.testing.assert_allclose(left_limit(h, x), f.left(x) - g.left(x))


def test_left_limit_of_continuous_function_is_the_value():
    x = np.linspace(-2, 2, 9)
    np.testing.assert_array_equal(left_limit(normal_cdf, x), normal_cdf(x))


def test_l2_norm_for_normal_approximates_cramer_von_mises():
    # int (Phi(t) - Phi(t - 1))^2 dPhi(t), by fine quadrature
    norm = l2_norm_for_normal(0.0, 1.0, points=2001, tail=1e-6)
    t = np.linspace(-12, 12, 400001)
    dens = np.exp(-t * t / 2) / np.sqrt(2 * np.pi)
    ref = np.sqrt(trapezoid((normal_cdf(t) - normal_cdf(t, 1.0)) ** 2 * dens, t))
    got = norm_distance(normal_cdf, lambda x: normal_cdf(x, 1.0), norm)
    assert got == pytest.approx(ref, rel=1e-4)
    assert norm.weights.sum() == pytest.approx(1.0, abs=3e-3)
