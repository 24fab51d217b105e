import numpy as np
import pytest
from hypothesis import given, strategies as st

from roughdelay import GridMismatchError, OutOfWindowError, sample_brownian, wiener_shift
from roughdelay.noise import BLOCK_STEPS, make_rng

H_F = 2.0 ** -10


def test_node_count_and_origin():
    p = sample_brownian(1, 0.0, 1.0, H_F, 7)
    assert p.n_nodes == 1025
    assert p.values[0, 0] == 0.0
    assert p.values.shape == (1025, 1)


def test_repeat_is_bit_exact():
    a = sample_brownian(2, 0.0, 1.0, H_F, 7)
    b = sample_brownian(2, 0.0, 1.0, H_F, 7)
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize("seed", [0, 1, 7, 2**40])
def test_increment_mean_within_clt_band(seed):
    p = sample_brownian(1, 0.0, 8.0, H_F, seed)
    n = p.n_steps
    band = 4 * np.sqrt(H_F / n)
    assert abs(p.increments.mean()) < band


def test_increment_covariance():
    p = sample_brownian(2, 0.0, 16.0, H_F, 3)
    n = p.n_steps
    cov = p.increments.T @ p.increments / n / H_F
    # chi-square band on the diagonal, normal band off it
    assert np.all(np.abs(np.diag(cov) - 1) < 5 * np.sqrt(2 / n))
    assert abs(cov[0, 1]) < 5 / np.sqrt(n)


def test_non_commensurate_window_rejected():
    with pytest.raises(GridMismatchError):
        sample_brownian(1, 0.0, 1.0 + H_F / 3, H_F, 0)
    with pytest.raises(GridMismatchError):
        sample_brownian(1, H_F / 3, 1.0, H_F, 0)


def test_seeds_give_distinct_streams():
    a = sample_brownian(1, 0.0, 1.0, H_F, 1).increments
    b = sample_brownian(1, 0.0, 1.0, H_F, 2).increments
    assert not np.array_equal(a, b)
    assert not np.array_equal(make_rng(1, 0).random(4), make_rng(1, 1).random(4))


@given(seed=st.integers(0, 2**63 - 1), lo=st.integers(-3000, 3000), n1=st.integers(1, 2500),
       n2=st.integers(1, 2500), off=st.integers(0, 2500))
def test_overlapping_windows_agree(seed, lo, n1, n2, off):
    """The increment over a lattice step depends only on (seed, step)."""
    a = sample_brownian(1, lo * H_F, (lo + n1) * H_F, H_F, seed)
    b = sample_brownian(1, (lo + off) * H_F, (lo + off + n2) * H_F, H_F, seed)
    k0, k1 = off, min(n1, off + n2)
    if k0 < k1:
        assert np.array_equal(a.increments[k0:k1], b.increments[:k1 - k0])


def test_blocks_cross_boundaries():
    p = sample_brownian(1, -1.0, 3.0, H_F, 5)
    assert p.n_steps > 2 * BLOCK_STEPS
    q = sample_brownian(1, 0.5, 1.5, H_F, 5)
    i = p.node(0.5)
    assert np.array_equal(p.increments[i:i + q.n_steps], q.increments)


def test_shift_zero_is_identity():
    p = sample_brownian(1, -2.0, 4.0, H_F, 3)
    q = wiener_shift(p, 0, 1.0)
    assert np.array_equal(p.increments, q.increments)
    assert np.allclose(p.values - p.values[p.node(0.0)], q.values, rtol=0, atol=1e-13)
    assert q.t_start == p.t_start


def test_shifted_increments_match_original():
    r = 0.5
    p = sample_brownian(1, -1.0, 4.0, H_F, 3)
    n = 3
    q = wiener_shift(p, n, r)
    assert np.array_equal(q.window(0.0, r), p.window(n * r, (n + 1) * r))
    assert q.values[q.node(0.0), 0] == 0.0


@given(n=st.integers(-2, 2), m=st.integers(-2, 2))
def test_shift_semigroup(n, m):
    r = 0.5
    p = sample_brownian(1, -4.0, 4.0, H_F, 11)
    if not (-3 <= n + m <= 3 and n != 0 and n + m != 0):
        return
    q = wiener_shift(wiener_shift(p, n, r), m, r)
    s = wiener_shift(p, n + m, r)
    assert q.t_start == s.t_start
    assert np.array_equal(q.values, s.values)


def test_shift_outside_window():
    p = sample_brownian(1, 0.0, 4.0, H_F, 3)
    with pytest.raises(OutOfWindowError):
        wiener_shift(p, 4, 1.0)
    with pytest.raises(OutOfWindowError):
        wiener_shift(p, -1, 1.0)
