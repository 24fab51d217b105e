import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import brownian_lift
from roughdelay import (DelayedControlledSegment, GridMismatchError, WrongKindError,
                        compose_sigma, constant_segment, controlled_segment, from_registry,
                        norm_controlled, norm_delayed, rebase, scalar_field)
from roughdelay.controlled import norm_delayed_general, remainder_estimate
from roughdelay.io import segment_csv

BETA = 0.45


@pytest.fixture
def rp():
    return brownian_lift(1, dim=1, N=16, n_seg=3)


def path_segment(rp, k):
    """``m = X_{a, .}`` with derivative 1 on block ``k``."""
    K = rp.delay_steps
    i = k * K
    return controlled_segment(rp, rp.t0 + i * rp.h, rp.node_values(i, i + K),
                              np.ones((K + 1, 1, 1)))


def test_norm_controlled_examples(rp):
    K = rp.delay_steps
    assert norm_controlled(constant_segment(rp, 0.0, 0.0), BETA) == 0.0
    assert norm_controlled(constant_segment(rp, 0.0, -2.5), BETA) == 2.5
    seg = path_segment(rp, 1)
    assert np.abs(seg.remainder()).max() < 1e-15
    assert norm_controlled(seg, BETA) == pytest.approx(1.0, abs=1e-12)
    assert seg.n == K


def test_norm_delayed_examples(rp):
    K = rp.delay_steps
    zero = constant_segment(rp, 0.0, 0.0)
    assert norm_delayed(zero, BETA) == 0.0
    assert norm_delayed(constant_segment(rp, 0.0, 3.0), BETA) == 3.0
    # m = X_{. - r} re-based at the block start, zeta1 = 1
    seg = DelayedControlledSegment(rp=rp, start=K, values=rp.node_values(0, K),
                                   zeta0=np.zeros((K + 1, 1, 1)), zeta1=np.ones((K + 1, 1, 1)))
    assert np.abs(seg.remainder()).max() < 1e-15
    assert norm_delayed(seg, BETA) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(WrongKindError):
        norm_controlled(seg, BETA)
    with pytest.raises(WrongKindError):
        seg.derivative


def test_norm_general_adds_value_term(rp):
    seg = path_segment(rp, 1)
    g = norm_delayed_general(seg, 0.34, BETA, 2 * BETA)
    assert g >= norm_delayed(seg, BETA)


def test_compose_constant(rp):
    vf = scalar_field(lambda x, y: 0.7 + 0 * x, lambda x, y: 0 * x, lambda x, y: 0 * x)
    y, past = path_segment(rp, 1), path_segment(rp, 0)
    out = compose_sigma(y, past, vf)
    assert np.all(out.values == 0.7)
    assert not np.any(out.zeta0) and not np.any(out.zeta1)
    assert np.abs(out.remainder()).max() < 1e-15


def test_compose_identity(rp):
    vf = from_registry("linear", s_x=1.0)
    y, past = path_segment(rp, 1), path_segment(rp, 0)
    out = compose_sigma(y, past, vf)
    assert np.array_equal(out.values[:, 0, 0], y.values[:, 0])
    assert np.all(out.zeta0 == 1.0) and not np.any(out.zeta1)


def test_compose_pure_delay(rp):
    vf = from_registry("linear", s_y=1.0)
    y, past = path_segment(rp, 1), path_segment(rp, 0)
    out = compose_sigma(y, past, vf)
    assert np.array_equal(out.values[:, 0, 0], past.values[:, 0])
    assert np.array_equal(out.zeta1[..., 0, 0, :], past.zeta0[..., 0, :])
    assert not np.any(out.zeta0)


def test_compose_is_exact_at_nodes_and_linear(rp):
    a, b = from_registry("sine_product", s=0.8), from_registry("quadratic", q_x=0.5, q_y=-1.0)
    y, past = path_segment(rp, 2), path_segment(rp, 1)
    ya, pa = y.values, past.values
    ca, cb, cs = compose_sigma(y, past, a), compose_sigma(y, past, b), compose_sigma(y, past, a + b)
    assert np.array_equal(ca.values, a.sigma(ya, pa))
    for name in ("values", "zeta0", "zeta1"):
        assert np.allclose(getattr(cs, name), getattr(ca, name) + getattr(cb, name),
                           rtol=0, atol=1e-14)


def test_compose_remainder_stable_under_refinement():
    """Grid remainder estimates stay bounded as the grid is refined."""
    vf = from_registry("sine_product", s=1.0)
    ests = []
    for N in (8, 16, 32, 64):
        rp = brownian_lift(4, N=N, n_seg=2, R=256 // N)
        y, past = path_segment(rp, 1), path_segment(rp, 0)
        ests.append(remainder_estimate(compose_sigma(y, past, vf), BETA))
    assert np.all(np.isfinite(ests))
    assert max(ests) < 4 * min(ests)


def test_compose_needs_adjacent_blocks(rp):
    vf = from_registry("linear", s_x=1.0)
    with pytest.raises(GridMismatchError):
        compose_sigma(path_segment(rp, 2), path_segment(rp, 0), vf)


def test_segment_shape_checks(rp):
    with pytest.raises(GridMismatchError):
        DelayedControlledSegment(rp=rp, start=0, values=np.zeros((5, 1)), zeta0=np.zeros((5, 2)))
    with pytest.raises(GridMismatchError):
        DelayedControlledSegment(rp=rp, start=rp.n_intervals - 2, values=np.zeros((5, 1)),
                                 zeta0=np.zeros((5, 1, 1)))


@given(shift=st.integers(0, 2), block=st.integers(0, 2))
def test_rebase_shift_moves_clock(shift, block):
    rp = brownian_lift(9, N=8, n_seg=3)
    if block < shift:
        return
    seg = path_segment(rp, block)
    moved = rebase(seg, rp.shifted(shift), shift=shift)
    assert moved.start == seg.start
    assert np.allclose(moved.times, seg.times - shift * rp.r, rtol=0, atol=1e-12)
    assert np.array_equal(moved.remainder(), seg.remainder())


def test_segment_csv_columns(rp):
    text = segment_csv(path_segment(rp, 1))
    lines = text.splitlines()
    assert lines[0] == "t,m0,zeta0_0_0,zeta1_0_0"
    assert len(lines) == rp.delay_steps + 2
