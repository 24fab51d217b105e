import numpy as np
import pytest

from oracles import angle, characteristic_root, monodromy_eigvec
from roughdelay import (ConfigError, ContractionError, SegmentBasis, System, constant_segment,
                        contraction_condition, find_stationary, from_registry,
                        lyapunov_spectrum, stable_rate_probe, stationary_zero_check,
                        unstable_rate_probe, unstable_subspace_pullback)
from roughdelay.ergodic import cauchy_tail, principal_angle, qr_signed, stationarity_defect

DELAY_STABLE = System(vf=from_registry("pure_delay", a=-0.3), refinement=1)
DELAY_UNSTABLE = System(vf=from_registry("pure_delay", a=0.5), refinement=1)


def test_qr_signed():
    V = np.random.default_rng(0).standard_normal((7, 3))
    Q, R = qr_signed(V)
    assert np.all(np.diag(R) >= 0)
    assert np.allclose(Q @ R, V)
    assert np.allclose(Q.T @ Q, np.eye(3))


def test_principal_angle_and_tail():
    U = np.eye(4)[:, :1]
    V = np.array([[np.cos(0.2)], [np.sin(0.2)], [0.0], [0.0]])
    assert principal_angle(U, V) == pytest.approx(0.2)
    assert cauchy_tail([1.0, 2.0, 3.0, 3.0]) == 0.0


def test_report_schema():
    rep = lyapunov_spectrum(DELAY_STABLE, 0, 2, 20, 8)
    d = rep.to_dict()
    assert set(d) == {"exponents", "running", "seed", "N", "n_steps", "floor", "converged"}
    assert list(rep.exponents) == sorted(rep.exponents, reverse=True)
    assert rep.running.shape == (20, 2)


def test_orthogonal_change_of_initial_directions():
    size = DELAY_STABLE.basis_size(16)
    V = np.random.default_rng(1).standard_normal((size, 3))
    Q, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((3, 3)))
    a = lyapunov_spectrum(DELAY_STABLE, 0, 3, 100, 16, initial=V)
    b = lyapunov_spectrum(DELAY_STABLE, 0, 3, 100, 16, initial=V @ Q)
    assert abs(a.exponents.sum() - b.exponents.sum()) < 1e-6
    assert np.abs(a.exponents - b.exponents).max() < 1e-4
    c = lyapunov_spectrum(DELAY_STABLE, 0, 1, 100, 16, initial=V[:, :1])
    e = lyapunov_spectrum(DELAY_STABLE, 0, 1, 100, 16, initial=-V[:, :1])
    assert abs(c.exponents[0] - e.exponents[0]) < 1e-6


def test_reorthonormalisation_interval():
    a = lyapunov_spectrum(DELAY_STABLE, 0, 3, 100, 16, reorth_every=1)
    b = lyapunov_spectrum(DELAY_STABLE, 0, 3, 100, 16, reorth_every=2)
    assert np.abs(a.exponents - b.exponents).max() < 1e-3


def test_floor_for_degenerate_directions():
    """With y' = 0 the segment map keeps only the end value: one exponent is minus infinity."""
    system = System(vf=from_registry("pure_delay", a=0.0), refinement=1)
    rep = lyapunov_spectrum(system, 0, 2, 30, 8)
    assert rep.exponents[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.exponents[1] == rep.floor == pytest.approx(np.log(1e-14))
    assert rep.at_floor == [False, True]


def test_unstable_delay_exponent():
    rep = lyapunov_spectrum(DELAY_UNSTABLE, 0, 1, 100, 32)
    assert rep.exponents[0] == pytest.approx(characteristic_root(0.5), abs=0.02)
    assert rep.converged == [True]


def test_ito_stratonovich_gap():
    """dy = c y dt + b y dB: the two lifts differ by b^2/2 in the top exponent."""
    b = 1.0
    gaps = []
    for seed in range(2):
        exps = {}
        for conv in ("ito", "stratonovich"):
            system = System(vf=from_registry("linear", s_x=b, b_x=-0.2), convention=conv,
                            refinement=8, x0=1.0)
            exps[conv] = lyapunov_spectrum(system, seed, 1, 100, 32).exponents[0]
        gaps.append(exps["stratonovich"] - exps["ito"])
    assert np.mean(gaps) == pytest.approx(b * b / 2, abs=0.05)


def test_bad_arguments():
    with pytest.raises(ConfigError):
        lyapunov_spectrum(DELAY_STABLE, 0, 1, 10, 8, reorth_every=0)
    with pytest.raises(ConfigError):
        lyapunov_spectrum(DELAY_STABLE, 0, 10**6, 10, 8)
    bad = System(vf=from_registry("pure_delay"), alpha=0.4, beta=0.41, gamma=0.45)
    with pytest.raises(ConfigError):
        lyapunov_spectrum(bad, 0, 1, 10, 8)


def test_pullback_unstable_direction():
    ub = unstable_subspace_pullback(DELAY_UNSTABLE, 0, 10, 1, 32)
    assert ub.converged and ub.angle < 0.05
    assert np.allclose(ub.basis.T @ ub.basis, np.eye(1))
    vals, _ = SegmentBasis(33, 1, 2, 1 / 32).decode_arrays(ub.basis[:, 0])
    _, ref = monodromy_eigvec(0.5, 32)
    assert angle(vals[:, 0], ref) < 0.05
    assert ub.rates[0] == pytest.approx(characteristic_root(0.5), abs=0.02)


def test_pullback_empty_and_stable():
    ub = unstable_subspace_pullback(DELAY_UNSTABLE, 0, 5, 0, 8)
    assert ub.basis.shape == (DELAY_UNSTABLE.basis_size(8), 0)
    stable = unstable_subspace_pullback(DELAY_STABLE, 0, 10, 1, 16)
    assert not stable.converged


def test_contraction_condition_examples():
    ok, M, lam = contraction_condition(-1.0, 0.5)
    assert ok and M == pytest.approx(1.0, abs=1e-6) and lam == pytest.approx(1.0, abs=1e-6)
    assert contraction_condition(-1.0, 0.5).factor == pytest.approx(0.5, abs=1e-6)
    assert contraction_condition(np.array([[-1.0, 5.0], [0.0, -2.0]]), 0.0).ok
    assert not contraction_condition(np.array([[0.0, 1.0], [0.0, -1.0]]), 0.1).ok
    assert not contraction_condition(-1.0, 0.8).ok


def test_non_normal_matrix_constant():
    C = np.array([[-1.0, 4.0], [0.0, -1.0]])
    check = contraction_condition(C, 0.1)
    assert check.M > 1.0
    ts = np.linspace(0, 10, 201)
    from scipy.linalg import expm
    assert all(np.linalg.norm(expm(t * C), 2) <= check.M * np.exp(-check.lam * t) * (1 + 1e-9)
               for t in ts)


def ou_path(seed, window, N=16, R=8):
    system = System(vf=from_registry("ou_additive", c=-1.0, s=1.0), refinement=R)
    return system.rough_path(seed, N, 0.0, window)


def test_zero_noise_gives_zero_trajectory():
    rp = ou_path(0, 40.0)
    vf = from_registry("linear")
    Y = find_stationary(-1.0, vf, rp)
    assert Y.iterations == 1 and not np.any(Y.values)


def test_stationary_trajectory_relations():
    rp = ou_path(1, 60.0)
    vf = from_registry("ou_additive", c=0.0, s=1.0, s_x=0.2, s_y=0.2)
    vf = type(vf)(**{**vf.__dict__, "drift_x": None})
    Y = find_stationary(-1.0, vf, rp, tol=1e-12)
    assert Y.converged and Y.residuals[-1] <= 1e-12
    K = Y.K
    i0 = Y.valid_start
    assert np.array_equal(Y.derivative(i0, i0 + K), vf.sigma(Y.node_values(i0, i0 + K),
                                                                Y.node_values(i0 - K, i0)))
    assert all(q <= Y.factor + 0.05 for q in Y.ratios)
    start = -(-i0 // K) * K
    assert stationarity_defect(Y, start) <= Y.tol + rp.h
    assert Y.truncation_bound < 1e-7


def test_contraction_violation_refused():
    rp = ou_path(0, 40.0)
    vf = from_registry("ou_additive", c=0.0, s=1.0, s_x=1.0)
    vf = type(vf)(**{**vf.__dict__, "drift_x": None})
    with pytest.raises(ContractionError) as info:
        find_stationary(-1.0, vf, rp)
    assert info.value.factor == pytest.approx(2.0, abs=1e-6)


def test_stationary_needs_drift_free_field():
    rp = ou_path(0, 40.0)
    with pytest.raises(ConfigError):
        find_stationary(-1.0, from_registry("ou_additive"), rp)


@pytest.mark.parametrize("name,params,expected", [("quadratic", {}, True),
                                                  ("linear", {"s_x": 1.0}, False),
                                                  ("sine_product", {}, True),
                                                  ("ou_additive", {}, False)])
def test_stationary_zero_check(name, params, expected):
    assert stationary_zero_check(from_registry(name, **params)) is expected


QUADRATIC = System(vf=from_registry("quadratic", q_x=1.0, b_y=-0.3), refinement=8)


def zero_start(system, rp, t):
    return constant_segment(rp, t, np.zeros(system.vf.w))


def test_stable_probe_zero_perturbation():
    rp = QUADRATIC.rough_path(0, 16, 0.0, 10.0)
    rep = stable_rate_probe(zero_start(QUADRATIC, rp, -1.0), rp, QUADRATIC.vf, 0.3, None, 0.0, 10)
    assert rep.rate_fit is None and not np.any(rep.distances) and rep.sup_exp_nv == 0.0


def test_stable_probe_two_epsilons_agree():
    rp = QUADRATIC.rough_path(3, 32, 0.0, 30.0)
    Y = zero_start(QUADRATIC, rp, -1.0)
    a = stable_rate_probe(Y, rp, QUADRATIC.vf, 0.3, None, 1e-3, 30)
    b = stable_rate_probe(Y, rp, QUADRATIC.vf, 0.3, None, 1e-4, 30)
    assert abs(a.rate_fit - b.rate_fit) < 0.05
    assert a.rate_fit <= characteristic_root(-0.3) + 0.1
    assert set(a.to_dict()) >= {"rate_fit", "sup_exp_nv", "upsilon", "epsilon"}


def test_unstable_probe_zero_perturbation():
    n = 5
    rp = DELAY_UNSTABLE.rough_path(0, 16, -2.0 * n, 0.0)
    Y = zero_start(DELAY_UNSTABLE, rp, -(2 * n + 1.0))
    rep = unstable_rate_probe(Y, rp, DELAY_UNSTABLE.vf, 0.1, n, delta=0.0)
    assert not np.any(rep.distances)


def test_orthogonal_perturbation_of_stable_system_stays_small():
    n = 10
    rp = DELAY_STABLE.rough_path(0, 16, -2.0 * n, 0.0)
    Y = zero_start(DELAY_STABLE, rp, -(2 * n + 1.0))
    rep = unstable_rate_probe(Y, rp, DELAY_STABLE.vf, 0.1, n, mode="orthogonal")
    assert rep.distances.max() <= 10 * rep.distances[0]
    with pytest.raises(ConfigError):
        unstable_rate_probe(Y, rp, DELAY_STABLE.vf, 0.1, n, mode="sideways")
