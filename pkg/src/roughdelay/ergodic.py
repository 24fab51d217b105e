"""Lyapunov spectra, unstable subspaces, stationary trajectories and manifold probes.

All estimators act on the discretised segment cocycle: states are delay blocks
in :class:`~roughdelay.linearize.SegmentBasis` coordinates and the derivative
is pushed with :func:`~roughdelay.linearize.push_coordinates`. Exponents are
reported per unit time (per-segment growth divided by ``r``).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from . import kernels
from .controlled import DelayedControlledSegment, constant_segment, rebase
from .errors import ConfigError, ContractionError, GridMismatchError
from .fields import VectorFieldBundle
from .linearize import SegmentBasis, push_coordinates
from .noise import make_rng, sample_brownian
from .roughpath import DEFAULT_REFINEMENT, ITO, _fine_blocks, lift, validate_exponents
from .solve import effective_system, semiflow, solve_segment

DEFAULT_FLOOR = 1e-14
_DIRECTION_STREAM = 2
_PROBE_STREAM = 4


@dataclass(frozen=True)
class System:
    """Equation plus discretisation settings shared by the estimators.

    ``x0`` is the constant initial history used for base trajectories.
    """

    vf: VectorFieldBundle
    r: float = 1.0
    refinement: int = DEFAULT_REFINEMENT
    convention: str = ITO
    alpha: float = 0.34
    beta: float = 0.49
    gamma: float = 0.495
    x0: float = 0.0

    def check(self):
        if not validate_exponents(self.alpha, self.beta, self.gamma):
            raise ConfigError(
                f"exponents alpha={self.alpha}, beta={self.beta}, gamma={self.gamma} "
                "violate the admissibility condition")

    def rough_path(self, seed, N, t_start, t_end):
        """Lift on the main grid ``[t_start, t_end]`` with ``N`` steps per delay."""
        h = self.r / N
        path = sample_brownian(self.vf.d, t_start - self.r, t_end, h / self.refinement, seed)
        return lift(path, h, self.r, self.convention, t0=t_start, t_end=t_end,
                    gamma=self.gamma)

    def initial_segment(self, rp, t_start):
        """Constant history on ``[t_start - r, t_start]``."""
        value = np.broadcast_to(np.asarray(self.x0, dtype=float), (self.vf.w,))
        return constant_segment(rp, t_start - self.r, value)

    def basis_size(self, N):
        D = self.vf.d + (1 if self.vf.has_drift else 0)
        return (N + 1) * self.vf.w * (1 + D)


def qr_signed(V):
    """Reduced QR with a nonnegative diagonal of ``R``."""
    Q, R = np.linalg.qr(V)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s, R * s[:, None]


def principal_angle(U, V):
    """Largest principal angle between the column spans of orthonormal ``U`` and ``V``."""
    if U.shape[1] == 0 or V.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(U.T @ V, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def cauchy_tail(seq):
    """``max |a_n - a_last|`` over the last half of a running sequence."""
    seq = np.asarray(seq, dtype=float)
    if len(seq) == 0:
        return np.zeros(seq.shape[1:]) if seq.ndim > 1 else 0.0
    half = len(seq) // 2
    return np.abs(seq[half:] - seq[-1]).max(axis=0)


@dataclass
class LyapunovReport:
    exponents: np.ndarray
    running: np.ndarray          # (n_measured, k) running averages
    k: int
    n_steps: int
    seed: int
    N: int
    floor: float                 # exponent value standing in for minus infinity
    converged: list
    at_floor: list
    transient: int = 0
    reorth_every: int = 1

    def to_dict(self):
        return {"exponents": [float(x) for x in self.exponents],
                "running": [[float(x) for x in row] for row in self.running],
                "seed": self.seed, "N": self.N, "n_steps": self.n_steps,
                "floor": self.floor, "converged": [bool(c) for c in self.converged]}


def lyapunov_spectrum(system, seed, k, n_steps, N, transient=None, reorth_every=1,
                      initial=None, tol=0.02, floor=DEFAULT_FLOOR):
    """Top ``k`` exponents by pushing ``k`` directions and re-orthonormalising.

    ``transient`` segments (default ``n_steps // 10``) are discarded before
    averaging. ``initial`` optionally fixes the starting directions
    ``(size, k)``; they are orthonormalised first.
    """
    system.check()
    if reorth_every < 1:
        raise ConfigError("reorth_every must be at least 1")
    r, vf = system.r, system.vf
    transient = n_steps // 10 if transient is None else transient
    total = transient + n_steps
    size = system.basis_size(N)
    if not 0 <= k <= size:
        raise ConfigError(f"k must lie in [0, {size}]")
    rp = system.rough_path(seed, N, 0.0, total * r)
    if initial is None:
        initial = make_rng(seed, _DIRECTION_STREAM).standard_normal((size, k))
    V, _ = qr_signed(np.asarray(initial, dtype=float).reshape(size, k))
    log_floor = np.log(floor)
    sums = np.zeros(k)
    running = []
    measured = pending = 0
    xi = system.initial_segment(rp, 0.0)
    for step in range(total):
        y = solve_segment(xi, rp, vf)
        if k:
            V = push_coordinates(xi, y, V.T, rp, vf).T
        xi = y
        if step < transient:
            V, _ = qr_signed(V)
            continue
        pending += 1
        if pending == reorth_every or step == total - 1:
            V, R = qr_signed(V)
            with np.errstate(divide="ignore"):
                logs = np.log(np.abs(np.diag(R)))
            sums += np.maximum(logs, pending * log_floor)
            measured += pending
            pending = 0
            running.append(sums / (measured * r))
    exps = sums / (max(measured, 1) * r)
    floor_rate = log_floor / r
    order = np.argsort(-exps, kind="stable")
    exps = exps[order]
    # summed floor logs drift by rounding; snap them back onto the floor
    exps = np.where(exps <= floor_rate * (1 - 1e-9), floor_rate, exps)
    running = np.array(running).reshape(-1, k)[:, order]
    tails = cauchy_tail(running) if len(running) else np.zeros(k)
    return LyapunovReport(
        exponents=exps, running=running, k=k, n_steps=n_steps, seed=seed, N=N,
        floor=floor_rate, converged=[bool(t < tol) for t in np.atleast_1d(tails)],
        at_floor=[bool(e <= floor_rate) for e in exps], transient=transient,
        reorth_every=reorth_every)


# -- unstable subspace --------------------------------------------------------

@dataclass
class UnstableBasis:
    basis: np.ndarray        # (size, k0) orthonormal coordinates at omega
    rates: np.ndarray        # growth rates seen during the push (per unit time)
    angle: float             # principal angle between depths n and 2n
    converged: bool
    n_pullback: int


def _push_along(traj, rp, vf, V):
    """Push orthonormal directions along a base trajectory; returns final basis and log|R|."""
    logs = []
    for xi, y in zip(traj[:-1], traj[1:]):
        V = push_coordinates(xi, y, V.T, rp, vf).T
        V, R = qr_signed(V)
        with np.errstate(divide="ignore"):
            logs.append(np.log(np.abs(np.diag(R))))
    return V, np.array(logs).reshape(-1, V.shape[1])


def _pullback_once(system, seed, n, k0, N):
    r = system.r
    rp = system.rough_path(seed, N, -n * r, 0.0)
    traj = semiflow(system.initial_segment(rp, -n * r), rp, system.vf, n)
    size = system.basis_size(N)
    V, _ = qr_signed(make_rng(seed, _DIRECTION_STREAM + 1).standard_normal((size, k0)))
    V, logs = _push_along(traj, rp, system.vf, V)
    half = logs[len(logs) // 2:]
    rates = np.maximum(half, np.log(DEFAULT_FLOOR)).mean(axis=0) / r
    return V, rates


def unstable_subspace_pullback(system, seed, n_pullback, k0, N, tol=0.05):
    """Estimate of the fast subspace at ``omega`` by pushing from ``theta_{-n r} omega``.

    ``converged`` requires the spans reached from depths ``n`` and ``2n`` to
    agree within ``tol`` radians and every observed growth rate to be positive.
    """
    size = system.basis_size(N)
    if k0 == 0:
        return UnstableBasis(basis=np.zeros((size, 0)), rates=np.zeros(0), angle=0.0,
                             converged=True, n_pullback=n_pullback)
    system.check()
    V1, _ = _pullback_once(system, seed, n_pullback, k0, N)
    V2, rates = _pullback_once(system, seed, 2 * n_pullback, k0, N)
    angle = principal_angle(V1, V2)
    return UnstableBasis(basis=V2, rates=rates, angle=angle,
                         converged=bool(angle < tol and np.all(rates > 0)),
                         n_pullback=n_pullback)


# -- stationary trajectories --------------------------------------------------

@dataclass(frozen=True)
class ContractionCheck:
    ok: bool
    M: float
    lam: float
    factor: float

    def __iter__(self):
        return iter((self.ok, self.M, self.lam))


def contraction_condition(C, L, margin=1e-9, n_grid=2001):
    """Check ``2 M L^2 / lam < 1`` with ``|exp(tC)| <= M exp(-lam t)``.

    ``lam = -max Re eig(C) - margin`` and ``M`` is the sup of
    ``|exp(tC)|_2 exp(lam t)`` over a grid on ``[0, 50 / lam]``.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    lam = -float(np.linalg.eigvals(C).real.max()) - margin
    if lam <= 0:
        return ContractionCheck(False, float("inf"), lam, float("inf"))
    ts = np.linspace(0.0, 50.0 / lam, n_grid)
    M = max(np.linalg.norm(expm(t * C), 2) * np.exp(lam * t) for t in ts)
    factor = 2 * M * L ** 2 / lam
    return ContractionCheck(bool(factor < 1), float(M), lam, float(factor))


@dataclass
class StationaryTrajectory:
    """Fixed point of the truncated convolution map on a long window.

    ``values`` holds nodes ``-K..N`` of the rough path grid (zero history).
    Nodes before ``valid_start`` are still affected by the finite window.
    """

    rp: object
    vf: VectorFieldBundle        # full equation, drift ``C y`` included
    C: np.ndarray
    values: np.ndarray
    T: float
    iterations: int
    residuals: list              # sup-norm change per iteration (valid window)
    mean_squares: list           # time-averaged squared change per iteration
    factor: float
    valid_start: int
    tol: float
    converged: bool
    truncation_bound: float = field(default=0.0)

    @property
    def K(self):
        return self.rp.delay_steps

    @property
    def ratios(self):
        """Successive ratios of the mean-square changes (above round-off)."""
        ms = [m for m in self.mean_squares if m > 1e-26]
        return [b / a for a, b in zip(ms[:-1], ms[1:])]

    def node_values(self, i, j):
        return self.values[self.K + i:self.K + j + 1]

    def derivative(self, i, j):
        """``Y' = sigma(Y_t, Y_{t-r})`` at nodes ``i..j`` (noise columns only)."""
        y = self.node_values(i, j)
        return self.vf.sigma(y, self.node_values(i - self.K, j - self.K))

    def segment(self, start):
        """Delay block starting at node ``start`` on the rough path the solver uses."""
        rp_e, vf_e = effective_system(self.rp, self.vf)
        K = self.K
        y = self.node_values(start, start + K)
        past = self.node_values(start - K, start)
        return DelayedControlledSegment(rp=rp_e, start=start, values=y,
                                        zeta0=vf_e.sigma(y, past))

    def valid_values(self):
        return self.node_values(self.valid_start, self.rp.n_intervals)


def find_stationary(C, vf, rp, T=None, tol=1e-10, max_iter=200):
    """Picard iteration for ``Y_t = int_{t-T}^t exp((t-u) C) sigma(Y_u, Y_{u-r}) dB_u``.

    The convolution is evaluated with exact matrix-exponential weights on the
    fine grid, ``sigma`` frozen at the left coarse node, plus the level-2
    correction ``(s_x Y') : XX + (s_y Y'(t-r)) : XX(-r)`` of each step. The integral starts
    at the window start; nodes at least ``T`` (default ``20 / lam``) into the
    window form the valid part.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    w = C.shape[0]
    if vf.w != w:
        raise ConfigError("C and the field have different state dimensions")
    if vf.has_drift:
        raise ConfigError("the linear drift enters through C; the field must be drift-free")
    if rp.time_augmented or rp.dim != vf.d:
        raise GridMismatchError("need the plain lift of the field's noise")
    L = 0.0 if vf.lipschitz is None and _is_constant(vf, w) else vf.lipschitz
    if L is None:
        raise ConfigError("the field needs a Lipschitz constant")
    check = contraction_condition(C, L)
    if not check.ok:
        raise ContractionError(
            f"2 M L^2 / lam = {check.factor:.4g} is not below 1", factor=check.factor)
    T = 20.0 / check.lam if T is None else T
    K, N, h = rp.delay_steps, rp.n_intervals, rp.h
    valid_start = int(np.ceil(T / h - 1e-9))
    if valid_start >= N:
        raise ConfigError(f"window of length {N * h:g} is shorter than the truncation {T:g}")
    blocks, _, _ = _fine_blocks(rp.source, h, rp.r, rp.t0, rp.t_end)
    dB = blocks[K:]
    R, h_f = dB.shape[1], rp.source.h_f
    weights = np.stack([expm((h - k * h_f) * C) for k in range(R)])
    F = np.einsum("kab,ikj->iabj", weights, dB)
    eh = expm(h * C)
    mats = np.broadcast_to(eh, (N, w, w))
    A, DA = rp.area, rp.delayed_area
    y = np.zeros((K + N + 1, w))
    residuals, mean_squares = [], []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        cur, past = y[K:K + N], y[:N]
        S = vf.sigma(cur, past)
        # Y' one delay back; zero while the delayed node lies before the window
        S_past = np.zeros_like(S)
        S_past[K:] = S[:N - K] if N > K else S_past[K:]
        level2 = (np.einsum("iajb,ibk,ikj->ia", vf.sigma_x(cur, past), S, A)
                  + np.einsum("iajb,ibk,ikj->ia", vf.sigma_y(cur, past), S_past, DA))
        shifts = np.einsum("iabj,ibj->ia", F, S) + level2 @ eh.T
        new = y.copy()
        new[K:] = kernels.affine_recursion(mats, shifts, np.zeros(w))
        diff = (new - y)[K + valid_start:]
        y = new
        residuals.append(float(np.abs(diff).max()))
        mean_squares.append(float((diff ** 2).sum(axis=-1).mean()))
        if residuals[-1] <= tol:
            converged = True
            break
    sig_sup = float(np.abs(vf.sigma(y[K:], y[:N + 1])).max())
    return StationaryTrajectory(
        rp=rp, vf=_with_drift(vf, C), C=C, values=y, T=T, iterations=it,
        residuals=residuals, mean_squares=mean_squares, factor=check.factor,
        valid_start=valid_start, tol=tol, converged=converged,
        truncation_bound=check.M * np.exp(-check.lam * T) * sig_sup)


def _is_constant(vf, w):
    probe = np.zeros(w)
    return not (np.any(vf.sigma_x(probe, probe)) or np.any(vf.sigma_y(probe, probe)))


def _with_drift(vf, C):
    return replace(vf, drift_x=C, name=vf.name + "+linear")


def stationarity_defect(Y, start):
    """Sup distance between one solver step from block ``start`` and the stored next block."""
    nxt = solve_segment(Y.segment(start), Y.rp, Y.vf)
    return float(np.abs(nxt.values - Y.node_values(start + Y.K, start + 2 * Y.K)).max())


def stationary_zero_check(vf, atol=1e-15):
    """True iff ``sigma``, ``sigma_x``, ``sigma_y`` (and any drift) vanish at ``(0, 0)``."""
    z = np.zeros(vf.w)
    parts = [vf.sigma(z, z), vf.sigma_x(z, z), vf.sigma_y(z, z)]
    if vf.f is not None:
        parts.append(vf.f(z, z))
    return bool(all(np.abs(np.asarray(p)).max(initial=0.0) <= atol for p in parts))


# -- manifold probes ------------------------------------------------------------

@dataclass
class ProbeReport:
    rate_fit: float | None
    sup_exp_nv: float
    upsilon: float
    epsilon: float
    distances: np.ndarray
    note: str = ""

    def to_dict(self):
        return {"rate_fit": self.rate_fit, "sup_exp_nv": self.sup_exp_nv,
                "upsilon": self.upsilon, "epsilon": self.epsilon,
                "distances": [float(x) for x in self.distances], "note": self.note}


def _fit_rate(idx, dist, per):
    idx, dist = np.asarray(idx, float), np.asarray(dist, float)
    ok = (dist > 0) & np.isfinite(dist)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(idx[ok], np.log(dist[ok]), 1)[0] / per)


def _perturb(seg, basis, vec):
    values, coeffs = basis.decode_arrays(vec)
    return DelayedControlledSegment(rp=seg.rp, start=seg.start, values=seg.values + values,
                                    zeta0=seg.zeta0 + coeffs)


def _distance(basis, a, b):
    return basis.norm(basis.encode(a) - basis.encode(b))


def project_out(directions, basis):
    """Remove the span of the orthonormal columns of ``basis`` from row vectors."""
    directions = np.atleast_2d(directions)
    return directions - (directions @ basis) @ basis.T


def stable_rate_probe(Y, rp, vf, upsilon, directions, epsilon, n):
    """Decay of ``|phi(m, omega, Y + eps u) - phi(m, omega, Y)|`` over ``m = 0..n``.

    ``Y`` is the reference segment at ``omega`` (on the solver's rough path),
    ``directions`` are coordinate rows; ``None`` picks one fixed random unit
    vector. The rate is fitted on the second half and reported per unit time;
    the worst direction is reported.
    """
    rp_e, vf_e = effective_system(rp, vf)
    ref = semiflow(Y, rp, vf, n)
    basis = SegmentBasis.for_segment(ref[-1])
    if ref[0].rp is not rp_e:
        ref[0] = rebase(ref[0], rp_e)
    if directions is None:
        directions = make_rng(0, _PROBE_STREAM).standard_normal((1, basis.size))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    worst_rate, worst_sup, worst_dist = None, 0.0, np.zeros(n + 1)
    for u in directions:
        u = u / basis.norm(u)
        orbit = semiflow(_perturb(ref[0], basis, epsilon * u), rp, vf, n)
        dist = np.array([_distance(basis, a, b) for a, b in zip(orbit, ref)])
        rate = _fit_rate(np.arange(n // 2, n + 1), dist[n // 2:], rp.r)
        sup = float((np.exp(upsilon * np.arange(n + 1)) * dist).max())
        if worst_rate is None or (rate is not None and rate > worst_rate):
            worst_rate, worst_dist = rate, dist
        worst_sup = max(worst_sup, sup)
    return ProbeReport(rate_fit=worst_rate, sup_exp_nv=worst_sup, upsilon=upsilon,
                       epsilon=epsilon, distances=worst_dist,
                       note="stable directions approximated by the given directions")


def unstable_rate_probe(Y, rp, vf, upsilon, n, delta=1e-6, k0=1, mode="unstable", seed=0):
    """Backward decay of a candidate unstable orbit reaching ``omega``.

    ``Y`` is the reference segment at depth ``2n`` (the history block of the
    rough path, whose main grid must cover ``2n`` delays). The fast direction
    at depth ``n`` is estimated by pushing ``k0`` random directions from depth
    ``2n``; the orbit starts at depth ``n`` from ``Y + delta u`` and is pushed
    to ``omega``. ``mode="orthogonal"`` perturbs orthogonally to the estimate.
    ``rate_fit`` is the slope of ``log`` distance against depth, per unit time.
    """
    rp_e, _ = effective_system(rp, vf)
    ref = semiflow(Y, rp, vf, 2 * n)
    if ref[0].rp is not rp_e:
        ref[0] = rebase(ref[0], rp_e)
    basis = SegmentBasis.for_segment(ref[-1])
    rng = make_rng(seed, _PROBE_STREAM + 1)
    V, _ = qr_signed(rng.standard_normal((basis.size, max(k0, 1))))
    V, _ = _push_along(ref[:n + 1], rp, vf, V)
    if mode == "unstable":
        u = V[:, 0]
    elif mode == "orthogonal":
        u = project_out(rng.standard_normal(basis.size), V)[0]
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    u = u / basis.norm(u)
    orbit = semiflow(_perturb(ref[n], basis, delta * u), rp, vf, n)
    dist = np.array([_distance(basis, a, b) for a, b in zip(orbit, ref[n:])])
    depth = np.arange(n, -1, -1)
    rate = _fit_rate(depth, dist, rp.r)
    sup = float((np.exp(upsilon * depth) * dist).max())
    return ProbeReport(rate_fit=rate, sup_exp_nv=sup, upsilon=upsilon, epsilon=delta,
                       distances=dist, note=f"direction mode: {mode}")
