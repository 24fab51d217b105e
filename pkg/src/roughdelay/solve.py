"""Segment-wise solver for ``dy = (B(y, y(t-r)) + f) dt + sigma(y, y(t-r)) dX``.

Each call advances one delay length with a one-step level-2 scheme

    y_{j+1} = y_j + s X_j + (s_x s) : XX_j + (s_y p') : XX(-r)_j,

with ``s = sigma(y_j, p_j)`` evaluated against the past segment ``p``. When the
field has a drift the scheme runs on the time-augmented rough path, where
column 0 of the coefficient carries ``B + f``.
"""
from __future__ import annotations

import numpy as np

from .controlled import DelayedControlledSegment, norm_controlled, rebase
from .errors import DivergenceError, GridMismatchError
from .roughpath import augment_time, hoelder_norm

BLOWUP = 1e12


def effective_system(rp, vf):
    """Rough path and coefficient field the scheme actually runs on."""
    if rp.time_augmented:
        if vf.d == rp.dim:
            return rp, vf
        if vf.d + 1 == rp.dim:
            return rp, vf.augmented(force=True)
        raise GridMismatchError("field and rough path dimensions differ")
    if vf.d != rp.dim:
        raise GridMismatchError(f"field expects noise dimension {vf.d}, path has {rp.dim}")
    if vf.has_drift:
        return augment_time(rp), vf.augmented()
    return rp, vf


def _on(seg, rp):
    if seg.rp is rp:
        return seg
    return rebase(seg, rp)


def solve_segment(xi, rp, vf):
    """Solution on the delay block that follows the past segment ``xi``.

    Returns a plain controlled segment whose Gubinelli derivative at node
    ``j`` is ``sigma(y_j, xi_j)`` (with the drift column on augmented paths).
    """
    rp_e, vf_e = effective_system(rp, vf)
    xi = _on(xi, rp_e)
    K = rp_e.delay_steps
    if xi.n != K:
        raise GridMismatchError(f"past segment has {xi.n} steps, delay has {K}")
    if not xi.is_plain:
        raise GridMismatchError("past segment must be a plain controlled path")
    start = xi.start + K
    if start < 0 or start + K > rp_e.n_intervals:
        raise GridMismatchError("solution block leaves the rough path grid")
    past, past_d = xi.values, xi.zeta0
    X = rp_e.increments[K + start:2 * K + start]
    A = rp_e.area[start:start + K]
    DA = rp_e.delayed_area[start:start + K]
    w = xi.values.shape[1]
    y = np.empty((K + 1, w))
    coeff = np.empty((K + 1, w, rp_e.dim))
    y[0] = past[K]
    for j in range(K):
        yj, pj = y[j], past[j]
        s = vf_e.sigma(yj, pj)
        coeff[j] = s
        step = s @ X[j]
        step += np.einsum("ajb,bi,ij->a", vf_e.sigma_x(yj, pj), s, A[j])
        step += np.einsum("ajb,bi,ij->a", vf_e.sigma_y(yj, pj), past_d[j], DA[j])
        nxt = yj + step
        if not np.all(np.isfinite(nxt)) or np.abs(nxt).max() > BLOWUP:
            node = start + j + 1
            raise DivergenceError(
                f"solution left |y| <= {BLOWUP:g} at node {node} "
                f"(t = {rp_e.t0 + node * rp_e.h:g})", node=node)
        y[j + 1] = nxt
    coeff[K] = vf_e.sigma(y[K], past[K])
    return DelayedControlledSegment(rp=rp_e, start=start, values=y, zeta0=coeff)


def semiflow(xi, rp, vf, n):
    """``[xi, phi(1) xi, ..., phi(n) xi]``; for ``n = 0`` only ``xi``."""
    out = [xi]
    for _ in range(n):
        out.append(solve_segment(out[-1], rp, vf))
    return out


def trajectory_values(segments):
    """Node times and values of consecutive segments, joins counted once."""
    times = [segments[0].times]
    vals = [segments[0].values]
    for seg in segments[1:]:
        times.append(seg.times[1:])
        vals.append(seg.values[1:])
    return np.concatenate(times), np.concatenate(vals)


def solution_norm_diagnostic(segments, rp, beta):
    """Per segment ``(||y||, A)`` with ``A = 1 + ||X||`` over the segment.

    History segments before the main grid are skipped.
    """
    rows = []
    for seg in segments:
        if seg.start < 0:
            continue
        a, b = seg.times[0], seg.times[-1]
        rows.append((norm_controlled(seg, beta), 1.0 + hoelder_norm(rp, a, b)))
    return rows


def contraction_constants(A, xi_norm, beta, gamma, r, C1=1.0):
    """Step-size constants of the local fixed-point argument for given ``C1``.

    ``C = C1 A^3 (1 + M^2)``, ``tau1 = (8 C^2)^(-1/(gamma - beta))``,
    ``M1 = (4 + 2 sqrt 2) C`` and ``tau2`` solves
    ``C1 A^3 (1 + 2 M1 + M)^2 tau2^(gamma - beta) = 1/2``. Diagnostic only:
    ``C1`` is not known explicitly.
    """
    M = xi_norm
    C = C1 * A ** 3 * (1 + M ** 2)
    e = gamma - beta
    tau1 = (8 * C ** 2) ** (-1 / e)
    M1 = (4 + 2 * np.sqrt(2)) * C
    tau2 = (2 * C1 * A ** 3 * (1 + 2 * M1 + M) ** 2) ** (-1 / e)
    return {"C": C, "tau1": tau1, "M1": M1, "tau2": tau2, "tau3": min(tau1, tau2, r)}
