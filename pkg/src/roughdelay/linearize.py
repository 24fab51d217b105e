"""Derivative of the segment map along a base trajectory.

The derivative ``Z`` of the solution in direction ``xi~`` solves a delayed
equation of the same shape, driven by ``Z' = s_x Z + s_y xi~``. Differentiating
the one-step scheme of :mod:`roughdelay.solve` gives

    Z_{j+1} = Z_j + Z'_j X_j + eta1_j : XX_j + eta2_j : XX(-r)_j,
    eta1 = s_x Z' + s_xx(Z) s + s_xy(xi~) s,
    eta2 = s_xy(Z) p' + s_yy(xi~) p' + s_y xi~',

which is affine in ``Z_j`` and is iterated by the compiled affine kernel.
Everything is vectorised over nodes and over a batch of directions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .controlled import DelayedControlledSegment, rebase
from .errors import GridMismatchError
from .solve import effective_system


@dataclass(frozen=True)
class SegmentBasis:
    """Flat coordinates (values, then coefficients) of one delay block.

    Coordinates are raw node data, so encode/decode is exact. The inner
    product weights every node by ``h``.
    """

    n_nodes: int
    w: int
    D: int
    h: float

    @property
    def size(self):
        return self.n_nodes * self.w * (1 + self.D)

    @property
    def n_value_coords(self):
        return self.n_nodes * self.w

    @classmethod
    def for_segment(cls, seg):
        return cls(n_nodes=seg.n + 1, w=seg.values.shape[1], D=seg.rp.dim, h=seg.rp.h)

    def encode_arrays(self, values, coeffs):
        """``values (..., n, w)`` and ``coeffs (..., n, w, D)`` to ``(..., size)``."""
        lead = values.shape[:-2]
        return np.concatenate([values.reshape(lead + (-1,)),
                               coeffs.reshape(lead + (-1,))], axis=-1)

    def decode_arrays(self, vec):
        vec = np.asarray(vec, dtype=float)
        lead = vec.shape[:-1]
        if vec.shape[-1] != self.size:
            raise GridMismatchError(f"expected {self.size} coordinates, got {vec.shape[-1]}")
        nv = self.n_value_coords
        values = vec[..., :nv].reshape(lead + (self.n_nodes, self.w))
        coeffs = vec[..., nv:].reshape(lead + (self.n_nodes, self.w, self.D))
        return values, coeffs

    def encode(self, seg):
        if seg.zeta0.shape[-1] != self.D or seg.n + 1 != self.n_nodes:
            raise GridMismatchError("segment does not match the basis layout")
        return self.encode_arrays(seg.values, seg.zeta0)

    def decode(self, vec, rp, start):
        values, coeffs = self.decode_arrays(vec)
        return DelayedControlledSegment(rp=rp, start=start, values=values, zeta0=coeffs)

    def inner(self, u, v):
        return self.h * float(np.dot(u, v))

    def norm(self, u):
        return float(np.sqrt(self.inner(u, u)))


@dataclass
class _Linearization:
    """Node tensors of the derivative recursion on one block."""

    mats: np.ndarray   # (K, w, w)
    s: np.ndarray      # sigma at nodes (K+1, w, D)
    sx: np.ndarray
    sy: np.ndarray
    sxy: np.ndarray
    syy: np.ndarray
    pd: np.ndarray     # past Gubinelli coefficient (K+1, w, D)
    X: np.ndarray
    A: np.ndarray
    DA: np.ndarray


def _prepare(xi, y, rp, vf):
    rp_e, vf_e = effective_system(rp, vf)
    if xi.rp is not rp_e:
        xi = rebase(xi, rp_e)
    if y.rp is not rp_e:
        raise GridMismatchError("base solution is not based on the scheme's rough path")
    K = rp_e.delay_steps
    if y.start != xi.start + K or y.n != K or xi.n != K:
        raise GridMismatchError("base solution must follow its past segment")
    cached = y.__dict__.get("_lin_cache")
    if cached is not None and cached[0] is vf_e and cached[1] is xi:
        return rp_e, cached[2]
    Y, P = y.values, xi.values
    s = vf_e.sigma(Y, P)
    sx, sy = vf_e.sigma_x(Y, P), vf_e.sigma_y(Y, P)
    sxx, sxy, syy = vf_e.sigma_xx(Y, P), vf_e.sigma_xy(Y, P), vf_e.sigma_yy(Y, P)
    start = y.start
    X = rp_e.increments[K + start:2 * K + start]
    A = rp_e.area[start:start + K]
    DA = rp_e.delayed_area[start:start + K]
    pd = xi.zeta0
    w = Y.shape[1]
    n = slice(0, K)
    mats = (np.eye(w)[None]
            + np.einsum("najb,nj->nab", sx[n], X)
            + np.einsum("najcb,nci,nij->nab", sxx[n], s[n], A, optimize=True)
            + np.einsum("najc,ncib,nij->nab", sx[n], sx[n], A, optimize=True)
            + np.einsum("najbc,nci,nij->nab", sxy[n], pd[n], DA, optimize=True))
    lin = _Linearization(mats=mats, s=s, sx=sx, sy=sy, sxy=sxy, syy=syy, pd=pd,
                         X=X, A=A, DA=DA)
    y.__dict__["_lin_cache"] = (vf_e, xi, lin)
    return rp_e, lin


def push_directions(xi, y, dir_values, dir_coeffs, rp, vf):
    """Derivative along a batch of past directions.

    ``dir_values (m, K+1, w)`` and ``dir_coeffs (m, K+1, w, D)`` describe the
    directions on ``xi``'s block; returns ``Z (m, K+1, w)`` and
    ``Z' (m, K+1, w, D)`` on ``y``'s block.
    """
    rp_e, L = _prepare(xi, y, rp, vf)
    E = np.asarray(dir_values, dtype=float)
    Ed = np.asarray(dir_coeffs, dtype=float)
    K = rp_e.delay_steps
    n = slice(0, K)
    G = np.einsum("naje,mne->mnaj", L.sy, E)  # s_y xi~ at every node
    shifts = (np.einsum("mnaj,nj->mna", G[:, n], L.X)
              + np.einsum("najce,mne,nci,nij->mna", L.sxy[n], E[:, n], L.s[n], L.A,
                          optimize=True)
              + np.einsum("najc,mnci,nij->mna", L.sx[n], G[:, n], L.A, optimize=True)
              + np.einsum("najce,mne,nci,nij->mna", L.syy[n], E[:, n], L.pd[n], L.DA,
                          optimize=True)
              + np.einsum("najc,mnci,nij->mna", L.sy[n], Ed[:, n], L.DA, optimize=True))
    z0 = E[:, K].T  # (w, m)
    Z = kernels.affine_recursion(L.mats, np.moveaxis(shifts, 0, -1), z0)
    Z = np.moveaxis(Z, -1, 0)  # (m, K+1, w)
    Zd = np.einsum("najb,mnb->mnaj", L.sx, Z) + G
    return Z, Zd


def derivative_segment(xi, y, direction, rp, vf):
    """Derivative of ``xi -> y`` at ``xi`` in the direction of a past segment."""
    rp_e, _ = effective_system(rp, vf)
    if direction.rp is not rp_e:
        direction = rebase(direction, rp_e)
    if not direction.is_plain:
        raise GridMismatchError("direction must be a plain controlled segment")
    Z, Zd = push_directions(xi, y, direction.values[None], direction.zeta0[None], rp, vf)
    return DelayedControlledSegment(rp=rp_e, start=y.start, values=Z[0], zeta0=Zd[0])


def push_coordinates(xi, y, vecs, rp, vf):
    """Derivative applied to basis coordinates ``vecs (m, size)``; returns ``(m, size)``."""
    basis = SegmentBasis.for_segment(y)
    E, Ed = basis.decode_arrays(np.atleast_2d(vecs))
    Z, Zd = push_directions(xi, y, E, Ed, rp, vf)
    return basis.encode_arrays(Z, Zd)


def cocycle_matrix(trajectory, rp, vf, k):
    """Matrix of the derivative from segment ``k`` to segment ``k+1`` in basis coordinates."""
    xi, y = trajectory[k], trajectory[k + 1]
    size = SegmentBasis.for_segment(y).size
    return push_coordinates(xi, y, np.eye(size), rp, vf).T


@dataclass
class GrowthReport:
    birkhoff: np.ndarray   # running (1/n) sum log+ |psi_k|
    proxy: np.ndarray      # (1/n) * proxy value at step n
    cauchy_tail: float
    proxy_tail: float
    converged: bool
    proxy_average: np.ndarray   # running (1/n) sum of proxy values
    proxy_average_tail: float   # Cauchy tail of proxy_average relative to its last value


def _log_plus(x):
    return max(0.0, float(np.log(x))) if x > 0 else 0.0


def growth_proxy(A, y_norm):
    """Polynomial stand-in ``(1 + A)^3 (1 + |Y|)^2`` for the integrability bound."""
    return (1.0 + A) ** 3 * (1.0 + y_norm) ** 2


def growth_diagnostics(matrices, norms=None, tol=0.05):
    """Birkhoff averages of ``log+ |psi|`` and the ``(1/n)``-scaled growth proxy.

    ``norms`` is an optional sequence of ``(|Y|, A)`` pairs per segment (see
    ``solution_norm_diagnostic``); without it the proxy is ``log+ |psi|`` itself.
    Both sequences should settle: the first to a constant, the second to 0.
    The running mean of the proxy itself is reported too; it settles exactly
    when the proxy is integrable along the orbit.
    """
    logs = np.array([_log_plus(np.linalg.norm(m, 2)) for m in matrices])
    n = np.arange(1, len(logs) + 1)
    birkhoff = np.cumsum(logs) / n
    if norms is None:
        raw = logs
    else:
        raw = np.array([growth_proxy(a, y) for y, a in norms])[:len(logs)]
    proxy = raw / n[:len(raw)]
    average = np.cumsum(raw) / n[:len(raw)]
    half = len(birkhoff) // 2
    tail = float(np.abs(birkhoff[half:] - birkhoff[-1]).max()) if len(birkhoff) else 0.0
    ptail = float(np.abs(proxy[half:]).max()) if len(proxy) else 0.0
    atail = (float(np.abs(average[half:] - average[-1]).max() / abs(average[-1]))
             if len(average) and average[-1] else 0.0)
    return GrowthReport(birkhoff=birkhoff, proxy=proxy, cauchy_tail=tail, proxy_tail=ptail,
                        converged=bool(tail < tol), proxy_average=average,
                        proxy_average_tail=atail)
