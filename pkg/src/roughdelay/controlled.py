"""Delayed controlled paths on one grid block and composition with vector fields.

A segment stores node values ``m`` and Gubinelli coefficients ``zeta0``,
``zeta1`` so that

    m_{s,t} = zeta0_s X_{s,t} + zeta1_s X_{s-r,t-r} + m#_{s,t}.

The remainder ``m#`` is always derived, never stored. Value arrays have shape
``(n+1, *vshape)``, coefficient arrays ``(n+1, *vshape, D)`` with ``D`` the
dimension of the base rough path. A plain controlled path has ``zeta1 = 0``.

Norms are suprema over grid pairs and therefore lower bounds of the Hoelder
norms they stand for. On a finite grid the two-exponent spaces collapse (all
norms are equivalent), so exponent choices only change the reported numbers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, WrongKindError
from .roughpath import augment_time


@dataclass(frozen=True, eq=False)
class DelayedControlledSegment:
    rp: object
    start: int
    values: np.ndarray
    zeta0: np.ndarray
    zeta1: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        zeta0 = np.asarray(self.zeta0, dtype=float)
        if zeta0.shape != values.shape + (self.rp.dim,):
            raise GridMismatchError(
                f"coefficient shape {zeta0.shape} does not match values "
                f"{values.shape} and noise dimension {self.rp.dim}")
        zeta1 = np.zeros_like(zeta0) if self.zeta1 is None else np.asarray(self.zeta1, float)
        if zeta1.shape != zeta0.shape:
            raise GridMismatchError("zeta0 and zeta1 shapes differ")
        for name, arr in (("values", values), ("zeta0", zeta0), ("zeta1", zeta1)):
            object.__setattr__(self, name, arr)
        lo = -self.rp.delay_steps
        if self.start < lo or self.stop > self.rp.n_intervals:
            raise GridMismatchError("segment does not lie on the rough path grid")

    @property
    def n(self):
        return self.values.shape[0] - 1

    @property
    def stop(self):
        return self.start + self.n

    @property
    def times(self):
        return self.rp.t0 + self.rp.h * np.arange(self.start, self.stop + 1)

    @property
    def is_plain(self):
        return not np.any(self.zeta1)

    @property
    def derivative(self):
        """Gubinelli derivative of a plain controlled path."""
        if not self.is_plain:
            raise WrongKindError("delayed controlled path has two coefficients")
        return self.zeta0

    def remainder(self):
        """Pairwise ``m#_{s,t}`` over all node pairs, shape ``(n+1, n+1, *vshape)``."""
        rp, i, j, K = self.rp, self.start, self.stop, self.rp.delay_steps
        dm = self.values[None, :] - self.values[:, None]
        if np.any(self.zeta0):
            x = rp.node_values(i, j)
            dx = x[None, :] - x[:, None]
            dm = dm - np.einsum("s...i,sti->st...", self.zeta0, dx)
        if not self.is_plain:
            if i - K < -K:
                raise GridMismatchError("no delayed increments before the history block")
            xd = rp.node_values(i - K, j - K)
            dxd = xd[None, :] - xd[:, None]
            dm = dm - np.einsum("s...i,sti->st...", self.zeta1, dxd)
        return dm


def _size(arr, lead):
    return np.sqrt((arr.reshape(arr.shape[:lead] + (-1,)) ** 2).sum(axis=-1))


def hoelder_path(arr, h, exponent):
    """Grid sup of ``|a_t - a_s| / |t-s|^exponent`` for node arrays ``(n+1, ...)``."""
    n = arr.shape[0]
    if n < 2:
        return 0.0
    return hoelder_pairs(arr[None, :] - arr[:, None], h, exponent)


def hoelder_pairs(pairs, h, exponent):
    """Grid sup of ``|p_{s,t}| / |t-s|^exponent`` for pairwise arrays ``(n+1, n+1, ...)``."""
    n = pairs.shape[0]
    if n < 2:
        return 0.0
    idx = np.arange(n)
    gap = (idx[None, :] - idx[:, None]) * h
    mask = gap > 0
    return float((_size(pairs, 2)[mask] / gap[mask] ** exponent).max())


def _abs(a):
    return float(np.sqrt((np.asarray(a) ** 2).sum()))


def remainder_estimate(seg, beta):
    """``||m#||_{2 beta}`` grid estimate."""
    return hoelder_pairs(seg.remainder(), seg.rp.h, 2 * beta)


def norm_controlled(seg, beta):
    """``|m_a| + |m'_a| + ||m'||_beta + ||m#||_{2 beta}`` for a plain controlled path."""
    if not seg.is_plain:
        raise WrongKindError("segment has a delayed coefficient; use norm_delayed")
    h = seg.rp.h
    return (_abs(seg.values[0]) + _abs(seg.zeta0[0]) + hoelder_path(seg.zeta0, h, beta)
            + remainder_estimate(seg, beta))


def norm_delayed(seg, beta):
    """``|m_a| + |zeta0_a| + |zeta1_a| + ||zeta0||_b + ||zeta1||_b + ||m#||_{2b}``."""
    h = seg.rp.h
    return (_abs(seg.values[0]) + _abs(seg.zeta0[0]) + _abs(seg.zeta1[0])
            + hoelder_path(seg.zeta0, h, beta) + hoelder_path(seg.zeta1, h, beta)
            + remainder_estimate(seg, beta))


def norm_delayed_general(seg, alpha, beta, theta):
    """Three-exponent norm: adds ``||m||_alpha`` and measures ``m#`` with ``theta``."""
    h = seg.rp.h
    return (_abs(seg.values[0]) + _abs(seg.zeta0[0]) + _abs(seg.zeta1[0])
            + hoelder_path(seg.values, h, alpha)
            + hoelder_path(seg.zeta0, h, beta) + hoelder_path(seg.zeta1, h, beta)
            + hoelder_pairs(seg.remainder(), h, theta))


def controlled_segment(rp, t_start, values, derivative=None):
    """Plain controlled segment starting at time ``t_start``.

    ``derivative`` defaults to zero. A derivative with one column fewer than
    the rough path (noise part only, on a time-augmented path) gets a zero
    time column.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    start = rp.index(t_start, allow_history=True)
    D = rp.dim
    if derivative is None:
        coeff = np.zeros(values.shape + (D,))
    else:
        coeff = np.asarray(derivative, dtype=float)
        if coeff.shape[-1] == D - 1 and rp.time_augmented:
            coeff = np.concatenate([np.zeros(coeff.shape[:-1] + (1,)), coeff], axis=-1)
    return DelayedControlledSegment(rp=rp, start=start, values=values, zeta0=coeff)


def constant_segment(rp, t_start, value, n=None):
    """Constant history ``xi == value`` (zero Gubinelli derivative) over one delay."""
    n = rp.delay_steps if n is None else n
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return controlled_segment(rp, t_start, np.broadcast_to(value, (n + 1,) + value.shape))


def rebase(seg, rp, shift=0):
    """Same node data read against another rough path on the same grid.

    ``shift = n`` moves the segment into the clock of ``theta_{n r} omega``
    (time ``t`` becomes ``t - n r``). Also moves a segment onto the time
    augmentation of its path; a segment already on an augmented path lands on
    the augmentation of ``rp``.
    """
    if seg.rp.time_augmented and not rp.time_augmented and rp.dim + 1 == seg.rp.dim:
        rp = augment_time(rp)
    if (rp.h != seg.rp.h or rp.delay_steps != seg.rp.delay_steps):
        raise GridMismatchError("rough paths have different grids")
    start = rp.index(seg.times[0] - shift * seg.rp.r, allow_history=True)
    z0, z1 = seg.zeta0, seg.zeta1
    if rp.dim == seg.rp.dim + 1 and rp.time_augmented and not seg.rp.time_augmented:
        pad = np.zeros(z0.shape[:-1] + (1,))
        z0 = np.concatenate([pad, z0], axis=-1)
        z1 = np.concatenate([pad, z1], axis=-1)
    elif rp.dim != seg.rp.dim:
        raise GridMismatchError("rough paths have different dimensions")
    return DelayedControlledSegment(rp=rp, start=start, values=seg.values, zeta0=z0, zeta1=z1)


def check_adjacent(y, past):
    if y.rp is not past.rp:
        raise GridMismatchError("segments are based on different rough paths")
    if past.n != y.n or past.start != y.start - y.rp.delay_steps:
        raise GridMismatchError("past segment must sit exactly one delay before")
    if not (y.is_plain and past.is_plain):
        raise WrongKindError("composition expects plain controlled segments")


def compose(y, past, G, G_x, G_y):
    """``s -> G(y_s, past_s)`` as a delayed controlled segment on ``y``'s block.

    Coefficients: ``zeta0 = G_x . y'`` and ``zeta1 = G_y . past'``.
    """
    check_adjacent(y, past)
    m = G(y.values, past.values)
    zeta0 = np.einsum("n...b,nbi->n...i", G_x(y.values, past.values), y.zeta0)
    zeta1 = np.einsum("n...b,nbi->n...i", G_y(y.values, past.values), past.zeta0)
    return DelayedControlledSegment(rp=y.rp, start=y.start, values=m, zeta0=zeta0,
                                    zeta1=zeta1)


def compose_sigma(y, past, vf):
    """Integrand ``sigma(y_s, past_s)`` with its two Gubinelli coefficients.

    On a time-augmented base the drift enters as the time column.
    """
    if y.rp.time_augmented and vf.d == y.rp.dim - 1:
        vf = vf.augmented()
        if vf.d != y.rp.dim:  # drift-free field on an augmented base
            return compose(y, past, _pad_time(vf.sigma, 1), _pad_time(vf.sigma_x, 2),
                           _pad_time(vf.sigma_y, 2))
    return compose(y, past, vf.sigma, vf.sigma_x, vf.sigma_y)


def _pad_time(fn, tail):
    def padded(x, y):
        v = fn(x, y)
        axis = v.ndim - tail
        shape = list(v.shape)
        shape[axis] = 1
        return np.concatenate([np.zeros(shape), v], axis=axis)
    return padded
