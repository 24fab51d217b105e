"""Seeded Brownian sample paths on a uniform fine grid.

A :class:`SamplePath` stores its fine-grid increments; node values are derived
from them. Shifting a path (the Wiener shift) only slices the increment array,
so repeated shifts compose exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, OutOfWindowError

GRID_RTOL = 1e-12


def steps_between(length, step, what="window"):
    """Return ``length / step`` as an int, or raise if it is not integral."""
    if step <= 0:
        raise GridMismatchError(f"step must be positive, got {step}")
    ratio = length / step
    n = int(round(ratio))
    if abs(ratio - n) > GRID_RTOL * max(1.0, abs(ratio)):
        raise GridMismatchError(f"{what} {length!r} is not a multiple of step {step!r}")
    return n


def make_rng(seed, stream=0):
    """Counter-based generator; the stream depends only on ``(seed, stream)``."""
    mask = 2**64 - 1
    return np.random.Generator(np.random.Philox(key=[int(seed) & mask, int(stream) & mask]))


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Brownian sample on ``[t_start, t_end]`` with fine step ``h_f``.

    ``increments[k]`` is the increment over ``[t_start + k h_f, t_start + (k+1) h_f]``.
    ``origin`` is the node index at which ``values`` vanish.
    """

    t_start: float
    h_f: float
    increments: np.ndarray
    seed: int | None = None
    origin: int = 0
    _values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        incr = np.asarray(self.increments, dtype=float)
        if incr.ndim != 2:
            raise ValueError("increments must have shape (n_steps, dim)")
        incr.setflags(write=False)
        object.__setattr__(self, "increments", incr)

    @property
    def dim(self):
        return self.increments.shape[1]

    @property
    def n_steps(self):
        return self.increments.shape[0]

    @property
    def n_nodes(self):
        return self.n_steps + 1

    @property
    def t_end(self):
        return self.t_start + self.n_steps * self.h_f

    @property
    def times(self):
        return self.t_start + self.h_f * np.arange(self.n_nodes)

    @property
    def values(self):
        if self._values is None:
            o = self.origin
            vals = np.zeros((self.n_nodes, self.dim))
            vals[o + 1:] = np.cumsum(self.increments[o:], axis=0)
            if o > 0:
                vals[:o] = -np.cumsum(self.increments[:o][::-1], axis=0)[::-1]
            vals.setflags(write=False)
            object.__setattr__(self, "_values", vals)
        return self._values

    def node(self, t):
        """Index of the fine node at time ``t``."""
        k = steps_between(t - self.t_start, self.h_f, what="time offset")
        if not 0 <= k <= self.n_steps:
            raise OutOfWindowError(
                f"time {t} outside sample window [{self.t_start}, {self.t_end}]")
        return k

    def window(self, a, b):
        """Fine increments over ``[a, b]``."""
        return self.increments[self.node(a):self.node(b)]


BLOCK_STEPS = 1024
_NOISE_STREAM = 1 << 62


def _lattice_block(seed, b, dim):
    return make_rng(seed, _NOISE_STREAM + b).standard_normal((BLOCK_STEPS, dim))


def sample_brownian(dim, t_start, t_end, h_f, seed):
    """Standard Brownian motion in ``R^dim`` with ``values[0] = 0``.

    Increments live on the global lattice ``k h_f`` and are drawn in fixed
    blocks keyed by ``(seed, block index)``, so two windows with the same
    ``seed``, ``dim`` and ``h_f`` agree wherever they overlap.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    if not t_start < t_end:
        raise ValueError("need t_start < t_end")
    k0 = steps_between(t_start, h_f, what="window start")
    n = steps_between(t_end - t_start, h_f)
    b0, b1 = k0 // BLOCK_STEPS, (k0 + n - 1) // BLOCK_STEPS
    draws = np.concatenate([_lattice_block(seed, b, dim) for b in range(b0, b1 + 1)])
    off = k0 - b0 * BLOCK_STEPS
    incr = draws[off:off + n] * np.sqrt(h_f)
    return SamplePath(t_start=float(t_start), h_f=float(h_f), increments=incr,
                      seed=seed, origin=0)


def wiener_shift(path, n_segments, r):
    """Realise ``theta_{n r}`` on sampled data.

    The result lives on the window shifted by ``-n r``; its value at time
    ``t`` is ``path(t + n r) - path(n r)``.
    """
    shift = n_segments * r
    if n_segments and not (path.t_start + r <= shift <= path.t_end - r):
        raise OutOfWindowError(
            f"shift by {shift} leaves less than one segment of slack in "
            f"[{path.t_start}, {path.t_end}]")
    ref = path.node(shift)
    return SamplePath(t_start=path.t_start - shift, h_f=path.h_f,
                      increments=path.increments, seed=path.seed, origin=ref)
