"""Delayed rough paths ``(X, XX, XX(-r))`` on a uniform coarse grid.

Only adjacent-interval areas are stored. Areas between arbitrary grid nodes
are rebuilt from the two Chen relations

    XX_{s,t}     = XX_{s,u}     + XX_{u,t}     + X_{s,u}     (x) X_{u,t}
    XX_{s,t}(-r) = XX_{s,u}(-r) + XX_{u,t}(-r) + X_{s-r,u-r} (x) X_{u,t}

Area tensors are indexed ``[i, j] ~ int X^i dX^j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, GridMismatchError, OutOfWindowError
from .noise import SamplePath, steps_between

ITO = "ito"
STRATONOVICH = "stratonovich"
DEFAULT_REFINEMENT = 32


@dataclass(frozen=True, eq=False)
class DelayedRoughPath:
    """Coarse-grid delayed rough path.

    The main grid has nodes ``t0 + k h`` for ``k = 0..N``. ``increments`` covers
    the ``K + N`` intervals of ``[t0 - r, t0 + N h]`` (``r = K h``) so that
    delayed increments are available on the whole main grid; ``area`` and
    ``delayed_area`` cover the ``N`` main intervals.
    """

    h: float
    delay_steps: int
    t0: float
    increments: np.ndarray
    area: np.ndarray
    delayed_area: np.ndarray
    gamma: float = 0.45
    convention: str = ITO
    time_augmented: bool = False
    source: SamplePath | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for name in ("increments", "area", "delayed_area"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        K, N = self.delay_steps, self.area.shape[0]
        if self.increments.shape != (K + N, self.dim):
            raise GridMismatchError("increments must cover [t0 - r, t_end]")
        if self.delayed_area.shape != self.area.shape:
            raise GridMismatchError("area and delayed area shapes differ")
        if self.convention not in (ITO, STRATONOVICH):
            raise ConfigError(f"unknown convention {self.convention!r}")

    @property
    def dim(self):
        return self.increments.shape[1]

    @property
    def n_intervals(self):
        return self.area.shape[0]

    @property
    def r(self):
        return self.delay_steps * self.h

    @property
    def t_end(self):
        return self.t0 + self.n_intervals * self.h

    @property
    def times(self):
        return self.t0 + self.h * np.arange(self.n_intervals + 1)

    @property
    def _prefix(self):
        if "prefix" not in self._cache:
            p = np.zeros((self.increments.shape[0] + 1, self.dim))
            np.cumsum(self.increments, axis=0, out=p[1:])
            self._cache["prefix"] = p
        return self._cache["prefix"]

    def index(self, t, allow_history=False):
        """Main-grid node index of time ``t`` (negative for history nodes)."""
        k = steps_between(t - self.t0, self.h, what="time offset")
        lo = -self.delay_steps if allow_history else 0
        if not lo <= k <= self.n_intervals:
            raise OutOfWindowError(f"time {t} outside rough path grid")
        return k

    def increment(self, i, j):
        """``X_{t_i, t_j}`` for node indices ``-K <= i <= j <= N``."""
        K = self.delay_steps
        return self._prefix[K + j] - self._prefix[K + i]

    def node_values(self, i, j):
        """``X_{t_i, t_k}`` for ``k = i..j`` (path re-based at ``t_i``)."""
        K = self.delay_steps
        return self._prefix[K + i:K + j + 1] - self._prefix[K + i]

    def area_between(self, i, j):
        """``XX_{t_i, t_j}`` rebuilt by Chen, ``0 <= i <= j <= N``."""
        K = self.delay_steps
        run = self._prefix[K + i:K + j] - self._prefix[K + i]
        return self.area[i:j].sum(axis=0) + np.einsum(
            "ka,kb->ab", run, self.increments[K + i:K + j])

    def delayed_area_between(self, i, j):
        """``XX_{t_i, t_j}(-r)`` rebuilt by delayed Chen."""
        K = self.delay_steps
        run = self._prefix[i:j] - self._prefix[i]
        return self.delayed_area[i:j].sum(axis=0) + np.einsum(
            "ka,kb->ab", run, self.increments[K + i:K + j])

    def area_table(self, i, j):
        """Pairwise ``XX`` between all nodes of ``[t_i, t_j]``."""
        K = self.delay_steps
        incr = self.increments[K + i:K + j]
        return kernels.chen_table(incr, incr, self.area[i:j])

    def delayed_area_table(self, i, j):
        """Pairwise ``XX(-r)`` between all nodes of ``[t_i, t_j]``."""
        K = self.delay_steps
        return kernels.chen_table(self.increments[i:j], self.increments[K + i:K + j],
                                  self.delayed_area[i:j])

    def shifted(self, n_segments):
        """Rough path of ``theta_{n r} omega``: same data, clock moved by ``-n r``."""
        shift = n_segments * self.r
        src = self.source
        if src is not None:
            src = SamplePath(t_start=src.t_start - shift, h_f=src.h_f,
                             increments=src.increments, seed=src.seed, origin=src.origin)
        cache = {"prefix": self._prefix}
        if "augmented" in self._cache:
            cache["augmented"] = self._cache["augmented"].shifted(n_segments)
        return DelayedRoughPath(
            h=self.h, delay_steps=self.delay_steps, t0=self.t0 - shift,
            increments=self.increments, area=self.area, delayed_area=self.delayed_area,
            gamma=self.gamma, convention=self.convention,
            time_augmented=self.time_augmented, source=src, _cache=cache)

    def window(self, a, b):
        """Restriction to the main-grid window ``[a, b]`` (history kept)."""
        i, j = self.index(a), self.index(b)
        K = self.delay_steps
        src = self.source
        return DelayedRoughPath(
            h=self.h, delay_steps=K, t0=self.t0 + i * self.h,
            increments=self.increments[i:K + j], area=self.area[i:j],
            delayed_area=self.delayed_area[i:j], gamma=self.gamma,
            convention=self.convention, time_augmented=self.time_augmented, source=src)


def _fine_blocks(path, h, r, t0, t_end):
    R = steps_between(h, path.h_f, what="coarse step")
    K = steps_between(r, h, what="delay")
    if K < 1:
        raise GridMismatchError("delay must be at least one coarse step")
    N = steps_between(t_end - t0, h, what="lift window")
    try:
        fine = path.window(t0 - r, t_end)
    except OutOfWindowError as exc:
        raise OutOfWindowError(
            f"sample path must cover [{t0 - r}, {t_end}] for delay {r}") from exc
    return fine.reshape(K + N, R, path.dim), K, N


def lift_ito(path, h, r, t0=None, t_end=None, gamma=0.45):
    """Ito delayed lift; areas are left-point sums over the fine grid.

    By default the main grid is ``[path.t_start + r, path.t_end]``.
    """
    t0 = path.t_start + r if t0 is None else t0
    t_end = path.t_end if t_end is None else t_end
    blocks, K, N = _fine_blocks(path, h, r, t0, t_end)
    current = blocks[K:]
    area = kernels.interval_areas(current, current)
    delayed = kernels.interval_areas(blocks[:N], current)
    return DelayedRoughPath(
        h=float(h), delay_steps=K, t0=float(t0), increments=blocks.sum(axis=1),
        area=area, delayed_area=delayed, gamma=gamma, convention=ITO, source=path)


def to_stratonovich(rp):
    """Add ``(t-s)/2 I`` to the plain area; everything else is shared."""
    if rp.convention == STRATONOVICH:
        return rp
    if rp.time_augmented:
        raise ConfigError("convert before augmenting with time")
    area = rp.area + 0.5 * rp.h * np.eye(rp.dim)
    return DelayedRoughPath(
        h=rp.h, delay_steps=rp.delay_steps, t0=rp.t0, increments=rp.increments,
        area=area, delayed_area=rp.delayed_area, gamma=rp.gamma,
        convention=STRATONOVICH, source=rp.source)


def lift_stratonovich(path, h, r, t0=None, t_end=None, gamma=0.45):
    return to_stratonovich(lift_ito(path, h, r, t0=t0, t_end=t_end, gamma=gamma))


def lift(path, h, r, convention=ITO, **kwargs):
    if convention == ITO:
        return lift_ito(path, h, r, **kwargs)
    if convention == STRATONOVICH:
        return lift_stratonovich(path, h, r, **kwargs)
    raise ConfigError(f"unknown convention {convention!r}")


def augment_time(rp):
    """Append ``t -> t`` as component 0 of the driving path.

    Cross areas with time are left-point fine sums; the time-time areas are
    exactly ``(t-s)^2 / 2``. The noise block is copied unchanged.
    """
    if rp.time_augmented:
        return rp
    if "augmented" in rp._cache:
        return rp._cache["augmented"]
    if rp.source is None:
        raise ConfigError("time augmentation needs the fine sample path")
    path, K, N = rp.source, rp.delay_steps, rp.n_intervals
    blocks, _, _ = _fine_blocks(path, rp.h, rp.r, rp.t0, rp.t_end)
    R, d = blocks.shape[1], rp.dim
    aug = np.empty((K + N, R, d + 1))
    aug[..., 0] = path.h_f
    aug[..., 1:] = blocks
    area = kernels.interval_areas(aug[K:], aug[K:])
    delayed = kernels.interval_areas(aug[:N], aug[K:])
    area[:, 1:, 1:] = rp.area
    delayed[:, 1:, 1:] = rp.delayed_area
    area[:, 0, 0] = delayed[:, 0, 0] = 0.5 * rp.h ** 2
    incr = np.empty((K + N, d + 1))
    incr[:, 0] = rp.h
    incr[:, 1:] = rp.increments
    out = DelayedRoughPath(
        h=rp.h, delay_steps=K, t0=rp.t0, increments=incr, area=area,
        delayed_area=delayed, gamma=rp.gamma, convention=rp.convention,
        time_augmented=True, source=path)
    rp._cache["augmented"] = out
    return out


def strip_time(rp):
    """Inverse of :func:`augment_time` on the stored data."""
    if not rp.time_augmented:
        return rp
    return DelayedRoughPath(
        h=rp.h, delay_steps=rp.delay_steps, t0=rp.t0, increments=rp.increments[:, 1:],
        area=rp.area[:, 1:, 1:], delayed_area=rp.delayed_area[:, 1:, 1:],
        gamma=rp.gamma, convention=rp.convention, source=rp.source)


def _pair_sup(table, exponent, h):
    n = table.shape[0]
    if n < 2:
        return 0.0
    idx = np.arange(n)
    gap = (idx[None, :] - idx[:, None]) * h
    mask = gap > 0
    sizes = np.sqrt((table.reshape(n, n, -1) ** 2).sum(axis=-1))
    return float((sizes[mask] / gap[mask] ** exponent).max())


def hoelder_components(rp, a, b, gamma=None):
    """Grid suprema making up ``||X||_{gamma;[a,b]}``.

    These are lower bounds of the true Hoelder norms (suprema over grid pairs).
    """
    gamma = rp.gamma if gamma is None else gamma
    i, j = rp.index(a), rp.index(b)
    if j <= i:
        return {"X": 0.0, "X_delayed": 0.0, "area": 0.0, "delayed_area": 0.0}
    K = rp.delay_steps
    vals = rp.node_values(i, j)
    dvals = rp.node_values(i - K, j - K)
    return {
        "X": _pair_sup(vals[None, :] - vals[:, None], gamma, rp.h),
        "X_delayed": _pair_sup(dvals[None, :] - dvals[:, None], gamma, rp.h),
        "area": _pair_sup(rp.area_table(i, j), 2 * gamma, rp.h),
        "delayed_area": _pair_sup(rp.delayed_area_table(i, j), 2 * gamma, rp.h),
    }


def hoelder_norm(rp, a, b, gamma=None):
    """Grid estimate of ``|X|_g + |X(.-r)|_g + sqrt|XX|_2g + sqrt|XX(-r)|_2g`` on ``[a,b]``."""
    c = hoelder_components(rp, a, b, gamma)
    return c["X"] + c["X_delayed"] + np.sqrt(c["area"]) + np.sqrt(c["delayed_area"])


def validate_exponents(alpha, beta, gamma):
    """True iff ``1/3 < alpha < beta < gamma < 1/2`` and
    ``(1-alpha)(1/2-beta) / ((1-beta)(1-2 alpha)) < beta - alpha``."""
    if not (1 / 3 < alpha < beta < gamma < 0.5):
        return False
    lhs = (1 - alpha) * (0.5 - beta) / ((1 - beta) * (1 - 2 * alpha))
    return bool(lhs < beta - alpha)


def chen_residual(rp, i, u, j):
    """Largest deviation from both Chen identities at nodes ``i <= u <= j``."""
    K = rp.delay_steps
    plain = (rp.area_between(i, u) + rp.area_between(u, j)
             + np.outer(rp.increment(i, u), rp.increment(u, j)) - rp.area_between(i, j))
    delayed = (rp.delayed_area_between(i, u) + rp.delayed_area_between(u, j)
               + np.outer(rp.increment(i - K, u - K), rp.increment(u, j))
               - rp.delayed_area_between(i, j))
    return float(max(np.abs(plain).max(), np.abs(delayed).max()))
