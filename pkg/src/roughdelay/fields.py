"""Vector field bundles ``(sigma, partials, linear drift B, smooth drift f)``.

Shapes (leading batch axes ``...`` broadcast; ``x, y`` are ``(..., w)``)::

    sigma     (..., w, d)          sigma[a, j]
    sigma_x   (..., w, d, w)       d sigma[a, j] / d x[b]
    sigma_xx  (..., w, d, w, w)    d^2 sigma[a, j] / d x[b] d x[c]
    sigma_xy  (..., w, d, w, w)    d^2 sigma[a, j] / d x[b] d y[c]
    f         (..., w)
    f_x       (..., w, w)

The linear drift is ``B(x, y) = B_x x + B_y y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError

FD_STEP = 1e-5


def _zeros_like_sigma(w, d, extra):
    def fn(x, y):
        return np.zeros(np.shape(x)[:-1] + (w, d) + (w,) * extra)
    return fn


def _fd_partial(fn, wrt, step=FD_STEP):
    """Central difference of ``fn(x, y)`` w.r.t. ``x`` (wrt=0) or ``y``; new last axis."""
    def partial(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        w = x.shape[-1]
        cols = []
        for b in range(w):
            e = np.zeros(w)
            e[b] = step
            if wrt == 0:
                cols.append((fn(x + e, y) - fn(x - e, y)) / (2 * step))
            else:
                cols.append((fn(x, y + e) - fn(x, y - e)) / (2 * step))
        return np.stack(cols, axis=-1)
    return partial


@dataclass(frozen=True)
class VectorFieldBundle:
    w: int
    d: int
    sigma: Callable
    sigma_x: Callable
    sigma_y: Callable
    sigma_xx: Callable | None = None
    sigma_xy: Callable | None = None
    sigma_yy: Callable | None = None
    drift_x: np.ndarray | None = None
    drift_y: np.ndarray | None = None
    f: Callable | None = None
    f_x: Callable | None = None
    f_y: Callable | None = None
    f_xx: Callable | None = None
    f_xy: Callable | None = None
    f_yy: Callable | None = None
    smoothness: int = 3
    lipschitz: float | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for attr in ("drift_x", "drift_y"):
            val = getattr(self, attr)
            if val is not None:
                val = np.asarray(val, dtype=float).reshape(self.w, self.w)
                object.__setattr__(self, attr, val)
        for attr, extra in (("sigma_xx", 2), ("sigma_xy", 2), ("sigma_yy", 2)):
            if getattr(self, attr) is None:
                object.__setattr__(self, attr, _zeros_like_sigma(self.w, self.d, extra))
        if self.f is not None:
            if self.f_x is None or self.f_y is None:
                raise ConfigError("smooth drift f needs its first partials f_x, f_y")
            if self.f_xx is None:
                object.__setattr__(self, "f_xx", _fd_partial(self.f_x, 0))
            if self.f_xy is None:
                object.__setattr__(self, "f_xy", _fd_partial(self.f_x, 1))
            if self.f_yy is None:
                object.__setattr__(self, "f_yy", _fd_partial(self.f_y, 1))

    @property
    def has_drift(self):
        return (self.f is not None
                or (self.drift_x is not None and np.any(self.drift_x))
                or (self.drift_y is not None and np.any(self.drift_y)))

    def drift(self, x, y):
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y)))
        if self.drift_x is not None:
            out = out + x @ self.drift_x.T
        if self.drift_y is not None:
            out = out + np.asarray(y) @ self.drift_y.T
        if self.f is not None:
            out = out + self.f(x, y)
        return out

    def augmented(self, force=False):
        """Drift-free bundle driven by ``(t, X)``: column 0 carries ``B + f``.

        Without drift the bundle itself is returned unless ``force`` is set.
        """
        if not (self.has_drift or force):
            return self
        if "_augmented" in self.__dict__:
            return self.__dict__["_augmented"]
        w = self.w
        Bx = np.zeros((w, w)) if self.drift_x is None else self.drift_x
        By = np.zeros((w, w)) if self.drift_y is None else self.drift_y
        base = self

        def batch(x, y):
            return np.broadcast_shapes(np.shape(x), np.shape(y))[:-1]

        def s(x, y):
            return np.concatenate([base.drift(x, y)[..., None], base.sigma(x, y)], axis=-1)

        def first(sig_fn, B, f_fn):
            def fn(x, y):
                col = np.broadcast_to(B, batch(x, y) + (w, w))
                if base.f is not None:
                    col = col + f_fn(x, y)
                return np.concatenate([col[..., None, :], sig_fn(x, y)], axis=-2)
            return fn

        def second(sig_fn, f_fn):
            def fn(x, y):
                sig = sig_fn(x, y)
                if base.f is not None:
                    col = np.broadcast_to(f_fn(x, y), sig.shape[:-4] + (w, w, w))
                else:
                    col = np.zeros(sig.shape[:-4] + (w, w, w))
                return np.concatenate([col[..., None, :, :], sig], axis=-3)
            return fn

        out = VectorFieldBundle(
            w=w, d=self.d + 1, sigma=s,
            sigma_x=first(self.sigma_x, Bx, self.f_x),
            sigma_y=first(self.sigma_y, By, self.f_y),
            sigma_xx=second(self.sigma_xx, self.f_xx),
            sigma_xy=second(self.sigma_xy, self.f_xy),
            sigma_yy=second(self.sigma_yy, self.f_yy),
            smoothness=self.smoothness, lipschitz=self.lipschitz,
            name=self.name + "+time", params=self.params)
        self.__dict__["_augmented"] = out
        return out

    def __add__(self, other):
        if (self.w, self.d) != (other.w, other.d):
            raise ConfigError("bundles of different shapes")

        def add(a, b):
            return lambda x, y: a(x, y) + b(x, y)

        def add_opt(a, b):
            if a is None:
                return b
            return a if b is None else a + b

        if self.f is not None or other.f is not None:
            raise ConfigError("adding bundles with smooth drifts is not supported")
        return VectorFieldBundle(
            w=self.w, d=self.d,
            sigma=add(self.sigma, other.sigma), sigma_x=add(self.sigma_x, other.sigma_x),
            sigma_y=add(self.sigma_y, other.sigma_y),
            sigma_xx=add(self.sigma_xx, other.sigma_xx),
            sigma_xy=add(self.sigma_xy, other.sigma_xy),
            sigma_yy=add(self.sigma_yy, other.sigma_yy),
            drift_x=add_opt(self.drift_x, other.drift_x),
            drift_y=add_opt(self.drift_y, other.drift_y),
            smoothness=min(self.smoothness, other.smoothness))


def check_partials(vf, rng, n_probe=8, step=FD_STEP, scale=1.0):
    """Largest relative error between supplied partials and central differences."""
    worst = 0.0
    pairs = [(vf.sigma, vf.sigma_x, 0), (vf.sigma, vf.sigma_y, 1),
             (vf.sigma_x, vf.sigma_xx, 0), (vf.sigma_x, vf.sigma_xy, 1),
             (vf.sigma_y, vf.sigma_yy, 1)]
    if vf.f is not None:
        pairs += [(vf.f, vf.f_x, 0), (vf.f, vf.f_y, 1)]
    for _ in range(n_probe):
        x = rng.normal(scale=scale, size=vf.w)
        y = rng.normal(scale=scale, size=vf.w)
        for fn, partial, wrt in pairs:
            fd = _fd_partial(fn, wrt, step)(x, y)
            exact = np.asarray(partial(x, y))
            err = np.abs(fd - exact).max() / max(1.0, np.abs(exact).max())
            worst = max(worst, float(err))
    return worst


# -- built-in registry (scalar state and noise, w = d = 1) -------------------

def _scalar2(fn, extra):
    def out(x, y):
        v = np.asarray(fn(np.asarray(x)[..., 0], np.asarray(y)[..., 0]), dtype=float)
        v = np.broadcast_to(v, np.broadcast_shapes(np.shape(x), np.shape(y))[:-1])
        return v.reshape(v.shape + (1, 1) + (1,) * extra)
    return out


def scalar_field(g, gx, gy, gxx=None, gxy=None, gyy=None, b_x=0.0, b_y=0.0,
                 lipschitz=None, name="custom", params=None):
    """Bundle for ``dy = (b_x y + b_y y(t-r)) dt + g(y, y(t-r)) dX`` with scalar ``g``."""
    zero = lambda x, y: 0.0 * x * y  # noqa: E731
    return VectorFieldBundle(
        w=1, d=1,
        sigma=_scalar2(g, 0), sigma_x=_scalar2(gx, 1), sigma_y=_scalar2(gy, 1),
        sigma_xx=_scalar2(gxx or zero, 2), sigma_xy=_scalar2(gxy or zero, 2),
        sigma_yy=_scalar2(gyy or zero, 2),
        drift_x=np.array([[b_x]]) if b_x else None,
        drift_y=np.array([[b_y]]) if b_y else None,
        lipschitz=lipschitz, name=name, params=dict(params or {}))


def linear(s_x=0.0, s_y=0.0, b_x=0.0, b_y=0.0):
    """``sigma = s_x x + s_y y``; drift ``b_x x + b_y y``."""
    return scalar_field(lambda x, y: s_x * x + s_y * y,
                        lambda x, y: s_x + 0.0 * x, lambda x, y: s_y + 0.0 * x,
                        b_x=b_x, b_y=b_y, lipschitz=max(abs(s_x), abs(s_y)),
                        name="linear", params=dict(s_x=s_x, s_y=s_y, b_x=b_x, b_y=b_y))


def pure_delay(a=-0.3, s=0.0):
    """``dy = a y(t-r) dt + s y(t-r) dX``."""
    return replace(linear(s_y=s, b_y=a), name="pure_delay", params=dict(a=a, s=s))


def quadratic(q_x=1.0, q_y=0.0, b_x=0.0, b_y=0.0):
    """``sigma = q_x x^2 + q_y y^2``; vanishes to first order at 0."""
    return scalar_field(lambda x, y: q_x * x * x + q_y * y * y,
                        lambda x, y: 2 * q_x * x, lambda x, y: 2 * q_y * y,
                        lambda x, y: 2 * q_x + 0.0 * x, None, lambda x, y: 2 * q_y + 0.0 * y,
                        b_x=b_x, b_y=b_y, name="quadratic",
                        params=dict(q_x=q_x, q_y=q_y, b_x=b_x, b_y=b_y))


def sine_product(s=1.0, b_x=0.0, b_y=0.0):
    """``sigma = s sin(x) y``."""
    return scalar_field(lambda x, y: s * np.sin(x) * y,
                        lambda x, y: s * np.cos(x) * y, lambda x, y: s * np.sin(x),
                        lambda x, y: -s * np.sin(x) * y, lambda x, y: s * np.cos(x), None,
                        b_x=b_x, b_y=b_y, name="sine_product",
                        params=dict(s=s, b_x=b_x, b_y=b_y))


def ou_additive(c=-1.0, s=1.0, s_x=0.0, s_y=0.0):
    """``dy = c y dt + (s + s_x sin y + s_y sin y(t-r)) dX``; additive when ``s_x = s_y = 0``."""
    return scalar_field(lambda x, y: s + s_x * np.sin(x) + s_y * np.sin(y),
                        lambda x, y: s_x * np.cos(x), lambda x, y: s_y * np.cos(y),
                        lambda x, y: -s_x * np.sin(x), None, lambda x, y: -s_y * np.sin(y),
                        b_x=c, lipschitz=max(abs(s_x), abs(s_y)), name="ou_additive",
                        params=dict(c=c, s=s, s_x=s_x, s_y=s_y))


REGISTRY = {
    "linear": linear,
    "pure_delay": pure_delay,
    "quadratic": quadratic,
    "sine_product": sine_product,
    "ou_additive": ou_additive,
}


def from_registry(name, **params):
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown field {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(**params)
