"""Delayed rough integral via compensated Riemann sums on the coarse grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controlled import DelayedControlledSegment
from .errors import ConfigError, GridMismatchError


def check_integral_exponents(beta, gamma):
    """Sewing needs ``theta + gamma > 1`` and ``beta + 2 gamma > 1`` (here ``theta = 2 beta``)."""
    if not (0 < beta <= gamma <= 0.5):
        raise ConfigError(f"need 0 < beta <= gamma <= 1/2, got beta={beta}, gamma={gamma}")
    if not (2 * beta + gamma > 1 and beta + 2 * gamma > 1):
        raise ConfigError(
            f"integral undefined: need 2*beta + gamma > 1 and beta + 2*gamma > 1 "
            f"(beta={beta}, gamma={gamma})")


def germ(values, zeta0, zeta1, dx, area, delayed_area):
    """``m_s X_{s,t} + zeta0_s XX_{s,t} + zeta1_s XX_{s,t}(-r)`` for stacked intervals."""
    out = np.einsum("n...j,nj->n...", values, dx)
    if np.any(zeta0):
        out = out + np.einsum("n...ji,nij->n...", zeta0, area)
    if np.any(zeta1):
        out = out + np.einsum("n...ji,nij->n...", zeta1, delayed_area)
    return out


def _block(integrand, rp, a, b):
    if integrand.rp is not rp:
        raise GridMismatchError("integrand is based on a different rough path")
    i = integrand.start if a is None else rp.index(a)
    j = integrand.stop if b is None else rp.index(b)
    if not (integrand.start <= i <= j <= integrand.stop):
        raise GridMismatchError("integration interval outside the integrand segment")
    if i < 0:
        raise GridMismatchError("areas are only available on the main grid")
    return i, j


def delayed_rough_integral(integrand, rp, a=None, b=None, beta=None):
    """``t -> int_a^t integrand dX`` on the grid nodes of ``[a, b]``.

    The result is a plain controlled segment starting at 0 whose Gubinelli
    derivative is the integrand value.
    """
    check_integral_exponents(rp.gamma if beta is None else beta, rp.gamma)
    i, j = _block(integrand, rp, a, b)
    K = rp.delay_steps
    lo = i - integrand.start
    hi = j - integrand.start
    terms = germ(integrand.values[lo:hi], integrand.zeta0[lo:hi], integrand.zeta1[lo:hi],
                 rp.increments[K + i:K + j], rp.area[i:j], rp.delayed_area[i:j])
    vals = np.zeros((j - i + 1,) + terms.shape[1:])
    np.cumsum(terms, axis=0, out=vals[1:])
    return DelayedControlledSegment(rp=rp, start=i, values=vals,
                                    zeta0=integrand.values[lo:hi + 1])


@dataclass
class SewingReport:
    meshes: list
    sums: list
    defects: list
    rate: float


def compensated_sum(integrand, rp, i, j, stride):
    """Compensated sum over the partition of ``[t_i, t_j]`` with the given node stride."""
    nodes = list(range(i, j + 1, stride))
    if nodes[-1] != j:
        raise GridMismatchError("stride does not divide the interval")
    total = 0.0
    for p, q in zip(nodes[:-1], nodes[1:]):
        k = p - integrand.start
        total = total + germ(
            integrand.values[k:k + 1], integrand.zeta0[k:k + 1], integrand.zeta1[k:k + 1],
            rp.increment(p, q)[None], rp.area_between(p, q)[None],
            rp.delayed_area_between(p, q)[None])[0]
    return np.asarray(total)


def sewing_defect(integrand, rp, a=None, b=None, levels=None):
    """Compensated sums on dyadic coarsenings of ``[a, b]`` against the full grid.

    The fitted ``rate`` is the slope of ``log(defect)`` against ``log(mesh)``.
    """
    i, j = _block(integrand, rp, a, b)
    n = j - i
    max_levels = 0
    while n % (2 ** (max_levels + 1)) == 0 and 2 ** (max_levels + 1) <= n:
        max_levels += 1
    levels = max_levels if levels is None else min(levels, max_levels)
    strides = [2 ** k for k in range(levels, -1, -1)]
    sums = [compensated_sum(integrand, rp, i, j, s) for s in strides]
    finest = sums[-1]
    defects = [float(np.abs(s - finest).max()) for s in sums]
    meshes = [s * rp.h for s in strides]
    use = [k for k in range(len(sums) - 1) if defects[k] > 1e-14]
    if len(use) >= 2:
        rate = float(np.polyfit(np.log([meshes[k] for k in use]),
                                np.log([defects[k] for k in use]), 1)[0])
    else:
        rate = float("inf")
    return SewingReport(meshes=meshes, sums=[np.asarray(s).tolist() for s in sums],
                        defects=defects, rate=rate)
