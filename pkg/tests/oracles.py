"""Reference values computed without the package."""
import math

import numpy as np


def characteristic_root(a, r=1.0, x0=None, tol=1e-15):
    """Real root of ``lam exp(lam r) = a`` by Newton iteration."""
    lam = (0.0 if a > 0 else -0.5) if x0 is None else x0
    for _ in range(100):
        g = lam * math.exp(lam * r) - a
        dg = math.exp(lam * r) * (1 + lam * r)
        step = g / dg
        lam -= step
        if abs(step) < tol:
            break
    return lam


def dde_constant_history(a, t):
    """``y' = a y(t-1)``, ``y = 1`` on ``[-1, 0]``: ``sum_k a^k (t-k+1)^k / k!``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for k in range(int(np.ceil(t.max())) + 2):
        arg = t - (k - 1)
        out += np.where(arg >= 0, a ** k * np.maximum(arg, 0) ** k / math.factorial(k), 0.0)
    return out


def monodromy_eigvec(a, N):
    """Dominant eigenvector of the trapezoidal method-of-steps map for ``y' = a y(t-1)``.

    The map sends node values of one delay block to those of the next.
    """
    h = 1.0 / N
    M = np.zeros((N + 1, N + 1))
    M[0, N] = 1.0
    for j in range(N):
        M[j + 1] = M[j]
        M[j + 1, j] += 0.5 * a * h
        M[j + 1, j + 1] += 0.5 * a * h
    vals, vecs = np.linalg.eig(M)
    k = np.argmax(np.abs(vals))
    v = np.real(vecs[:, k])
    return vals[k].real, v / np.linalg.norm(v)


def gbm_exact(y0, increments):
    """``y0 exp(B_T - [B]_T / 2)`` with the realised quadratic variation of the fine path."""
    incr = np.asarray(increments, dtype=float).ravel()
    return y0 * np.exp(incr.sum() - 0.5 * (incr ** 2).sum())


def angle(u, v):
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    return float(np.arccos(min(1.0, abs(float(u @ v)))))
