"""Pure numpy versions of the hot loops; used when the extension is absent."""
import numpy as np


def interval_areas(left, right):
    """Left-point iterated sums inside each coarse interval.

    ``left`` and ``right`` have shape ``(n, R, d)``: fine increments of the
    integrand path and of the integrator over ``n`` coarse intervals of ``R``
    fine steps. Returns ``sum_k (sum_{l<k} left_l) (x) right_k``, shape ``(n, d, d)``.
    """
    left = np.ascontiguousarray(left, dtype=float)
    right = np.ascontiguousarray(right, dtype=float)
    n, nf, d = left.shape
    out = np.zeros((n, d, d))
    pre = np.zeros((n, d))
    # same operation order as the compiled kernel, so results agree bitwise
    for k in range(nf):
        out += pre[:, :, None] * right[:, k, None, :]
        pre += left[:, k]
    return out


def chen_table(left, right, area):
    """All pairwise areas over a block of coarse intervals, rebuilt by Chen.

    ``out[i, j] = sum_{i<=k<j} area[k] + (sum_{i<=l<k} left[l]) (x) right[k]``,
    shape ``(n+1, n+1, d, d)``; entries with ``j <= i`` are zero.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    area = np.asarray(area, dtype=float)
    n, d = right.shape
    out = np.zeros((n + 1, n + 1, d, d))
    run = np.zeros((n + 1, d))  # left-increment from node i to current node
    for j in range(n):
        rows = slice(0, j + 1)
        out[rows, j + 1] = (out[rows, j] + area[j]
                            + run[rows, :, None] * right[j][None, None, :])
        run[rows] += left[j]
    return out


def affine_recursion(mats, shifts, z0):
    """Iterate ``z_{j+1} = mats[j] @ z_j + shifts[j]``; returns all ``n+1`` states."""
    mats = np.asarray(mats, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    z = np.array(z0, dtype=float)
    out = np.empty((mats.shape[0] + 1,) + z.shape)
    out[0] = z
    for j in range(mats.shape[0]):
        z = mats[j] @ z + shifts[j]
        out[j + 1] = z
    return out
