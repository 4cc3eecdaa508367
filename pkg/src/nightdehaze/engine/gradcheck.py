"""Central-difference verification of analytic gradients.

Checks run in float64 through the same code paths as training (the kernels
and tape are dtype-generic); step size defaults to 1e-3.
"""

import numpy as np

STEP = 1e-3


def numeric_grad(f, x, step=STEP, indices=None):
    """Central differences of scalar f at array x, optionally on a coord subset."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    if indices is None:
        indices = range(flat.size)
    for i in indices:
        orig = flat[i]
        flat[i] = orig + step
        hi = f(x)
        flat[i] = orig - step
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * step)
    return grad


def max_rel_error(analytic, numeric, indices=None, floor=1e-6):
    """Max relative disagreement; coordinates where both are below `floor`
    are compared absolutely (both effectively zero)."""
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    n = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if indices is not None:
        idx = np.fromiter(indices, dtype=np.int64)
        a, n = a[idx], n[idx]
    scale = np.maximum(np.abs(a), np.abs(n))
    err = np.abs(a - n)
    rel = np.where(scale > floor, err / np.maximum(scale, floor), err)
    return float(rel.max()) if rel.size else 0.0
