"""Pure-NumPy fallback for the hot kernels.

Same semantics as the compiled ``_kernels`` extension.  Pairwise-distance work
is chunked so memory stays bounded for large samples (the KSG oracle checks
run at n = 5000, where a full distance matrix would be 200 MB).
"""
import numpy as np

from ._digamma import digamma, digamma_array

_CHUNK = 512


def dcor(x, y):
    """Sample distance correlation of two real vectors.

    Direct O(n^2) double-centering of the pairwise distance matrices.
    Returns 0.0 when either coordinate has zero distance variance.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    a = np.abs(x[:, None] - x[None, :])
    b = np.abs(y[:, None] - y[None, :])
    a -= a.mean(axis=0)[None, :]
    a -= a.mean(axis=1)[:, None]
    b -= b.mean(axis=0)[None, :]
    b -= b.mean(axis=1)[:, None]
    dcov2_xy = (a * b).sum() / (n * n)
    dcov2_xx = (a * a).sum() / (n * n)
    dcov2_yy = (b * b).sum() / (n * n)
    denom2 = dcov2_xx * dcov2_yy
    if denom2 <= 0.0:
        return 0.0
    r2 = dcov2_xy / np.sqrt(denom2)
    return float(np.sqrt(max(r2, 0.0)))


def ksg_mi(x, y, k):
    """Kraskov estimator "(1)" of mutual information, in nats.

    Max-norm distance to the k-th nearest neighbor in the joint space;
    marginal counts use strict inequality, matching the original paper.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    eps = np.empty(n)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        dz = np.maximum(np.abs(x[start:stop, None] - x[None, :]),
                        np.abs(y[start:stop, None] - y[None, :]))
        dz[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        eps[start:stop] = np.partition(dz, k - 1, axis=1)[:, k - 1]

    xs = np.sort(x)
    ys = np.sort(y)
    # strict count of j != i with |x_j - x_i| < eps_i
    nx = (np.searchsorted(xs, x + eps, side="left")
          - np.searchsorted(xs, x - eps, side="right") - 1)
    ny = (np.searchsorted(ys, y + eps, side="left")
          - np.searchsorted(ys, y - eps, side="right") - 1)
    np.clip(nx, 0, None, out=nx)
    np.clip(ny, 0, None, out=ny)
    psi_sum = digamma_array(nx + 1.0) + digamma_array(ny + 1.0)
    return float(digamma(float(k)) + digamma(float(n)) - psi_sum.mean())
