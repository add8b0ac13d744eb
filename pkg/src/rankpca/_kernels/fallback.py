"""Pure-NumPy kernels, used when the compiled extension is unavailable.

These are the reference implementations: the Cython module in ``_core.pyx``
follows the exact same update rules (including the stable lowest-index
tie-break in top-k selection), so either backend may be selected at import
time without changing results beyond floating-point summation order.
"""

from __future__ import annotations

import numpy as np

STATUS_OK = 0
STATUS_ZERO_PRODUCT = 1


def _topk_indices(absx: np.ndarray, k: int) -> np.ndarray:
    # stable sort: equal magnitudes keep ascending index order
    return np.argsort(-absx, kind="stable")[:k]


def tpower_loop(gamma, x0, k, conv_tol, max_iters):
    """Top-k truncated power iteration.

    Each step multiplies by ``gamma``, normalizes, keeps the ``k`` largest
    absolute entries (ties resolved toward the lowest index) and
    renormalizes. Stops when ``min_s ||theta_t - s * theta_{t-1}||_2`` falls
    to ``conv_tol`` or after ``max_iters`` updates.

    Returns ``(theta, iterations, converged, objective_trace, status)``;
    ``objective_trace[t]`` is ``theta_t' gamma theta_t`` after update t.
    A zero matrix-vector product aborts with ``STATUS_ZERO_PRODUCT``.
    """
    gamma = np.asarray(gamma, dtype=float)
    theta = np.asarray(x0, dtype=float).copy()
    d = theta.shape[0]
    trace = np.empty(max_iters)
    converged = False
    iterations = 0

    y = gamma @ theta
    for t in range(max_iters):
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return theta, iterations, False, trace[:iterations], STATUS_ZERO_PRODUCT
        x = y / ny
        idx = _topk_indices(np.abs(x), k)
        xt = np.zeros(d)
        xt[idx] = x[idx]
        xt /= np.linalg.norm(xt)
        diff = min(np.linalg.norm(xt - theta), np.linalg.norm(xt + theta))
        theta = xt
        y = gamma @ theta
        trace[t] = theta @ y
        iterations = t + 1
        if diff <= conv_tol:
            converged = True
            break
    return theta, iterations, converged, trace[:iterations].copy(), STATUS_OK


def enet_cd(A, b, threshold, w0, tol, max_sweeps):
    """Cyclic coordinate descent for ``w' A w - 2 b' w + 2 * threshold * ||w||_1``.

    ``A`` must be symmetric with a strictly positive diagonal. Each
    coordinate update is the exact scalar minimizer (soft-thresholding);
    sweeps stop when the largest coordinate change in a full pass is at most
    ``tol``. Returns ``(w, sweeps, converged)``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.asarray(w0, dtype=float).copy()
    d = w.shape[0]
    r = A @ w
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for j in range(d):
            wj = w[j]
            z = b[j] - (r[j] - A[j, j] * wj)
            az = abs(z) - threshold
            new = 0.0 if az <= 0.0 else np.sign(z) * az / A[j, j]
            if new != wj:
                delta = new - wj
                r += A[j] * delta
                w[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta <= tol:
            return w, sweep + 1, True
    return w, max_sweeps, False
