"""Sparse leading-eigenvector solvers.

Three solver families for ``max v' G v`` over unit vectors under a sparsity
constraint, plus deflation to extract several components:

* :func:`truncated_power` -- power iteration with a per-step projection onto
  the unit sphere intersected with an lq ball (q = 0 keeps the k largest
  absolute entries; 0 < q <= 1 truncates to the largest level that stays
  inside the ball, found by binary search).
* :func:`pmd_rank_one` -- alternating rank-one decomposition under joint
  l1/l2 constraints, each half-step solved by soft-thresholding with a
  bisected threshold.
* :func:`spca_leading` -- regression-style alternation: an elastic-net step
  (cyclic coordinate descent) against a power step.

All solvers share the sign convention that the largest-magnitude entry of
the returned vector is positive, and the convergence rule
``min_s ||theta_t - s * theta_{t-1}||_2 <= conv_tol``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    AllZeroSolution,
    DegenerateIterate,
    InvalidInput,
    InvalidRadius,
    InvalidVector,
)

DEFAULT_CONV_TOL = 1e-7
DEFAULT_MAX_ITERS = 1000
CD_TOL = 1e-8
CD_MAX_SWEEPS = 10_000
THRESHOLD_BISECTIONS = 60
INIT_SPCA_RIDGE = 1e-4
INIT_SPCA_L1 = 0.1  # relative to the mean diagonal; sparse enough to avoid bad basins

METHODS = ("tpower", "qtpm", "pmd", "spca")


@dataclass(frozen=True)
class SolverOptions:
    """Shared solver configuration.

    ``q`` and ``radius`` define the sparsity constraint for
    :func:`truncated_power`: ``q = 0`` takes ``radius`` as the integer
    support bound k; ``0 < q <= 1`` takes it as the lq-ball radius R (which
    must exceed 1, and only binds when ``R <= d**(1 - q/2)``).

    ``init`` is ``"power-method"``, ``"spca"``, an explicit start vector,
    or None for the solver-specific default (spca for the truncated power
    method, power-method for PMD/SPCA). ``shift`` adds a fixed multiple of
    the identity before iterating; ``auto_shift`` additionally adds
    ``max(0, -lambda_min) * (1 + 1e-3)`` so indefinite inputs become PSD
    without moving the eigenvectors.
    """

    q: float = 0.0
    radius: float | None = None
    max_iters: int = DEFAULT_MAX_ITERS
    conv_tol: float = DEFAULT_CONV_TOL
    init: object = None
    shift: float = 0.0
    auto_shift: bool = False

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise InvalidInput(f"q must lie in [0, 1], got {self.q}")
        if self.max_iters < 1:
            raise InvalidInput("max_iters must be at least 1")
        if self.conv_tol < 0:
            raise InvalidInput("conv_tol must be nonnegative")
        if self.shift < 0:
            raise InvalidInput("shift must be nonnegative")


@dataclass(frozen=True)
class SparseEigenResult:
    """A unit-norm sparse eigenvector estimate with its solver trace."""

    vector: np.ndarray
    support: np.ndarray
    iterations: int
    objective: float
    converged: bool
    objective_trace: np.ndarray = field(repr=False)
    iterates: list | None = field(default=None, repr=False)


@dataclass(frozen=True)
class PowerIterationResult:
    """Leading eigenvector estimate from plain power iteration.

    ``converged`` is False when the iteration hit its cap or when the
    leading eigenvalue is not numerically dominant (degenerate spectrum),
    in which case ``vector`` is still the best iterate found.
    """

    vector: np.ndarray
    value: float
    converged: bool
    iterations: int


def _as_symmetric(gamma, name: str = "gamma") -> np.ndarray:
    g = np.ascontiguousarray(gamma, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidInput(f"{name} must be a square matrix")
    if not np.all(np.isfinite(g)):
        raise InvalidInput(f"{name} contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g - g.T)) > 1e-10 * scale:
        raise InvalidInput(f"{name} is not symmetric")
    return g


def _fix_sign(v: np.ndarray) -> np.ndarray:
    lead = int(np.argmax(np.abs(v)))
    return -v if v[lead] < 0 else v


def _sign_aware_diff(a: np.ndarray, b: np.ndarray) -> float:
    return min(float(np.linalg.norm(a - b)), float(np.linalg.norm(a + b)))


def truncate(v, J) -> np.ndarray:
    """Keep the entries of ``v`` indexed by ``J`` and zero the rest."""
    x = np.asarray(v, dtype=float)
    idx = np.asarray(sorted(J), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise InvalidInput("index set J out of range")
    out = np.zeros_like(x)
    out[idx] = x[idx]
    return out


def find_truncation_level(x, q: float, radius: float) -> int:
    """Largest k whose normalized top-k truncation stays inside the lq ball.

    For sorted nonnegative magnitudes the ratio ``||v_Ak||_q / ||v_Ak||_2``
    never decreases in k, so feasibility (``||.||_q^q <= radius`` after
    renormalizing) holds exactly on a prefix 1..k* and a binary search
    recovers k*. Requires the full vector to violate the constraint and
    ``radius > 1`` (a one-entry unit vector always satisfies the ball, so
    k = 1 is feasible).
    """
    if not 0.0 < q <= 1.0:
        raise InvalidInput(f"q must lie in (0, 1], got {q}")
    if radius <= 1.0:
        raise InvalidRadius(f"lq radius must exceed 1, got {radius}")
    v = np.abs(np.asarray(x, dtype=float))
    order = np.argsort(-v, kind="stable")
    sorted_v = v[order]
    cum_q = np.cumsum(sorted_v**q)
    cum_2 = np.cumsum(sorted_v**2)

    def feasible(k: int) -> bool:
        # ||top-k / ||top-k||_2||_q^q <= radius, written division-free
        return cum_q[k - 1] <= radius * cum_2[k - 1] ** (q / 2.0)

    d = v.shape[0]
    if feasible(d):
        raise InvalidInput("vector already satisfies the lq constraint; no truncation needed")
    if not feasible(1):
        raise InvalidRadius("no feasible truncation level (radius too small)")
    lo, hi = 1, d  # feasible(lo), not feasible(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _apply_shift(gamma: np.ndarray, opts: SolverOptions) -> np.ndarray:
    shift = opts.shift
    if opts.auto_shift:
        lam_min = float(np.linalg.eigvalsh(gamma)[0])
        if lam_min < 0.0:
            shift += -lam_min * (1.0 + 1e-3)
    if shift > 0.0:
        return gamma + shift * np.eye(gamma.shape[0])
    return gamma


def shift_to_psd(matrix, margin: float = 1e-3) -> tuple[np.ndarray, float]:
    """Add ``max(0, -lambda_min) * (1 + margin)`` times the identity.

    Returns the (possibly unchanged) matrix and the shift applied. The
    shift leaves eigenvectors untouched, so sparse-PCA results computed on
    the shifted matrix estimate the same directions.
    """
    g = _as_symmetric(matrix)
    lam_min = float(np.linalg.eigvalsh(g)[0])
    if lam_min >= 0.0:
        return g, 0.0
    shift = -lam_min * (1.0 + margin)
    return g + shift * np.eye(g.shape[0]), shift


def _power_iteration(gamma: np.ndarray, start: np.ndarray, tol: float, max_iters: int):
    x = start / np.linalg.norm(start)
    converged = False
    iterations = 0
    for t in range(max_iters):
        y = gamma @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return x, 0.0, False, t
        xn = y / ny
        diff = _sign_aware_diff(xn, x)
        x = xn
        iterations = t + 1
        if diff <= tol:
            converged = True
            break
    value = float(x @ (gamma @ x))
    return x, value, converged, iterations


def power_init(gamma, tol: float = 1e-8, max_iters: int = 1000) -> PowerIterationResult:
    """Leading eigenvector by plain power iteration with a deterministic start.

    Starts at the normalized all-ones vector; if that start lies in the
    null space, or the run converges to a non-dominant eigenvalue (detected
    by a second run on the deflated matrix), it restarts once from a
    deterministic perturbation. A degenerate leading eigenvalue (no
    spectral gap) is reported as ``converged = False``.
    """
    g = _as_symmetric(gamma)
    d = g.shape[0]
    if not np.any(g):
        raise InvalidInput("gamma must be nonzero")
    ones = np.ones(d) / np.sqrt(d)
    ramp = 1.0 + np.arange(d) / d
    ramp /= np.linalg.norm(ramp)
    scale = float(np.max(np.abs(g)))

    def run(start):
        if np.linalg.norm(g @ start) <= 1e-12 * scale:
            start = ramp
        vec, val, conv, iters = _power_iteration(g, start, tol, max_iters)
        deflated = deflate(g, vec / np.linalg.norm(vec))
        _, val2, _, iters2 = _power_iteration(deflated, ramp, tol, max_iters)
        return vec, val, conv, iters + iters2, val2

    vec, val, conv, iters, val2 = run(ones)
    if abs(val2) > abs(val) + tol * max(1.0, abs(val)):
        # the first start was (numerically) orthogonal to the leading space
        vec, val, conv, iters, val2 = run((ones + ramp) / np.linalg.norm(ones + ramp))
    dominant = abs(val) - abs(val2) > tol * max(1.0, abs(val))
    return PowerIterationResult(
        vector=_fix_sign(vec),
        value=val,
        converged=bool(conv and dominant),
        iterations=iters,
    )


def resolve_init(gamma, kind: str) -> np.ndarray:
    """Compute a named initialization vector on a (conditioned) matrix.

    Useful when one init is shared across a whole tuning grid; pass the
    result as ``SolverOptions.init``.
    """
    g = _as_symmetric(gamma)
    return _resolve_init(g, SolverOptions(init=kind), default=kind)


def _resolve_init(working: np.ndarray, opts: SolverOptions, default: str) -> np.ndarray:
    init = opts.init if opts.init is not None else default
    if isinstance(init, (np.ndarray, list, tuple)):
        v = np.ascontiguousarray(init, dtype=float)
        if v.shape != (working.shape[0],):
            raise InvalidVector(f"init vector must have length {working.shape[0]}")
        norm = np.linalg.norm(v)
        if not np.all(np.isfinite(v)) or norm == 0.0:
            raise InvalidVector("init vector must be finite and nonzero")
        return v / norm
    if init == "power-method":
        return power_init(working).vector
    if init == "spca":
        scale = float(np.mean(np.diag(working)))
        try:
            result = spca_leading(
                working,
                delta1=INIT_SPCA_RIDGE,
                delta2=INIT_SPCA_L1 * max(scale, np.finfo(float).tiny),
                opts=SolverOptions(init="power-method", max_iters=50, conv_tol=1e-6),
            )
            return result.vector
        except (AllZeroSolution, DegenerateIterate):
            return power_init(working).vector
    raise InvalidInput(f"unknown init {init!r}")


def _qtpm_python(working, x0, opts: SolverOptions, record_iterates: bool):
    d = working.shape[0]
    theta = x0.copy()
    trace = []
    iterates = [] if record_iterates else None
    converged = False
    iterations = 0
    k0 = int(opts.radius) if opts.q == 0.0 else 0
    y = working @ theta
    for t in range(opts.max_iters):
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise DegenerateIterate("matrix-vector product vanished")
        x = y / ny
        if opts.q == 0.0:
            idx = np.argsort(-np.abs(x), kind="stable")[:k0]
            xt = np.zeros(d)
            xt[idx] = x[idx]
            xt /= np.linalg.norm(xt)
        else:
            if np.sum(np.abs(x) ** opts.q) <= opts.radius:
                xt = x
            else:
                k = find_truncation_level(x, opts.q, opts.radius)
                idx = np.argsort(-np.abs(x), kind="stable")[:k]
                xt = np.zeros(d)
                xt[idx] = x[idx]
                xt /= np.linalg.norm(xt)
        diff = _sign_aware_diff(xt, theta)
        theta = xt
        y = working @ theta
        trace.append(float(theta @ y))
        if record_iterates:
            iterates.append(theta.copy())
        iterations = t + 1
        if diff <= opts.conv_tol:
            converged = True
            break
    return theta, iterations, converged, np.asarray(trace), iterates


def truncated_power(gamma, opts: SolverOptions, record_iterates: bool = False) -> SparseEigenResult:
    """lq-constrained truncated power method.

    Iterates ``x = G theta / ||G theta||`` and projects back onto the
    sphere-and-ball constraint. With ``q = 0`` this is the classic top-k
    truncated power update; with ``0 < q <= 1`` the step keeps the largest
    truncation level still inside the ball (no truncation when the iterate
    already satisfies it). Indefinite inputs can break the monotone-ascent
    property; pass ``shift``/``auto_shift`` to restore it.
    """
    g = _as_symmetric(gamma)
    d = g.shape[0]
    if opts.radius is None:
        raise InvalidRadius("opts.radius is required")
    if opts.q == 0.0:
        k = opts.radius
        if k != int(k) or not 1 <= int(k) <= d:
            raise InvalidRadius(f"q = 0 requires an integer k in [1, {d}], got {k}")
    elif opts.radius <= 1.0:
        raise InvalidRadius(f"q > 0 requires radius > 1, got {opts.radius}")
    working = _apply_shift(g, opts)
    x0 = _resolve_init(working, opts, default="spca")

    if opts.q == 0.0 and not record_iterates:
        theta, iterations, converged, trace, status = _kernels.tpower_loop(
            np.ascontiguousarray(working),
            np.ascontiguousarray(x0),
            int(opts.radius),
            opts.conv_tol,
            opts.max_iters,
        )
        if status == _kernels.STATUS_ZERO_PRODUCT:
            raise DegenerateIterate("matrix-vector product vanished")
        iterates = None
    else:
        theta, iterations, converged, trace, iterates = _qtpm_python(
            working, x0, opts, record_iterates
        )

    theta = _fix_sign(theta)
    return SparseEigenResult(
        vector=theta,
        support=np.flatnonzero(theta),
        iterations=iterations,
        objective=float(theta @ (g @ theta)),
        converged=converged,
        objective_trace=trace,
        iterates=iterates,
    )


def _l1_unit_argmax(a: np.ndarray, delta: float) -> np.ndarray:
    """argmax of ``v' a`` over ``||v||_1 <= delta`` and ``||v||_2 <= 1``.

    The maximizer is a renormalized soft-thresholding ``S(a, lam)`` of the
    input; the threshold is bisected until the l1 constraint holds with
    equality when active. When tied maxima make the constraint unreachable
    within the soft-threshold family, falls back to the signed basis vector
    of the first largest entry.
    """
    na = np.linalg.norm(a)
    if na == 0.0:
        raise DegenerateIterate("matrix-vector product vanished")
    v = a / na
    if np.sum(np.abs(v)) <= delta:
        return v
    lo, hi = 0.0, float(np.max(np.abs(a)))
    for _ in range(THRESHOLD_BISECTIONS):
        mid = (lo + hi) / 2.0
        s = np.sign(a) * np.maximum(np.abs(a) - mid, 0.0)
        ns = np.linalg.norm(s)
        if ns > 0.0 and np.sum(np.abs(s)) <= delta * ns:
            hi = mid
        else:
            lo = mid
    s = np.sign(a) * np.maximum(np.abs(a) - hi, 0.0)
    ns = np.linalg.norm(s)
    if ns == 0.0:
        lead = int(np.argmax(np.abs(a)))
        out = np.zeros_like(a)
        out[lead] = np.sign(a[lead])
        return out
    return s / ns


def pmd_rank_one(gamma, delta: float, opts: SolverOptions | None = None) -> SparseEigenResult:
    """Rank-one penalized decomposition under l1/l2 constraints.

    Alternates the two half-problems ``v = argmax v' G w`` and
    ``w = argmax v' G w`` over ``||.||_1 <= delta``, ``||.||_2 <= 1`` and
    returns the ``w`` factor. ``delta`` must lie in [1, sqrt(d)]: below 1
    no unit vector is feasible, above sqrt(d) the constraint is vacuous.
    """
    opts = opts or SolverOptions()
    g = _as_symmetric(gamma)
    d = g.shape[0]
    if delta < 1.0:
        raise InvalidRadius(f"delta must be at least 1, got {delta}")
    if delta > np.sqrt(d) * (1 + 1e-12):
        raise InvalidRadius(f"delta must be at most sqrt(d) = {np.sqrt(d):g}, got {delta}")
    working = _apply_shift(g, opts)
    w = _resolve_init(working, opts, default="power-method")
    trace = []
    converged = False
    iterations = 0
    for t in range(opts.max_iters):
        v = _l1_unit_argmax(working @ w, delta)
        w_new = _l1_unit_argmax(working @ v, delta)
        diff = _sign_aware_diff(w_new, w)
        w = w_new
        trace.append(float(w @ (working @ w)))
        iterations = t + 1
        if diff <= opts.conv_tol:
            converged = True
            break
    w = _fix_sign(w)
    return SparseEigenResult(
        vector=w,
        support=np.flatnonzero(w),
        iterations=iterations,
        objective=float(w @ (g @ w)),
        converged=converged,
        objective_trace=np.asarray(trace),
    )


def spca_leading(
    gamma, delta1: float, delta2: float, opts: SolverOptions | None = None
) -> SparseEigenResult:
    """Regression-style sparse leading eigenvector.

    Alternates (a) the elastic-net problem
    ``min_w (v - w)' G (v - w) + delta1 ||w||_2^2 + delta2 ||w||_1``
    solved by cyclic coordinate descent, and (b) ``v = G w / ||G w||``;
    returns ``w / ||w||_2``. ``gamma`` should be PSD (project or shift
    first), otherwise the inner problem may be nonconvex. Raises
    :class:`AllZeroSolution` when ``delta2`` shrinks every coordinate away.
    """
    opts = opts or SolverOptions()
    g = _as_symmetric(gamma)
    d = g.shape[0]
    if delta1 < 0 or delta2 < 0:
        raise InvalidInput("penalties must be nonnegative")
    working = _apply_shift(g, opts)
    A = working + delta1 * np.eye(d)
    if np.any(np.diag(A) <= 0.0):
        raise InvalidInput("diagonal of gamma + delta1*I must be positive (is gamma PSD?)")
    v = _resolve_init(working, opts, default="power-method")
    w = v.copy()
    prev = None
    trace = []
    converged = False
    iterations = 0
    A = np.ascontiguousarray(A)
    for t in range(opts.max_iters):
        b = working @ v
        w, _, _ = _kernels.enet_cd(A, b, delta2 / 2.0, w, CD_TOL, CD_MAX_SWEEPS)
        if not np.any(w):
            raise AllZeroSolution("l1 penalty removed every coordinate; reduce delta2")
        wn = w / np.linalg.norm(w)
        y = working @ w
        ny = np.linalg.norm(y)
        if ny == 0.0:
            raise DegenerateIterate("matrix-vector product vanished")
        v = y / ny
        trace.append(float(wn @ (working @ wn)))
        iterations = t + 1
        if prev is not None and _sign_aware_diff(wn, prev) <= opts.conv_tol:
            prev = wn
            converged = True
            break
        prev = wn
    wn = _fix_sign(prev)
    return SparseEigenResult(
        vector=wn,
        support=np.flatnonzero(wn),
        iterations=iterations,
        objective=float(wn @ (g @ wn)),
        converged=converged,
        objective_trace=np.asarray(trace),
    )


def deflate(gamma, v) -> np.ndarray:
    """Orthogonal deflation ``(I - v v') G (I - v v')`` for unit-norm ``v``."""
    g = _as_symmetric(gamma)
    vec = np.asarray(v, dtype=float)
    if vec.shape != (g.shape[0],):
        raise InvalidVector("v must match the matrix dimension")
    if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
        raise InvalidVector("v must be unit norm to 1e-10")
    gv = g @ vec
    c = float(vec @ gv)
    out = g - np.outer(vec, gv) - np.outer(gv, vec) + c * np.outer(vec, vec)
    return (out + out.T) / 2.0


def solve_component(
    gamma,
    method: str,
    opts: SolverOptions | None = None,
    *,
    delta: float | None = None,
    delta1: float | None = None,
    delta2: float | None = None,
) -> SparseEigenResult:
    """Dispatch a single sparse-eigenvector solve by method name."""
    opts = opts or SolverOptions()
    if method in ("tpower", "qtpm"):
        if method == "tpower" and opts.q != 0.0:
            raise InvalidInput("method 'tpower' requires q = 0; use 'qtpm' for q > 0")
        return truncated_power(gamma, opts)
    if method == "pmd":
        if delta is None:
            raise InvalidInput("method 'pmd' requires delta")
        return pmd_rank_one(gamma, delta, opts)
    if method == "spca":
        if delta2 is None:
            raise InvalidInput("method 'spca' requires delta2")
        return spca_leading(gamma, delta1 if delta1 is not None else 0.0, delta2, opts)
    raise InvalidInput(f"unknown method {method!r}; expected one of {METHODS}")


def top_m_eigenvectors(
    gamma,
    m: int,
    method: str = "tpower",
    opts: SolverOptions | None = None,
    *,
    delta: float | None = None,
    delta1: float | None = None,
    delta2: float | None = None,
) -> list[SparseEigenResult]:
    """First m sparse eigenvectors via sequential deflation.

    Component i is computed on the (i-1)-times deflated matrix, so
    successive vectors are numerically near-orthogonal whenever the solver
    converges.
    """
    g = _as_symmetric(gamma)
    if not 1 <= m <= g.shape[0]:
        raise InvalidInput(f"m must lie in [1, {g.shape[0]}], got {m}")
    results = []
    current = g
    for _ in range(m):
        res = solve_component(current, method, opts, delta=delta, delta1=delta1, delta2=delta2)
        results.append(res)
        current = deflate(current, res.vector)
    return results
