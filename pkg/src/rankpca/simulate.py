"""Synthetic models, Gaussian-copula sampling and data contamination.

The synthetic covariance has two sparse leading eigenvectors on disjoint
supports (flat blocks of size s) with eigenvalues 5 and 2 over an identity
background, so it is available in closed form; the matching correlation
matrix is its diagonal rescaling. Samples are drawn from the latent
Gaussian and pushed through per-coordinate strictly increasing inverse
transforms, each normalized to unit variance under a standard normal
input. Contamination replaces a fixed count of entries per column with
+/-magnitude at random positions.

All randomness flows through :func:`rng_from`: a PCG64 generator keyed by
``SeedSequence(seed, spawn_key=path)``, so replicate streams are derived
deterministically and independently from one base seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm as _stdnorm

from .errors import InvalidData, InvalidDimension, InvalidInput, NotPsd, NumericalError

OMEGA_1 = 5.0
OMEGA_2 = 2.0

# unit-variance normalization constants (closed forms; verified by quadrature)
H2_DENOM = (2.0 / math.pi) ** 0.25  # sqrt(E|Z|)
H3_CENTER = 0.5  # E Phi(Z)
H3_DENOM = math.sqrt(1.0 / 12.0)  # sqrt(Var Phi(Z))
H4_DENOM = math.sqrt(15.0)  # sqrt(E Z^6)
H5_CENTER = math.sqrt(math.e)  # E e^Z
H5_DENOM = math.sqrt(math.e**2 - math.e)  # sqrt(Var e^Z)

TRANSFORM_IDS = ("h0", "h1", "h2", "h3", "h4", "h5")


def rng_from(seed: int, *path: int) -> np.random.Generator:
    """Deterministic, splittable generator: PCG64 keyed by (seed, path)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=path)))


def inverse_transform(transform_id: str, z):
    """Evaluate one of the named inverse transforms at ``z`` (scalar or array).

    ``h0``/``h1`` are the identity; ``h2`` a signed square root, ``h3`` the
    Gaussian CDF, ``h4`` a cube, ``h5`` an exponential -- each rescaled (and
    for h3/h5 centered) so the image of a standard normal has mean zero and
    unit variance.
    """
    z = np.asarray(z, dtype=float)
    if transform_id in ("h0", "h1"):
        return z.copy()
    if transform_id == "h2":
        return np.sign(z) * np.sqrt(np.abs(z)) / H2_DENOM
    if transform_id == "h3":
        return (_stdnorm.cdf(z) - H3_CENTER) / H3_DENOM
    if transform_id == "h4":
        return z**3 / H4_DENOM
    if transform_id == "h5":
        return (np.exp(z) - H5_CENTER) / H5_DENOM
    raise InvalidInput(f"unknown transform {transform_id!r}")


@lru_cache(maxsize=1)
def quadrature_constants() -> dict:
    """Normalization constants recomputed by adaptive quadrature.

    Returns the quadrature values keyed by a short description. The closed
    forms above are authoritative; :func:`verify_constants` checks agreement
    to 1e-6 and this function exists so the check is independent of them.
    """
    phi = _stdnorm.pdf
    root_e = math.sqrt(math.e)
    norm_const = 1.0 / math.sqrt(2.0 * math.pi)

    def integral(f):
        val, _ = quad(f, -np.inf, np.inf)
        return val

    def exp_phi(a, t):
        # e^{a t} phi(t) with the exponents combined, so large |t| underflows
        # to zero instead of overflowing
        return norm_const * np.exp(a * t - t * t / 2.0)

    return {
        "abs_moment": integral(lambda t: abs(t) * phi(t)),
        "cdf_mean": integral(lambda t: _stdnorm.cdf(t) * phi(t)),
        "cdf_var": integral(lambda t: (_stdnorm.cdf(t) - 0.5) ** 2 * phi(t)),
        "sixth_moment": integral(lambda t: t**6 * phi(t)),
        "exp_mean": integral(lambda t: exp_phi(1.0, t)),
        "exp_var": integral(
            lambda t: exp_phi(2.0, t) - 2.0 * root_e * exp_phi(1.0, t) + math.e * phi(t)
        ),
    }


@lru_cache(maxsize=1)
def verify_constants(tol: float = 1e-6) -> bool:
    """Check the closed-form constants against quadrature to ``tol``."""
    q = quadrature_constants()
    expected = {
        "abs_moment": math.sqrt(2.0 / math.pi),
        "cdf_mean": 0.5,
        "cdf_var": 1.0 / 12.0,
        "sixth_moment": 15.0,
        "exp_mean": math.sqrt(math.e),
        "exp_var": math.e**2 - math.e,
    }
    for key, want in expected.items():
        if abs(q[key] - want) > tol:
            raise NumericalError(f"quadrature check failed for {key}: {q[key]} vs {want}")
    return True


@dataclass(frozen=True)
class TransformSet:
    """Per-coordinate inverse-transform assignment."""

    ids: tuple

    def __post_init__(self):
        verify_constants()
        bad = [t for t in self.ids if t not in TRANSFORM_IDS]
        if bad:
            raise InvalidInput(f"unknown transforms {bad}")

    @classmethod
    def identity(cls, d: int) -> "TransformSet":
        return cls(ids=("h0",) * d)

    @classmethod
    def cycled(cls, d: int) -> "TransformSet":
        """h1..h5 assigned cyclically across coordinates."""
        cycle = ("h1", "h2", "h3", "h4", "h5")
        return cls(ids=tuple(cycle[j % 5] for j in range(d)))

    @property
    def d(self) -> int:
        return len(self.ids)

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.ndim != 2 or z.shape[1] != self.d:
            raise InvalidInput(f"expected an n x {self.d} matrix")
        out = np.empty_like(z)
        for j, tid in enumerate(self.ids):
            out[:, j] = inverse_transform(tid, z[:, j])
        return out


@dataclass(frozen=True)
class ContaminationSpec:
    """Entry-replacement contamination: per column, ``floor(n * rate)``
    distinct positions become +/-magnitude with fair independent signs."""

    rate: float
    magnitude: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise InvalidInput(f"rate must lie in [0, 1), got {self.rate}")

    def count(self, n: int) -> int:
        return int(math.floor(n * self.rate))


@dataclass(frozen=True)
class SyntheticModel:
    """Closed-form two-spike model and its derived quantities.

    ``sigma`` is the latent covariance ``I + 4 u1 u1' + u2 u2'`` (top
    eigenvalues 5 and 2, all others 1); ``sigma0`` its correlation
    rescaling. ``theta1``/``theta2`` are the top correlation eigenvectors
    computed by dense eigendecomposition, sign-fixed so the largest entry
    is positive.
    """

    d: int
    s: int
    sigma: np.ndarray = field(repr=False)
    sigma0: np.ndarray = field(repr=False)
    u1: np.ndarray = field(repr=False)
    u2: np.ndarray = field(repr=False)
    theta1: np.ndarray = field(repr=False)
    theta2: np.ndarray = field(repr=False)
    sigma_eigenvalues: np.ndarray = field(repr=False)
    sigma0_eigenvalues: np.ndarray = field(repr=False)

    @property
    def support1(self) -> np.ndarray:
        return np.arange(self.s)

    @property
    def support2(self) -> np.ndarray:
        return np.arange(self.s, 2 * self.s)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    lead = int(np.argmax(np.abs(v)))
    return -v if v[lead] < 0 else v


def synthesize_model(d: int, s: int = 10, spikes: tuple = (OMEGA_1 - 1.0, OMEGA_2 - 1.0)) -> SyntheticModel:
    """Build the two-spike covariance/correlation pair in dimension d.

    ``spikes = (a1, a2)`` sets ``sigma = I + a1 u1 u1' + a2 u2 u2'``. The
    default gives covariance eigenvalues (5, 2, 1, ...); passing
    ``(5.0, 2.0)`` instead yields correlation eigenvalues exactly (4, 2.5),
    the variant the experiment harness is calibrated against.
    """
    if s < 1:
        raise InvalidDimension(f"s must be positive, got {s}")
    if d < 2 * s:
        raise InvalidDimension(f"d must be at least 2s = {2 * s}, got {d}")
    a1, a2 = float(spikes[0]), float(spikes[1])
    if a1 <= 0 or a2 <= 0 or a1 <= a2:
        raise InvalidInput(f"spikes must satisfy a1 > a2 > 0, got {spikes}")
    u1 = np.zeros(d)
    u1[:s] = 1.0 / math.sqrt(s)
    u2 = np.zeros(d)
    u2[s : 2 * s] = 1.0 / math.sqrt(s)
    sigma = np.eye(d) + a1 * np.outer(u1, u1) + a2 * np.outer(u2, u2)
    scale = 1.0 / np.sqrt(np.diag(sigma))
    sigma0 = sigma * np.outer(scale, scale)
    np.fill_diagonal(sigma0, 1.0)

    sigma_evals = np.linalg.eigvalsh(sigma)[::-1]
    evals0, evecs0 = np.linalg.eigh(sigma0)
    order = np.argsort(evals0)[::-1]
    evals0 = evals0[order]
    theta1 = _fix_sign(evecs0[:, order[0]])
    theta2 = _fix_sign(evecs0[:, order[1]])
    return SyntheticModel(
        d=d,
        s=s,
        sigma=sigma,
        sigma0=sigma0,
        u1=u1,
        u2=u2,
        theta1=theta1,
        theta2=theta2,
        sigma_eigenvalues=sigma_evals,
        sigma0_eigenvalues=evals0,
    )


def _factor(sigma0: np.ndarray) -> np.ndarray:
    """Factor L with L L' = sigma0: Cholesky fast path, spectral fallback."""
    try:
        return np.linalg.cholesky(sigma0)
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(sigma0)
        if evals[0] < -1e-8:
            raise NotPsd(f"matrix has eigenvalue {evals[0]:g} below -1e-8")
        return evecs * np.sqrt(np.maximum(evals, 0.0))


def sample_latent(sigma0, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n rows from the zero-mean Gaussian with correlation ``sigma0``."""
    sigma0 = np.asarray(sigma0, dtype=float)
    if n < 1:
        raise InvalidInput("n must be positive")
    L = _factor(sigma0)
    return rng.standard_normal((n, sigma0.shape[0])) @ L.T


def sample_gaussian_copula(
    sigma0,
    transforms: TransformSet,
    n: int,
    seed: int,
    return_latent: bool = False,
):
    """Sample a Gaussian-copula distribution with latent correlation ``sigma0``.

    Draws ``Z ~ N(0, sigma0)`` and applies each coordinate's inverse
    transform, so the strictly increasing forward maps carry X back to the
    Gaussian Z. With ``return_latent`` the (X, Z) pair is returned, which
    the experiment harness uses for its latent-data baseline. Deterministic
    given ``seed``.
    """
    sigma0 = np.asarray(sigma0, dtype=float)
    if transforms.d != sigma0.shape[0]:
        raise InvalidInput("transform count must match the matrix dimension")
    z = sample_latent(sigma0, n, rng_from(seed))
    x = transforms.apply(z)
    if return_latent:
        return x, z
    return x


def contaminate_with_rng(data, spec: ContaminationSpec, rng: np.random.Generator, collect_positions: bool = False):
    """Entry-replacement contamination driven by a caller-supplied generator.

    Per column, ``floor(n * rate)`` distinct rows are replaced with
    +/-magnitude (independent fair signs). Returns the contaminated copy,
    plus per-column position/sign records when ``collect_positions``.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise InvalidData("data must be a 2-d matrix")
    if not np.all(np.isfinite(x)):
        raise InvalidData("data contains non-finite entries")
    out = x.copy()
    n, d = x.shape
    m = spec.count(n)
    positions = [] if collect_positions else None
    if m > 0:
        for j in range(d):
            rows = rng.choice(n, size=m, replace=False)
            signs = rng.integers(0, 2, size=m) * 2 - 1
            out[rows, j] = signs * spec.magnitude
            if collect_positions:
                positions.append({"column": j, "rows": rows.tolist(), "signs": signs.tolist()})
    if collect_positions:
        return out, positions
    return out


def contaminate(data, spec: ContaminationSpec, seed: int) -> np.ndarray:
    """Replace ``floor(n * rate)`` entries per column with +/-magnitude.

    Positions are drawn without replacement within each column and signs
    are independent fair coins; deterministic given ``seed``. ``rate = 0``
    returns an unchanged copy.
    """
    return contaminate_with_rng(data, spec, rng_from(seed))
