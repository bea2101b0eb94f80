"""Simulation data-generating processes for the experiment drivers.

Three process kinds are provided:

* ``far_paparoditis`` -- the curve autoregression with kernel
  0.34*exp((t^2+s^2)/2), optional second-lag weight ``b``, and standard
  Brownian-motion noise. With b=0 a first-order fit is correctly
  specified; b=0.4 misspecifies it.
* ``far_synthetic`` -- a frozen first-order autoregression around a
  nonzero daily mean with a deliberately asymmetric kernel and smooth
  finite-rank Gaussian noise, sized so that level events near the
  ``sqrt(50)`` mark have informative probabilities. A stand-in for
  pollution-style series at desk scale.
* ``gaussian_iid`` -- independent draws of mean plus the same smooth
  noise, for estimator sanity checks.

Every simulation is a pure function of (spec, n, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..curves import Curve, Grid
from ..errors import UsageError
from ..rng import substream
from ..spectral import CovarianceOperator, eigendecompose

PAPARODITIS_SCALE = 0.34
SYNTHETIC_BURN_IN = 30

# frozen synthetic process: mean level, daily shape, kernel and noise scales
_SYN_MEAN_BASE = 6.6
_SYN_MEAN_SHAPE = (1.0, 0.45)          # amplitudes of sin(2*pi*t), cos(4*pi*t)
_SYN_KERNEL_SCALE = 1.9
_SYN_KERNEL_CENTERS = (0.75, 0.2)      # response-time and lag-time centers
_SYN_KERNEL_WIDTHS = (0.55, 2.2)       # inverse-width factors
_SYN_NOISE_WEIGHTS = (0.50, 0.28, 0.18, 0.10, 0.05, 0.025)


@dataclass(frozen=True)
class DGPSpec:
    """Parameters that pin down one simulated process.

    ``kernel_scale`` and ``noise_scale`` multiply the autoregression kernel
    and the noise draws; zeroing them collapses the recursion to pure noise
    or to the deterministic part, which the tests exploit.
    """

    kind: str
    grid: Grid
    b: float = 0.0
    burn_in: int = 50
    seed: int = 0
    kernel_scale: float = 1.0
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("far_paparoditis", "far_synthetic", "gaussian_iid"):
            raise UsageError(f"unknown DGP kind {self.kind!r}")
        if self.burn_in < 0:
            raise UsageError(f"burn_in must be >= 0, got {self.burn_in}")


def paparoditis_dgp(grid: Grid, b: float = 0.0, burn_in: int = 50, seed: int = 0) -> DGPSpec:
    return DGPSpec(kind="far_paparoditis", grid=grid, b=b, burn_in=burn_in, seed=seed)


def synthetic_dgp(grid: Grid, burn_in: int = SYNTHETIC_BURN_IN, seed: int = 0) -> DGPSpec:
    return DGPSpec(kind="far_synthetic", grid=grid, b=0.0, burn_in=burn_in, seed=seed)


def gaussian_iid_dgp(grid: Grid, seed: int = 0) -> DGPSpec:
    return DGPSpec(kind="gaussian_iid", grid=grid, b=0.0, burn_in=0, seed=seed)


def brownian_matrix(grid: Grid, count: int, rng: np.random.Generator) -> np.ndarray:
    """(count, D+1) standard Brownian paths: B(0)=0, increments N(0, 1/D)."""
    d = grid.resolution
    increments = rng.standard_normal((count, d)) * np.sqrt(1.0 / d)
    paths = np.zeros((count, d + 1))
    np.cumsum(increments, axis=1, out=paths[:, 1:])
    return paths


def simulate_brownian(grid: Grid, seed: int = 0) -> Curve:
    """One standard Brownian motion path on the grid."""
    return Curve(grid, brownian_matrix(grid, 1, substream(seed))[0])


def mean_values(spec: DGPSpec) -> np.ndarray:
    """Process mean on the grid (zero for the Brownian-driven recursion)."""
    if spec.kind == "far_paparoditis":
        return np.zeros(spec.grid.size)
    t = spec.grid.points
    a1, a2 = _SYN_MEAN_SHAPE
    return _SYN_MEAN_BASE + a1 * np.sin(2 * np.pi * t) + a2 * np.cos(4 * np.pi * t)


def kernel_matrix(spec: DGPSpec) -> np.ndarray | None:
    """Integral-operator kernel sampled on the grid, or None when absent."""
    t = spec.grid.points
    tt, ss = np.meshgrid(t, t, indexing="ij")
    if spec.kind == "far_paparoditis":
        return PAPARODITIS_SCALE * np.exp((tt**2 + ss**2) / 2.0)
    if spec.kind == "far_synthetic":
        ct, cs = _SYN_KERNEL_CENTERS
        wt, ws = _SYN_KERNEL_WIDTHS
        return _SYN_KERNEL_SCALE * np.exp(-((tt - ct) ** 2) / wt - ((ss - cs) ** 2) / ws) * ss
    return None


def synthetic_noise_basis(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """(eigenvalues, basis matrix) of the frozen smooth noise covariance.

    The basis rows are L2-orthonormal trigonometric functions, so a draw is
    a finite Karhunen-Loeve sum."""
    t = grid.points
    r2 = np.sqrt(2.0)
    basis = np.asarray([
        np.ones_like(t),
        r2 * np.sin(2 * np.pi * t),
        r2 * np.cos(2 * np.pi * t),
        r2 * np.sin(4 * np.pi * t),
        r2 * np.cos(4 * np.pi * t),
        r2 * np.sin(6 * np.pi * t),
    ])
    return np.asarray(_SYN_NOISE_WEIGHTS), basis


def noise_matrix(spec: DGPSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """(count, D+1) draws of the model error process."""
    if spec.kind == "far_paparoditis":
        draws = brownian_matrix(spec.grid, count, rng)
    else:
        weights, basis = synthetic_noise_basis(spec.grid)
        z = rng.standard_normal((count, len(weights)))
        draws = (z * np.sqrt(weights)) @ basis
    return spec.noise_scale * draws


def _step_matrix(spec: DGPSpec) -> np.ndarray:
    """Discretized integral operator: next = STEP @ previous (centered scale)."""
    kernel = kernel_matrix(spec)
    if kernel is None:
        return np.zeros((spec.grid.size, spec.grid.size))
    return spec.kernel_scale * kernel * spec.grid.quad_weights()


def simulate_far(spec: DGPSpec, n: int, seed: int | None = None, rng=None) -> list:
    """n curves from the recursion, zero-initialized with burn-in dropped."""
    if n < 1:
        raise UsageError(f"series length must be >= 1, got {n}")
    if rng is None:
        rng = substream(spec.seed if seed is None else seed)
    step = _step_matrix(spec)
    mu = mean_values(spec)
    total = spec.burn_in + n
    noise = noise_matrix(spec, total, rng)

    out = np.empty((total, spec.grid.size))
    prev1 = np.zeros(spec.grid.size)
    prev2 = np.zeros(spec.grid.size)
    for k in range(total):
        current = step @ prev1 + spec.b * prev2 + noise[k]
        out[k] = current
        prev2 = prev1
        prev1 = current
    return [Curve(spec.grid, mu + row) for row in out[spec.burn_in:]]


def conditional_mean(spec: DGPSpec, previous: Curve) -> Curve:
    """True one-step conditional mean given the previous curve.

    Only defined for first-order recursions; the two-lag process would need
    both preceding curves."""
    if spec.kind == "far_paparoditis" and spec.b != 0.0:
        raise UsageError("conditional mean given one lag is undefined when b != 0")
    mu = mean_values(spec)
    centered = previous.values - mu
    return Curve(spec.grid, mu + _step_matrix(spec) @ centered)


def conditional_draws(
    spec: DGPSpec, previous: Curve, count: int, seed: int
) -> np.ndarray:
    """Independent draws of the next curve given the previous one."""
    mean = conditional_mean(spec, previous).values
    return mean + noise_matrix(spec, count, substream(seed))


def simulate_gaussian_process(
    grid: Grid,
    seed: int,
    eigenvalues: np.ndarray = None,
    basis: np.ndarray = None,
    kernel: np.ndarray = None,
) -> Curve:
    """One mean-zero Gaussian curve from a spectrum or a covariance kernel.

    Give either (eigenvalues, basis) with L2-orthonormal basis rows, or a
    dense covariance ``kernel`` on the grid, which is eigendecomposed first.
    """
    if kernel is not None:
        if eigenvalues is not None or basis is not None:
            raise UsageError("pass either a spectrum or a kernel, not both")
        sw = grid.quad_weights_sqrt()
        op = CovarianceOperator(np.asarray(kernel, dtype=float) * np.outer(sw, sw))
        pair = eigendecompose(op)
        keep = pair.eigenvalues > 1e-12 * max(pair.eigenvalues[0], 1e-300)
        eigenvalues = pair.eigenvalues[keep]
        basis = (pair.eigenvectors[:, keep] / sw[:, None]).T
    if eigenvalues is None or basis is None:
        raise UsageError("need eigenvalues and basis, or a covariance kernel")
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if np.any(eigenvalues < 0):
        raise UsageError("eigenvalues must be nonnegative")
    z = substream(seed).standard_normal(len(eigenvalues))
    return Curve(grid, (z * np.sqrt(eigenvalues)) @ np.asarray(basis, dtype=float))


def stationary_predictors(spec: DGPSpec, count: int, seed: int) -> list:
    """Independent draws from (approximately) the stationary distribution,
    one short burned-in chain per draw."""
    return [
        simulate_far(spec, 1, rng=substream(seed, i))[0]
        for i in range(count)
    ]
