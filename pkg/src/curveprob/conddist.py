"""Conditional-distribution estimators for curve responses.

Both estimators turn a fitted regression and a covariate into an ensemble
of plausible response curves: the bootstrap variant shifts the fitted mean
by each in-sample residual, the Gaussian variant adds simulated noise with
the residuals' covariance. Every probability is the fraction of the
ensemble falling in the event set, so the estimates behave like a
probability measure (bounded, complement-additive, monotone in the event)
by construction.

On top of the ensembles sit quantile estimation over monotone families and
the calibration of uniform prediction bands.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .curves import Curve, Covariate, Grid
from .errors import DegenerateInputError, RangeExhaustedError, UsageError
from .events import EventSet, MonotoneFamily, contains_batch, uniform_band
from .flm import FittedFLM, predict
from .rng import substream
from .spectral import SpectralPair

DEFAULT_MC_SIZE = 2000
RELATIVE_RANK_FLOOR = 1e-12  # keep noise eigenvalues above this fraction of the top one
SIGMA_FLOOR = 1e-8           # flood pointwise noise sd at this fraction of its maximum


@dataclass(frozen=True)
class CondProbEstimate:
    """A conditional probability estimate, always an ensemble fraction."""

    value: float
    method: str              # "boot" | "gauss"
    n_used: int
    count: int
    seed: int = None         # gauss only
    status: str = "ok"       # "ok" | "degenerate"


@dataclass(frozen=True)
class GaussSampler:
    """Karhunen-Loeve sampler for mean-zero Gaussian noise curves.

    Draws combine the retained eigenpairs of the noise covariance with
    independent standard normals; conditional on the spectrum the draws
    have mean zero and exactly that covariance.
    """

    grid: Grid
    spectrum: SpectralPair
    rank: int
    rng_seed: int

    @staticmethod
    def from_spectrum(grid: Grid, spectrum: SpectralPair, rng_seed: int) -> "GaussSampler":
        lam = spectrum.eigenvalues
        top = float(lam[0]) if lam.size else 0.0
        rank = int(np.count_nonzero(lam > RELATIVE_RANK_FLOOR * top)) if top > 0 else 0
        return GaussSampler(grid=grid, spectrum=spectrum, rank=rank, rng_seed=int(rng_seed))

    def draw_matrix(self, count: int, rng=None) -> np.ndarray:
        """(count, D+1) matrix of noise curves as raw samples."""
        if count < 1:
            raise UsageError(f"count must be >= 1, got {count}")
        if self.rank == 0:
            return np.zeros((count, self.grid.size))
        rng = rng if rng is not None else substream(self.rng_seed)
        lam, vecs = self.spectrum.leading(self.rank)
        z = rng.standard_normal((count, self.rank))
        weighted = (z * np.sqrt(lam)) @ vecs.T
        return weighted / self.grid.quad_weights_sqrt()


def sample_noise(sampler: GaussSampler, count: int) -> list:
    """i.i.d. noise curves from the sampler's own seed."""
    return [Curve(sampler.grid, row) for row in sampler.draw_matrix(count)]


def noise_sampler(model: FittedFLM, seed: int) -> GaussSampler:
    return GaussSampler.from_spectrum(model.grid, model.noise_spectrum, seed)


def _boot_ensemble(model: FittedFLM, x: Covariate) -> np.ndarray:
    center = predict(model, x).values
    return center + model.residual_matrix


def _gauss_ensemble(model: FittedFLM, x: Covariate, mc_size: int, seed: int) -> tuple:
    """(ensemble matrix, degenerate flag)."""
    center = predict(model, x).values
    sampler = noise_sampler(model, seed)
    if sampler.rank == 0:
        warnings.warn(
            "noise covariance has rank zero; the Gaussian estimate degenerates "
            "to an indicator of the fitted mean",
            stacklevel=3,
        )
        return center[np.newaxis, :], True
    return center + sampler.draw_matrix(mc_size), False


def boot_prob(model: FittedFLM, x: Covariate, event: EventSet) -> CondProbEstimate:
    """Fraction of residual-shifted fitted means that fall in the event."""
    ensemble = _boot_ensemble(model, x)
    count = int(np.count_nonzero(contains_batch(event, ensemble, model.grid)))
    n = ensemble.shape[0]
    return CondProbEstimate(value=count / n, method="boot", n_used=n, count=count)


def gauss_prob(
    model: FittedFLM,
    x: Covariate,
    event: EventSet,
    mc_size: int = DEFAULT_MC_SIZE,
    seed: int = 0,
) -> CondProbEstimate:
    """Monte-Carlo fraction of Gaussian-noise-shifted fitted means in the event."""
    if mc_size < 1:
        raise UsageError(f"mc_size must be >= 1, got {mc_size}")
    ensemble, degenerate = _gauss_ensemble(model, x, mc_size, seed)
    hits = int(np.count_nonzero(contains_batch(event, ensemble, model.grid)))
    if degenerate:
        count = hits * mc_size  # indicator replicated over the notional draws
    else:
        count = hits
    return CondProbEstimate(
        value=count / mc_size,
        method="gauss",
        n_used=mc_size,
        count=count,
        seed=int(seed),
        status="degenerate" if degenerate else "ok",
    )


def _ensemble_for(model, x, method, mc_size, seed) -> np.ndarray:
    if method == "boot":
        return _boot_ensemble(model, x)
    if method == "gauss":
        return _gauss_ensemble(model, x, mc_size, seed)[0]
    raise UsageError(f"method must be 'boot' or 'gauss', got {method!r}")


def quantile_over_family(
    model: FittedFLM,
    x: Covariate,
    family: MonotoneFamily,
    p: float,
    method: str = "boot",
    mc_size: int = DEFAULT_MC_SIZE,
    seed: int = 0,
    tol: float = None,
) -> float:
    """Smallest family parameter whose estimated probability reaches p.

    The search discretizes the family range at resolution ``tol`` (default
    1e-4 of the range) and binary-searches the left-most grid point with
    estimate >= p, reusing one fixed ensemble so the profile is exactly
    monotone. Decreasing families are searched from the other end and the
    largest parameter still reaching p is returned.
    """
    if not 0.0 < p < 1.0:
        raise UsageError(f"p must lie in (0, 1), got {p}")
    lo, hi = family.lo, family.hi
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise UsageError("quantile search needs a bounded family range")
    tol = tol if tol is not None else 1e-4 * (hi - lo)
    if tol <= 0:
        raise UsageError(f"tolerance must be positive, got {tol}")

    ensemble = _ensemble_for(model, x, method, mc_size, seed)
    m = ensemble.shape[0]
    n_steps = int(np.ceil((hi - lo) / tol))

    def point(i: int) -> float:
        return hi if i == n_steps else lo + i * (hi - lo) / n_steps

    def estimate(xi: float) -> float:
        inside = contains_batch(family.at(xi), ensemble, model.grid)
        return np.count_nonzero(inside) / m

    if family.direction == "increasing":
        if estimate(hi) < p:
            raise RangeExhaustedError(
                f"estimate never reaches p={p} on [{lo}, {hi}]",
                boundary_estimate=estimate(hi),
            )
        if estimate(lo) >= p:
            return float(lo)
        lo_i, hi_i = 0, n_steps  # invariant: estimate at hi_i >= p, at lo_i < p
        while hi_i - lo_i > 1:
            mid = (lo_i + hi_i) // 2
            if estimate(point(mid)) >= p:
                hi_i = mid
            else:
                lo_i = mid
        return float(point(hi_i))

    if estimate(lo) < p:
        raise RangeExhaustedError(
            f"estimate never reaches p={p} on [{lo}, {hi}]",
            boundary_estimate=estimate(lo),
        )
    if estimate(hi) >= p:
        return float(hi)
    lo_i, hi_i = 0, n_steps  # invariant: estimate at lo_i >= p, at hi_i < p
    while hi_i - lo_i > 1:
        mid = (lo_i + hi_i) // 2
        if estimate(point(mid)) >= p:
            lo_i = mid
        else:
            hi_i = mid
    return float(point(lo_i))


@dataclass(frozen=True)
class BandCalibration:
    """Studentized-sup quantiles defining a uniform prediction band."""

    sigma: Curve = field(repr=False)
    lower_quantile: float  # L, from the signed minimum statistic
    upper_quantile: float  # U, from the signed maximum statistic
    nominal: float
    method: str


def calibrate_uniform_band(
    model: FittedFLM,
    x: Covariate,
    nominal: float,
    method: str = "boot",
    mc_size: int = DEFAULT_MC_SIZE,
    seed: int = 0,
    literal_abs: bool = False,
) -> tuple[BandCalibration, EventSet]:
    """Calibrate {fitted mean + L*sigma <= y <= fitted mean + U*sigma}.

    sigma is the pointwise residual standard deviation. Per noise draw
    (residual for 'boot', simulated for 'gauss') the signed studentized
    extremes min_t eps/sigma and max_t eps/sigma are collected; L and U are
    their alpha/2 and 1-alpha/2 quantiles, which brackets the band below
    and above the mean for symmetric noise. ``literal_abs`` instead takes
    both quantiles from the one-sided statistic max_t |eps|/sigma.
    """
    if not 0.0 < nominal < 1.0:
        raise UsageError(f"nominal coverage must lie in (0, 1), got {nominal}")
    alpha = 1.0 - nominal
    center = predict(model, x)

    sigma = model.noise_std()
    if not np.all(np.isfinite(sigma)):
        raise DegenerateInputError("residual standard deviation is not finite")
    peak = float(np.max(sigma))
    if peak == 0.0:
        zero = Curve.constant(model.grid, 0.0)
        cal = BandCalibration(sigma=zero, lower_quantile=0.0, upper_quantile=0.0,
                              nominal=nominal, method=method)
        return cal, uniform_band(center, zero, zero)
    sigma = np.maximum(sigma, SIGMA_FLOOR * peak)

    if method == "boot":
        draws = model.residual_matrix
    elif method == "gauss":
        draws = noise_sampler(model, seed).draw_matrix(mc_size)
    else:
        raise UsageError(f"method must be 'boot' or 'gauss', got {method!r}")

    ratios = draws / sigma
    if literal_abs:
        stat = np.max(np.abs(ratios), axis=1)
        lo_q = float(np.quantile(stat, alpha / 2))
        hi_q = float(np.quantile(stat, 1 - alpha / 2))
    else:
        lo_q = float(np.quantile(np.min(ratios, axis=1), alpha / 2))
        hi_q = float(np.quantile(np.max(ratios, axis=1), 1 - alpha / 2))

    sigma_curve = Curve(model.grid, sigma)
    cal = BandCalibration(sigma=sigma_curve, lower_quantile=lo_q, upper_quantile=hi_q,
                          nominal=nominal, method=method)
    band = uniform_band(
        center,
        Curve(model.grid, -lo_q * sigma),  # band floor = center + L * sigma
        Curve(model.grid, hi_q * sigma),
    )
    return cal, band
