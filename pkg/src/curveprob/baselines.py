"""Competing estimators used for benchmarking.

Both baselines regress event indicators on the covariate directly, so a
new event set means a full refit, and nothing forces their estimates to be
monotone across nested events; the benchmark harness records such
violations instead of forbidding them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .curves import Covariate
from .errors import DegenerateInputError, UsageError
from .spectral import CovarianceOperator, eigendecompose

BANDWIDTH_GRID_SIZE = 20
BANDWIDTH_SPAN = (0.05, 5.0)      # times the median pairwise distance
COEF_NORM_CAP = 1e3               # separation guard for the binomial fit
IRLS_TOL = 1e-10
IRLS_MAX_ITER = 100


# ---------------------------------------------------------------------------
# kernel regression on event indicators

@dataclass(frozen=True)
class NWEstimator:
    """Gaussian-kernel weighted average of training indicators."""

    bandwidth: float
    train_coords: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise UsageError(f"bandwidth must be positive and finite, got {self.bandwidth}")


def _coords(xs) -> np.ndarray:
    return np.asarray([x.coords() for x in xs])


def _pairwise_distances(coords: np.ndarray) -> np.ndarray:
    sq = np.sum(coords**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * coords @ coords.T
    return np.sqrt(np.maximum(d2, 0.0))


def default_bandwidth_grid(coords: np.ndarray) -> np.ndarray:
    """Log-spaced grid spanning BANDWIDTH_SPAN times the median pairwise distance."""
    dist = _pairwise_distances(coords)
    med = float(np.median(dist[np.triu_indices(len(coords), k=1)]))
    if med <= 0:
        raise DegenerateInputError("all pairwise covariate distances are zero")
    return med * np.logspace(
        np.log10(BANDWIDTH_SPAN[0]), np.log10(BANDWIDTH_SPAN[1]), BANDWIDTH_GRID_SIZE
    )


def nw_select_bandwidth(xs, labels, grid: np.ndarray = None) -> float:
    """Bandwidth minimizing leave-one-out squared error of the indicator
    regression; ties go to the smaller bandwidth."""
    labels = np.asarray(labels, dtype=float)
    if len(xs) < 3:
        raise UsageError("bandwidth selection needs at least 3 training points")
    coords = _coords(xs)
    if grid is None:
        grid = default_bandwidth_grid(coords)
    dist = _pairwise_distances(coords)

    best_h, best_err = None, np.inf
    for h in np.sort(np.asarray(grid, dtype=float)):
        k = np.exp(-0.5 * (dist / h) ** 2)
        np.fill_diagonal(k, 0.0)
        denom = k.sum(axis=1)
        n = len(xs)
        preds = np.empty(n)
        for i in range(n):
            if denom[i] > 0:
                preds[i] = k[i] @ labels / denom[i]
            else:
                others = np.delete(labels, i)
                preds[i] = others.mean()
        err = float(np.mean((labels - preds) ** 2))
        if err < best_err:
            best_h, best_err = float(h), err
    return best_h


def nw_fit(xs, labels, bandwidth: float = None, grid: np.ndarray = None) -> NWEstimator:
    labels = np.asarray(labels, dtype=float)
    if len(xs) == 0:
        raise UsageError("kernel regression needs at least one training point")
    if bandwidth is None:
        bandwidth = nw_select_bandwidth(xs, labels, grid)
    return NWEstimator(bandwidth=bandwidth, train_coords=_coords(xs), labels=labels)


def nw_prob(est: NWEstimator, x: Covariate) -> float:
    """Kernel-weighted mean of training indicators at the query point."""
    diffs = est.train_coords - x.coords()
    dist = np.sqrt(np.sum(diffs**2, axis=1))
    with np.errstate(over="ignore"):  # ratio overflow just underflows the weight
        weights = np.exp(-0.5 * (dist / est.bandwidth) ** 2)
    total = weights.sum()
    if total <= 0.0:
        warnings.warn(
            "all kernel weights underflowed; falling back to the unweighted mean",
            stacklevel=2,
        )
        return float(est.labels.mean())
    return float(weights @ est.labels / total)


# ---------------------------------------------------------------------------
# binomial regression on principal-component scores

@dataclass(frozen=True)
class FGLMModel:
    """Binomial regression of event indicators on leading covariate scores."""

    link: str
    intercept: float
    coefficients: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)        # (p, k) score directions
    x_mean_coords: np.ndarray = field(repr=False)
    converged: bool = True
    separation: bool = False


def _link_mean(link: str, eta: np.ndarray) -> np.ndarray:
    if link == "logit":
        return 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))
    if link == "probit":
        return norm.cdf(eta)
    raise UsageError(f"link must be 'logit' or 'probit', got {link!r}")


def _log_likelihood(y: np.ndarray, mu: np.ndarray) -> float:
    mu = np.clip(mu, 1e-12, 1 - 1e-12)
    return float(np.sum(y * np.log(mu) + (1 - y) * np.log(1 - mu)))


def fglm_fit(xs, labels, n_components: int, link: str = "logit") -> FGLMModel:
    """Maximum likelihood by iteratively reweighted least squares.

    Scores are projections of the centered covariates on the leading
    principal directions of their own sample. Detected separation (the
    coefficient norm running past COEF_NORM_CAP) is flagged and the
    coefficients are clipped to that norm.
    """
    y = np.asarray(labels, dtype=float)
    if y.min() == y.max():
        raise DegenerateInputError("binomial regression needs both label classes present")
    if n_components < 1:
        raise UsageError(f"n_components must be >= 1, got {n_components}")

    coords = _coords(xs)
    x_mean = coords.mean(axis=0)
    centered = coords - x_mean
    spectrum = eigendecompose(CovarianceOperator(centered.T @ centered / len(xs)))
    k = min(n_components, spectrum.rank)
    if k == 0:
        raise DegenerateInputError("covariate sample has a zero covariance spectrum")
    basis = spectrum.eigenvectors[:, :k]
    scores = centered @ basis

    design = np.column_stack([np.ones(len(y)), scores])
    beta = np.zeros(design.shape[1])
    loglik = _log_likelihood(y, _link_mean(link, design @ beta))
    converged = False
    separation = False

    for _ in range(IRLS_MAX_ITER):
        eta = design @ beta
        mu = _link_mean(link, eta)
        mu = np.clip(mu, 1e-10, 1 - 1e-10)
        if link == "logit":
            weight = mu * (1 - mu)
            working = eta + (y - mu) / weight
        else:
            dens = np.maximum(norm.pdf(eta), 1e-10)
            weight = dens**2 / (mu * (1 - mu))
            working = eta + (y - mu) / dens
        wd = design * weight[:, None]
        try:
            beta_new = np.linalg.solve(design.T @ wd, wd.T @ working)
        except np.linalg.LinAlgError:
            separation = True
            break
        beta = beta_new

        slope_norm = float(np.linalg.norm(beta[1:]))
        if slope_norm > COEF_NORM_CAP:
            separation = True
            beta = beta * (COEF_NORM_CAP / slope_norm)
            break

        new_loglik = _log_likelihood(y, _link_mean(link, design @ beta))
        if abs(new_loglik - loglik) < IRLS_TOL:
            loglik = new_loglik
            converged = True
            break
        loglik = new_loglik

    # certificate check: a hyperplane putting every label strictly on its
    # own side proves the data are separated, however small the coefficients
    margin = np.min((2.0 * y - 1.0) * (design @ beta))
    if margin > 0.0:
        separation = True

    if separation:
        warnings.warn("separation detected in binomial regression; coefficients clipped",
                      stacklevel=2)
    if not converged and not separation:
        warnings.warn("binomial regression did not converge", stacklevel=2)

    return FGLMModel(
        link=link,
        intercept=float(beta[0]),
        coefficients=beta[1:],
        basis=basis,
        x_mean_coords=x_mean,
        converged=converged,
        separation=separation,
    )


def fglm_prob(model: FGLMModel, x: Covariate) -> float:
    """Fitted probability at a new covariate, kept inside the open unit interval."""
    score = (x.coords() - model.x_mean_coords) @ model.basis
    eta = model.intercept + float(score @ model.coefficients)
    return float(np.clip(_link_mean(model.link, np.asarray(eta)), 1e-12, 1 - 1e-12))
