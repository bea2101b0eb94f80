"""Empirical covariance operators, their eigendecomposition, and the two
rules for choosing how many principal directions to keep.

Operators are stored as dense symmetric matrices in weighted coordinates
(see :mod:`curveprob.curves`), so a plain ``eigh`` already returns vectors
that are orthonormal in the right inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .curves import Covariate, Curve
from .errors import DegenerateInputError, StructureError, UsageError

SYMMETRY_RTOL = 1e-12
CLAMP_BUDGET = 1e-8  # total negative eigenvalue mass allowed, relative to the top eigenvalue


@dataclass(frozen=True)
class CovarianceOperator:
    """Symmetric PSD second-moment matrix in weighted coordinates."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructureError(f"covariance matrix must be square, got {m.shape}")
        scale = float(np.max(np.abs(m))) if m.size else 0.0
        if scale > 0 and float(np.max(np.abs(m - m.T))) > SYMMETRY_RTOL * scale:
            raise StructureError("covariance matrix is not symmetric within tolerance")
        if m.size and float(np.min(np.diag(m))) < -1e-12 * max(scale, 1.0):
            raise StructureError("covariance matrix has a negative diagonal entry")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectralPair:
    """Nonincreasing eigenvalues with orthonormal eigenvectors (as columns).

    Negative round-off eigenvalues arrive clamped to zero; their original
    total magnitude is kept in ``clamped_mass``. Each vector is sign-fixed
    so its first largest-magnitude coordinate is positive.
    """

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    clamped_mass: float = 0.0

    @property
    def rank(self) -> int:
        """Number of strictly positive eigenvalues."""
        return int(np.count_nonzero(self.eigenvalues > 0.0))

    def leading(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self.eigenvalues[:k], self.eigenvectors[:, :k]


def _coords_matrix(sample: Sequence[Union[Covariate, Curve]]) -> np.ndarray:
    rows = []
    for item in sample:
        if isinstance(item, Curve):
            rows.append(item.values * item.grid.quad_weights_sqrt())
        elif isinstance(item, Covariate):
            rows.append(item.coords())
        else:
            raise UsageError(f"sample items must be Curve or Covariate, got {type(item)}")
    mat = np.asarray(rows, dtype=float)
    if mat.ndim != 2:
        raise StructureError("sample items do not share a common structure")
    return mat


def empirical_covariance(
    sample: Sequence[Union[Covariate, Curve]], center: bool = True
) -> CovarianceOperator:
    """(1/n) sum of (x - mean) outer (x - mean), or the raw second moment."""
    if len(sample) == 0:
        raise UsageError("empirical_covariance needs a nonempty sample")
    x = _coords_matrix(sample)
    if center:
        x = x - x.mean(axis=0)
    return CovarianceOperator(x.T @ x / len(sample))


def empirical_cross_covariance(
    ys: Sequence[Curve], xs: Sequence[Covariate]
) -> np.ndarray:
    """(1/n) sum of y_k outer x_k as a (D+1) x p matrix in weighted coordinates."""
    if len(ys) != len(xs):
        raise UsageError(f"length mismatch: {len(ys)} responses vs {len(xs)} covariates")
    if len(ys) == 0:
        raise UsageError("empirical_cross_covariance needs a nonempty sample")
    y = _coords_matrix(ys)
    x = _coords_matrix(xs)
    return y.T @ x / len(ys)


def eigendecompose(op: CovarianceOperator) -> SpectralPair:
    """Full symmetric eigendecomposition, sorted, sign-fixed, negatives clamped.

    Rejects the operator as non-PSD when the clamped negative mass exceeds
    ``CLAMP_BUDGET`` times the top eigenvalue.
    """
    vals, vecs = np.linalg.eigh(op.matrix)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]

    top = float(vals[0]) if vals.size else 0.0
    negative = vals[vals < 0.0]
    clamped_mass = float(-np.sum(negative)) if negative.size else 0.0
    if clamped_mass > CLAMP_BUDGET * max(top, 0.0):
        raise StructureError(
            f"operator is not PSD: clamped eigenvalue mass {clamped_mass:.3e} "
            f"exceeds {CLAMP_BUDGET:.0e} of the top eigenvalue {top:.3e}"
        )
    vals = np.maximum(vals, 0.0)

    for j in range(vecs.shape[1]):
        lead = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[lead, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return SpectralPair(vals, vecs, clamped_mass)


def reconstruct(spec: SpectralPair) -> np.ndarray:
    """Sum of eigenvalue-weighted outer products; inverse of eigendecompose."""
    return (spec.eigenvectors * spec.eigenvalues) @ spec.eigenvectors.T


def truncation_threshold(
    spec: SpectralPair, m_n: float, relative: bool = True
) -> int:
    """Largest j with eigenvalue_j >= threshold, threshold = top/m_n (scale-free)
    or 1/m_n (absolute). Ties at the threshold are kept."""
    lam = spec.eigenvalues
    if lam.size == 0 or lam[0] <= 0.0:
        raise DegenerateInputError("cannot truncate an all-zero spectrum")
    if m_n < 1:
        raise UsageError(f"m_n must be >= 1, got {m_n}")
    cutoff = lam[0] / m_n if relative else 1.0 / m_n
    passing = np.nonzero(lam >= cutoff)[0]
    count = int(passing[-1]) + 1 if passing.size else 1
    return max(1, min(count, spec.rank))


def truncation_pve(spec: SpectralPair, v: float) -> int:
    """Smallest number of components whose eigenvalue share reaches v."""
    if not 0.0 < v < 1.0:
        raise UsageError(f"variance fraction must lie in (0, 1), got {v}")
    lam = spec.eigenvalues
    total = float(np.sum(lam))
    if total <= 0.0:
        raise DegenerateInputError("cannot apply the variance-share rule to a zero spectrum")
    ratios = np.cumsum(lam) / total
    passing = np.nonzero(ratios >= v)[0]
    return int(passing[0]) + 1 if passing.size else int(lam.size)
