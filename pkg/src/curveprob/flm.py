"""Truncated principal-component regression for curve responses.

The fitted object inverts the covariate covariance on its leading
principal directions only, stores the in-sample residual curves, and the
spectrum of their covariance. Those three pieces are exactly what the
downstream conditional-distribution estimators consume.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .curves import Covariate, Curve, Grid
from .errors import DegenerateInputError, StructureError, UsageError
from .spectral import (
    CovarianceOperator,
    SpectralPair,
    eigendecompose,
    truncation_pve,
    truncation_threshold,
)

MODEL_FORMAT = "curveprob-flm"
MODEL_VERSION = 1


def default_m_n(n: int) -> float:
    """Default eigenvalue-threshold tuning sequence, 5 * n**0.45."""
    return 5.0 * float(n) ** 0.45


@dataclass(frozen=True)
class TruncationRule:
    """How many principal directions the fit keeps.

    kind 'threshold' keeps eigenvalues above top/m_n (or above 1/m_n when
    relative=False); 'pve' keeps the smallest count reaching variance share
    v; 'fixed' keeps exactly k.
    """

    kind: str
    m_n: float | None = None  # None means the default 5 * n**0.45
    relative: bool = True
    v: float | None = None
    k: int | None = None

    @staticmethod
    def threshold(m_n: float | None = None, relative: bool = True) -> "TruncationRule":
        return TruncationRule(kind="threshold", m_n=m_n, relative=relative)

    @staticmethod
    def pve(v: float) -> "TruncationRule":
        return TruncationRule(kind="pve", v=v)

    @staticmethod
    def fixed(k: int) -> "TruncationRule":
        return TruncationRule(kind="fixed", k=k)

    def select(self, spectrum: SpectralPair, n: int) -> int:
        if self.kind == "threshold":
            m_n = self.m_n if self.m_n is not None else default_m_n(n)
            return truncation_threshold(spectrum, m_n, relative=self.relative)
        if self.kind == "pve":
            return truncation_pve(spectrum, self.v)
        if self.kind == "fixed":
            if self.k is None or self.k < 1:
                raise UsageError("fixed truncation needs k >= 1")
            if spectrum.rank == 0:
                raise DegenerateInputError("cannot truncate an all-zero spectrum")
            return min(self.k, spectrum.rank)
        raise UsageError(f"unknown truncation rule {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "m_n": self.m_n, "relative": self.relative,
                "v": self.v, "k": self.k}

    @staticmethod
    def from_dict(d: dict) -> "TruncationRule":
        return TruncationRule(kind=d["kind"], m_n=d.get("m_n"),
                              relative=bool(d.get("relative", True)),
                              v=d.get("v"), k=d.get("k"))

    @staticmethod
    def parse(text: str) -> "TruncationRule":
        """Parse CLI forms like 'pve:0.85', 'threshold:mn=12', 'threshold:auto',
        'threshold:mn=12,absolute', 'fixed:3'."""
        kind, _, rest = text.partition(":")
        kind = kind.strip().lower()
        if kind == "pve":
            return TruncationRule.pve(float(rest))
        if kind == "fixed":
            return TruncationRule.fixed(int(rest))
        if kind == "threshold":
            m_n, relative = None, True
            for piece in filter(None, (p.strip() for p in rest.split(","))):
                if piece == "auto":
                    m_n = None
                elif piece == "absolute":
                    relative = False
                elif piece == "relative":
                    relative = True
                elif piece.startswith("mn="):
                    m_n = float(piece[3:])
                else:
                    raise UsageError(f"unknown threshold option {piece!r}")
            return TruncationRule.threshold(m_n, relative=relative)
        raise UsageError(f"unknown truncation rule {text!r}")


@dataclass(frozen=True)
class RegressionSample:
    """Aligned response curves and covariates."""

    ys: tuple
    xs: tuple

    def __post_init__(self):
        ys, xs = tuple(self.ys), tuple(self.xs)
        if len(ys) != len(xs):
            raise UsageError(f"sample length mismatch: {len(ys)} vs {len(xs)}")
        if len(ys) < 2:
            raise UsageError("regression needs at least 2 observations")
        d = {y.grid.resolution for y in ys}
        if len(d) != 1:
            raise StructureError("all responses must share one grid")
        structures = {x.structure() for x in xs}
        if len(structures) != 1:
            raise StructureError("all covariates must share one structure")
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "xs", xs)

    def __len__(self) -> int:
        return len(self.ys)


@dataclass(frozen=True)
class LagDesign:
    """Bookkeeping for an autoregressive design built from a series."""

    order: int
    n_exog_curves: int
    n_exog_scalars: int
    response_indices: tuple  # position in the raw series of each response

    @property
    def n_effective(self) -> int:
        return len(self.response_indices)


@dataclass(frozen=True)
class FittedFLM:
    """Everything the conditional-distribution estimators need.

    ``coef_w`` maps weighted covariate coordinates to weighted response
    coordinates. ``residual_matrix`` holds the raw residual curves row-wise;
    ``noise_spectrum`` is the eigendecomposition of their (mean-centered)
    covariance operator.
    """

    grid: Grid
    n_curve_parts: int
    n_scalars: int
    coef_w: np.ndarray = field(repr=False)
    n_components: int = 0
    covariate_spectrum: SpectralPair = None
    residual_matrix: np.ndarray = field(repr=False, default=None)
    noise_spectrum: SpectralPair = None
    x_mean_coords: np.ndarray = field(repr=False, default=None)
    y_mean: np.ndarray = field(repr=False, default=None)
    centered: bool = True
    dof_correction: bool = False
    truncation: TruncationRule = None

    @property
    def n_observations(self) -> int:
        return self.residual_matrix.shape[0]

    def residual_curves(self) -> list:
        return [Curve(self.grid, row) for row in self.residual_matrix]

    def noise_std(self) -> np.ndarray:
        """Pointwise standard deviation of the centered residuals, with the
        same 1/n (or 1/(n - k)) scaling as the noise covariance."""
        centered = self.residual_matrix - self.residual_matrix.mean(axis=0)
        scale = self._noise_scale()
        return np.sqrt(np.sum(centered**2, axis=0) * scale)

    def _noise_scale(self) -> float:
        n = self.n_observations
        if self.dof_correction:
            denom = n - self.n_components
            if denom <= 0:
                raise DegenerateInputError(
                    f"degrees-of-freedom correction impossible: n={n}, "
                    f"components={self.n_components}"
                )
            return 1.0 / denom
        return 1.0 / n

    def check_structure(self, x: Covariate) -> None:
        got = x.structure()
        want = (self.n_curve_parts,
                self.grid.resolution if self.n_curve_parts else None,
                self.n_scalars)
        if got != want:
            raise StructureError(f"covariate structure {got} does not match model {want}")


def fit(
    sample: RegressionSample,
    truncation: TruncationRule | None = None,
    center: bool = True,
    dof_correction: bool = False,
) -> FittedFLM:
    """Fit the truncated principal-component regression.

    Centering removes the sample means of covariates and responses before
    estimation and stores them, so predictions are affine. The residuals are
    computed through the same kernel as ``predict`` and therefore satisfy
    residual_k = y_k - predict(x_k) bit for bit.
    """
    truncation = truncation or TruncationRule.threshold()
    n = len(sample)
    grid = sample.ys[0].grid
    n_parts, _, n_scalars = sample.xs[0].structure()

    x = np.asarray([cv.coords() for cv in sample.xs])
    y = np.asarray([cu.values for cu in sample.ys])
    x_mean = x.mean(axis=0) if center else np.zeros(x.shape[1])
    y_mean = y.mean(axis=0) if center else np.zeros(y.shape[1])
    xc = x - x_mean
    yc = y - y_mean

    cov_x = CovarianceOperator(xc.T @ xc / n)
    spectrum = eigendecompose(cov_x)
    # "zero spectrum" up to round-off: compare against the raw coordinate scale,
    # so a centered constant sample (eigenvalue dust ~ eps^2) is caught
    raw_scale = float(np.mean(x**2))
    if spectrum.rank == 0 or raw_scale == 0.0 or \
            spectrum.eigenvalues[0] <= 1e-24 * raw_scale:
        raise DegenerateInputError("covariate sample has a zero covariance spectrum")
    k = truncation.select(spectrum, n)

    sw = grid.quad_weights_sqrt()
    cross = (yc * sw).T @ xc / n
    lam, vecs = spectrum.leading(k)
    coef_w = (cross @ vecs / lam) @ vecs.T

    residuals = np.empty_like(y)
    for i in range(n):
        residuals[i] = y[i] - _apply(coef_w, x_mean, y_mean, sw, x[i])

    if dof_correction and n - k <= 0:
        raise DegenerateInputError(
            f"degrees-of-freedom correction impossible: n={n}, components={k}"
        )
    scale = 1.0 / (n - k) if dof_correction else 1.0 / n
    centered_res = residuals - residuals.mean(axis=0)
    gamma = CovarianceOperator((centered_res * sw).T @ (centered_res * sw) * scale)

    return FittedFLM(
        grid=grid,
        n_curve_parts=n_parts,
        n_scalars=n_scalars,
        coef_w=coef_w,
        n_components=k,
        covariate_spectrum=spectrum,
        residual_matrix=residuals,
        noise_spectrum=eigendecompose(gamma),
        x_mean_coords=x_mean,
        y_mean=y_mean,
        centered=center,
        dof_correction=dof_correction,
        truncation=truncation,
    )


def _apply(coef_w, x_mean, y_mean, sw, x_coords) -> np.ndarray:
    return y_mean + (coef_w @ (x_coords - x_mean)) / sw


def _predict_values(model: FittedFLM, x_coords: np.ndarray) -> np.ndarray:
    return _apply(model.coef_w, model.x_mean_coords, model.y_mean,
                  model.grid.quad_weights_sqrt(), x_coords)


def predict(model: FittedFLM, x: Covariate) -> Curve:
    """Conditional-mean curve for a new covariate."""
    model.check_structure(x)
    return Curve(model.grid, _predict_values(model, x.coords()))


def build_far_design(
    series: list,
    order: int,
    exog: list | None = None,
) -> tuple[RegressionSample, LagDesign]:
    """Turn a curve series into lagged (response, covariate) pairs.

    The covariate for the response at position k stacks the curves at
    k-1, ..., k-order followed by same-position exogenous parts; the
    response never appears inside its own covariate.
    """
    if order < 1:
        raise UsageError(f"autoregressive order must be >= 1, got {order}")
    if len(series) <= order:
        raise UsageError(
            f"series of length {len(series)} is too short for order {order}"
        )
    if exog is not None and len(exog) != len(series):
        raise UsageError("exogenous covariates must align one-to-one with the series")

    ys, xs, idx = [], [], []
    for k in range(order, len(series)):
        lags = [series[k - i] for i in range(1, order + 1)]
        ex_curves, ex_scalars = (), ()
        if exog is not None:
            ex_curves = exog[k].curve_parts
            ex_scalars = exog[k].scalar_parts
        ys.append(series[k])
        xs.append(Covariate(tuple(lags) + tuple(ex_curves), ex_scalars))
        idx.append(k)

    design = LagDesign(
        order=order,
        n_exog_curves=len(ex_curves),
        n_exog_scalars=len(ex_scalars),
        response_indices=tuple(idx),
    )
    return RegressionSample(tuple(ys), tuple(xs)), design


def to_json(model: FittedFLM) -> str:
    """Serialize a fitted model to a versioned JSON document."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "grid_d": model.grid.resolution,
        "n_curve_parts": model.n_curve_parts,
        "n_scalars": model.n_scalars,
        "n_components": model.n_components,
        "centered": model.centered,
        "dof_correction": model.dof_correction,
        "truncation": model.truncation.to_dict() if model.truncation else None,
        "coef_w": model.coef_w.tolist(),
        "x_mean_coords": model.x_mean_coords.tolist(),
        "y_mean": model.y_mean.tolist(),
        "residual_matrix": model.residual_matrix.tolist(),
        "covariate_eigenvalues": model.covariate_spectrum.eigenvalues.tolist(),
        "covariate_eigenvectors": model.covariate_spectrum.eigenvectors.tolist(),
        "noise_eigenvalues": model.noise_spectrum.eigenvalues.tolist(),
        "noise_eigenvectors": model.noise_spectrum.eigenvectors.tolist(),
    }
    return json.dumps(doc)


def from_json(text: str) -> FittedFLM:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise UsageError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise UsageError(f"unsupported model version {doc.get('version')}")
    return FittedFLM(
        grid=Grid(doc["grid_d"]),
        n_curve_parts=doc["n_curve_parts"],
        n_scalars=doc["n_scalars"],
        coef_w=np.asarray(doc["coef_w"], dtype=float),
        n_components=doc["n_components"],
        covariate_spectrum=SpectralPair(
            np.asarray(doc["covariate_eigenvalues"], dtype=float),
            np.asarray(doc["covariate_eigenvectors"], dtype=float),
        ),
        residual_matrix=np.asarray(doc["residual_matrix"], dtype=float),
        noise_spectrum=SpectralPair(
            np.asarray(doc["noise_eigenvalues"], dtype=float),
            np.asarray(doc["noise_eigenvectors"], dtype=float),
        ),
        x_mean_coords=np.asarray(doc["x_mean_coords"], dtype=float),
        y_mean=np.asarray(doc["y_mean"], dtype=float),
        centered=bool(doc["centered"]),
        dof_correction=bool(doc["dof_correction"]),
        truncation=TruncationRule.from_dict(doc["truncation"]) if doc["truncation"] else None,
    )
