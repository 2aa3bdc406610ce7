"""Subspace models and per-snapshot anomaly detection.

Three ways to build an orthonormal basis ordered by captured variance:

* pca    -- eigendecomposition of the covariance of the row-centered traffic;
* rbad   -- QR of a power-iterated random sketch B = (Y Y^T)^q Y Phi;
* sspbad -- QR of Y Y^T T2 for one random T2 per ensemble family, keeping
            whichever candidate basis flags the most snapshots.

The first r basis columns span the normal subspace; the squared norm of
each snapshot's residual (SPE) is compared against the Q-statistic
threshold derived from the residual variance spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .ensembles import EnsembleKind, SeedSpec, ensemble_matrix, gen_gaussian
from .linalg import center_rows, householder_qr, row_variance, sym_eig

__all__ = [
    "DegenerateSpectrumError",
    "SubspaceModel",
    "QThreshold",
    "ModelSummary",
    "DetectionReport",
    "normal_quantile",
    "build_pca_model",
    "build_rbad_model",
    "build_sspbad_candidates",
    "project",
    "q_threshold",
    "spe_per_snapshot",
    "detect",
    "sspbad_select",
    "sspbad_detect",
]

METHOD_PCA = "pca"
METHOD_RBAD = "rbad"
METHOD_SSPBAD = "sspbad"
METHODS = (METHOD_PCA, METHOD_RBAD, METHOD_SSPBAD)

DEFAULT_BETA = 0.005
DEFAULT_POWER_EXPONENT = 2


class DegenerateSpectrumError(ValueError):
    """Residual variance spectrum admits no Q-statistic threshold."""


@dataclass(frozen=True)
class SubspaceModel:
    """Full orthonormal basis with per-column captured variances sorted
    descending; the first `rank` columns form the normal subspace."""

    basis: np.ndarray
    variances: np.ndarray
    rank: int
    method: str
    centered: bool
    mean: np.ndarray
    ensemble: EnsembleKind | None = None
    power_exponent: int | None = None

    def __post_init__(self) -> None:
        m = self.basis.shape[0]
        if self.basis.shape != (m, m):
            raise ValueError(f"basis must be square, got {self.basis.shape}")
        if self.variances.shape != (m,) or self.mean.shape != (m,):
            raise ValueError("variances and mean must have one entry per basis row")
        _check_rank(self.rank, m)

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    def with_rank(self, rank: int) -> "SubspaceModel":
        """Same basis and variances, different normal-subspace rank."""
        return replace(self, rank=rank)

    def summary(self) -> "ModelSummary":
        return ModelSummary(self.method, self.rank, self.ensemble, self.power_exponent)


class ModelSummary(NamedTuple):
    method: str
    rank: int
    ensemble: EnsembleKind | None
    power_exponent: int | None


@dataclass(frozen=True)
class QThreshold:
    """Q-statistic threshold on the SPE at confidence 1 - beta."""

    q_beta: float
    theta: tuple[float, float, float]
    h0: float
    c_beta: float
    beta: float


@dataclass(frozen=True)
class DetectionReport:
    """Per-snapshot SPE values and flags; threshold is None when the
    residual spectrum was degenerate (no residual energy, zero flags)."""

    spe: np.ndarray
    threshold: QThreshold | None
    flags: np.ndarray
    model_summary: ModelSummary

    @property
    def flag_count(self) -> int:
        return int(np.count_nonzero(self.flags))

    @property
    def degenerate(self) -> bool:
        return self.threshold is None


def _check_rank(rank: int, m: int) -> None:
    # rank m would leave an empty residual subspace and an undefined Q_beta
    if not 1 <= rank <= m - 1:
        raise ValueError(f"rank must be in [1, m-1] = [1, {m - 1}], got {rank}")


# Acklam's rational approximation to the standard normal quantile
# (|relative error| < 1.15e-9), polished by one Halley step to full
# double precision.
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def normal_quantile(p: float) -> float:
    """Inverse CDF of the standard normal distribution, accurate to well
    below 1e-9 for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie strictly between 0 and 1, got {p}")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    elif p <= p_high:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    # Halley refinement against the exact CDF, with the error evaluated in
    # the nearer tail to avoid cancellation
    if x < 0.0:
        err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    else:
        err = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
    density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if density == 0.0:
        return x
    u = err / density
    return x - u / (1.0 + 0.5 * x * u)


def _prepare_traffic(y: np.ndarray, center: bool) -> tuple[np.ndarray, np.ndarray]:
    if center:
        return center_rows(y)
    return y, np.zeros(y.shape[0])


def _ranked_basis_model(
    basis: np.ndarray,
    work: np.ndarray,
    rank: int,
    method: str,
    centered: bool,
    mean: np.ndarray,
    ensemble: EnsembleKind | None = None,
    power_exponent: int | None = None,
) -> SubspaceModel:
    """Order basis columns by descending captured variance of the
    projected traffic."""
    variances = row_variance(basis.T @ work)
    order = np.argsort(-variances, kind="stable")
    return SubspaceModel(
        basis=basis[:, order],
        variances=variances[order],
        rank=rank,
        method=method,
        centered=centered,
        mean=mean,
        ensemble=ensemble,
        power_exponent=power_exponent,
    )


def build_pca_model(y: np.ndarray, rank: int) -> SubspaceModel:
    """Principal-component model: eigendecomposition of the covariance of
    the row-centered traffic; basis columns are all m eigenvectors and the
    captured variances are the eigenvalues."""
    y = np.asarray(y, dtype=float)
    m, t = y.shape
    if t < 2:
        raise ValueError(f"need at least 2 snapshots to estimate a covariance, got {t}")
    _check_rank(rank, m)
    centered, mu = center_rows(y)
    cov = centered @ centered.T / (t - 1)
    cov = 0.5 * (cov + cov.T)
    eig = sym_eig(cov)
    return SubspaceModel(
        basis=eig.eigenvectors,
        variances=eig.eigenvalues,
        rank=rank,
        method=METHOD_PCA,
        centered=True,
        mean=mu,
    )


def build_rbad_model(
    y: np.ndarray,
    rank: int,
    seed: SeedSpec,
    power_exponent: int = DEFAULT_POWER_EXPONENT,
    center: bool = False,
) -> SubspaceModel:
    """Randomized-basis model: Q from the QR factorization of
    B = (Y Y^T)^q Y Phi with a Gaussian t x m test matrix Phi, columns
    reordered by captured variance.

    The traffic is used uncentered by default; pass center=True for
    variance comparisons against the pca model.
    """
    y = np.asarray(y, dtype=float)
    m, t = y.shape
    _check_rank(rank, m)
    if power_exponent < 0:
        raise ValueError(f"power_exponent must be nonnegative, got {power_exponent}")
    work, mu = _prepare_traffic(y, center)
    phi = gen_gaussian(t, m, seed, 1.0)
    b = work @ phi
    for _ in range(power_exponent):
        b = work @ (work.T @ b)
    q, _ = householder_qr(b)
    return _ranked_basis_model(
        q, work, rank, METHOD_RBAD, center, mu, power_exponent=power_exponent
    )


def build_sspbad_candidates(
    y: np.ndarray,
    rank: int,
    seed: SeedSpec,
    kinds: Iterable[EnsembleKind] | None = None,
    center: bool = False,
) -> list[SubspaceModel]:
    """One candidate basis per ensemble family: draw T2 (m x m), form
    T1 = Y^T T2 then T2 <- Y T1 (a single power-iteration step on the
    sketch), and orthonormalize by QR.

    Candidates come back in the fixed family order regardless of the order
    of `kinds`; each family draws from its own substream of `seed`.
    """
    y = np.asarray(y, dtype=float)
    m, t = y.shape
    _check_rank(rank, m)
    requested = set(EnsembleKind) if kinds is None else set(kinds)
    if not requested:
        raise ValueError("kinds must be nonempty")
    work, mu = _prepare_traffic(y, center)
    models = []
    for index, kind in enumerate(EnsembleKind):
        if kind not in requested:
            continue
        t2 = ensemble_matrix(kind, m, m, seed.split(index))
        t1 = work.T @ t2
        t2 = work @ t1
        q, _ = householder_qr(t2)
        models.append(
            _ranked_basis_model(q, work, rank, METHOD_SSPBAD, center, mu, ensemble=kind)
        )
    return models


def project(model: SubspaceModel, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split traffic into modeled and residual parts, y_hat + y_tilde == y.

    The residual is the projection onto the orthogonal complement of the
    first `rank` basis columns; for centered models the mean is removed
    before projecting and folded back into y_hat, so the residual stays
    mean-free.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[0] != model.m:
        raise ValueError(f"traffic has {y.shape[0]} rows but the model basis has {model.m}")
    p = model.basis[:, : model.rank]
    work = y - model.mean[:, None] if model.centered else y
    y_tilde = work - p @ (p.T @ work)
    y_hat = y - y_tilde
    return y_hat, y_tilde


def q_threshold(variances: Sequence[float], rank: int, beta: float) -> QThreshold:
    """Q-statistic threshold from the residual variance spectrum
    lambda_{rank+1} .. lambda_m.

    theta_i = sum of residual variances to the i-th power,
    h0 = 1 - 2*theta1*theta3 / (3*theta2^2), and
    Q_beta = theta1 * (c_beta*sqrt(2*theta2*h0^2)/theta1 + 1
             + theta2*h0*(h0-1)/theta1^2)^(1/h0)
    with c_beta the (1-beta) standard-normal quantile.
    """
    variances = np.asarray(variances, dtype=float)
    m = variances.shape[0]
    _check_rank(rank, m)
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie strictly between 0 and 1, got {beta}")
    if np.any(np.diff(variances) > 1e-10 * max(abs(variances[0]), 1.0)):
        raise ValueError("variances must be sorted in descending order")
    if np.any(variances < -1e-12):
        raise ValueError("variances must be nonnegative up to roundoff (-1e-12)")
    residual = np.maximum(variances[rank:], 0.0)
    theta1 = float(np.sum(residual))
    theta2 = float(np.sum(residual**2))
    theta3 = float(np.sum(residual**3))
    if theta2 == 0.0:
        raise DegenerateSpectrumError("degenerate residual spectrum: no residual variance")
    h0 = 1.0 - 2.0 * theta1 * theta3 / (3.0 * theta2**2)
    assert h0 <= 1.0 / 3.0 + 1e-9  # Cauchy-Schwarz: theta2^2 <= theta1*theta3
    if abs(h0) < 1e-12:
        raise DegenerateSpectrumError("degenerate residual spectrum: h0 is numerically zero")
    c_beta = normal_quantile(1.0 - beta)
    base = c_beta * math.sqrt(2.0 * theta2 * h0 * h0) / theta1 + 1.0 + theta2 * h0 * (h0 - 1.0) / theta1**2
    inv_h0 = 1.0 / h0
    if base > 0.0:
        power = base**inv_h0
    elif base < 0.0 and inv_h0.is_integer():
        # real power still defined for an integer exponent
        power = abs(base) ** inv_h0
        if int(inv_h0) % 2:
            power = -power
    else:
        raise DegenerateSpectrumError("threshold undefined for this spectrum: nonpositive base")
    return QThreshold(
        q_beta=theta1 * power,
        theta=(theta1, theta2, theta3),
        h0=h0,
        c_beta=c_beta,
        beta=beta,
    )


def spe_per_snapshot(y_tilde: np.ndarray) -> np.ndarray:
    """Squared Euclidean norm of each residual column (one value per
    snapshot); summing the sequence gives the matrix-level SPE."""
    y_tilde = np.asarray(y_tilde, dtype=float)
    return np.sum(y_tilde * y_tilde, axis=0)


def detect(model: SubspaceModel, y: np.ndarray, beta: float = DEFAULT_BETA) -> DetectionReport:
    """Project, score each snapshot's residual, and flag SPE > Q_beta.

    A degenerate residual spectrum (e.g. noiseless exact-rank traffic)
    yields a report with threshold=None and zero flags instead of an
    error.
    """
    _, y_tilde = project(model, y)
    spe = spe_per_snapshot(y_tilde)
    try:
        threshold = q_threshold(model.variances, model.rank, beta)
    except DegenerateSpectrumError:
        return DetectionReport(
            spe=spe,
            threshold=None,
            flags=np.zeros(spe.shape[0], dtype=bool),
            model_summary=model.summary(),
        )
    return DetectionReport(
        spe=spe,
        threshold=threshold,
        flags=spe > threshold.q_beta,
        model_summary=model.summary(),
    )


def sspbad_select(reports: Sequence[DetectionReport]) -> DetectionReport:
    """Keep the candidate report flagging the most snapshots; ties go to
    the earliest candidate in the sequence."""
    if not reports:
        raise ValueError("cannot select from an empty report sequence")
    counts = [report.flag_count for report in reports]
    return reports[counts.index(max(counts))]


def sspbad_detect(
    y: np.ndarray,
    rank: int,
    seed: SeedSpec,
    kinds: Iterable[EnsembleKind] | None = None,
    beta: float = DEFAULT_BETA,
    center: bool = False,
) -> DetectionReport:
    """Build all candidate bases, run detection with each, return the
    selected report."""
    candidates = build_sspbad_candidates(y, rank, seed, kinds, center)
    return sspbad_select([detect(model, y, beta) for model in candidates])
