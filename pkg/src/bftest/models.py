"""Extremum-estimation objectives: the abstract interface and the
linear-Gaussian instantiation used by the simulation harness.

An extremum model exposes the sample objective Q_n(theta), its gradient
(score), its Hessian, and the score-covariance matrix. A model may declare
``quasi_score = True``, meaning the score covariance equals minus the
Hessian identically; the test statistics simplify in that case.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatchError, RankDeficientError
from .linalg import condition_number
from .numdiff import central_gradient, central_hessian


class ExtremumModel(abc.ABC):
    """Interface for sample objectives Q_n maximized by extremum estimators.

    Implementations must provide analytic derivatives; ``fd_check_score`` and
    ``fd_check_hessian`` cross-check them against central differences.
    """

    #: True when score_cov(theta) == -hessian(theta) holds identically.
    quasi_score: bool = False

    @property
    @abc.abstractmethod
    def n(self) -> int:
        """Sample size."""

    @property
    @abc.abstractmethod
    def p(self) -> int:
        """Parameter dimension."""

    @abc.abstractmethod
    def objective(self, theta: np.ndarray) -> float:
        """Q_n(theta)."""

    @abc.abstractmethod
    def score(self, theta: np.ndarray) -> np.ndarray:
        """Gradient of Q_n at theta (length p)."""

    @abc.abstractmethod
    def hessian(self, theta: np.ndarray) -> np.ndarray:
        """Second-derivative matrix of Q_n at theta (p x p, symmetric)."""

    @abc.abstractmethod
    def score_cov(self, theta: np.ndarray) -> np.ndarray:
        """Asymptotic covariance matrix of sqrt(n) times the score (p x p)."""

    def _check_theta(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        if th.shape != (self.p,):
            raise DimensionMismatchError(
                f"theta must have shape ({self.p},), got {th.shape}"
            )
        return th


@dataclass(frozen=True)
class LinearGaussianModel(ExtremumModel):
    """Gaussian linear regression with known error variance.

    With design X (n x p), response y and variance sigma2,

        Q_n(theta)  = -||y - X theta||^2 / (2 n sigma2)
        score       =  X'(y - X theta) / (n sigma2)
        hessian     = -X'X / (n sigma2)          (constant in theta)
        score_cov   =  X'X / (n sigma2)          (= -hessian, quasi-score)
    """

    design: np.ndarray
    response: np.ndarray
    sigma2: float = 1.0
    quasi_score: bool = field(default=True, init=False)

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        y = np.asarray(self.response, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatchError(f"design must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DimensionMismatchError(
                f"response must have shape ({X.shape[0]},), got {y.shape}"
            )
        if X.shape[0] < X.shape[1]:
            raise RankDeficientError("need at least as many rows as columns")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("design/response contain non-finite entries")
        if not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)
        gram = X.T @ X
        if condition_number(gram) > 1e12:
            raise RankDeficientError("design matrix is numerically rank deficient")
        object.__setattr__(self, "_gram", gram)
        object.__setattr__(self, "_xty", X.T @ y)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def gram(self) -> np.ndarray:
        """X'X (cached)."""
        return self._gram

    @property
    def xty(self) -> np.ndarray:
        """X'y (cached)."""
        return self._xty

    def objective(self, theta) -> float:
        th = self._check_theta(theta)
        r = self.response - self.design @ th
        return float(-(r @ r) / (2.0 * self.n * self.sigma2))

    def score(self, theta) -> np.ndarray:
        th = self._check_theta(theta)
        return (self._xty - self._gram @ th) / (self.n * self.sigma2)

    def hessian(self, theta) -> np.ndarray:
        self._check_theta(theta)
        return -self._gram / (self.n * self.sigma2)

    def score_cov(self, theta) -> np.ndarray:
        self._check_theta(theta)
        return self._gram / (self.n * self.sigma2)

    def with_sigma2(self, sigma2: float) -> "LinearGaussianModel":
        """Same data, different error variance."""
        return LinearGaussianModel(self.design, self.response, sigma2)


def estimate_error_variance(model: LinearGaussianModel, theta_hat) -> float:
    """Unbiased residual variance estimate at the fitted coefficients."""
    th = np.asarray(theta_hat, dtype=float)
    r = model.response - model.design @ th
    dof = model.n - model.p
    if dof <= 0:
        raise ValueError("no residual degrees of freedom to estimate the variance")
    return float(r @ r) / dof


def fd_check_score(model: ExtremumModel, theta, step: float = 1e-5) -> float:
    """Max relative discrepancy between the analytic score and central differences.

    Returns max_i |analytic_i - fd_i| / (1 + |analytic_i|).
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    th = np.asarray(theta, dtype=float)
    analytic = model.score(th)
    fd = central_gradient(model.objective, th, rel_step=step)
    return float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(analytic))))


def fd_check_hessian(model: ExtremumModel, theta, step: float = 1e-4) -> float:
    """Max relative discrepancy between the analytic Hessian and central differences."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    th = np.asarray(theta, dtype=float)
    analytic = model.hessian(th)
    fd = central_hessian(model.objective, th, rel_step=step)
    return float(np.max(np.abs(analytic - fd) / (1.0 + np.abs(analytic))))
