"""Test statistics for (non)linear parameter hypotheses under extremum
estimation: the bilinear-form statistic, its invariance-corrected variant,
and the Wald, Lagrange-multiplier and distance-metric comparisons, each with
a p-value against the chi-square reference with q degrees of freedom.

Notation used throughout (all small dense arrays): for a restriction g with
Jacobian G and a model with score s, Hessian A and score covariance B,

    S     = G (-A)^{-1} G'
    Omega = G A^{-1} B A^{-1} G'

and G+ is the full-row-rank Moore-Penrose inverse of G. For quasi-score
models (B = -A identically) S = Omega, and the bilinear form reduces to
n * s(restricted)' G+ g(unrestricted).

Evaluation points: the score is always taken at the restricted estimate and
g at the unrestricted one. The matrices G, A, B default to the unrestricted
estimate (``matrix_eval="unrestricted"``, Wald-style); pass
``matrix_eval="restricted"`` for the plug-in form with every matrix at the
restricted estimate. The two coincide for linear restrictions in the
linear-Gaussian model.

The ``_*_value`` functions return ``(value, diagnostics)`` without the
p-value; the public wrappers attach the chi-square p-value and the
evaluation points. The Monte Carlo engine uses the value level directly
(rejection there is by critical value).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .chisq import chisq_survival
from .exceptions import (
    ConfigurationError,
    NegativeStatisticWarning,
    RankDeficientError,
    SingularMatrixError,
)
from .linalg import condition_number, pinv_full_row_rank, solve_symmetric
from .models import ExtremumModel
from .numdiff import central_gradient, central_hessian
from .restrictions import Reparametrization, Restriction

NEGATIVE_TOL = -1e-10

BF = "BF"
BF_CORRECTED_TRANSFORM = "BFc-transform"
BF_CORRECTED_DIRECT = "BFc-direct"
WALD = "W"
LM = "LM"
DISTANCE = "D"


@dataclass(frozen=True)
class TestReport:
    """A computed statistic with its reference-distribution p-value."""

    name: str
    value: float
    df: int
    p_value: float
    diagnostics: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TestMatrices:
    """The restriction-level matrices entering the statistics, at one point."""

    point: np.ndarray
    G: np.ndarray
    Gplus: np.ndarray
    S: np.ndarray
    Omega: np.ndarray


def statistic_matrices(
    model: ExtremumModel, restriction: Restriction, theta
) -> TestMatrices:
    """Evaluate G, G+, S and Omega at ``theta``."""
    th = np.asarray(theta, dtype=float)
    G = restriction.jacobian(th)
    S, Omega = _s_and_omega(G, model.hessian(th), model.score_cov(th))
    return TestMatrices(point=th, G=G, Gplus=pinv_full_row_rank(G), S=S, Omega=Omega)


def _s_and_omega(G: np.ndarray, A: np.ndarray, B: np.ndarray):
    try:
        T = solve_symmetric(A, G.T)
    except SingularMatrixError as exc:
        raise RankDeficientError("Hessian is numerically singular") from exc
    S = -G @ T
    Omega = T.T @ B @ T
    return S, Omega


def _solve_omega(Omega: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return solve_symmetric(Omega, rhs)
    except SingularMatrixError as exc:
        raise RankDeficientError("Omega is numerically singular") from exc


def _finalize(name: str, value: float, df: int, diagnostics: dict) -> TestReport:
    if value < NEGATIVE_TOL:
        warnings.warn(
            f"{name} statistic is negative ({value:.6g}); p-value uses the "
            "clamped value",
            NegativeStatisticWarning,
            stacklevel=3,
        )
        diagnostics["negative_statistic"] = True
    p_value = chisq_survival(max(value, 0.0), df)
    return TestReport(name=name, value=value, df=df, p_value=p_value, diagnostics=diagnostics)


def _bilinear_from_pieces(
    n: int,
    score_restricted: np.ndarray,
    G: np.ndarray,
    A: np.ndarray,
    B: np.ndarray,
    g_unrestricted: np.ndarray,
    *,
    quasi_score: bool,
) -> tuple[float, dict]:
    """Core bilinear form n * s' G+ S Omega^{-1} g from raw pieces."""
    Gplus = pinv_full_row_rank(G)
    diagnostics: dict[str, Any] = {"cond_gram": condition_number(G @ G.T)}
    left = score_restricted @ Gplus
    if quasi_score:
        # S = Omega identically; the ratio drops out exactly.
        value = float(n * left @ g_unrestricted)
    else:
        S, Omega = _s_and_omega(G, A, B)
        diagnostics["cond_omega"] = condition_number(Omega)
        value = float(n * left @ S @ _solve_omega(Omega, g_unrestricted))
    return value, diagnostics


def _anchor_point(matrix_eval: str, theta_hat, theta_tilde) -> np.ndarray:
    if matrix_eval == "unrestricted":
        return theta_hat
    if matrix_eval == "restricted":
        return theta_tilde
    raise ConfigurationError(
        f"matrix_eval must be 'unrestricted' or 'restricted', got {matrix_eval!r}"
    )


def _bf_value(
    model: ExtremumModel,
    restriction: Restriction,
    theta_hat: np.ndarray,
    theta_tilde: np.ndarray,
    matrix_eval: str,
) -> tuple[float, dict]:
    anchor = _anchor_point(matrix_eval, theta_hat, theta_tilde)
    return _bilinear_from_pieces(
        model.n,
        model.score(theta_tilde),
        restriction.jacobian(anchor),
        model.hessian(anchor),
        model.score_cov(anchor),
        restriction.value(theta_hat),
        quasi_score=model.quasi_score,
    )


def _bf_corrected_value(
    model: ExtremumModel,
    star_restriction: Restriction,
    reparam: Reparametrization,
    theta_hat: np.ndarray,
    theta_tilde: np.ndarray,
    variant: str,
) -> tuple[float, dict]:
    hat_star = reparam.forward(theta_hat)
    til_star = reparam.forward(theta_tilde)
    K = reparam.inverse_jacobian_at(til_star)
    g_star = star_restriction.value(hat_star)
    G_star = star_restriction.jacobian(til_star)

    if variant == "transform":
        score_star = K.T @ model.score(theta_tilde)
        A_star = K.T @ model.hessian(theta_tilde) @ K
        B_star = K.T @ model.score_cov(theta_tilde) @ K
        quasi = model.quasi_score
    elif variant == "direct":

        def composed(ts):
            return model.objective(reparam.inverse(ts))

        score_star = central_gradient(composed, til_star)
        A_star = central_hessian(composed, til_star)
        # The score pullback is exact (chain rule), so its covariance pulls
        # back exactly too; only the Hessian is taken from the data.
        B_star = K.T @ model.score_cov(theta_tilde) @ K
        quasi = False
    else:
        raise ConfigurationError(
            f"variant must be 'transform' or 'direct', got {variant!r}"
        )

    value, diagnostics = _bilinear_from_pieces(
        model.n, score_star, G_star, A_star, B_star, g_star, quasi_score=quasi
    )
    diagnostics.update(
        theta_hat_star=hat_star.tolist(),
        theta_tilde_star=til_star.tolist(),
        variant=variant,
    )
    return value, diagnostics


def _wald_value(
    model: ExtremumModel, restriction: Restriction, theta_hat: np.ndarray
) -> tuple[float, dict]:
    G = restriction.jacobian(theta_hat)
    gval = restriction.value(theta_hat)
    _, Omega = _s_and_omega(G, model.hessian(theta_hat), model.score_cov(theta_hat))
    value = float(model.n * gval @ _solve_omega(Omega, gval))
    return value, {
        "cond_gram": condition_number(G @ G.T),
        "cond_omega": condition_number(Omega),
    }


def _lm_value(
    model: ExtremumModel, restriction: Restriction, theta_tilde: np.ndarray
) -> tuple[float, dict]:
    G = restriction.jacobian(theta_tilde)
    A = model.hessian(theta_tilde)
    try:
        u = G @ solve_symmetric(A, model.score(theta_tilde))
    except SingularMatrixError as exc:
        raise RankDeficientError("Hessian is numerically singular") from exc
    _, Omega = _s_and_omega(G, A, model.score_cov(theta_tilde))
    value = float(model.n * u @ _solve_omega(Omega, u))
    return value, {
        "cond_gram": condition_number(G @ G.T),
        "cond_omega": condition_number(Omega),
    }


def _distance_value(
    model: ExtremumModel, theta_hat: np.ndarray, theta_tilde: np.ndarray
) -> tuple[float, dict]:
    if not model.quasi_score:
        raise ConfigurationError(
            "the simple objective-difference statistic requires a quasi-score "
            "model (score covariance = minus Hessian)"
        )
    value = float(
        2.0 * model.n * (model.objective(theta_hat) - model.objective(theta_tilde))
    )
    return value, {}


# ---------------------------------------------------------------------------
# Public report-level API
# ---------------------------------------------------------------------------


def bilinear_form(
    model: ExtremumModel,
    restriction: Restriction,
    theta_hat,
    theta_tilde,
    *,
    matrix_eval: str = "unrestricted",
) -> TestReport:
    """Bilinear-form statistic pairing the restricted score with the
    unrestricted restriction value.

    Parameters
    ----------
    theta_hat, theta_tilde
        Unrestricted and restricted estimates.
    matrix_eval
        Where G, A and B are evaluated (see module docstring). The score is
        at ``theta_tilde`` and g at ``theta_hat`` regardless.
    """
    th_hat = np.asarray(theta_hat, dtype=float)
    th_til = np.asarray(theta_tilde, dtype=float)
    value, diagnostics = _bf_value(model, restriction, th_hat, th_til, matrix_eval)
    diagnostics.update(
        theta_hat=th_hat.tolist(), theta_tilde=th_til.tolist(), matrix_eval=matrix_eval
    )
    return _finalize(BF, value, restriction.q, diagnostics)


def bilinear_form_corrected(
    model: ExtremumModel,
    star_restriction: Restriction,
    reparam: Reparametrization,
    theta_hat,
    theta_tilde,
    *,
    variant: str = "transform",
) -> TestReport:
    """Corrected bilinear-form statistic, computed in the rewritten
    hypothesis' own coordinates.

    Both variants evaluate the star restriction at the mapped unrestricted
    estimate and anchor the star matrices at the mapped restricted estimate;
    they differ in how the star-coordinate model quantities are obtained:

    - ``"transform"``: pull score, Hessian and score covariance through the
      inverse-map Jacobian at the mapped restricted estimate. When the
      invariance conditions hold this reproduces the original-hypothesis
      bilinear form exactly (to roundoff).
    - ``"direct"``: differentiate the composed objective numerically. The
      finite-difference Hessian carries second-derivative terms of the
      inverse map that vanish only asymptotically, so finite-sample values
      may differ from the original-hypothesis statistic.

    Raises DomainViolationError when the map is undefined at either estimate.
    """
    th_hat = np.asarray(theta_hat, dtype=float)
    th_til = np.asarray(theta_tilde, dtype=float)
    value, diagnostics = _bf_corrected_value(
        model, star_restriction, reparam, th_hat, th_til, variant
    )
    diagnostics.update(theta_hat=th_hat.tolist(), theta_tilde=th_til.tolist())
    name = BF_CORRECTED_TRANSFORM if variant == "transform" else BF_CORRECTED_DIRECT
    return _finalize(name, value, star_restriction.q, diagnostics)


def wald(model: ExtremumModel, restriction: Restriction, theta_hat) -> TestReport:
    """Wald statistic n g' Omega^{-1} g with everything at the unrestricted estimate."""
    th = np.asarray(theta_hat, dtype=float)
    value, diagnostics = _wald_value(model, restriction, th)
    diagnostics["theta_hat"] = th.tolist()
    return _finalize(WALD, value, restriction.q, diagnostics)


def lagrange_multiplier(
    model: ExtremumModel, restriction: Restriction, theta_tilde
) -> TestReport:
    """Score statistic n (G A^{-1} s)' Omega^{-1} (G A^{-1} s) at the restricted estimate."""
    th = np.asarray(theta_tilde, dtype=float)
    value, diagnostics = _lm_value(model, restriction, th)
    diagnostics["theta_tilde"] = th.tolist()
    return _finalize(LM, value, restriction.q, diagnostics)


def distance_metric(
    model: ExtremumModel, theta_hat, theta_tilde, *, df: int = 1
) -> TestReport:
    """Objective-difference statistic 2 n (Q(unrestricted) - Q(restricted)).

    Only calibrated against the chi-square reference for quasi-score models;
    a ConfigurationError is raised otherwise. ``df`` is the restriction
    count of the hypothesis the restricted fit imposed.
    """
    th_hat = np.asarray(theta_hat, dtype=float)
    th_til = np.asarray(theta_tilde, dtype=float)
    value, diagnostics = _distance_value(model, th_hat, th_til)
    diagnostics.update(theta_hat=th_hat.tolist(), theta_tilde=th_til.tolist())
    return _finalize(DISTANCE, value, df, diagnostics)
