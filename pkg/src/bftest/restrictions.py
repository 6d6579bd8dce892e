"""Restriction functions, reparametrizations, and the numeric audit of the
invariance conditions.

A hypothesis is a restriction g with g(theta) = 0; a reparametrization is a
one-to-one differentiable map phi of the parameter space. Two restriction
functions g and g_star are equivalent representations of the same hypothesis
when g_star(phi(theta)) = g(theta). The auditor below checks, at a chosen
point, the conditions under which the bilinear-form statistic is invariant
to rewriting the hypothesis in the new coordinates:

    B1  star Jacobian factorization   G_star(theta_star) = G(theta) K
    B2  pseudoinverse factorization   (G K)+ = K+ G+   (via the commutation
        identity G+ G K K' = K K' G+ G, plus a direct comparison)
    B3  score pullback                star score = K' score
    B4  Hessian pullback              star Hessian = K' A K
    B5  score-covariance pullback     star covariance = K' B K
    B6  hypothesis equivalence        g_star(phi(theta)) = g(theta)

K is the Jacobian of the inverse map, evaluated at phi(theta). B4 and B5 are
skipped for quasi-score models (covariance = minus Hessian), where they are
not needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    DomainViolationError,
    SingularKError,
)
from .linalg import condition_number, greville_identity_residual, pinv_full_row_rank
from .models import ExtremumModel
from .numdiff import central_gradient, central_hessian, central_jacobian

DEFAULT_AUDIT_TOL = 1e-7


@dataclass(frozen=True)
class Restriction:
    """A restriction g: R^p -> R^q defining the null set g(theta) = 0.

    ``jac`` is the optional analytic Jacobian (q x p); when absent, central
    finite differences are used. ``pinned_coord`` marks restrictions whose
    feasible set pins one coordinate to a finite set of values (the linear
    and integer-power families); the restricted estimator exploits it.
    """

    q: int
    fn: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "restriction"
    pinned_coord: tuple[int, tuple[float, ...]] | None = None

    def value(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        out = np.atleast_1d(np.asarray(self.fn(th), dtype=float))
        if out.shape != (self.q,):
            raise DimensionMismatchError(
                f"{self.name}: value has shape {out.shape}, expected ({self.q},)"
            )
        return out

    def jacobian(self, theta) -> np.ndarray:
        """Analytic Jacobian if supplied, else central finite differences.

        Rank deficiency is not checked here; downstream pseudoinverse calls
        raise RankDeficientError when it matters.
        """
        th = np.asarray(theta, dtype=float)
        if self.jac is not None:
            out = np.atleast_2d(np.asarray(self.jac(th), dtype=float))
        else:
            out = np.atleast_2d(central_jacobian(self.value, th))
        if out.shape != (self.q, th.size):
            raise DimensionMismatchError(
                f"{self.name}: Jacobian has shape {out.shape}, expected ({self.q}, {th.size})"
            )
        return out


@dataclass(frozen=True)
class Reparametrization:
    """A one-to-one differentiable change of coordinates theta_star = phi(theta).

    ``inverse_jac`` is the optional analytic Jacobian of the inverse map; it
    is the pullback matrix linking star-coordinate Jacobians, scores and
    Hessians to the original ones. ``domain`` / ``star_domain`` are
    predicates delimiting where the map (resp. its inverse) is defined.
    """

    p: int
    forward_fn: Callable[[np.ndarray], np.ndarray]
    inverse_fn: Callable[[np.ndarray], np.ndarray]
    inverse_jac: Callable[[np.ndarray], np.ndarray] | None = None
    domain: Callable[[np.ndarray], bool] = lambda theta: True
    star_domain: Callable[[np.ndarray], bool] = lambda theta_star: True
    name: str = "reparametrization"

    def in_domain(self, theta) -> bool:
        return bool(self.domain(np.asarray(theta, dtype=float)))

    def in_star_domain(self, theta_star) -> bool:
        return bool(self.star_domain(np.asarray(theta_star, dtype=float)))

    def forward(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        if th.shape != (self.p,):
            raise DimensionMismatchError(f"theta must have shape ({self.p},)")
        if not self.in_domain(th):
            raise DomainViolationError(f"{self.name}: map undefined at {th.tolist()}")
        return np.asarray(self.forward_fn(th), dtype=float)

    def inverse(self, theta_star) -> np.ndarray:
        ts = np.asarray(theta_star, dtype=float)
        if ts.shape != (self.p,):
            raise DimensionMismatchError(f"theta_star must have shape ({self.p},)")
        if not self.in_star_domain(ts):
            raise DomainViolationError(
                f"{self.name}: inverse undefined at {ts.tolist()}"
            )
        return np.asarray(self.inverse_fn(ts), dtype=float)

    def inverse_jacobian_at(self, theta_star) -> np.ndarray:
        """The p x p pullback matrix (Jacobian of the inverse map) at theta_star.

        Raises SingularKError when the matrix is not numerically invertible
        and DomainViolationError outside the star domain.
        """
        ts = np.asarray(theta_star, dtype=float)
        if not self.in_star_domain(ts):
            raise DomainViolationError(
                f"{self.name}: inverse undefined at {ts.tolist()}"
            )
        if self.inverse_jac is not None:
            K = np.asarray(self.inverse_jac(ts), dtype=float)
        else:
            K = central_jacobian(self.inverse, ts)
        if K.shape != (self.p, self.p):
            raise DimensionMismatchError(
                f"{self.name}: pullback Jacobian has shape {K.shape}, expected ({self.p}, {self.p})"
            )
        if condition_number(K) > 1e12:
            raise SingularKError(
                f"{self.name}: pullback Jacobian singular at {ts.tolist()}"
            )
        return K


# ---------------------------------------------------------------------------
# Shipped fixtures
# ---------------------------------------------------------------------------


def linear_restriction(coord: int = 1, target: float = 1.0, p: int = 2) -> Restriction:
    """g(theta) = theta[coord] - target (a single linear restriction)."""

    def fn(theta):
        return np.array([theta[coord] - target])

    def jac(theta):
        row = np.zeros((1, p))
        row[0, coord] = 1.0
        return row

    return Restriction(
        q=1,
        fn=fn,
        jac=jac,
        name=f"linear[{coord}]={target}",
        pinned_coord=(coord, (target,)),
    )


def power_restriction(k: int, coord: int = 1, p: int = 2) -> Restriction:
    """g(theta) = theta[coord]^k - 1 for a nonzero integer k.

    The real feasible set pins theta[coord] to 1 for odd k, to {1, -1} for
    even k. Listing +1 first makes the restricted fit deterministic on ties.
    """
    k = int(k)
    if k == 0:
        raise ValueError("k must be a nonzero integer")

    def fn(theta):
        return np.array([float(theta[coord]) ** k - 1.0])

    def jac(theta):
        row = np.zeros((1, p))
        row[0, coord] = k * float(theta[coord]) ** (k - 1)
        return row

    values = (1.0,) if k % 2 else (1.0, -1.0)
    return Restriction(
        q=1, fn=fn, jac=jac, name=f"power[k={k}]", pinned_coord=(coord, values)
    )


def power_reparametrization(k: int, coord: int = 1, p: int = 2) -> Reparametrization:
    """Coordinates in which the power restriction becomes beta_star^k = 1.

    The inverse map raises the marked coordinate to the k-th power; the
    forward map therefore takes the principal real k-th root: for even k the
    domain requires a positive coordinate, for odd k the root is
    sign-preserving.
    """
    k = int(k)
    if k == 0:
        raise ValueError("k must be a nonzero integer")
    even = k % 2 == 0

    def forward_fn(theta):
        out = np.array(theta, dtype=float)
        b = float(out[coord])
        if even:
            out[coord] = b ** (1.0 / k)
        else:
            out[coord] = float(np.sign(b)) * abs(b) ** (1.0 / k)
        return out

    def inverse_fn(theta_star):
        out = np.array(theta_star, dtype=float)
        out[coord] = float(out[coord]) ** k
        return out

    def inverse_jac(theta_star):
        K = np.eye(p)
        K[coord, coord] = k * float(theta_star[coord]) ** (k - 1)
        return K

    def domain(theta):
        b = float(theta[coord])
        return b > 0.0 if even else (b != 0.0 or k > 0)

    def star_domain(theta_star):
        b = float(theta_star[coord])
        return b > 0.0 if even else (b != 0.0 or k > 0)

    return Reparametrization(
        p=p,
        forward_fn=forward_fn,
        inverse_fn=inverse_fn,
        inverse_jac=inverse_jac,
        domain=domain,
        star_domain=star_domain,
        name=f"power-root[k={k}]",
    )


def identity_reparametrization(p: int = 2) -> Reparametrization:
    """The trivial change of coordinates (pullback matrix = identity)."""
    return Reparametrization(
        p=p,
        forward_fn=lambda theta: np.array(theta, dtype=float),
        inverse_fn=lambda theta_star: np.array(theta_star, dtype=float),
        inverse_jac=lambda theta_star: np.eye(p),
        name="identity",
    )


def power_pair(k: int) -> tuple[Restriction, Restriction, Reparametrization]:
    """The shipped hypothesis pair: beta = 1 rewritten as beta_star^k = 1."""
    return (
        linear_restriction(coord=1, target=1.0, p=2),
        power_restriction(k, coord=1, p=2),
        power_reparametrization(k, coord=1, p=2),
    )


def gregory_veall_pair() -> tuple[Restriction, Restriction, Reparametrization]:
    """A counterexample pair: the rewritten hypothesis is equivalent but the
    pseudoinverse factorization (B2) fails, so the corrected statistic is not
    licensed for it.

    Original: g(theta) = theta_1 - 1/theta_2; rewritten: g_star(theta_star) =
    theta_star_1 * theta_star_2 - 1, linked by the inverse map
    ((s1 + 1) s2 - 1, 1/s2).
    """

    def g_fn(theta):
        return np.array([theta[0] - 1.0 / theta[1]])

    def g_jac(theta):
        return np.array([[1.0, 1.0 / theta[1] ** 2]])

    def gs_fn(ts):
        return np.array([ts[0] * ts[1] - 1.0])

    def gs_jac(ts):
        return np.array([[ts[1], ts[0]]])

    def forward_fn(theta):
        return np.array([(theta[0] + 1.0) * theta[1] - 1.0, 1.0 / theta[1]])

    def inverse_fn(ts):
        return np.array([(ts[0] + 1.0) * ts[1] - 1.0, 1.0 / ts[1]])

    def inverse_jac(ts):
        return np.array([[ts[1], ts[0] + 1.0], [0.0, -1.0 / ts[1] ** 2]])

    restriction = Restriction(q=1, fn=g_fn, jac=g_jac, name="gregory-veall")
    star = Restriction(q=1, fn=gs_fn, jac=gs_jac, name="gregory-veall-star")
    reparam = Reparametrization(
        p=2,
        forward_fn=forward_fn,
        inverse_fn=inverse_fn,
        inverse_jac=inverse_jac,
        domain=lambda theta: theta[1] != 0.0,
        star_domain=lambda ts: ts[1] != 0.0,
        name="gregory-veall",
    )
    return restriction, star, reparam


# ---------------------------------------------------------------------------
# Condition audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionCheck:
    condition: str
    residual: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the invariance-condition audit at one evaluation point."""

    point: tuple[float, ...]
    star_point: tuple[float, ...]
    checks: tuple[ConditionCheck, ...] = field(default_factory=tuple)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, condition: str) -> ConditionCheck:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)


def _scaled_check(condition: str, diff: float, scale: float, tol: float) -> ConditionCheck:
    adjusted = float(tol * (1.0 + scale))
    return ConditionCheck(condition, float(diff), adjusted, bool(diff <= adjusted))


def audit_conditions(
    model: ExtremumModel,
    restriction: Restriction,
    star_restriction: Restriction,
    reparam: Reparametrization,
    theta,
    *,
    tol: float = DEFAULT_AUDIT_TOL,
) -> ConditionReport:
    """Numerically audit the invariance conditions at ``theta``.

    B3 is checked against a finite-difference gradient of the composed
    objective (it is a chain-rule identity, so this doubles as a derivative
    cross-check); B2 through the commutation identity plus a direct
    pseudoinverse comparison. B4/B5 are checked against the
    finite-difference Hessian of the composed objective when the model does
    not declare quasi-score, and skipped otherwise (the score-covariance
    pullback is exact whenever the score pullback is, so the Hessian carries
    the only measurable violation). All tolerances are scale-adjusted by
    (1 + max input magnitude).

    Raises DomainViolationError when the reparametrization is undefined at
    ``theta``.
    """
    th = np.asarray(theta, dtype=float)
    theta_star = reparam.forward(th)
    K = reparam.inverse_jacobian_at(theta_star)
    G = restriction.jacobian(th)
    G_star = star_restriction.jacobian(theta_star)
    checks: list[ConditionCheck] = []

    # B1: star Jacobian factorization
    GK = G @ K
    b1 = float(np.max(np.abs(G_star - GK)))
    checks.append(
        _scaled_check("B1", b1, max(np.max(np.abs(G_star)), np.max(np.abs(GK))), tol)
    )

    # B2: pseudoinverse factorization, audited through the commutation
    # identity and confirmed by comparing both pseudoinverses directly.
    greville_ok, b2_resid = greville_identity_residual(G, K, tol=tol)
    product_pinv = pinv_full_row_rank(GK)
    direct = product_pinv - np.linalg.solve(K, pinv_full_row_rank(G))
    b2_direct = float(np.max(np.abs(direct)))
    direct_ok = b2_direct <= tol * (1.0 + float(np.max(np.abs(product_pinv))))
    checks.append(ConditionCheck("B2", b2_resid, tol, greville_ok and direct_ok))

    # B3: score pullback vs finite differences of the composed objective
    def composed(ts):
        return model.objective(reparam.inverse(ts))

    pulled = K.T @ model.score(th)
    fd = central_gradient(composed, theta_star)
    b3 = float(np.max(np.abs(pulled - fd)))
    checks.append(_scaled_check("B3", b3, float(np.max(np.abs(pulled))), tol))

    # B4/B5: Hessian-side pullbacks, only informative without quasi-score
    if not model.quasi_score:
        pulled_hess = K.T @ model.hessian(th) @ K
        fd_hess = central_hessian(composed, theta_star)
        b4 = float(np.max(np.abs(pulled_hess - fd_hess)))
        scale4 = float(np.max(np.abs(pulled_hess)))
        checks.append(_scaled_check("B4", b4, scale4, tol))
        checks.append(_scaled_check("B5", b4, scale4, tol))

    # B6: the two restriction functions represent the same hypothesis
    b6 = float(np.max(np.abs(star_restriction.value(theta_star) - restriction.value(th))))
    checks.append(
        _scaled_check("B6", b6, float(np.max(np.abs(restriction.value(th)))), tol)
    )

    return ConditionReport(
        point=tuple(float(v) for v in th),
        star_point=tuple(float(v) for v in theta_star),
        checks=tuple(checks),
    )
