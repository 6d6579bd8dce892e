"""Unrestricted and restricted extremum estimation for the shipped model.

The restricted fit has two routes. A fast path covers restrictions whose
feasible set pins one coordinate to finitely many values (the linear and
integer-power families): each candidate value is profiled in closed form and
the branch with the larger objective wins. Everything else goes through a
safeguarded Newton iteration on the stationarity system of the constrained
problem, with step halving on a merit function and deterministic perturbed
restarts on failure. The two routes are cross-validated against each other
in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NotConvergedError, RankDeficientError
from .models import ExtremumModel, LinearGaussianModel
from .numdiff import central_hessian
from .restrictions import Restriction

STATIONARITY_TOL = 1e-8
FEASIBILITY_TOL = 1e-9
MAX_RESTARTS = 5


@dataclass(frozen=True)
class FitResult:
    """Outcome of an (un)restricted fit.

    ``multiplier`` is the Lagrange multiplier vector for restricted fits
    (None otherwise); ``feasibility`` is the max-norm restriction violation;
    ``branch`` records the pinned value selected by the fast path, for
    diagnostics on multi-branch feasible sets.
    """

    theta: np.ndarray
    objective: float
    converged: bool
    iterations: int
    multiplier: np.ndarray | None = None
    feasibility: float = 0.0
    branch: float | None = None


@dataclass(frozen=True)
class FitOptions:
    x0: np.ndarray | None = None
    max_iter: int = 100
    stationarity_tol: float = STATIONARITY_TOL
    feasibility_tol: float = FEASIBILITY_TOL
    method: str = "auto"  # auto | fast | newton


def fit_unrestricted(model: LinearGaussianModel) -> FitResult:
    """Maximize the objective by solving the normal equations."""
    if not isinstance(model, LinearGaussianModel):
        raise TypeError("unrestricted fitting is implemented for LinearGaussianModel")
    try:
        theta = np.linalg.solve(model.gram, model.xty)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError("normal equations are singular") from exc
    return FitResult(
        theta=theta,
        objective=model.objective(theta),
        converged=True,
        iterations=1,
    )


def _profile_pinned(
    model: LinearGaussianModel, coord: int, value: float
) -> tuple[np.ndarray, float]:
    """Closed-form fit with one coordinate held fixed (profile the rest)."""
    X = model.design
    y = model.response
    keep = [j for j in range(model.p) if j != coord]
    Xk = X[:, keep]
    resid_target = y - value * X[:, coord]
    try:
        coef = np.linalg.solve(Xk.T @ Xk, Xk.T @ resid_target)
    except np.linalg.LinAlgError as exc:
        raise RankDeficientError("profiled normal equations are singular") from exc
    theta = np.empty(model.p)
    theta[coord] = value
    theta[keep] = coef
    return theta, model.objective(theta)


def _multiplier_from_stationarity(
    model: ExtremumModel, restriction: Restriction, theta: np.ndarray
) -> np.ndarray:
    # Least-squares multiplier: s(theta) ~ G(theta)' lam at a stationary point.
    G = restriction.jacobian(theta)
    s = model.score(theta)
    lam, *_ = np.linalg.lstsq(G.T, s, rcond=None)
    return lam


def fit_restricted(
    model: LinearGaussianModel,
    restriction: Restriction,
    options: FitOptions | None = None,
) -> FitResult:
    """Maximize the objective subject to the restriction being zero.

    Converged results satisfy the stationarity condition
    ``||score - G' multiplier||_inf <= stationarity_tol`` and feasibility
    ``||g||_inf <= feasibility_tol``. When the feasible set has several
    branches (even-power restrictions), the branch with the larger objective
    is returned, ties resolved toward the first listed value.

    Raises NotConvergedError (with the best iterate attached) when no start
    of the Newton path converges.
    """
    opts = options or FitOptions()
    use_fast = (
        opts.method in ("auto", "fast")
        and restriction.pinned_coord is not None
        and isinstance(model, LinearGaussianModel)
    )
    if opts.method == "fast" and not use_fast:
        raise ValueError("fast method requires a pinned-coordinate restriction")
    if use_fast:
        return _fit_restricted_fast(model, restriction)
    return _fit_restricted_newton(model, restriction, opts)


def _fit_restricted_fast(
    model: LinearGaussianModel, restriction: Restriction
) -> FitResult:
    coord, values = restriction.pinned_coord
    best: tuple[float, np.ndarray, float] | None = None
    for value in values:
        theta, obj = _profile_pinned(model, coord, value)
        if best is None or obj > best[0]:
            best = (obj, theta, value)
    obj, theta, value = best
    lam = _multiplier_from_stationarity(model, restriction, theta)
    return FitResult(
        theta=theta,
        objective=obj,
        converged=True,
        iterations=len(values),
        multiplier=lam,
        feasibility=float(np.max(np.abs(restriction.value(theta)))),
        branch=value,
    )


def _project_feasible(
    restriction: Restriction, theta0: np.ndarray, max_iter: int = 50
) -> np.ndarray:
    """Gauss-Newton projection of theta0 onto the feasible set."""
    theta = np.array(theta0, dtype=float)
    for _ in range(max_iter):
        g = restriction.value(theta)
        if np.max(np.abs(g)) <= 1e-12:
            break
        G = restriction.jacobian(theta)
        step, *_ = np.linalg.lstsq(G, g, rcond=None)
        t = 1.0
        base = float(g @ g)
        for _ in range(30):
            cand = theta - t * step
            try:
                gc = restriction.value(cand)
            except (FloatingPointError, ZeroDivisionError, ValueError):
                t *= 0.5
                continue
            if np.all(np.isfinite(gc)) and float(gc @ gc) < base:
                theta = cand
                break
            t *= 0.5
        else:
            break
    return theta


def _constraint_curvature(
    restriction: Restriction, theta: np.ndarray, lam: np.ndarray
) -> np.ndarray:
    """Sum of multiplier-weighted constraint Hessians (by finite differences)."""
    p = theta.size
    out = np.zeros((p, p))
    for i in range(restriction.q):
        if abs(lam[i]) < 1e-14:
            continue
        out += lam[i] * central_hessian(
            lambda th, i=i: float(restriction.value(th)[i]), theta
        )
    return out


def _start_candidates(restriction: Restriction, base: np.ndarray) -> list[np.ndarray]:
    """Distinct feasible projections of a deterministic set of seed points.

    Seeds cover the base point, its sign flips (feasible sets of the shipped
    nonlinear restrictions have sign-mirrored branches), and a perturbation
    schedule. Projections that fail to reach near-feasibility are dropped;
    duplicates (same branch) are merged.
    """
    seeds = [base, -base]
    for j in range(base.size):
        flipped = base.copy()
        flipped[j] = -flipped[j]
        seeds.append(flipped)
    for attempt in range(1, MAX_RESTARTS + 1):
        signs = np.array(
            [1.0 if (i + attempt) % 2 == 0 else -1.0 for i in range(base.size)]
        )
        seeds.append(base + 0.1 * attempt * signs * (1.0 + np.abs(base)))

    starts: list[np.ndarray] = []
    for seed in seeds:
        try:
            with np.errstate(all="ignore"):
                point = _project_feasible(restriction, seed)
                if not np.all(np.isfinite(point)):
                    continue
                if np.max(np.abs(restriction.value(point))) > 1e-6:
                    continue
        except (FloatingPointError, ZeroDivisionError, ValueError):
            continue
        if any(np.allclose(point, s, atol=1e-8) for s in starts):
            continue
        starts.append(point)
        if len(starts) >= MAX_RESTARTS + 1:
            break
    return starts


def _fit_restricted_newton(
    model: ExtremumModel, restriction: Restriction, opts: FitOptions
) -> FitResult:
    if opts.x0 is not None:
        base = np.asarray(opts.x0, dtype=float)
    else:
        base = fit_unrestricted(model).theta
    starts = _start_candidates(restriction, base)
    if not starts:
        starts = [_project_feasible(restriction, base)]

    best: FitResult | None = None
    converged: list[FitResult] = []
    for theta0 in starts:
        result = _newton_attempt(model, restriction, theta0, opts)
        if result.converged:
            converged.append(result)
        if best is None or result.objective > best.objective or (
            result.converged and not best.converged
        ):
            best = result
    if converged:
        # Among the stationary points found, return the best objective.
        return max(converged, key=lambda r: r.objective)
    raise NotConvergedError(
        f"restricted fit did not converge from {len(starts)} start(s)", best=best
    )


def _newton_attempt(
    model: ExtremumModel,
    restriction: Restriction,
    theta0: np.ndarray,
    opts: FitOptions,
) -> FitResult:
    q = restriction.q
    theta = np.array(theta0, dtype=float)
    lam = _multiplier_from_stationarity(model, restriction, theta)

    def merit(th):
        g = restriction.value(th)
        return -model.objective(th) + 10.0 * max(1.0, np.max(np.abs(lam))) * float(
            np.sum(np.abs(g))
        )

    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        s = model.score(theta)
        G = restriction.jacobian(theta)
        g = restriction.value(theta)
        stat = s - G.T @ lam
        if (
            np.max(np.abs(stat)) <= opts.stationarity_tol
            and np.max(np.abs(g)) <= opts.feasibility_tol
        ):
            return FitResult(
                theta=theta,
                objective=model.objective(theta),
                converged=True,
                iterations=iterations,
                multiplier=lam,
                feasibility=float(np.max(np.abs(g))),
            )
        H = model.hessian(theta) - _constraint_curvature(restriction, theta, lam)
        kkt = np.block([[H, -G.T], [G, np.zeros((q, q))]])
        rhs = -np.concatenate([stat, g])
        try:
            delta = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            break
        dtheta, dlam = delta[: theta.size], delta[theta.size :]
        t = 1.0
        base = merit(theta)
        accepted = False
        for _ in range(40):
            cand = theta + t * dtheta
            try:
                m = merit(cand)
            except (FloatingPointError, ZeroDivisionError, ValueError):
                t *= 0.5
                continue
            if np.isfinite(m) and m < base - 1e-14:
                theta = cand
                lam = lam + t * dlam
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # Merit stalled; take the full step once in case we are already
            # inside the Newton basin, then let the stationarity test decide.
            theta = theta + dtheta
            lam = lam + dlam

    g = restriction.value(theta)
    return FitResult(
        theta=theta,
        objective=model.objective(theta),
        converged=False,
        iterations=iterations,
        multiplier=lam,
        feasibility=float(np.max(np.abs(g))),
    )
