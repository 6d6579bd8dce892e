"""Small dense matrix kernel: full-row-rank pseudoinverse, the Greville
commutation check, and a guarded symmetric solver.

Everything here operates on small matrices (p, q <= 10 in shipped uses) and
is pure: no input is modified, results are fresh arrays.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatchError, RankDeficientError, SingularMatrixError

# Boundary between "invertible" and RankDeficient for Gram matrices.
DEFAULT_COND_CAP = 1e12


def _as_matrix(a, name: str) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    if out.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def _sym_abs_eig_range(M: np.ndarray) -> tuple[float, float]:
    """(max, min) absolute eigenvalue of a symmetric matrix.

    Closed forms for 1x1 and 2x2 keep the hot paths off LAPACK.
    """
    if M.shape == (1, 1):
        a = abs(float(M[0, 0]))
        return a, a
    if M.shape == (2, 2):
        t = 0.5 * (M[0, 0] + M[1, 1])
        r = float(np.hypot(0.5 * (M[0, 0] - M[1, 1]), M[0, 1]))
        e1, e2 = abs(t + r), abs(t - r)
        return max(e1, e2), min(e1, e2)
    w = np.abs(np.linalg.eigvalsh(M))
    return float(w[-1]), float(w[0])


def pinv_full_row_rank(G, *, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
    """Moore-Penrose inverse of a q x p matrix with full row rank.

    Uses the explicit formula G+ = G' (G G')^{-1}, which is exact for full
    row rank and is what the commutation identity check below relies on.

    Raises
    ------
    RankDeficientError
        If q > p or the Gram matrix G G' is numerically singular
        (condition number above ``cond_cap``).
    """
    Gm = _as_matrix(G, "G")
    q, p = Gm.shape
    if q > p:
        raise RankDeficientError(f"need q <= p for full row rank, got {q} x {p}")
    gram = Gm @ Gm.T
    emax, emin = _sym_abs_eig_range(gram)
    if emin <= 0.0 or emax / emin > cond_cap:
        raise RankDeficientError(
            f"Gram matrix of G is numerically singular (cond ~ "
            f"{np.inf if emin <= 0 else emax / emin:.3e})"
        )
    if gram.shape == (1, 1):
        return Gm.T / gram[0, 0]
    return Gm.T @ np.linalg.inv(gram)


def greville_identity_residual(
    G,
    K,
    *,
    tol: float = 1e-8,
    cond_cap: float = DEFAULT_COND_CAP,
) -> tuple[bool, float]:
    """Check the commutation identity G+ G K K' = K K' G+ G.

    This identity is sufficient for the pseudoinverse of the product to
    factor, (G K)+ = K+ G+. Returns ``(holds, residual)`` where ``residual``
    is the max-norm of the difference between the two products, and
    ``holds`` is True when the residual is at most ``tol`` scaled by the
    largest entry magnitude of the two products (so the decision is
    scale-free).
    """
    Gm = _as_matrix(G, "G")
    Km = _as_matrix(K, "K")
    if Km.shape[0] != Km.shape[1]:
        raise DimensionMismatchError(f"K must be square, got {Km.shape}")
    if Km.shape[0] != Gm.shape[1]:
        raise DimensionMismatchError(
            f"K must be p x p with p = {Gm.shape[1]}, got {Km.shape}"
        )
    Gp = pinv_full_row_rank(Gm, cond_cap=cond_cap)
    GpG = Gp @ Gm
    KKt = Km @ Km.T
    left = GpG @ KKt
    right = KKt @ GpG
    residual = float(np.max(np.abs(left - right)))
    scale = max(float(np.max(np.abs(left))), float(np.max(np.abs(right))), 1.0)
    return residual <= tol * scale, residual


def solve_symmetric(A, b, *, cond_cap: float = DEFAULT_COND_CAP) -> np.ndarray:
    """Solve A x = b for symmetric, numerically nonsingular A.

    Raises SingularMatrixError when A is not symmetric to roundoff or its
    condition number exceeds ``cond_cap``.
    """
    Am = _as_matrix(A, "A")
    bv = np.asarray(b, dtype=float)
    if Am.shape[0] != Am.shape[1]:
        raise DimensionMismatchError(f"A must be square, got {Am.shape}")
    if bv.shape[0] != Am.shape[0]:
        raise DimensionMismatchError(
            f"b has length {bv.shape[0]}, expected {Am.shape[0]}"
        )
    scale = float(np.max(np.abs(Am))) if Am.size else 0.0
    if scale > 0 and float(np.max(np.abs(Am - Am.T))) > 1e-8 * scale:
        raise SingularMatrixError("matrix is not symmetric")
    emax, emin = _sym_abs_eig_range(Am)
    if emin <= 0.0 or emax / emin > cond_cap:
        raise SingularMatrixError("symmetric system is numerically singular")
    if Am.shape == (1, 1):
        return bv / Am[0, 0]
    return np.linalg.solve(Am, bv)


def condition_number(A) -> float:
    """2-norm condition number (for diagnostics and rank guards)."""
    M = np.asarray(A, dtype=float)
    if M.shape in ((1, 1), (2, 2)):
        # Singular values squared are the eigenvalues of the Gram matrix.
        emax, emin = _sym_abs_eig_range(M.T @ M)
        if emin <= 0.0:
            return float("inf")
        return float(np.sqrt(emax / emin))
    svals = np.linalg.svd(M, compute_uv=False)
    if svals[-1] <= 0.0:
        return float("inf")
    return float(svals[0] / svals[-1])
