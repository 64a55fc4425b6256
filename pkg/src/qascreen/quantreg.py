"""Weighted quantile regression by interior-point LP, plus a least-squares analogue.

The fitting problem is min_beta sum_i w_i rho_alpha(y_i - x_i' beta) with the
check loss rho_alpha(u) = u * (alpha - 1{u < 0}).  Since w * rho(u) =
rho(w * u) for w > 0, weights are absorbed by row scaling and zero-weight rows
are dropped.  The solver runs a Mehrotra-style predictor-corrector iteration on
the bounded-variable LP dual

    max { b'a : A'a = (1 - alpha) A'1,  0 <= a <= 1 },

terminating when the relative duality gap drops below ``GAP_TOL`` (or after
``MAX_ITER`` iterations), and then polishes the iterate to an exact
interpolating-vertex solution whenever that does not worsen the objective.

Individual problems are small (N spline coefficients, N <= ~6); throughput
comes from solving a whole batch of same-shaped problems as one array program,
which is how the screening loop drives this module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

GAP_TOL = 1e-8
MAX_ITER = 200
_STEP_DAMP = 0.9995


def check_loss(u, alpha: float):
    """Check loss u * (alpha - 1{u < 0}); vectorized in u."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    u = np.asarray(u, dtype=float)
    out = u * (alpha - (u < 0))
    return out if out.ndim else float(out)


def sample_quantile(ys, alpha: float) -> float:
    """Type-1 sample quantile: inf{y : F_n(y) >= alpha} (left-continuous inverse)."""
    ys = np.asarray(ys, dtype=float).ravel()
    if ys.size == 0:
        raise ValueError("cannot take a quantile of an empty sample")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    k = max(1, math.ceil(alpha * ys.size - 1e-12))
    return float(np.partition(ys, k - 1)[k - 1])


@dataclass(frozen=True)
class CheckLossProblem:
    """One weighted quantile-regression fit: design (n, N), response (n,), weights (n,)."""

    design: np.ndarray
    response: np.ndarray
    weights: np.ndarray
    alpha: float

    def __post_init__(self):
        design = np.atleast_2d(np.asarray(self.design, dtype=float))
        response = np.asarray(self.response, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "weights", weights)
        n = design.shape[0]
        if response.shape[0] != n or weights.shape[0] != n:
            raise ValueError(
                f"dimension mismatch: design has {n} rows, response {response.shape[0]}, "
                f"weights {weights.shape[0]}"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(weights > 0):
            raise ValueError("at least one weight must be strictly positive")


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    objective: float
    status: str  # "converged" or "degenerate"


def _robust_scale(b: np.ndarray) -> np.ndarray:
    """Per-problem response scale used to normalize the LP; always positive."""
    med = np.median(b, axis=-1, keepdims=True)
    mad = np.median(np.abs(b - med), axis=-1)
    fallback = np.maximum(np.abs(med[..., 0]), 1.0)
    return np.where(mad > 0, mad, fallback)


def _solve_batch(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Batched N x N solve with a pseudo-inverse fallback for singular members."""
    try:
        return np.linalg.solve(M, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.einsum("...ij,...j->...i", np.linalg.pinv(M), rhs)


def qr_batch(
    designs: np.ndarray,
    response: np.ndarray,
    alpha: float,
    weights: np.ndarray | None = None,
    tol: float = GAP_TOL,
    max_iter: int = MAX_ITER,
    polish: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve a batch of weighted quantile regressions sharing one shape.

    Parameters
    ----------
    designs : (B, n, N) array
    response : (n,) or (B, n) array
    alpha : quantile level in (0, 1)
    weights : optional (n,) or (B, n) array of strictly positive weights
        (drop zero-weight rows before calling)

    Returns
    -------
    coefficients (B, N), objectives (B,), converged (B,) boolean mask.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    A = np.asarray(designs, dtype=float)
    if A.ndim != 3:
        raise ValueError("designs must have shape (B, n, N)")
    B_, n, N = A.shape
    b = np.broadcast_to(np.asarray(response, dtype=float), (B_, n)).copy()
    if weights is not None:
        w = np.broadcast_to(np.asarray(weights, dtype=float), (B_, n))
        if np.any(w <= 0):
            raise ValueError("qr_batch requires strictly positive weights")
        A = A * w[:, :, None]
        b = b * w

    scale = _robust_scale(b)
    b = b / scale[:, None]

    At = np.ascontiguousarray(A.transpose(0, 2, 1))
    ones_target = (1.0 - alpha) * A.sum(axis=1)  # (B, N): A'1 * (1 - alpha)

    # Feasible start: least-squares coefficients, split residuals, centered duals.
    M0 = At @ A
    M0[:, np.arange(N), np.arange(N)] += 1e-10 * (1.0 + np.trace(M0, axis1=1, axis2=2) / N)[:, None]
    beta = _solve_batch(M0, (At @ b[:, :, None])[..., 0])
    r = b - (A @ beta[:, :, None])[..., 0]
    pad = 0.1 * (1.0 + np.mean(np.abs(r), axis=1, keepdims=True))
    u = np.maximum(r, 0.0) + pad
    v = np.maximum(-r, 0.0) + pad
    a = np.full((B_, n), 1.0 - alpha)
    sa = np.full((B_, n), alpha)

    dual_const = (1.0 - alpha) * b.sum(axis=1)
    converged = np.zeros(B_, dtype=bool)
    idxN = np.arange(N)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            r = b - (A @ beta[:, :, None])[..., 0]
            primal = np.sum(r * (alpha - (r < 0)), axis=1)
            dual = np.sum(b * a, axis=1) - dual_const
            gap = primal - dual
            converged = gap <= tol * (1.0 + np.abs(primal))
            if converged.all():
                break
            active = ~converged

            usa = np.maximum(u * sa, 0.0)
            va = np.maximum(v * a, 0.0)
            mu = (usa.sum(axis=1) + va.sum(axis=1)) / (2 * n)

            W = 1.0 / (u / sa + v / a)
            W = np.where(np.isfinite(W), W, 0.0)
            R1 = (At @ a[:, :, None])[..., 0] - ones_target
            R2 = r - u + v
            M = At @ (A * W[:, :, None])

            # Affine (predictor) direction: mu target 0.
            h = R2 + u - v  # R4/sa = u, R5/a = v at mu=0
            rhs = R1 + (At @ (W * h)[:, :, None])[..., 0]
            db_aff = _solve_batch(M, rhs)
            da_aff = W * (h - (A @ db_aff[:, :, None])[..., 0])
            du_aff = -u + (u / sa) * da_aff
            dv_aff = -v - (v / a) * da_aff

            etaP_aff = _max_step(a, da_aff, sa, -da_aff)
            etaD_aff = _max_step(u, du_aff, v, dv_aff)
            mu_aff = (
                np.sum((u + etaD_aff[:, None] * du_aff) * (sa - etaP_aff[:, None] * da_aff), axis=1)
                + np.sum((v + etaD_aff[:, None] * dv_aff) * (a + etaP_aff[:, None] * da_aff), axis=1)
            ) / (2 * n)
            sigma = np.clip(np.where(mu > 0, (mu_aff / np.maximum(mu, 1e-300)) ** 3, 0.0), 0.0, 1.0)

            # Corrector direction with second-order Mehrotra terms.
            target = (sigma * mu)[:, None]
            R4 = usa - target - du_aff * da_aff
            R5 = va - target + dv_aff * da_aff
            h = R2 + R4 / sa - R5 / a
            rhs = R1 + (At @ (W * h)[:, :, None])[..., 0]
            db = _solve_batch(M, rhs)
            da = W * (h - (A @ db[:, :, None])[..., 0])
            du = (-R4 + u * da) / sa
            dv = (-R5 - v * da) / a

            etaP = np.where(active, _STEP_DAMP * _max_step(a, da, sa, -da), 0.0)
            etaD = np.where(active, _STEP_DAMP * _max_step(u, du, v, dv), 0.0)
            np.clip(etaP, 0.0, 1.0, out=etaP)
            np.clip(etaD, 0.0, 1.0, out=etaD)

            a = a + etaP[:, None] * da
            np.clip(a, 1e-14, 1.0 - 1e-14, out=a)
            sa = 1.0 - a
            beta = beta + etaD[:, None] * db
            u = np.maximum(u + etaD[:, None] * du, 1e-300)
            v = np.maximum(v + etaD[:, None] * dv, 1e-300)

    r = b - (A @ beta[:, :, None])[..., 0]
    objective = np.sum(r * (alpha - (r < 0)), axis=1)

    if polish and n >= N:
        beta, objective = _polish_batch(A, b, alpha, beta, objective)

    bad = ~np.isfinite(beta).all(axis=1) | ~np.isfinite(objective)
    if bad.any():
        beta[bad] = 0.0
        objective[bad] = np.sum(
            b[bad] * (alpha - (b[bad] < 0)), axis=1
        )
        converged = converged & ~bad

    return beta * scale[:, None], objective * scale, converged


def _max_step(x1: np.ndarray, d1: np.ndarray, x2: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """Largest eta in [0, 1] with x1 + eta*d1 >= 0 and x2 + eta*d2 >= 0 per batch member."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(d1 < 0, -x1 / d1, np.inf)
        r2 = np.where(d2 < 0, -x2 / d2, np.inf)
    eta = np.minimum(r1.min(axis=1), r2.min(axis=1))
    return np.minimum(eta, 1.0)


def _polish_batch(A, b, alpha, beta, objective):
    """Refit on the N smallest-|residual| rows; keep when the objective does not worsen."""
    B_, n, N = A.shape
    r = b - (A @ beta[:, :, None])[..., 0]
    idx = np.argpartition(np.abs(r), N - 1, axis=1)[:, :N]
    A_b = np.take_along_axis(A, idx[:, :, None], axis=1)
    b_b = np.take_along_axis(b, idx, axis=1)
    cand = _solve_batch(A_b, b_b)
    rc = b - (A @ cand[:, :, None])[..., 0]
    obj_c = np.sum(rc * (alpha - (rc < 0)), axis=1)
    accept = np.isfinite(obj_c) & np.isfinite(cand).all(axis=1)
    accept &= obj_c <= objective + 1e-9 * (1.0 + np.abs(objective))
    beta = np.where(accept[:, None], cand, beta)
    objective = np.where(accept, obj_c, objective)
    return beta, objective


def _vertex_candidates(A, b, alpha, beta0, obj0):
    """Enumerate interpolating vertices near beta0; return the minimum-norm optimizer.

    Candidate rows are the N + 3 smallest |residual| rows at beta0; every
    nonsingular size-N subset gives a vertex.  Among all candidates whose
    objective matches the best one within tolerance, the smallest Euclidean
    norm wins (subset enumeration order breaks any remaining ties).
    """
    n, N = A.shape
    r = b - A @ beta0
    m = min(n, N + 3)
    rows = np.argsort(np.abs(r), kind="stable")[:m]
    cands = []
    for combo in itertools.combinations(sorted(rows.tolist()), N):
        sub = A[list(combo)]
        try:
            bc = np.linalg.solve(sub, b[list(combo)])
        except np.linalg.LinAlgError:
            continue
        rc = b - A @ bc
        oc = float(np.sum(rc * (alpha - (rc < 0))))
        if np.isfinite(oc):
            cands.append((oc, float(bc @ bc), bc))
    if not cands:
        return beta0, obj0
    best_obj = min(oc for oc, _, _ in cands)
    if best_obj > obj0 + 1e-9 * (1.0 + abs(obj0)):
        return beta0, obj0
    tol = 1e-9 * (1.0 + abs(best_obj))
    ok = [(norm, i) for i, (obj, norm, _) in enumerate(cands) if obj <= best_obj + tol]
    _, pick = min(ok)
    return cands[pick][2], cands[pick][0]


def fit_weighted_qr(problem: CheckLossProblem) -> FitResult:
    """Minimize the weighted check loss over coefficients.

    Rank deficiency on the positive-weight rows is not an error: the fit is
    carried out in the design's column space and the minimum-norm coefficient
    vector is reported with status ``degenerate``.
    """
    keep = problem.weights > 0
    w = problem.weights[keep]
    A = problem.design[keep] * w[:, None]
    b = problem.response[keep] * w
    n, N = A.shape

    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(s > s[0] * max(n, N) * np.finfo(float).eps)) if s.size and s[0] > 0 else 0
    status = "converged"

    if rank == 0:
        beta = np.zeros(N)
        obj = float(np.sum(check_loss(problem.response, problem.alpha) * problem.weights))
        return FitResult(coefficients=beta, objective=obj, status="degenerate")

    if rank < N:
        A_red = U[:, :rank] * s[:rank]
        status = "degenerate"
    else:
        A_red = A

    coef, obj, conv = qr_batch(
        A_red[None], b, problem.alpha, polish=False if n >= A_red.shape[1] else True
    )
    gamma, obj0 = coef[0], float(obj[0])
    if n >= A_red.shape[1]:
        gamma, obj0 = _vertex_candidates(A_red, b, problem.alpha, gamma, obj0)
    if not conv[0] and status == "converged":
        status = "degenerate"

    beta = Vt[:rank].T @ gamma if rank < N else gamma
    resid = problem.response - problem.design @ beta
    objective = float(np.sum(problem.weights * check_loss(resid, problem.alpha)))
    return FitResult(coefficients=beta, objective=objective, status=status)


def fit_least_squares(
    design: np.ndarray, response: np.ndarray, weights: np.ndarray | None = None
) -> FitResult:
    """Weighted least squares with the minimum-norm solution under rank deficiency."""
    A = np.atleast_2d(np.asarray(design, dtype=float))
    y = np.asarray(response, dtype=float).ravel()
    n, N = A.shape
    if y.shape[0] != n:
        raise ValueError(f"dimension mismatch: design has {n} rows, response {y.shape[0]}")
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape[0] != n:
            raise ValueError(f"dimension mismatch: design has {n} rows, weights {w.shape[0]}")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
    sw = np.sqrt(w)
    beta, _, rank, _ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    resid = y - A @ beta
    objective = float(np.sum(w * resid**2))
    return FitResult(
        coefficients=beta,
        objective=objective,
        status="converged" if rank == N else "degenerate",
    )


def ls_batch(
    designs: np.ndarray,
    response: np.ndarray,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Batched weighted least squares (normal equations, pinv under singularity)."""
    A = np.asarray(designs, dtype=float)
    B_, n, N = A.shape
    y = np.broadcast_to(np.asarray(response, dtype=float), (B_, n))
    if weights is None:
        Aw, yw = A, y
    else:
        w = np.broadcast_to(np.asarray(weights, dtype=float), (B_, n))
        Aw = A * w[:, :, None]
        yw = y * w
    M = np.einsum("bni,bnj->bij", Aw, A)
    rhs = np.einsum("bni,bn->bi", A, yw)
    return _solve_batch(M, rhs)
