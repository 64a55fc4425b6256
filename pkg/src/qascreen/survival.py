"""Product-limit machinery for right-censored responses.

A censored sample is the pair of arrays ``(time, event)`` with
time = min(latent response, censoring time) and event = 1 when the response
was observed, 0 when it was censored.  The module provides the Kaplan-Meier
curve of the response distribution, the reverse Kaplan-Meier curve of the
censoring survival function, inverse-probability-of-censoring weights, and a
kernel-localized censoring curve for covariate-dependent censoring.

Tie convention: jumps of a curve at a tied time are processed before the
opposite kind, so the at-risk count at any jump time t is #{time_k >= t}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EVENT = "event_survival"
CENSORING = "censoring_survival"
DEFAULT_G_MIN = 0.05

_KERNELS = ("epanechnikov", "gaussian", "uniform")


class UnreachableQuantileError(ValueError):
    """The Kaplan-Meier distribution function never reaches the requested level."""

    def __init__(self, alpha: float, max_alpha: float):
        super().__init__(
            f"quantile level {alpha:g} is not identifiable from this sample; "
            f"the estimated distribution function only reaches {max_alpha:.6g}"
        )
        self.alpha = alpha
        self.max_alpha = max_alpha


class DegenerateNeighborhoodError(ValueError):
    """All kernel weights vanish at the evaluation point."""


@dataclass(frozen=True)
class KernelSpec:
    """Smoothing kernel: a density shape and a positive bandwidth."""

    kind: str = "epanechnikov"
    bandwidth: float = 0.25

    def __post_init__(self):
        if self.kind not in _KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; choose from {_KERNELS}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")

    def density(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind == "epanechnikov":
            return 0.75 * np.maximum(1.0 - u * u, 0.0)
        if self.kind == "gaussian":
            return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)
        return 0.5 * (np.abs(u) <= 1.0)


def default_bandwidth(n: int) -> float:
    """Bandwidth n^(-1/4) for covariates rescaled to [0, 1]."""
    return float(n) ** -0.25


@dataclass(frozen=True)
class KaplanMeierCurve:
    """Right-continuous product-limit step curve.

    ``survival_values[i]`` is the curve value just after ``jump_times[i]``;
    the curve equals 1 before the first jump.
    """

    jump_times: np.ndarray
    survival_values: np.ndarray
    target: str

    def __post_init__(self):
        if self.target not in (EVENT, CENSORING):
            raise ValueError(f"target must be {EVENT!r} or {CENSORING!r}")

    def survival_at(self, t) -> np.ndarray | float:
        """Right-continuous evaluation S(t)."""
        idx = np.searchsorted(self.jump_times, t, side="right")
        vals = np.concatenate([[1.0], self.survival_values])[idx]
        return float(vals) if np.isscalar(t) else vals

    def left_limit_at(self, t) -> np.ndarray | float:
        """Left limit S(t-): only jumps strictly before t count."""
        idx = np.searchsorted(self.jump_times, t, side="left")
        vals = np.concatenate([[1.0], self.survival_values])[idx]
        return float(vals) if np.isscalar(t) else vals


def _validate_sample(time, event) -> tuple[np.ndarray, np.ndarray]:
    time = np.asarray(time, dtype=float).ravel()
    event = np.asarray(event).ravel()
    if time.size == 0:
        raise ValueError("empty censored sample")
    if event.shape[0] != time.shape[0]:
        raise ValueError(
            f"dimension mismatch: {time.shape[0]} times but {event.shape[0]} event indicators"
        )
    if not np.isin(event, (0, 1)).all():
        raise ValueError("event indicators must be 0 (censored) or 1 (event)")
    return time, event.astype(int)


def fit_km(time, event, target: str = EVENT) -> KaplanMeierCurve:
    """Kaplan-Meier curve of the response (target=event_survival) or the
    censoring distribution (target=censoring_survival, flipped indicator)."""
    time, event = _validate_sample(time, event)
    d_ind = event if target == EVENT else 1 - event
    if target not in (EVENT, CENSORING):
        raise ValueError(f"target must be {EVENT!r} or {CENSORING!r}")

    order = np.argsort(time, kind="stable")
    ts = time[order]
    ds = d_ind[order]
    uniq, first = np.unique(ts, return_index=True)
    n = ts.size
    at_risk = n - first  # #{time_k >= t} for each unique time
    d_counts = np.add.reduceat(ds, first)
    has_jump = d_counts > 0
    factors = 1.0 - d_counts[has_jump] / at_risk[has_jump]
    return KaplanMeierCurve(
        jump_times=uniq[has_jump],
        survival_values=np.cumprod(factors),
        target=target,
    )


def survival_at(curve: KaplanMeierCurve, t):
    return curve.survival_at(t)


def km_quantile(curve: KaplanMeierCurve, alpha: float) -> float:
    """Left-continuous inverse of the KM distribution function 1 - S."""
    if curve.target != EVENT:
        raise ValueError("km_quantile requires an event-survival curve")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    F = 1.0 - curve.survival_values
    # 1e-12 absorbs product round-off so exact jump levels compare cleanly
    hit = np.flatnonzero(F >= alpha - 1e-12)
    if hit.size == 0:
        raise UnreachableQuantileError(alpha, float(F.max(initial=0.0)))
    return float(curve.jump_times[hit[0]])


def ipw_weights(time, event, censoring_curve: KaplanMeierCurve, g_min: float = DEFAULT_G_MIN):
    """Inverse-probability-of-censoring weights event / max(G(t-), g_min).

    The censoring survival is taken as the left limit at each observation's
    own time, so an event at t divides by the probability of remaining
    uncensored up to (but not including) t.  Censored rows get exactly 0.
    """
    time, event = _validate_sample(time, event)
    if censoring_curve.target != CENSORING:
        raise ValueError("ipw_weights requires a censoring-survival curve")
    G = np.asarray(censoring_curve.left_limit_at(time), dtype=float)
    return np.where(event == 1, 1.0 / np.maximum(G, g_min), 0.0)


def local_km(time, event, x, x0: float, kernel: KernelSpec, t: float) -> float:
    """Kernel-localized censoring survival G(t | x0) with Nadaraya-Watson weights.

    Product over censored observations j with time_j <= t of
    1 - B_j(x0) / sum_{k: time_k >= time_j} B_k(x0), where B are the
    normalized kernel weights at x0.  Factors whose weight is zero
    contribute 1; the result is clamped to [0, 1].
    """
    time, event = _validate_sample(time, event)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != time.shape[0]:
        raise ValueError("covariate vector length does not match the sample")
    k = kernel.density((x0 - x) / kernel.bandwidth)
    total = k.sum()
    if total <= 0:
        raise DegenerateNeighborhoodError(
            f"no kernel mass at x0={x0:g} with bandwidth {kernel.bandwidth:g}"
        )
    B = k / total
    eligible = (event == 0) & (time <= t)
    prod = 1.0
    for j in np.flatnonzero(eligible):
        denom = B[time >= time[j]].sum()
        if denom > 0 and B[j] > 0:
            prod *= 1.0 - B[j] / denom
    return float(np.clip(prod, 0.0, 1.0))


def _local_censoring_left_limits(time, event, x, kernel: KernelSpec) -> np.ndarray:
    """G(time_i - | x_i) for every observation, fully vectorized.

    Row i of the kernel matrix gives the Nadaraya-Watson weights at x_i; the
    product-limit factors are accumulated in time order with strict-inequality
    (left limit) lookup at each observation's own time.
    """
    n = time.shape[0]
    order = np.argsort(time, kind="stable")
    ts = time[order]
    cens_sorted = (event[order] == 0)

    K = kernel.density((x[:, None] - x[None, :][:, order]) / kernel.bandwidth)
    total = K.sum(axis=1)
    if np.any(total <= 0):
        bad = np.flatnonzero(total <= 0)
        raise DegenerateNeighborhoodError(
            f"no kernel mass at observation index {bad[0]} with bandwidth {kernel.bandwidth:g}"
        )
    B = K / total[:, None]

    # suffix sums over the at-risk set; shared within tied-time groups
    suffix = np.cumsum(B[:, ::-1], axis=1)[:, ::-1]
    uniq_first = np.zeros(n, dtype=int)
    first_seen = np.concatenate([[True], ts[1:] > ts[:-1]])
    uniq_first = np.maximum.accumulate(np.where(first_seen, np.arange(n), 0))
    denom = suffix[:, uniq_first]

    with np.errstate(divide="ignore", invalid="ignore"):
        factors = np.where(cens_sorted[None, :] & (denom > 0), 1.0 - B / denom, 1.0)
    np.clip(factors, 0.0, 1.0, out=factors)
    cum = np.cumprod(factors, axis=1)
    cum_with_one = np.concatenate([np.ones((n, 1)), cum], axis=1)

    # left limit at own time: product over strictly earlier times
    pos_of = np.empty(n, dtype=int)
    pos_of[order] = np.arange(n)
    own_group_start = uniq_first[pos_of]
    return cum_with_one[np.arange(n), own_group_start]


def local_ipw_weights(time, event, x, kernel: KernelSpec, g_min: float = DEFAULT_G_MIN):
    """IPW weights event / max(G(t- | x), g_min) using the localized censoring curve."""
    time, event = _validate_sample(time, event)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != time.shape[0]:
        raise ValueError("covariate vector length does not match the sample")
    G = _local_censoring_left_limits(time, event, x, kernel)
    return np.where(event == 1, 1.0 / np.maximum(G, g_min), 0.0)
