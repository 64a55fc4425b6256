"""Marginal quantile-utility screening over high-dimensional feature matrices.

Each feature is rescaled to [0, 1], a small B-spline quantile (or least
squares) regression of the response on that feature is fitted, and the
feature's utility is the mean squared deviation of the fitted curve from the
unconditional center (a sample or Kaplan-Meier quantile, or the mean for the
least-squares baseline).  Features are ranked by utility and the top
floor(n / ln n) are kept unless an explicit keep count or utility threshold is
given.

Methods
-------
qasis           complete-data quantile screening
qasis_censored  censored responses, weights 1/G(t-) from the global reverse KM
qasis_local     censored responses, kernel-localized censoring curve per feature
nis             least-squares baseline, centered at the sample mean
naive           complete-data screening applied to censored times, ignoring status
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import quantreg, survival
from .spline import BSplineBasis, auto_basis, scale_columns
from .survival import CENSORING, EVENT, KernelSpec

METHODS = ("qasis", "qasis_censored", "qasis_local", "nis", "naive")
_CENSORED_METHODS = ("qasis_censored", "qasis_local")
_CHUNK = 512


@dataclass(frozen=True)
class ScreeningConfig:
    """Screening hyperparameters; None fields resolve to data-driven defaults."""

    alpha: float = 0.5
    method: str = "qasis"
    num_basis: int | None = None  # default floor(n^(1/5)), at least degree + 1
    degree: int | None = None  # default min(3, num_basis - 1)
    keep: int | None = None  # default floor(n / ln n)
    threshold: float | None = None  # overrides keep when given
    g_min: float = survival.DEFAULT_G_MIN
    kernel: str = "epanechnikov"
    bandwidth: float | None = None  # default n^(-1/4)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.keep is not None and self.keep < 1:
            raise ValueError(f"keep must be at least 1, got {self.keep}")
        if self.g_min <= 0:
            raise ValueError(f"g_min must be positive, got {self.g_min}")

    def resolve_basis(self, n: int) -> BSplineBasis:
        return auto_basis(n, self.num_basis, self.degree)

    def resolve_keep(self, n: int, p: int) -> int:
        if self.keep is not None:
            return min(self.keep, p)
        return min(p, max(1, math.floor(n / math.log(n))))

    def resolve_kernel(self, n: int) -> KernelSpec:
        bw = self.bandwidth if self.bandwidth is not None else survival.default_bandwidth(n)
        return KernelSpec(kind=self.kernel, bandwidth=bw)


@dataclass(frozen=True)
class ScreeningResult:
    """Per-feature utilities with the induced ranking and selected set.

    ``ranking`` lists 0-based feature indices by decreasing utility (ties by
    ascending index); ``selected`` holds the chosen indices sorted ascending.
    """

    utilities: np.ndarray
    ranking: np.ndarray
    selected: np.ndarray
    flags: tuple[str, ...]
    method: str
    alpha: float
    center: float
    keep: int
    config: ScreeningConfig

    @property
    def selected_mask(self) -> np.ndarray:
        mask = np.zeros(self.utilities.shape[0], dtype=bool)
        mask[self.selected] = True
        return mask


def rank_and_select(
    utilities: np.ndarray, keep: int | None = None, threshold: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Stable descending ranking (ties by ascending index) and selection rule."""
    utilities = np.asarray(utilities, dtype=float)
    if not np.isfinite(utilities).all():
        raise ValueError("utilities must be finite")
    ranking = np.argsort(-utilities, kind="stable")
    if threshold is not None:
        selected = np.flatnonzero(utilities >= threshold)
    else:
        if keep is None:
            raise ValueError("either keep or threshold must be given")
        selected = np.sort(ranking[:keep])
    return ranking, selected


class _PreparedScreen:
    """Scaled covariates and the stacked per-feature design tensor, shared
    across repeated screens of the same matrix (different methods or alphas)."""

    def __init__(self, X: np.ndarray, basis: BSplineBasis):
        X = np.asarray(X, dtype=float)
        self.n, self.p = X.shape
        self.basis = basis
        self.X01, self.degenerate = scale_columns(X)
        self.live = np.flatnonzero(~self.degenerate)
        nb = basis.num_basis
        if self.live.size:
            flat = self.X01[:, self.live].T.reshape(-1)
            self.design = basis.design_matrix(flat).reshape(self.live.size, self.n, nb)
        else:
            self.design = np.empty((0, self.n, nb))
        self._local_weights: dict[tuple, np.ndarray] = {}

    def local_weights(self, time, event, kernel: KernelSpec, g_min: float) -> np.ndarray:
        """(n_live, n) localized IPW weight matrix, cached across alphas."""
        key = (kernel.kind, kernel.bandwidth, g_min)
        if key not in self._local_weights:
            W = np.empty((self.live.size, self.n))
            for row, j in enumerate(self.live):
                W[row] = survival.local_ipw_weights(
                    time, event, self.X01[:, j], kernel, g_min
                )
            self._local_weights[key] = W
        return self._local_weights[key]


def _center_and_weights(prep: _PreparedScreen, y, status, config: ScreeningConfig):
    """Resolve the response vector, unconditional center and fit weights."""
    method = config.method
    if method == "nis":
        return y, float(np.mean(y)), None
    if method in ("qasis", "naive"):
        return y, quantreg.sample_quantile(y, config.alpha), None
    event_curve = survival.fit_km(y, status, EVENT)
    center = survival.km_quantile(event_curve, config.alpha)
    if method == "qasis_censored":
        cens_curve = survival.fit_km(y, status, CENSORING)
        w = survival.ipw_weights(y, status, cens_curve, config.g_min)
        return y, center, w
    kernel = config.resolve_kernel(prep.n)
    W = prep.local_weights(y, status, kernel, config.g_min)
    return y, center, W


def _fit_utilities(prep, response, center, weights, config) -> tuple[np.ndarray, list[str]]:
    """Batched per-feature fits; returns utilities over live features and flags."""
    n_live = prep.live.size
    utilities = np.zeros(n_live)
    flags = ["ok"] * n_live
    if n_live == 0:
        return utilities, flags

    if weights is None:
        pos = slice(None)
    else:
        w2d = weights if weights.ndim == 2 else np.broadcast_to(weights, (1, prep.n))
        pos = np.flatnonzero((w2d > 0).any(axis=0))
        resp_fit = response[pos]

    for start in range(0, n_live, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n_live))
        D = prep.design[sl]
        try:
            if config.method == "nis":
                coef = quantreg.ls_batch(D, response)
                conv = np.ones(D.shape[0], dtype=bool)
            elif weights is None:
                coef, _, conv = quantreg.qr_batch(D, response, config.alpha)
            else:
                w_chunk = weights[sl][:, pos] if weights.ndim == 2 else weights[pos]
                coef, _, conv = quantreg.qr_batch(
                    D[:, pos, :], resp_fit, config.alpha, weights=w_chunk
                )
            fitted = (D @ coef[:, :, None])[..., 0]
            util = np.mean((fitted - center) ** 2, axis=1)
            good = np.isfinite(util)
            utilities[sl] = np.where(good, util, 0.0)
            for k in np.flatnonzero(~good):
                flags[start + k] = "failed:nonfinite"
            for k in np.flatnonzero(good & ~conv):
                flags[start + k] = "not_converged"
        except Exception as exc:  # isolate failures without aborting the screen
            for k in range(sl.start, sl.stop):
                utilities[k] = 0.0
                flags[k] = f"failed:{type(exc).__name__}"
    return utilities, flags


def _screen_prepared(
    prep: _PreparedScreen, y, status, config: ScreeningConfig
) -> ScreeningResult:
    response, center, weights = _center_and_weights(prep, y, status, config)
    live_util, live_flags = _fit_utilities(prep, response, center, weights, config)

    utilities = np.zeros(prep.p)
    flags = ["degenerate"] * prep.p
    for row, j in enumerate(prep.live):
        utilities[j] = live_util[row]
        flags[j] = live_flags[row]

    keep = config.resolve_keep(prep.n, prep.p)
    ranking, selected = rank_and_select(utilities, keep=keep, threshold=config.threshold)
    return ScreeningResult(
        utilities=utilities,
        ranking=ranking,
        selected=selected,
        flags=tuple(flags),
        method=config.method,
        alpha=config.alpha,
        center=float(center),
        keep=keep,
        config=config,
    )


def _validate_inputs(X, y, status, method):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    n, p = X.shape
    if n < 10:
        raise ValueError(f"need at least 10 observations to screen, got {n}")
    if p < 1:
        raise ValueError("X must have at least one feature")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n:
        raise ValueError(f"dimension mismatch: X has {n} rows but y has {y.shape[0]}")
    if not np.isfinite(y).all():
        raise ValueError("y contains non-finite values")
    if method in _CENSORED_METHODS:
        if status is None:
            raise ValueError(f"method {method!r} requires a status (event) vector")
    elif method in ("qasis", "nis") and status is not None:
        raise ValueError(
            f"method {method!r} ignores censoring; drop status or use method 'naive'"
        )
    if status is not None:
        status = np.asarray(status).ravel()
        if status.shape[0] != n:
            raise ValueError("status length does not match X")
        if not np.isin(status, (0, 1)).all():
            raise ValueError("status values must be 0 or 1")
        status = status.astype(int)
    return X, y, status


def screen(
    X, y, config: ScreeningConfig | None = None, status=None
) -> ScreeningResult:
    """Rank all features of X by marginal quantile utility and select a subset.

    For censored methods, ``y`` holds the observed (possibly censored) times
    and ``status`` the event indicators (1 = event, 0 = censored).
    """
    config = config or ScreeningConfig()
    X, y, status = _validate_inputs(X, y, status, config.method)
    prep = _PreparedScreen(X, config.resolve_basis(X.shape[0]))
    return _screen_prepared(prep, y, status, config)


def screen_many(
    X, y, configs: list[ScreeningConfig], status=None
) -> list[ScreeningResult]:
    """Screen once per config, sharing covariate scaling, design matrices and
    local censoring weights across configs (the benchmark hot path)."""
    if not configs:
        return []
    for cfg in configs:
        X_, y_, status_ = _validate_inputs(X, y, status, cfg.method)
    preps: dict[tuple, _PreparedScreen] = {}
    out = []
    for cfg in configs:
        basis = cfg.resolve_basis(X_.shape[0])
        key = (basis.degree, basis.interior_knots)
        if key not in preps:
            preps[key] = _PreparedScreen(X_, basis)
        out.append(_screen_prepared(preps[key], y_, status_, cfg))
    return out


def marginal_utility(
    x_col, y, weights=None, config: ScreeningConfig | None = None, status=None
) -> float:
    """Utility of a single feature column already rescaled to [0, 1].

    Degenerate (constant) columns score exactly 0 without fitting.  When
    ``weights`` is omitted it is derived from the method (all ones for
    complete-data methods, IPW weights for the censored ones).
    """
    config = config or ScreeningConfig()
    x_col = np.asarray(x_col, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x_col.shape[0] != y.shape[0]:
        raise ValueError("x_col and y must have the same length")
    if np.any((x_col < 0) | (x_col > 1)):
        raise ValueError("x_col must be rescaled to [0, 1] before computing a utility")
    if x_col.max() <= x_col.min():
        return 0.0

    n = x_col.shape[0]
    basis = config.resolve_basis(n)
    design = basis.design_matrix(x_col)

    if config.method == "nis":
        center = float(np.mean(y))
        fit = quantreg.fit_least_squares(design, y, weights)
        fitted = design @ fit.coefficients
        return float(np.mean((fitted - center) ** 2))

    if config.method in ("qasis", "naive"):
        center = quantreg.sample_quantile(y, config.alpha)
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    else:
        if status is None:
            raise ValueError(f"method {config.method!r} requires a status vector")
        center = survival.km_quantile(survival.fit_km(y, status, EVENT), config.alpha)
        if weights is not None:
            w = np.asarray(weights, dtype=float)
        elif config.method == "qasis_censored":
            curve = survival.fit_km(y, status, CENSORING)
            w = survival.ipw_weights(y, status, curve, config.g_min)
        else:
            w = survival.local_ipw_weights(
                y, status, x_col, config.resolve_kernel(n), config.g_min
            )
    fit = quantreg.fit_weighted_qr(
        quantreg.CheckLossProblem(design, y, w, config.alpha)
    )
    fitted = design @ fit.coefficients
    return float(np.mean((fitted - center) ** 2))


class QuantileScreener(SelectorMixin, BaseEstimator):
    """Feature selector ranking covariates by marginal quantile utility.

    Drops in wherever a scikit-learn selector fits: ``fit(X, y)`` computes
    utilities and the selected set, ``transform(X)`` keeps the selected
    columns, ``get_support()`` exposes the mask.  Censored responses are
    passed as ``fit(X, times, status=events)`` with a censored method.

    Parameters mirror :class:`ScreeningConfig`.
    """

    def __init__(
        self,
        alpha: float = 0.5,
        method: str = "qasis",
        num_basis: int | None = None,
        degree: int | None = None,
        keep: int | None = None,
        threshold: float | None = None,
        g_min: float = survival.DEFAULT_G_MIN,
        kernel: str = "epanechnikov",
        bandwidth: float | None = None,
    ):
        self.alpha = alpha
        self.method = method
        self.num_basis = num_basis
        self.degree = degree
        self.keep = keep
        self.threshold = threshold
        self.g_min = g_min
        self.kernel = kernel
        self.bandwidth = bandwidth

    def _config(self) -> ScreeningConfig:
        return ScreeningConfig(
            alpha=self.alpha,
            method=self.method,
            num_basis=self.num_basis,
            degree=self.degree,
            keep=self.keep,
            threshold=self.threshold,
            g_min=self.g_min,
            kernel=self.kernel,
            bandwidth=self.bandwidth,
        )

    def fit(self, X, y, status=None):
        X, y = check_X_y(X, y, y_numeric=True)
        result = screen(X, y, self._config(), status=status)
        self.n_features_in_ = X.shape[1]
        self.result_ = result
        self.utilities_ = result.utilities
        self.ranking_ = result.ranking
        self.selected_ = result.selected
        self.flags_ = result.flags
        self.center_ = result.center
        self.keep_ = result.keep
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "result_")
        return self.result_.selected_mask

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.target_tags.required = True
        return tags
