"""Benchmark criteria and the Monte-Carlo replication harness.

Two criteria are computed per replication: the minimum model size R (the
smallest ranking prefix containing every active variable) and the proportion
S of active variables inside the selected set.  Replications use independent
seed streams (master seed, replication index) and can run in parallel
processes; aggregation is a deterministic reduce in replication order, so
results do not depend on the worker count.

Summaries use the same type-1 quantile convention as the screening code:
median R, interquartile range Q3 - Q1, mean S and the sure-screening rate.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .quantreg import sample_quantile
from .screening import ScreeningConfig, screen_many
from .simulate import example_info, make_example

COMPLETE_METHODS = ("qasis", "nis")
CENSORED_METHODS = ("qasis_censored", "qasis_local", "naive")


@dataclass(frozen=True)
class ReplicationResult:
    minimum_size: int  # R
    proportion: float  # S
    sure_screen: bool


@dataclass(frozen=True)
class CriteriaSummary:
    example_id: str
    method: str
    alpha: float
    p_star: int
    median_R: float
    iqr_R: float
    mean_S: float
    sure_screen_rate: float
    replications: int


@dataclass(frozen=True)
class BenchmarkReport:
    example_id: str
    methods: tuple[str, ...]
    alphas: tuple[float, ...]
    replications: int
    master_seed: int
    summaries: tuple[CriteriaSummary, ...]


def minimum_model_size(ranking, true_active) -> int:
    """Largest rank position (1-based) over the active variables."""
    ranking = np.asarray(ranking)
    active = sorted(true_active)
    if not active:
        raise ValueError("true_active must be nonempty")
    p = ranking.shape[0]
    if min(active) < 0 or max(active) >= p:
        raise ValueError(f"active index out of range for p={p}")
    pos = np.empty(p, dtype=int)
    pos[ranking] = np.arange(p)
    return int(pos[active].max()) + 1


def proportion_selected(selected, true_active) -> float:
    """|selected intersect active| / |active|."""
    active = set(true_active)
    if not active:
        raise ValueError("true_active must be nonempty")
    return len(active.intersection(set(np.asarray(selected).tolist()))) / len(active)


def evaluate_replication(result, true_active) -> ReplicationResult:
    R = minimum_model_size(result.ranking, true_active)
    S = proportion_selected(result.selected, true_active)
    return ReplicationResult(
        minimum_size=R, proportion=S, sure_screen=set(true_active).issubset(set(result.selected.tolist()))
    )


def _replicate(example_id, n, p, master_seed, rep, methods, alphas, overrides):
    try:
        instance = make_example(example_id, seed=(master_seed, rep), n=n, p=p)
        configs = [
            ScreeningConfig(alpha=a, method=m, **overrides)
            for m in methods
            for a in alphas
        ]
        results = screen_many(instance.X, instance.y, configs, status=instance.status)
        out = []
        for cfg, res in zip(configs, results):
            active = instance.active_set(cfg.alpha)
            rr = evaluate_replication(res, active)
            out.append((cfg.method, cfg.alpha, rr.minimum_size, rr.proportion, rr.sure_screen))
        return out
    except Exception as exc:
        raise RuntimeError(f"replication {rep} of example {example_id} failed: {exc}") from exc


def run_benchmark(
    example_id: str,
    methods,
    alphas,
    reps: int,
    master_seed: int = 0,
    n: int | None = None,
    p: int | None = None,
    workers: int = 1,
    config_overrides: dict | None = None,
) -> BenchmarkReport:
    """Monte-Carlo benchmark of one example over (method, alpha) combinations."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    methods = tuple(methods)
    alphas = tuple(float(a) for a in alphas)
    overrides = dict(config_overrides or {})
    median_set, other_set, censored = example_info(example_id)
    allowed = CENSORED_METHODS if censored else COMPLETE_METHODS
    for m in methods:
        if m not in allowed:
            raise ValueError(
                f"method {m!r} does not apply to example {example_id}; choose from {allowed}"
            )

    args = [
        (example_id, n, p, master_seed, rep, methods, alphas, overrides)
        for rep in range(reps)
    ]
    if workers <= 1:
        rows = [_replicate(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_replicate, *zip(*args)))

    by_combo = {(m, a): [] for m in methods for a in alphas}
    for row in rows:
        for method, alpha, R, S, sure in row:
            by_combo[(method, alpha)].append((R, S, sure))

    summaries = []
    for m in methods:
        for a in alphas:
            recs = by_combo[(m, a)]
            Rs = np.array([r[0] for r in recs], dtype=float)
            Ss = np.array([r[1] for r in recs], dtype=float)
            sures = np.array([r[2] for r in recs], dtype=float)
            summaries.append(
                CriteriaSummary(
                    example_id=example_id,
                    method=m,
                    alpha=a,
                    p_star=len(median_set if a == 0.5 else other_set),
                    median_R=sample_quantile(Rs, 0.5),
                    iqr_R=sample_quantile(Rs, 0.75) - sample_quantile(Rs, 0.25),
                    mean_S=float(Ss.mean()),
                    sure_screen_rate=float(sures.mean()),
                    replications=reps,
                )
            )
    return BenchmarkReport(
        example_id=example_id,
        methods=methods,
        alphas=alphas,
        replications=reps,
        master_seed=master_seed,
        summaries=tuple(summaries),
    )


def report_to_json(report: BenchmarkReport) -> str:
    doc = {
        "example": report.example_id,
        "methods": list(report.methods),
        "alphas": list(report.alphas),
        "replications": report.replications,
        "seed": report.master_seed,
        "results": [asdict(s) for s in report.summaries],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def format_table(report: BenchmarkReport) -> str:
    """Aligned text table: method, p*, median R (IQR), mean S."""
    header = ("Method", "p*", "R (IQR)", "S")
    rows = [
        (
            f"{s.method} (alpha={s.alpha:.2f})",
            str(s.p_star),
            f"{s.median_R:g} ({s.iqr_R:g})",
            f"{s.mean_S:.2f}",
        )
        for s in report.summaries
    ]
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = [
        f"Example {report.example_id}: {report.replications} replications, seed {report.master_seed}",
        "  ".join(h.ljust(w) for h, w in zip(header, widths)),
    ]
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)
