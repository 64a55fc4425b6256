"""Seeded data generators for the Monte-Carlo benchmark examples.

Covariate rows are i.i.d. N(0, Sigma) with the AR(1) structure
Sigma_ij = rho^|i-j|, generated by the recursion X_1 = Z_1,
X_j = rho X_{j-1} + sqrt(1 - rho^2) Z_j so cost is O(np) and the covariance
is exact in distribution.  All randomness flows through a Philox
counter-based generator keyed by the seed, so instances are bit-reproducible
and replications can use independent streams (master seed, replication index).

Component functions are applied to the raw Gaussian covariates; rescaling to
[0, 1] happens inside the screening pipeline, not here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

EXAMPLE_IDS = ("1a", "1b", "1c", "2", "3a", "3b", "4")


def rng_from_seed(seed) -> np.random.Generator:
    """Philox generator; seed may be an int or a tuple of ints (seed streams)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


@dataclass(frozen=True)
class DesignSpec:
    n: int
    p: int
    rho: float
    seed: object = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")


def sample_ar1_gaussian(spec: DesignSpec) -> np.ndarray:
    rng = rng_from_seed(spec.seed)
    return _ar1(rng, spec.n, spec.p, spec.rho)


def _ar1(rng: np.random.Generator, n: int, p: int, rho: float) -> np.ndarray:
    Z = rng.standard_normal((n, p))
    if rho == 0.0:
        return Z
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    c = np.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + c * Z[:, j]
    return X


@dataclass(frozen=True)
class ExampleInstance:
    """One generated data set plus its quantile-level active sets (0-based)."""

    example_id: str
    X: np.ndarray
    y: np.ndarray  # responses, or observed times when censored
    status: np.ndarray | None  # event indicators when censored, else None
    active_median: frozenset[int]
    active_other: frozenset[int]

    @property
    def censored(self) -> bool:
        return self.status is not None

    def active_set(self, alpha: float) -> frozenset[int]:
        return self.active_median if alpha == 0.5 else self.active_other


def g1(x):
    return np.asarray(x, dtype=float)


def g2(x):
    return (2.0 * np.asarray(x) - 1.0) ** 2


def g3(x):
    s = np.sin(2.0 * np.pi * np.asarray(x))
    return s / (2.0 - s)


def g4(x):
    t = 2.0 * np.pi * np.asarray(x)
    s, c = np.sin(t), np.cos(t)
    return 0.1 * s + 0.2 * c + 0.3 * s**2 + 0.4 * c**3 + 0.5 * s**3


def _additive_signal(X: np.ndarray) -> np.ndarray:
    return 5 * g1(X[:, 0]) + 3 * g2(X[:, 1]) + 4 * g3(X[:, 2]) + 6 * g4(X[:, 3])


def gen_example1(case: str = "b", n: int = 400, p: int = 1000, seed=0) -> ExampleInstance:
    """Homoscedastic additive model; four active variables at every quantile.

    Case 'a': independent covariates; 'b': AR(1) rho = 0.8; 'c': same design
    as 'b' with Cauchy noise.
    """
    if case not in ("a", "b", "c"):
        raise ValueError(f"example 1 case must be 'a', 'b' or 'c', got {case!r}")
    rng = rng_from_seed(seed)
    rho = 0.0 if case == "a" else 0.8
    X = _ar1(rng, n, p, rho)
    eps = rng.standard_cauchy(n) if case == "c" else rng.standard_normal(n)
    y = _additive_signal(X) + np.sqrt(1.74) * eps
    active = frozenset({0, 1, 2, 3})
    return ExampleInstance(f"1{case}", X, y, None, active, active)


def gen_example2(n: int = 200, p: int = 2000, seed=0) -> ExampleInstance:
    """Heteroscedastic index model: 5 active variables at the median, 8 elsewhere."""
    rng = rng_from_seed(seed)
    X = _ar1(rng, n, p, 0.8)
    eps = rng.standard_normal(n)
    linear = 2.0 * (X[:, 0] + 0.8 * X[:, 1] + 0.6 * X[:, 2] + 0.4 * X[:, 3] + 0.2 * X[:, 4])
    y = linear + np.exp(X[:, 19] + X[:, 20] + X[:, 21]) * eps
    median_set = frozenset(range(5))
    return ExampleInstance("2", X, y, None, median_set, median_set | {19, 20, 21})


def gen_example3(case: str = "a", n: int = 400, p: int = 5000, seed=0) -> ExampleInstance:
    """Heteroscedastic model without additive/index structure: 2 active variables
    at the median, 15 elsewhere."""
    if case not in ("a", "b"):
        raise ValueError(f"example 3 case must be 'a' or 'b', got {case!r}")
    rng = rng_from_seed(seed)
    X = _ar1(rng, n, p, 0.8)
    eps = rng.standard_normal(n)
    if case == "a":
        location = 2.0 * (X[:, 0] ** 2 + X[:, 1] ** 2)
    else:
        location = 2.0 * ((X[:, 0] + 1.0) ** 2 + (X[:, 1] + 2.0) ** 2)
    scale_vars = X[:, 0] + X[:, 1] + X[:, 17:30].sum(axis=1)
    y = location + 0.1 * np.exp(scale_vars) * eps
    median_set = frozenset({0, 1})
    other = median_set | frozenset(range(17, 30))
    return ExampleInstance(f"3{case}", X, y, None, median_set, other)


_MIX_PROBS = (0.4, 0.1, 0.5)
_MIX_MEANS = (-5.0, 5.0, 55.0)
_MIX_SDS = (2.0, 1.0, 1.0)  # component variances 4, 1, 1


def gen_example4(n: int = 400, p: int = 1000, seed=0) -> ExampleInstance:
    """Censored responses: the latent response follows example 1 case 'b' and the
    censoring time is a 3-component normal mixture giving roughly 45% censoring."""
    rng = rng_from_seed(seed)
    X = _ar1(rng, n, p, 0.8)
    eps = rng.standard_normal(n)
    y_latent = _additive_signal(X) + np.sqrt(1.74) * eps
    comp = rng.choice(3, size=n, p=_MIX_PROBS)
    C = rng.normal(np.asarray(_MIX_MEANS)[comp], np.asarray(_MIX_SDS)[comp])
    time = np.minimum(y_latent, C)
    status = (y_latent <= C).astype(int)
    active = frozenset({0, 1, 2, 3})
    return ExampleInstance("4", X, time, status, active, active)


_EXAMPLE_INFO = {
    "1a": (frozenset({0, 1, 2, 3}), frozenset({0, 1, 2, 3}), False),
    "1b": (frozenset({0, 1, 2, 3}), frozenset({0, 1, 2, 3}), False),
    "1c": (frozenset({0, 1, 2, 3}), frozenset({0, 1, 2, 3}), False),
    "2": (frozenset(range(5)), frozenset(range(5)) | {19, 20, 21}, False),
    "3a": (frozenset({0, 1}), frozenset({0, 1}) | frozenset(range(17, 30)), False),
    "3b": (frozenset({0, 1}), frozenset({0, 1}) | frozenset(range(17, 30)), False),
    "4": (frozenset({0, 1, 2, 3}), frozenset({0, 1, 2, 3}), True),
}


def example_info(example_id: str) -> tuple[frozenset[int], frozenset[int], bool]:
    """(median active set, off-median active set, censored?) for an example id."""
    try:
        return _EXAMPLE_INFO[str(example_id)]
    except KeyError:
        raise ValueError(f"unknown example {example_id!r}; choose from {EXAMPLE_IDS}") from None


def make_example(example_id: str, seed=0, n: int | None = None, p: int | None = None) -> ExampleInstance:
    """Dispatch on example id '1a', '1b', '1c', '2', '3a', '3b' or '4'."""
    example_id = str(example_id)
    kwargs = {"seed": seed}
    if n is not None:
        kwargs["n"] = n
    if p is not None:
        kwargs["p"] = p
    if example_id in ("1a", "1b", "1c"):
        return gen_example1(example_id[1], **kwargs)
    if example_id == "2":
        return gen_example2(**kwargs)
    if example_id in ("3a", "3b"):
        return gen_example3(example_id[1], **kwargs)
    if example_id == "4":
        return gen_example4(**kwargs)
    raise ValueError(f"unknown example {example_id!r}; choose from {EXAMPLE_IDS}")


def write_instance_csv(instance: ExampleInstance, path) -> None:
    """Emit an instance in the CLI's CSV format (features x1..xp, column y,
    and a status column when censored)."""
    n, p = instance.X.shape
    header = [f"x{j + 1}" for j in range(p)] + ["y"]
    if instance.censored:
        header.append("status")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(n):
            row = [repr(float(v)) for v in instance.X[i]] + [repr(float(instance.y[i]))]
            if instance.censored:
                row.append(str(int(instance.status[i])))
            writer.writerow(row)
