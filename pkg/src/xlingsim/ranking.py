"""Spearman rank correlation with tie handling, p-values, and critical values."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as t_dist

from .errors import ValidationError

ALPHA = 0.05
DEFAULT_SEED = 0x5EED

# Below this sample size the t approximation is not trusted; use permutation.
T_APPROX_MIN_N = 20
# Exhaustive enumeration up to 8! = 40320 permutations; Monte-Carlo beyond.
EXACT_PERM_LIMIT = 8
MC_SHUFFLES = 100_000


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int
    method: str
    significant: bool

    def __post_init__(self):
        if not (self.significant == (self.p_value < ALPHA)):
            raise ValidationError("significant flag inconsistent with p-value")


def _result(rho: float, p: float, n: int, method: str) -> CorrelationResult:
    return CorrelationResult(rho, p, n, method, p < ALPHA)


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank positions."""
    a = np.asarray(values, dtype=np.float64)
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.size, dtype=np.float64)
    sorted_a = a[order]
    i = 0
    while i < a.size:
        j = i
        while j + 1 < a.size and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y, method: str | None = None, seed: int = DEFAULT_SEED) -> CorrelationResult:
    """Spearman's rho between two equal-length samples.

    rho is the Pearson correlation of the average-rank vectors. The p-value
    method defaults to the t approximation for n >= 20 and a permutation test
    below that; pass method to force one.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.size
    if n < 3:
        raise ValidationError(f"need at least 3 observations, got {n}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValidationError("non-finite value in correlation input")
    rx = average_ranks(x) - (n + 1) / 2.0
    ry = average_ranks(y) - (n + 1) / 2.0
    ssx = float(rx @ rx)
    ssy = float(ry @ ry)
    if ssx == 0.0 or ssy == 0.0:
        raise ValidationError("undefined correlation: zero rank variance")
    rho = float(rx @ ry) / np.sqrt(ssx * ssy)
    rho = float(min(1.0, max(-1.0, rho)))
    if method is None:
        method = "t_approx" if n >= T_APPROX_MIN_N else "permutation"
    p = p_value(rho, n, method, seed=seed)
    return _result(rho, p, n, method)


def p_value(rho: float, n: int, method: str, seed: int = DEFAULT_SEED) -> float:
    """Two-tailed p-value for an observed Spearman rho at sample size n.

    t_approx: t = rho * sqrt((n-2) / (1-rho^2)) against Student's t with n-2
    degrees of freedom. permutation: distribution of rho under uniformly
    random pairings of untied ranks, exact for n <= 8, otherwise Monte-Carlo
    with a fixed seed.
    """
    if abs(rho) > 1.0 + 1e-12:
        raise ValidationError(f"|rho| > 1: {rho}")
    rho = min(1.0, max(-1.0, rho))
    if method == "t_approx":
        if n < 4:
            raise ValidationError("t approximation needs n >= 4")
        if abs(rho) == 1.0:
            warnings.warn("perfect monotone relation: p = 0 exactly under the "
                          "t approximation", stacklevel=2)
            return 0.0
        t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
        return float(min(1.0, 2.0 * t_dist.sf(abs(t), n - 2)))
    if method == "permutation":
        if n < 3:
            raise ValidationError("permutation test needs n >= 3")
        return _permutation_p(rho, n, seed)
    raise ValidationError(f"unknown p-value method {method!r}")


def _permutation_p(rho: float, n: int, seed: int) -> float:
    base = np.arange(1, n + 1, dtype=np.float64) - (n + 1) / 2.0
    ss = float(base @ base)
    threshold = abs(rho) - 1e-12
    if n <= EXACT_PERM_LIMIT:
        perms = np.array(list(itertools.permutations(range(n))))
        rhos = (perms + 1.0 - (n + 1) / 2.0) @ base / ss
        return float(np.mean(np.abs(rhos) >= threshold))
    rng = np.random.default_rng(seed)
    tiled = np.tile(base, (MC_SHUFFLES, 1))
    rhos = rng.permuted(tiled, axis=1) @ base / ss
    hits = int(np.sum(np.abs(rhos) >= threshold))
    return float((1 + hits) / (1 + MC_SHUFFLES))


def critical_rho(n: int, alpha: float = ALPHA) -> float:
    """Smallest rho whose two-tailed t-approximation p-value is <= alpha."""
    if n < 4:
        raise ValidationError("critical rho needs n >= 4")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must be in (0, 1)")
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if p_value(mid, n, "t_approx") <= alpha:
            hi = mid
        else:
            lo = mid
    return hi


def stars(p: float) -> str:
    """Significance stars: *** p<0.001, ** p<0.01, * p<0.05."""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""
