"""Self-contained rank statistics, effect sizes, and seeded resampling.

Functions
---------
spearman            rank correlation via Pearson on midranks, t-approx p
mann_whitney_u      U with half-credit ties; exact p by enumeration for
                    n+m <= 12, else normal approximation (tie + continuity
                    corrected)
wilcoxon_signed_rank
                    zeros dropped; exact p over sign assignments for up to
                    20 nonzero deltas, else normal approximation
cohens_d            pooled-SD standardized mean difference
cohens_d_one_sample mean/SD of one sample of deltas
permutation_p       seeded label-shuffle test, add-one estimator
bootstrap           seeded subsampling (without replacement), percentile CI
residualize         OLS residuals against covariates plus intercept

Seeding
-------
Every resampling routine takes a `Seed`; replicate i draws from the
counter-based substream (master, i), so results are identical for a fixed
master seed regardless of platform, execution order, or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import stdtr


@dataclass(frozen=True)
class Seed:
    """Master seed with counter-based substreams for parallel determinism."""

    master: int

    def rng(self, stream: int = 0) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.master, spawn_key=(stream,))
        )

    def derive(self, label: str) -> "Seed":
        """Independent master for a named sub-purpose (stable across runs)."""
        import hashlib

        digest = hashlib.sha256(f"{self.master}:{label}".encode()).digest()
        return Seed(int.from_bytes(digest[:8], "big"))


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p_value: float
    n: int
    m: int | None = None
    method: str = ""
    sidedness: str = "two_sided"          # "one_sided" | "two_sided"
    alternative: str | None = None        # "greater" | "less" when one-sided
    notes: dict = field(default_factory=dict)


def _as_float_array(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def midranks(values) -> np.ndarray:
    """Average ranks (1-based); tied values share the mean of their ranks."""
    arr = _as_float_array(values, "values")
    n = arr.size
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    if denom == 0.0:
        raise ValueError("correlation undefined for constant input")
    return float(min(1.0, max(-1.0, float(xd @ yd) / denom)))


def spearman(x, y) -> StatResult:
    """Spearman rank correlation with a two-sided t-approximation p-value.

    rho is Pearson's r over midranks; p comes from t = rho * sqrt((n-2) /
    (1-rho^2)) on n-2 degrees of freedom, with p = 0 at |rho| = 1.
    """
    xa = _as_float_array(x, "x")
    ya = _as_float_array(y, "y")
    if xa.size != ya.size:
        raise ValueError(f"length mismatch: {xa.size} vs {ya.size}")
    n = xa.size
    if n < 3:
        raise ValueError(f"spearman needs at least 3 observations, got {n}")
    if np.unique(xa).size < 2 or np.unique(ya).size < 2:
        raise ValueError("spearman undefined for constant input")
    rho = _pearson(midranks(xa), midranks(ya))
    if 1.0 - rho * rho <= 0.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return StatResult(rho, min(1.0, p), n=n, method="t_approx", sidedness="two_sided")


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _u_statistic(ranks: np.ndarray, n: int) -> float:
    # U for the first sample from pooled midranks: R_a - n(n+1)/2. With
    # midranks this equals #{a_i > b_j} + 0.5 * #{a_i == b_j}.
    return float(ranks[:n].sum() - n * (n + 1) / 2.0)


def _tie_term(pooled: np.ndarray) -> float:
    _, counts = np.unique(pooled, return_counts=True)
    return float((counts.astype(np.float64) ** 3 - counts).sum())


EXACT_MW_LIMIT = 12


def mann_whitney_u(a, b, alternative: str = "two_sided") -> StatResult:
    """Mann-Whitney U for sample ``a`` vs sample ``b``.

    U counts pairs with a_i > b_j plus half credit for ties. The p-value is
    exact (enumeration over all C(n+m, n) group assignments of the pooled
    values) when n+m <= 12, otherwise a normal approximation with tie
    correction and a 0.5 continuity correction.
    """
    aa = _as_float_array(a, "a")
    bb = _as_float_array(b, "b")
    n, m = aa.size, bb.size
    if n == 0 or m == 0:
        raise ValueError("both samples must be non-empty")
    if alternative not in ("two_sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    pooled = np.concatenate([aa, bb])
    ranks = midranks(pooled)
    u = _u_statistic(ranks, n)
    total = n + m
    notes = {}
    if total <= EXACT_MW_LIMIT:
        method = "exact"
        ge = le = 0
        count = 0
        base = n * (n + 1) / 2.0
        for combo in combinations(range(total), n):
            u_star = float(ranks[list(combo)].sum() - base)
            ge += u_star >= u
            le += u_star <= u
            count += 1
        p_greater = ge / count
        p_less = le / count
        notes["assignments"] = count
    else:
        method = "normal_approx"
        mu = n * m / 2.0
        var = n * m / 12.0 * ((total + 1) - _tie_term(pooled) / (total * (total - 1)))
        if var <= 0.0:
            # every pooled value identical: U is its mean with certainty
            p_greater = p_less = 1.0
        else:
            sd = math.sqrt(var)
            p_greater = _norm_sf((u - mu - 0.5) / sd)
            p_less = 1.0 - _norm_sf((u - mu + 0.5) / sd)
    if alternative == "greater":
        p, sided = p_greater, "one_sided"
    elif alternative == "less":
        p, sided = p_less, "one_sided"
    else:
        p, sided = min(1.0, 2.0 * min(p_greater, p_less)), "two_sided"
    return StatResult(
        u, p, n=n, m=m, method=method, sidedness=sided,
        alternative=alternative if sided == "one_sided" else None, notes=notes,
    )


EXACT_WILCOXON_LIMIT = 20


def _wilcoxon_exact_tail(ranks: np.ndarray, w: float) -> tuple[float, float]:
    """P(W* >= w) and P(W* <= w) over all sign assignments of ``ranks``.

    Midranks are multiples of 0.5, so doubling gives integers and the
    distribution of 2*W* is a subset-sum count, computed by DP. Identical
    to explicit 2^n enumeration.
    """
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    top = int(doubled.sum())
    counts = np.zeros(top + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: top + 1 - r]
        counts += shifted
    total = counts.sum()
    w2 = 2.0 * w
    sums = np.arange(top + 1, dtype=np.float64)
    p_ge = float(counts[sums >= w2 - 1e-9].sum() / total)
    p_le = float(counts[sums <= w2 + 1e-9].sum() / total)
    return p_ge, p_le


def wilcoxon_signed_rank(deltas, alternative: str = "two_sided") -> StatResult:
    """Wilcoxon signed-rank test on paired deltas.

    Zero deltas are dropped (count recorded in notes). W is the sum of
    midranks of |delta| over positive deltas. Exact p by sign enumeration
    for up to 20 nonzero deltas, otherwise normal approximation with tie
    and continuity corrections.
    """
    dd = _as_float_array(deltas, "deltas")
    if alternative not in ("two_sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    nonzero = dd[dd != 0.0]
    dropped = dd.size - nonzero.size
    n = nonzero.size
    if n == 0:
        raise ValueError("all deltas are zero; signed-rank test undefined")
    ranks = midranks(np.abs(nonzero))
    w = float(ranks[nonzero > 0].sum())
    notes = {"zeros_dropped": dropped}
    if n <= EXACT_WILCOXON_LIMIT:
        method = "exact"
        p_greater, p_less = _wilcoxon_exact_tail(ranks, w)
    else:
        method = "normal_approx"
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(np.abs(nonzero)) / 48.0
        if var <= 0.0:
            p_greater = p_less = 1.0
        else:
            sd = math.sqrt(var)
            p_greater = _norm_sf((w - mu - 0.5) / sd)
            p_less = 1.0 - _norm_sf((w - mu + 0.5) / sd)
    if alternative == "greater":
        p, sided = p_greater, "one_sided"
    elif alternative == "less":
        p, sided = p_less, "one_sided"
    else:
        p, sided = min(1.0, 2.0 * min(p_greater, p_less)), "two_sided"
    return StatResult(
        w, p, n=n, method=method, sidedness=sided,
        alternative=alternative if sided == "one_sided" else None, notes=notes,
    )


def cohens_d(a, b) -> float:
    """Standardized mean difference (a minus b) over the pooled SD.

    Pooled SD uses Bessel-corrected group variances; both groups need at
    least 2 observations and a nonzero pooled variance.
    """
    aa = _as_float_array(a, "a")
    bb = _as_float_array(b, "b")
    if aa.size < 2 or bb.size < 2:
        raise ValueError("cohens_d needs at least 2 observations per group")
    va = float(aa.var(ddof=1))
    vb = float(bb.var(ddof=1))
    pooled = ((aa.size - 1) * va + (bb.size - 1) * vb) / (aa.size + bb.size - 2)
    if pooled <= 0.0:
        raise ValueError("pooled variance is zero; d undefined")
    return float((aa.mean() - bb.mean()) / math.sqrt(pooled))


def cohens_d_one_sample(deltas) -> float:
    """One-sample variant: mean of the deltas over their SD."""
    dd = _as_float_array(deltas, "deltas")
    if dd.size < 2:
        raise ValueError("one-sample d needs at least 2 deltas")
    sd = float(dd.std(ddof=1))
    if sd == 0.0:
        raise ValueError("delta SD is zero; d undefined")
    return float(dd.mean() / sd)


class PermutationError(RuntimeError):
    """Statistic evaluation failed during a shuffle; carries the index."""


def permutation_p(labels, statistic, n_iter: int, seed: Seed,
                  alternative: str = "greater") -> StatResult:
    """Label-shuffle permutation test with the add-one estimator.

    ``statistic`` maps a label assignment (same length/order as the input)
    to a scalar. Shuffle i draws from substream (master, i). One-sided
    greater: p = (1 + #{stat_i >= observed}) / (n_iter + 1).
    """
    if n_iter < 1:
        raise ValueError("n_iter must be positive")
    if alternative not in ("two_sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    label_arr = np.asarray(labels)
    if label_arr.ndim != 1:
        raise ValueError("labels must be 1-dimensional")
    observed = float(statistic(label_arr))
    ge = le = 0
    for i in range(n_iter):
        shuffled = seed.rng(i).permutation(label_arr)
        try:
            s = float(statistic(shuffled))
        except Exception as exc:
            raise PermutationError(f"statistic failed on shuffle {i}: {exc}") from exc
        ge += s >= observed
        le += s <= observed
    p_greater = (1 + ge) / (n_iter + 1)
    p_less = (1 + le) / (n_iter + 1)
    if alternative == "greater":
        p, sided = p_greater, "one_sided"
    elif alternative == "less":
        p, sided = p_less, "one_sided"
    else:
        p, sided = min(1.0, 2.0 * min(p_greater, p_less)), "two_sided"
    return StatResult(
        observed, p, n=label_arr.size, method="permutation", sidedness=sided,
        alternative=alternative if sided == "one_sided" else None,
        notes={"n_iter": n_iter, "seed": seed.master},
    )


@dataclass(frozen=True)
class BootstrapResult:
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    values: np.ndarray

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sd": self.sd,
            "ci95": [self.ci_low, self.ci_high],
            "iterations": int(self.values.size),
        }


def bootstrap(pool, subsample_size: int, iterations: int, statistic,
              seed: Seed) -> BootstrapResult:
    """Subsample ``pool`` without replacement and summarize a statistic.

    Iteration i draws from substream (master, i). Returns the mean, the
    sample SD, and the 2.5/97.5 percentile interval of the statistic.
    """
    pool_arr = np.asarray(pool)
    if pool_arr.ndim != 1:
        raise ValueError("pool must be 1-dimensional")
    if not 1 <= subsample_size <= pool_arr.size:
        raise ValueError(f"subsample_size must be in 1..{pool_arr.size}, got {subsample_size}")
    if iterations < 2:
        raise ValueError("bootstrap needs at least 2 iterations")
    values = np.empty(iterations, dtype=np.float64)
    for i in range(iterations):
        sub = seed.rng(i).choice(pool_arr, size=subsample_size, replace=False)
        values[i] = float(statistic(sub))
    lo, hi = np.percentile(values, [2.5, 97.5])
    return BootstrapResult(
        mean=float(values.mean()), sd=float(values.std(ddof=1)),
        ci_low=float(lo), ci_high=float(hi), values=values,
    )


def residualize(target, covariates) -> np.ndarray:
    """Residuals of an OLS fit of ``target`` on covariates plus intercept.

    ``covariates`` is (n, p) (a single covariate may be 1-d). Requires
    n > p + 1 and a full-rank design.
    """
    y = _as_float_array(target, "target")
    cov = np.asarray(covariates, dtype=np.float64)
    if cov.ndim == 1:
        cov = cov[:, None]
    if cov.ndim != 2 or cov.shape[0] != y.size:
        raise ValueError("covariates must be (n, p) aligned with target")
    if not np.isfinite(cov).all():
        raise ValueError("covariates contain non-finite values")
    n, p = cov.shape
    if n <= p + 1:
        raise ValueError(f"need more observations ({n}) than covariates plus intercept ({p + 1})")
    design = np.column_stack([np.ones(n), cov])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ValueError("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    return y - design @ beta
