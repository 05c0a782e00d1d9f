"""Statistics toolkit for trial and full-game comparisons.

Binary comparisons: two-sided Fisher exact tests (probability-mass
definition, computed in exact integer arithmetic), Wilson score intervals,
odds ratios and Cohen's h. Score comparisons: Mann-Whitney U (exact
enumeration for small samples, tie-corrected normal approximation beyond)
and seeded permutation tests on means with add-one smoothing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import combinations
from statistics import NormalDist

import numpy as np

MW_EXACT_LIMIT = 8  # per-sample size above which the normal approximation kicks in


class StatsError(Exception):
    pass


def fisher_exact_two_sided(a: int, b: int, c: int, d: int) -> float:
    """Two-sided Fisher exact p for the 2x2 table [[a, b], [c, d]].

    Sums hypergeometric probabilities of all tables (with the observed
    margins) whose probability does not exceed the observed table's. The
    comparison is done on integer weights, so no floating-point tolerance
    is involved.
    """
    if min(a, b, c, d) < 0:
        raise StatsError("cell counts must be nonnegative")
    row1, row2 = a + b, c + d
    col1, col2 = a + c, b + d
    if 0 in (row1, row2, col1, col2):
        raise StatsError("fisher exact requires all margins > 0")
    lo = max(0, col1 - row2)
    hi = min(row1, col1)
    weights = {k: math.comb(row1, k) * math.comb(row2, col1 - k) for k in range(lo, hi + 1)}
    observed = weights[a]
    total = sum(weights.values())
    tail = sum(w for w in weights.values() if w <= observed)
    return tail / total


def wilson_ci(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to [0, 1]."""
    if n < 1:
        raise StatsError("wilson_ci requires n >= 1")
    if not 0 <= successes <= n:
        raise StatsError(f"successes must be in 0..{n}")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    phat = successes / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    # at the boundaries the interval endpoint equals the proportion exactly;
    # avoid letting rounding error pull it off 0 or 1
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return (lo, hi)


def cohens_h(p1: float, p2: float) -> float:
    """Effect size for two proportions: 2*arcsin(sqrt(p1)) - 2*arcsin(sqrt(p2))."""
    for p in (p1, p2):
        if not 0.0 <= p <= 1.0:
            raise StatsError(f"proportion {p} outside [0, 1]")
    return 2 * math.asin(math.sqrt(p1)) - 2 * math.asin(math.sqrt(p2))


def odds_ratio(a: int, b: int, c: int, d: int) -> float:
    """(a*d)/(b*c), infinite when the denominator is zero but not the numerator."""
    if min(a, b, c, d) < 0:
        raise StatsError("cell counts must be nonnegative")
    num, den = a * d, b * c
    if den == 0:
        if num == 0:
            raise StatsError("odds ratio undefined for a 0/0 table")
        return math.inf
    return num / den


def _u_statistic(xs, ys) -> float:
    u = 0.0
    for x in xs:
        for y in ys:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def mann_whitney_u(xs, ys) -> float:
    """Two-sided Mann-Whitney p-value.

    Small samples (each side at most 8) are handled by exhaustive
    enumeration of label assignments, which is exact under ties; larger
    samples use the tie-corrected normal approximation with continuity
    correction.
    """
    xs, ys = list(xs), list(ys)
    n1, n2 = len(xs), len(ys)
    if n1 == 0 or n2 == 0:
        raise StatsError("both samples must be nonempty")
    mu = n1 * n2 / 2
    u_obs = _u_statistic(xs, ys)
    if max(n1, n2) <= MW_EXACT_LIMIT:
        pooled = xs + ys
        dev = abs(u_obs - mu) - 1e-12
        hits = total = 0
        for picks in combinations(range(n1 + n2), n1):
            chosen = set(picks)
            sample_x = [pooled[i] for i in picks]
            sample_y = [pooled[i] for i in range(n1 + n2) if i not in chosen]
            total += 1
            if abs(_u_statistic(sample_x, sample_y) - mu) >= dev:
                hits += 1
        return hits / total
    n = n1 + n2
    pooled = sorted(xs + ys)
    tie_term = 0.0
    i = 0
    while i < n:
        j = i
        while j < n and pooled[j] == pooled[i]:
            j += 1
        t = j - i
        tie_term += t**3 - t
        i = j
    sigma_sq = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0:
        return 1.0
    z = (abs(u_obs - mu) - 0.5) / math.sqrt(sigma_sq)
    return min(1.0, math.erfc(max(z, 0.0) / math.sqrt(2)))


def permutation_test_means(xs, ys, iterations: int = 100_000, seed: int = 0) -> float:
    """Two-sided permutation test on the difference of sample means.

    p = (1 + #{|shuffled diff| >= |observed diff|}) / (iterations + 1);
    the add-one smoothing keeps p strictly positive and the seeded generator
    makes results reproducible.
    """
    xs, ys = np.asarray(list(xs), dtype=float), np.asarray(list(ys), dtype=float)
    if xs.size == 0 or ys.size == 0:
        raise StatsError("both samples must be nonempty")
    observed = abs(xs.mean() - ys.mean())
    pool = np.concatenate([xs, ys])
    rng = np.random.default_rng(seed)
    n1 = xs.size
    hits = 0
    chunk = 20_000
    remaining = iterations
    while remaining > 0:
        m = min(chunk, remaining)
        perms = rng.permuted(np.tile(pool, (m, 1)), axis=1)
        diffs = np.abs(perms[:, :n1].mean(axis=1) - perms[:, n1:].mean(axis=1))
        hits += int(np.count_nonzero(diffs >= observed - 1e-12))
        remaining -= m
    return (1 + hits) / (iterations + 1)


@dataclass(frozen=True)
class ComparisonResult:
    """One pairwise rate comparison in the report layout."""

    n_a: int
    n_b: int
    rate_a: float
    rate_b: float
    p_value: float
    odds_ratio: float
    cohens_h: float
    ci_a: tuple[float, float]
    ci_b: tuple[float, float]
    test_name: str = "fisher_exact_two_sided"


@dataclass(frozen=True)
class ScoreComparison:
    """One score-sample comparison (full games)."""

    n_a: int
    n_b: int
    mean_a: float
    mean_b: float
    p_mann_whitney: float
    p_permutation: float
    test_name: str = "mann_whitney+permutation"


def compare_rates(successes_a: int, n_a: int, successes_b: int, n_b: int) -> ComparisonResult:
    a, b = successes_a, n_a - successes_a
    c, d = successes_b, n_b - successes_b
    rate_a, rate_b = successes_a / n_a, successes_b / n_b
    try:
        orx = odds_ratio(a, b, c, d)
    except StatsError:
        orx = math.nan
    return ComparisonResult(
        n_a=n_a,
        n_b=n_b,
        rate_a=rate_a,
        rate_b=rate_b,
        p_value=fisher_exact_two_sided(a, b, c, d),
        odds_ratio=orx,
        cohens_h=cohens_h(rate_a, rate_b),
        ci_a=wilson_ci(successes_a, n_a),
        ci_b=wilson_ci(successes_b, n_b),
    )


def compare_scores(xs, ys, iterations: int = 100_000, seed: int = 0) -> ScoreComparison:
    xs, ys = list(xs), list(ys)
    return ScoreComparison(
        n_a=len(xs),
        n_b=len(ys),
        mean_a=sum(xs) / len(xs),
        mean_b=sum(ys) / len(ys),
        p_mann_whitney=mann_whitney_u(xs, ys),
        p_permutation=permutation_test_means(xs, ys, iterations=iterations, seed=seed),
    )


def format_p(p: float) -> str:
    if p < 1e-4:
        return "<0.0001"
    return f"{p:.4g}" if p < 0.01 else f"{p:.3f}"


def format_comparison_table(rows: list[tuple[str, ComparisonResult | ScoreComparison]]) -> str:
    """Text table in the comparison/rates/p/effect layout."""
    lines = [f"{'Comparison':<44} {'A':>12} {'B':>12} {'p':>9} {'effect':>8}"]
    lines.append("-" * len(lines[0]))
    for label, r in rows:
        if isinstance(r, ComparisonResult):
            a = f"{r.rate_a:.1%}"
            b = f"{r.rate_b:.1%}"
            eff = f"h={r.cohens_h:+.2f}"
            p = format_p(r.p_value)
        else:
            a = f"{r.mean_a:.2f}"
            b = f"{r.mean_b:.2f}"
            eff = "---"
            p = format_p(r.p_permutation)
        lines.append(f"{label:<44} {a:>12} {b:>12} {p:>9} {eff:>8}")
    return "\n".join(lines)


def write_comparison_csv(rows: list[tuple[str, ComparisonResult | ScoreComparison]], path) -> None:
    """Delimiter-separated companion file for the text table."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "comparison", "n_a", "n_b", "value_a", "value_b", "p_value",
            "odds_ratio", "cohens_h", "ci_a_lo", "ci_a_hi", "ci_b_lo", "ci_b_hi", "test",
        ])
        for label, r in rows:
            if isinstance(r, ComparisonResult):
                writer.writerow([
                    label, r.n_a, r.n_b, f"{r.rate_a:.6f}", f"{r.rate_b:.6f}",
                    f"{r.p_value:.6g}", f"{r.odds_ratio:.6g}", f"{r.cohens_h:.6f}",
                    f"{r.ci_a[0]:.6f}", f"{r.ci_a[1]:.6f}", f"{r.ci_b[0]:.6f}", f"{r.ci_b[1]:.6f}",
                    r.test_name,
                ])
            else:
                writer.writerow([
                    label, r.n_a, r.n_b, f"{r.mean_a:.6f}", f"{r.mean_b:.6f}",
                    f"{r.p_permutation:.6g}", "", "", "", "", "", "", r.test_name,
                ])
