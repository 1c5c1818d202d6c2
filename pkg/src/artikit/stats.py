"""Paired comparisons and within/across group distributions.

The t distribution CDF is computed from the regularized incomplete beta
function, evaluated by Lentz's continued fraction, so p-values carry no
dependency on an external stats library and are reproducible to ~1e-14.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import Gender, Group, SpeakerMeta
from .errors import EmptyCell, TooFewPairs


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

_BETACF_MAX_ITER = 300
_BETACF_EPS = 1e-15
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """Two-sided p-value for a t statistic with dof degrees of freedom."""
    if dof <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    if math.isinf(t):
        return 0.0
    return betainc_regularized(dof / 2.0, 0.5, dof / (dof + t * t))


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# paired tests
# ---------------------------------------------------------------------------

class TestKind(enum.Enum):
    __test__ = False        # keep pytest from collecting the class by name

    PAIRED_T = "paired_t"
    WILCOXON = "wilcoxon_signed_rank"
    WELCH_T = "welch_t"


@dataclass(frozen=True)
class PairedComparison:
    labels: tuple[str, ...]
    a_scores: np.ndarray
    b_scores: np.ndarray
    mean_diff: float
    p_value: float
    test: TestKind
    degenerate: bool = False     # zero-variance or all-zero differences
    note: str = ""


def _rank_with_ties(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values receive their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _wilcoxon_exact_counts(double_ranks: list[int]) -> np.ndarray:
    """Null distribution of 2*W+ as integer counts, by rank convolution.

    Ranks are doubled so tied (half-integer) average ranks stay integral.
    """
    total = sum(double_ranks)
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in double_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:len(counts) - r]
        counts = counts + shifted
    return counts


def two_sided_from_tails(p_low: float, p_high: float) -> float:
    return min(1.0, 2.0 * min(p_low, p_high))


WILCOXON_EXACT_LIMIT = 25


def _wilcoxon_p(diffs: np.ndarray) -> float:
    nonzero = diffs[diffs != 0.0]
    n = len(nonzero)
    ranks = _rank_with_ties(np.abs(nonzero))
    w_plus = float(ranks[nonzero > 0].sum())
    if n <= WILCOXON_EXACT_LIMIT:
        double_ranks = [int(round(2 * r)) for r in ranks]
        counts = _wilcoxon_exact_counts(double_ranks)
        w2 = int(round(2 * w_plus))
        total = 2 ** n
        p_low = int(sum(counts[:w2 + 1])) / total
        p_high = int(sum(counts[w2:])) / total
        return two_sided_from_tails(p_low, p_high)
    mean = n * (n + 1) / 4.0
    tie_term = 0.0
    _, tie_counts = np.unique(np.abs(nonzero), return_counts=True)
    for t in tie_counts:
        tie_term += t ** 3 - t
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    # continuity correction, 0.5 toward the mean
    z = (w_plus - mean - 0.5 * np.sign(w_plus - mean)) / math.sqrt(var)
    return normal_two_sided_p(z)


def paired_test(a, b, test: TestKind = TestKind.PAIRED_T,
                labels: list[str] | None = None) -> PairedComparison:
    """Two-sided paired comparison of matched score vectors.

    All-zero differences yield p = 1.0 with the degenerate flag set; a
    nonzero constant shift makes the paired t statistic unbounded, reported
    as the p -> 0 limit with the flag set.

    Raises:
        TooFewPairs: fewer than 3 pairs.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise TooFewPairs(f"paired vectors differ in length: {a.shape} vs {b.shape}")
    n = len(a)
    if n < 3:
        raise TooFewPairs(f"need at least 3 pairs, got {n}")
    if labels is None:
        labels = [str(i) for i in range(n)]
    diffs = a - b
    mean_diff = float(diffs.mean())

    if np.all(diffs == 0.0):
        return PairedComparison(tuple(labels), a, b, mean_diff, 1.0, test,
                                degenerate=True, note="all differences zero")
    if test is TestKind.PAIRED_T:
        sd = diffs.std(ddof=1)
        if sd == 0.0:
            return PairedComparison(tuple(labels), a, b, mean_diff, 0.0, test,
                                    degenerate=True,
                                    note="zero-variance nonzero differences; "
                                         "p reported as the limit 0")
        t = mean_diff / (sd / math.sqrt(n))
        p = t_two_sided_p(t, n - 1)
    elif test is TestKind.WILCOXON:
        p = _wilcoxon_p(diffs)
    else:
        raise ValueError(f"unsupported paired test {test}")
    return PairedComparison(tuple(labels), a, b, mean_diff, p, test)


def welch_test(x, y) -> tuple[float, float]:
    """Welch's unequal-variance t-test; returns (mean difference, p)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) < 2 or len(y) < 2:
        raise TooFewPairs("Welch test needs at least 2 samples per side")
    vx = x.var(ddof=1) / len(x)
    vy = y.var(ddof=1) / len(y)
    diff = float(x.mean() - y.mean())
    if vx + vy == 0.0:
        return diff, 1.0 if diff == 0.0 else 0.0
    t = diff / math.sqrt(vx + vy)
    dof = (vx + vy) ** 2 / (vx ** 2 / (len(x) - 1) + vy ** 2 / (len(y) - 1))
    return diff, t_two_sided_p(t, dof)


# ---------------------------------------------------------------------------
# within/across distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WithinAcrossResult:
    within: np.ndarray
    across: np.ndarray
    mean_within: float
    mean_across: float
    mean_diff: float             # within - across
    p_value: float
    test: TestKind = TestKind.WELCH_T


def within_across(matrix: np.ndarray, cells: list) -> WithinAcrossResult:
    """Split directed pair scores into within-cell and across-cell sets.

    ``cells[i]`` labels speaker i's partition cell; None excludes the
    speaker. Returns both distributions and a Welch two-sample comparison.

    Raises:
        EmptyCell: either distribution would be empty.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    within, across = [], []
    for i, ci in enumerate(cells):
        if ci is None:
            continue
        for j, cj in enumerate(cells):
            if cj is None or i == j:
                continue
            (within if ci == cj else across).append(matrix[i, j])
    if not within:
        raise EmptyCell("no within-cell speaker pair")
    if not across:
        raise EmptyCell("no across-cell speaker pair")
    within = np.array(within)
    across = np.array(across)
    diff, p = welch_test(within, across)
    return WithinAcrossResult(within=within, across=across,
                              mean_within=float(within.mean()),
                              mean_across=float(across.mean()),
                              mean_diff=diff, p_value=p)


def dialect_cells(metas: list[SpeakerMeta], corpus: str = "EMA-MAE") -> list:
    """Dialect partition cells: Chinese English (SH+BJ) vs native US English.

    Restricted to one corpus so collection-site variance stays out of the
    comparison.
    """
    cells = []
    for m in metas:
        if m.corpus != corpus:
            cells.append(None)
        elif m.group in (Group.EN_SH, Group.EN_BJ):
            cells.append("EN.CN")
        elif m.group is Group.EN_US:
            cells.append("EN.US")
        else:
            cells.append(None)
    return cells


def gender_cells(metas: list[SpeakerMeta], corpus: str = "HPRC") -> list:
    """Gender partition cells within one corpus."""
    return [m.gender.value
            if m.corpus == corpus and m.gender is not Gender.UNKNOWN else None
            for m in metas]
