"""Finite-sample tests and tolerances.

Everything here turns a statement that holds only as the number of trials
grows into a check with an explicit error rate.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import SETTINGS, OutcomeTable
from .errors import (
    EmptySubtableError, InsufficientIterationsError, InvalidParameterError,
    LengthMismatchError, MissingSettingError, RequiresDichotomicError,
)
from .rng import PERMUTATION, generator

log = logging.getLogger(__name__)

MIN_ITERATIONS = 100
# float slack when comparing a shuffled statistic with the observed one
_TIE = 1e-12
# shuffles drawn per vectorised block
_BLOCK = 4096


class TestMethod(str, enum.Enum):
    TWO_PROPORTION = "TwoProportion"
    PERMUTATION = "Permutation"
    EXACT_COUNT = "ExactCount"

    __test__ = False


@dataclass(frozen=True)
class TestReport:
    statistic: float
    p_value: float
    reject_at: float
    method: TestMethod
    discrepancy: int | None = None
    n: int | None = None

    __test__ = False  # keep pytest from collecting this class

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidParameterError(f"p_value {self.p_value} outside [0, 1]")

    @property
    def rejected(self) -> bool:
        return self.p_value < self.reject_at

    def as_dict(self) -> dict:
        out = {"statistic": self.statistic, "p_value": self.p_value, "reject_at": self.reject_at,
               "method": self.method.value, "rejected": self.rejected}
        if self.discrepancy is not None:
            out["discrepancy"] = self.discrepancy
        if self.n is not None:
            out["n"] = self.n
        return out


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError("alpha must lie in (0, 1)")
    return alpha


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise InvalidParameterError("n must be a positive integer")
    return int(n)


def hoeffding_tolerance(n: int, alpha: float) -> float:
    """Two-sided 1 - alpha deviation bound for a mean of n values in [-1, 1]."""
    n = _check_n(n)
    alpha = _check_alpha(alpha)
    return math.sqrt(2.0 * math.log(2.0 / alpha) / n)


def chsh_tolerance(n_per_setting, alpha: float) -> float:
    """Union bound over the four correlations, alpha/4 each."""
    counts = list(n_per_setting.values()) if isinstance(n_per_setting, dict) else list(n_per_setting)
    if len(counts) != 4:
        raise InvalidParameterError("need four per-setting counts")
    alpha = _check_alpha(alpha)
    return sum(hoeffding_tolerance(c, alpha / 4.0) for c in counts)


def reorder_tolerance(n: int, alpha: float) -> int:
    """Integer slack for the reorder engine's discrepancy counts.

    A count difference |n+(x) - n+(y)| is a sum of n independent terms in
    [-1, 1] with mean zero under the step's hypothesis, so Hoeffding bounds
    it by sqrt(2 n ln(2/a)).  The OI step adds two class-wise counts, which
    Cauchy-Schwarz bounds by sqrt(2) times that.  With a = alpha / 16 shared
    over all the counts involved, this gives 2 sqrt(n ln(32/alpha)).
    """
    n = _check_n(n)
    alpha = _check_alpha(alpha)
    return math.ceil(2.0 * math.sqrt(n * math.log(32.0 / alpha)))


def _plus_count(x) -> int:
    return int(np.count_nonzero(np.asarray(x) > 0))


def multiset_equality_test(x, y, alpha: float = 0.05) -> TestReport:
    """Pooled two-proportion z-test of P(+1) in two dichotomic columns."""
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise LengthMismatchError(f"columns have lengths {x.size} and {y.size}")
    if x.size == 0:
        raise InvalidParameterError("columns must be non-empty")
    if not (np.all(np.abs(x) == 1) and np.all(np.abs(y) == 1)):
        raise RequiresDichotomicError("multiset test needs +-1 columns")
    n = x.size
    kx, ky = _plus_count(x), _plus_count(y)
    d = abs(kx - ky)
    pooled = (kx + ky) / (2 * n)
    se = math.sqrt(pooled * (1 - pooled) * 2 / n)
    if se == 0.0:
        z, p = 0.0, 1.0 if d == 0 else 0.0
    else:
        z = (kx - ky) / n / se
        p = math.erfc(abs(z) / math.sqrt(2))
    return TestReport(z, min(1.0, p), alpha, TestMethod.TWO_PROPORTION, d, n)


def _setting_products(table: OutcomeTable) -> np.ndarray:
    return np.column_stack([table.column(a) * table.column(b) for a, b in (s.columns for s in SETTINGS)])


def _gap_statistic(products, settings, counts, full) -> np.ndarray:
    """max_s |filtered_s - full_s| for each row of a (k, n) block of settings."""
    k, n = settings.shape
    picked = np.take_along_axis(np.broadcast_to(products, (k, n, 4)), (settings - 1)[..., None], axis=2)[..., 0]
    codes = (np.arange(k)[:, None] * 4 + (settings - 1)).ravel()
    sums = np.bincount(codes, weights=picked.ravel(), minlength=4 * k).reshape(k, 4)
    return np.max(np.abs(sums / counts - full), axis=1)


def _conspiracy_setup(table: OutcomeTable):
    if len(table) == 0:
        raise InvalidParameterError("table is empty")
    if not table.dichotomic:
        raise RequiresDichotomicError("conspiracy test needs a dichotomic table")
    counts = np.bincount(table.settings, minlength=5)[1:]
    for s in SETTINGS:
        if counts[s - 1] == 0:
            raise MissingSettingError(str(int(s)))
    products = _setting_products(table)
    full = np.array([math.fsum(products[:, j].tolist()) / len(table) for j in range(4)])
    observed = float(_gap_statistic(products, table.settings[None, :], counts, full)[0])
    return products, counts, full, observed


def _shuffled_sums(rng, colours, values, counts, k) -> np.ndarray:
    """Per-label product sums for ``k`` random rearrangements of S.

    Rows fall into 16 categories by their four setting products.  A uniform
    shuffle of S hands each label a uniformly random subset of rows of the
    label's size, so the category make-up of each label is multivariate
    hypergeometric; it is drawn one label and one category at a time.
    """
    remaining = np.tile(colours, (k, 1))
    sums = np.zeros((k, 4))
    for s in range(3):
        need = np.full(k, counts[s], dtype=np.int64)
        left = remaining.sum(axis=1)
        taken = np.zeros_like(remaining)
        for j in range(colours.size):
            left -= remaining[:, j]
            x = rng.hypergeometric(remaining[:, j], left, need) if j < colours.size - 1 else need.copy()
            taken[:, j] = x
            need -= x
            remaining[:, j] -= x
        sums[:, s] = taken @ values[:, s]
    sums[:, 3] = remaining @ values[:, 3]
    return sums


def conspiracy_test(table: OutcomeTable, iterations: int = 1000, alpha: float = 0.05,
                    seed: int = 0) -> TestReport:
    """Permutation test of setting independence.

    Statistic: largest gap between a setting's filtered correlation and the
    same pair's full-table correlation.  The null distribution comes from
    random rearrangements of the S column.  The p-value counts the observed
    arrangement among them, (1 + #{shuffled >= observed}) / (1 + iterations),
    so it is never zero.  Draws come from the seed's permutation stream in
    fixed-size blocks, so a given (table, iterations, seed) always gives the
    same p-value.
    """
    alpha = _check_alpha(alpha)
    if int(iterations) < MIN_ITERATIONS:
        raise InsufficientIterationsError(f"need at least {MIN_ITERATIONS} iterations, got {iterations}")
    iterations = int(iterations)
    products, counts, full, observed = _conspiracy_setup(table)
    codes = (products < 0) @ np.array([8, 4, 2, 1])
    colours = np.bincount(codes, minlength=16).astype(np.int64)
    values = 1.0 - 2.0 * ((np.arange(16)[:, None] >> np.array([3, 2, 1, 0])) & 1)
    rng = generator(seed, PERMUTATION)
    exceed = 0
    for start in range(0, iterations, _BLOCK):
        k = min(_BLOCK, iterations - start)
        sums = _shuffled_sums(rng, colours, values, counts, k)
        stats = np.max(np.abs(sums / counts - full), axis=1)
        exceed += int(np.count_nonzero(stats >= observed - _TIE))
    p = (1 + exceed) / (1 + iterations)
    return TestReport(observed, p, alpha, TestMethod.PERMUTATION, n=len(table))


def _arrangement_blocks(n: int, counts: list[int], size: int = 8192):
    """Every distinct labelling of n rows with ``counts[s]`` rows of label s + 1."""
    def fill(labels, free, s):
        if s == 3:
            labels[free] = 4
            yield labels.copy()
            return
        for pick in itertools.combinations(range(len(free)), counts[s]):
            mask = np.zeros(len(free), dtype=bool)
            mask[list(pick)] = True
            labels[free[mask]] = s + 1
            yield from fill(labels, free[~mask], s + 1)

    block = []
    for labels in fill(np.zeros(n, dtype=np.int64), np.arange(n), 0):
        block.append(labels)
        if len(block) == size:
            yield np.array(block)
            block = []
    if block:
        yield np.array(block)


def conspiracy_exact_test(table: OutcomeTable, alpha: float = 0.05, max_arrangements: int = 200_000) -> TestReport:
    """Exact version of :func:`conspiracy_test` for small tables.

    Enumerates every distinct rearrangement of the S column; the p-value is
    the fraction whose statistic reaches the observed one.
    """
    alpha = _check_alpha(alpha)
    products, counts, full, observed = _conspiracy_setup(table)
    n = len(table)
    total = math.factorial(n) // math.prod(math.factorial(int(c)) for c in counts)
    if total > max_arrangements:
        raise InvalidParameterError(f"{total} arrangements exceed the limit of {max_arrangements}")
    hits = 0
    for block in _arrangement_blocks(n, [int(c) for c in counts]):
        hits += int(np.count_nonzero(_gap_statistic(products, block, counts, full) >= observed - _TIE))
    p = hits / total
    return TestReport(observed, p, alpha, TestMethod.EXACT_COUNT, n=n)


PI_PAIRS = {"A1A2": ("a1", "a2"), "B1B3": ("b1", "b3"), "Bp2Bp4": ("bp2", "bp4")}


def pi_empirical_test(table: OutcomeTable, alpha: float = 0.05) -> dict:
    """Multiset test on each column pair that must agree under PI."""
    return {key: multiset_equality_test(table.column(x), table.column(y), alpha)
            for key, (x, y) in PI_PAIRS.items()}


def oi_empirical_test(table: OutcomeTable, alpha: float = 0.05, warn: bool = True) -> dict:
    """Compare ap3 with ap4 separately inside the B' = +1 and B' = -1 rows.

    B' is read from bp2.  On a table that has not been through the PI steps,
    bp2 and bp4 can disagree; the test still runs but logs the caveat.
    """
    bp2 = table.bp2
    disagree = int(np.count_nonzero(bp2 != table.bp4))
    if disagree and warn:
        log.warning("oi test: bp2 and bp4 differ on %d rows; classes follow bp2", disagree)
    out = {}
    for v, key in ((1.0, "+1"), (-1.0, "-1")):
        rows = bp2 == v
        if not rows.any():
            raise EmptySubtableError(key)
        out[key] = multiset_equality_test(table.ap3[rows], table.ap4[rows], alpha)
    return out
