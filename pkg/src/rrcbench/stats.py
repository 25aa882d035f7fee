"""Two-step comparison of classifiers over datasets.

Per criterion: average ranks and the Friedman test, then pairwise Wilcoxon
signed-rank tests whose p-values are adjusted with the Bergmann–Hommel
exhaustive-set procedure. The Friedman p-values of all criteria form one more
family, adjusted the same way over all subsets of hypotheses.
"""

import itertools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import chi2, norm, rankdata

from .validation import check_family_size, check_wilcoxon_sample_size

EXACT_WILCOXON_LIMIT = 12
FAMILY_LIMIT = 10


class SignificanceResult(NamedTuple):
    statistic: float
    pvalue: float


class Adjustment(NamedTuple):
    adjusted: np.ndarray
    rejected: np.ndarray


@dataclass(frozen=True, eq=False)
class MetricTable:
    """Losses of one criterion: rows = datasets, columns = classifiers."""
    criterion: str
    classifiers: Tuple[str, ...]
    datasets: Tuple[str, ...]
    losses: np.ndarray

    def __post_init__(self) -> None:
        losses = np.asarray(self.losses, dtype=float)
        if losses.shape != (len(self.datasets), len(self.classifiers)):
            raise ValueError(
                f"Metric table '{self.criterion}' has shape {losses.shape}, "
                f"expected ({len(self.datasets)}, {len(self.classifiers)})."
            )
        if np.isnan(losses).any():
            raise ValueError(f"Metric table '{self.criterion}' has missing cells.")
        object.__setattr__(self, 'losses', losses)

    def column(self, classifier: str) -> np.ndarray:
        return self.losses[:, self.classifiers.index(classifier)]


@dataclass(frozen=True, eq=False)
class RankSummary:
    classifiers: Tuple[str, ...]
    ranks: np.ndarray   # (datasets, classifiers), 1 = lowest loss

    @property
    def average(self) -> np.ndarray:
        return self.ranks.mean(axis=0)

    @property
    def dataset_count(self) -> int:
        return self.ranks.shape[0]


@dataclass(frozen=True, eq=False)
class CriterionComparison:
    criterion: str
    classifiers: Tuple[str, ...]
    average_ranks: np.ndarray
    friedman: SignificanceResult
    friedman_adjusted: float
    pairs: Tuple[Tuple[int, int], ...]
    pairwise: Tuple[SignificanceResult, ...]
    pairwise_adjusted: np.ndarray
    pairwise_rejected: np.ndarray


def average_ranks(table: MetricTable) -> RankSummary:
    """Per-dataset ranks of the losses, ties averaged."""
    if len(table.classifiers) < 2 or len(table.datasets) < 1:
        raise ValueError("Ranking needs at least 2 classifiers and 1 dataset.")
    return RankSummary(table.classifiers, rankdata(table.losses, method='average', axis=1))


def friedman_test(summary: RankSummary) -> SignificanceResult:
    """Classic chi-square Friedman statistic with k − 1 degrees of freedom."""
    n, k = summary.ranks.shape
    mean_ranks = summary.average
    statistic = 12.0 * n / (k * (k + 1)) * (np.sum(mean_ranks ** 2) - k * (k + 1) ** 2 / 4.0)
    statistic = max(float(statistic), 0.0)
    return SignificanceResult(statistic, float(chi2.sf(statistic, k - 1)))


def _exact_signed_rank_pvalue(ranks: np.ndarray, statistic: float) -> float:
    n = ranks.size
    flips = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
    null = (1 - 2 * flips) @ ranks
    return float(np.mean(np.abs(null) >= abs(statistic) - 1e-9))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> SignificanceResult:
    """Two-sided signed-rank test of paired losses.

    The statistic is Σ sign(a_i − b_i)·rank|a_i − b_i| over non-zero differences,
    so swapping the samples negates it. Zero differences are dropped. Up to
    EXACT_WILCOXON_LIMIT differences the null distribution is enumerated;
    beyond that a normal approximation with tie-corrected variance Σ rank² and a
    continuity correction is used.
    """
    differences = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    differences = differences[differences != 0.0]
    n = differences.size
    if n == 0:
        logging.warning("All paired differences are zero; Wilcoxon p-value set to 1.")
        return SignificanceResult(0.0, 1.0)
    check_wilcoxon_sample_size(n)
    ranks = rankdata(np.abs(differences), method='average')
    statistic = float(np.sum(np.sign(differences) * ranks))
    if n <= EXACT_WILCOXON_LIMIT:
        return SignificanceResult(statistic, _exact_signed_rank_pvalue(ranks, statistic))
    deviation = max(abs(statistic) - 1.0, 0.0) / np.sqrt(np.sum(ranks ** 2))
    return SignificanceResult(statistic, float(min(1.0, 2.0 * norm.sf(deviation))))


def holm_adjust(pvalues: Sequence[float], alpha: float = 0.05) -> Adjustment:
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    order = np.argsort(p, kind='stable')
    stepped = np.minimum(1.0, (m - np.arange(m)) * p[order])
    adjusted = np.empty(m)
    adjusted[order] = np.maximum.accumulate(stepped)
    return Adjustment(adjusted, adjusted <= alpha)


def set_partitions(items: Sequence[int]) -> Iterator[List[List[int]]]:
    """All partitions of `items` into non-empty blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        yield [[first]] + partition
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]


def pairwise_exhaustive_sets(classifier_count: int) -> List[frozenset]:
    """Sets of pairwise hypotheses that can be simultaneously true.

    Hypotheses are indexed in `itertools.combinations(range(k), 2)` order; each
    partition of the classifiers into groups of equal performance makes the
    hypotheses inside its groups true.
    """
    index = {pair: i for i, pair in enumerate(itertools.combinations(range(classifier_count), 2))}
    found = set()
    for partition in set_partitions(list(range(classifier_count))):
        true_set = frozenset(
            index[pair] for block in partition for pair in itertools.combinations(sorted(block), 2)
        )
        if true_set:
            found.add(true_set)
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def all_subsets(size: int) -> List[frozenset]:
    return [frozenset(c) for r in range(1, size + 1) for c in itertools.combinations(range(size), r)]


def _classifier_count(pair_count: int) -> int:
    k = int(round((1 + np.sqrt(1 + 8 * pair_count)) / 2))
    if k * (k - 1) // 2 != pair_count:
        raise ValueError(f"{pair_count} p-values do not form a complete pairwise family.")
    return k


def bergman_hommel_adjust(pvalues: Sequence[float], alpha: float = 0.05, pairwise: bool = True) -> Adjustment:
    """Bergmann–Hommel decisions and adjusted p-values.

    H_i is retained iff it belongs to some exhaustive set I with
    min_{j∈I} p_j > α/|I|; equivalently the adjusted p-value of H_i is
    max over exhaustive I ∋ i of |I|·min_{j∈I} p_j. With `pairwise` the family
    is all pairwise comparisons of k classifiers (p-values in combinations
    order); otherwise every subset of hypotheses is exhaustive.
    """
    p = np.asarray(pvalues, dtype=float)
    m = p.size
    check_family_size(m, FAMILY_LIMIT)
    if m == 0:
        return Adjustment(np.empty(0), np.empty(0, dtype=bool))
    exhaustive = pairwise_exhaustive_sets(_classifier_count(m)) if pairwise else all_subsets(m)
    adjusted = np.zeros(m)
    for hypotheses in exhaustive:
        members = sorted(hypotheses)
        local = min(1.0, len(members) * float(p[members].min()))
        adjusted[members] = np.maximum(adjusted[members], local)
    return Adjustment(adjusted, adjusted <= alpha)


def format_pvalue(p: float) -> str:
    if p < 1e-3:
        return "0.000"
    if p > 0.999:
        return "1.000"
    return f"{p:.3f}"


def compare_criteria(tables: Sequence[MetricTable], alpha: float = 0.05) -> List[CriterionComparison]:
    """Friedman + pairwise Wilcoxon per criterion, Bergmann–Hommel within each family."""
    friedman_results = []
    summaries = []
    for table in tables:
        summary = average_ranks(table)
        summaries.append(summary)
        friedman_results.append(friedman_test(summary))
    friedman_adjusted = bergman_hommel_adjust([r.pvalue for r in friedman_results], alpha, pairwise=False).adjusted

    comparisons = []
    for table, summary, friedman, adjusted in zip(tables, summaries, friedman_results, friedman_adjusted):
        pairs = tuple(itertools.combinations(range(len(table.classifiers)), 2))
        pairwise = tuple(wilcoxon_signed_rank(table.losses[:, i], table.losses[:, j]) for i, j in pairs)
        decision = bergman_hommel_adjust([r.pvalue for r in pairwise], alpha)
        comparisons.append(CriterionComparison(
            criterion=table.criterion,
            classifiers=table.classifiers,
            average_ranks=summary.average,
            friedman=friedman,
            friedman_adjusted=float(adjusted),
            pairs=pairs,
            pairwise=pairwise,
            pairwise_adjusted=decision.adjusted,
            pairwise_rejected=decision.rejected,
        ))
    return comparisons


def render_rank_table(comparisons: Sequence[CriterionComparison]) -> List[Dict[str, str]]:
    """One row per criterion: Friedman p, average ranks (2 decimals), adjusted pairwise p-values."""
    rows = []
    for c in comparisons:
        row = {
            "criterion": c.criterion,
            "Friedman p": format_pvalue(c.friedman.pvalue),
            "Friedman p (adj.)": format_pvalue(c.friedman_adjusted),
        }
        for name, rank in zip(c.classifiers, c.average_ranks):
            row[f"rank {name}"] = f"{rank:.2f}"
        for (i, j), adjusted, rejected in zip(c.pairs, c.pairwise_adjusted, c.pairwise_rejected):
            row[f"{c.classifiers[i]} vs {c.classifiers[j]}"] = format_pvalue(adjusted) + ("*" if rejected else "")
        rows.append(row)
    return rows


def write_metric_table(table: MetricTable, directory: Path) -> Path:
    """`<criterion>.csv`, one row per dataset and one column per classifier."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{table.criterion}.csv"
    frame = pd.DataFrame(table.losses, index=pd.Index(table.datasets, name="dataset"), columns=table.classifiers)
    frame.to_csv(path, float_format="%.17g")
    return path


def read_metric_table(path: Path) -> MetricTable:
    path = Path(path)
    frame = pd.read_csv(path, index_col="dataset", float_precision="round_trip")
    return MetricTable(
        criterion=path.stem,
        classifiers=tuple(str(c) for c in frame.columns),
        datasets=tuple(str(d) for d in frame.index),
        losses=frame.to_numpy(dtype=float),
    )
