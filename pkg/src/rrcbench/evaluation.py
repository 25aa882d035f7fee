"""Loss criteria, stratified cross-validation and the SCM / KNN hyper-parameter search."""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .baseclf import ClassifierKind, cross_predict_supports, predict_supports, train
from .core import Dataset, SeededRng, decide_batch, stratified_kfold
from .rrc import MeanMode, Variant, rrc_probabilities
from .scm import ValidationBank, correct_probabilities
from .validation import check_gamma, check_grid_nonempty

__all__ = [
    "CRITERIA",
    "DEFAULT_BETAS",
    "DEFAULT_GAMMAS",
    "DEFAULT_NEIGHBOURS",
    "ConfusionCounts",
    "GridSearchResult",
    "LossReport",
    "compute_losses",
    "confusion_counts",
    "evaluate_predictions",
    "stratified_kfold",
    "tune_raw",
    "tune_scm",
]

CRITERIA = (
    "zero_one",
    "macro_fdr",
    "macro_fnr",
    "macro_f1_loss",
    "micro_fdr",
    "micro_fnr",
    "micro_f1_loss",
)
DEFAULT_BETAS = tuple(float(b) for b in range(1, 22))
DEFAULT_GAMMAS = tuple(round(0.1 * g, 1) for g in range(1, 11))
DEFAULT_NEIGHBOURS = (1, 3, 5, 7, 9, 11)
INNER_FOLDS = 5

Cell = Tuple[float, Optional[float], Optional[int]]  # (beta, gamma, K)


@dataclass(frozen=True, eq=False)
class ConfusionCounts:
    """M×M counts, rows = true class, columns = predicted class."""
    matrix: np.ndarray

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    @property
    def class_count(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class LossReport:
    zero_one: float
    macro_fdr: float
    macro_fnr: float
    macro_f1_loss: float
    micro_fdr: float
    micro_fnr: float
    micro_f1_loss: float

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in CRITERIA)


@dataclass(frozen=True)
class GridSearchResult:
    """Selected cell and the mean inner-CV macro-F1 loss of every cell (NaN marks a disqualified cell)."""
    beta: Optional[float]
    gamma: Optional[float]
    k: Optional[int]
    losses: Dict[Cell, float] = field(default_factory=dict)

    @property
    def best_loss(self) -> float:
        return self.losses[(self.beta, self.gamma, self.k)]


def confusion_counts(true_labels: np.ndarray, predicted: np.ndarray, class_count: int) -> ConfusionCounts:
    matrix = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(matrix, (np.asarray(true_labels), np.asarray(predicted)), 1)
    return ConfusionCounts(matrix)


def compute_losses(counts: ConfusionCounts) -> LossReport:
    """Zero-one loss plus macro and micro FDR, FNR and F1 loss.

    Classes absent from the evaluated sample (no true instance) are left out of
    the macro averages. A present class that is never predicted has FDR 1.
    """
    matrix = counts.matrix
    total = counts.total
    if total < 1:
        raise ValueError("Cannot compute losses on an empty confusion matrix.")
    tp = np.diag(matrix).astype(np.int64)
    fp = matrix.sum(axis=0) - tp
    fn = matrix.sum(axis=1) - tp
    present = (tp + fn) > 0

    predicted = tp + fp
    precision = np.divide(tp, predicted, out=np.zeros(tp.shape), where=predicted > 0)
    recall = tp[present] / (tp + fn)[present]
    f1 = 2.0 * tp[present] / (2 * tp + fp + fn)[present]

    tp_all, fp_all, fn_all = int(tp.sum()), int(fp.sum()), int(fn.sum())
    errors = total - tp_all
    return LossReport(
        zero_one=errors / total,
        macro_fdr=float(np.mean(1.0 - precision[present])),
        macro_fnr=float(np.mean(1.0 - recall)),
        macro_f1_loss=float(np.mean(1.0 - f1)),
        # pooled over classes every error is one FP and one FN, so these equal the zero-one loss
        micro_fdr=fp_all / (tp_all + fp_all),
        micro_fnr=fn_all / (tp_all + fn_all),
        micro_f1_loss=(fp_all + fn_all) / (2 * tp_all + fp_all + fn_all),
    )


def evaluate_predictions(true_labels: np.ndarray, predicted: np.ndarray, class_count: int) -> LossReport:
    return compute_losses(confusion_counts(true_labels, predicted, class_count))


def _macro_f1_loss(true_labels: np.ndarray, posteriors: np.ndarray, class_count: int) -> float:
    return evaluate_predictions(true_labels, decide_batch(posteriors), class_count).macro_f1_loss


def _select(losses: Dict[Cell, float]) -> Cell:
    """Minimum mean loss; ties go to the smaller beta, then gamma, then K."""
    valid = [(loss, cell) for cell, loss in losses.items() if not math.isnan(loss)]
    if not valid:
        raise ValueError("Every hyper-parameter cell failed during the inner cross-validation.")
    _, cell = min(valid, key=lambda item: (item[0],) + tuple(-math.inf if v is None else v for v in item[1]))
    return cell


def tune_scm(
    kind: ClassifierKind,
    train_set: Dataset,
    variant: Variant,
    rng: SeededRng,
    betas: Sequence[float] = DEFAULT_BETAS,
    gammas: Sequence[float] = DEFAULT_GAMMAS,
    ks: Sequence[int] = DEFAULT_NEIGHBOURS,
    inner_folds: int = INNER_FOLDS,
    mean_mode: MeanMode = MeanMode.MOMENT,
) -> GridSearchResult:
    """Grid search of the SCM parameters by inner stratified cross-validation of the whole SCM pipeline.

    The beta variant has no gamma axis and only KNN has a K axis. Per inner fold
    and K the cross-predicted bank supports and the query supports are computed
    once; RRC probabilities are computed once per gamma and reused for every beta.
    """
    kind = ClassifierKind(kind)
    variant = Variant(variant)
    check_grid_nonempty("beta", betas)
    gamma_axis: List[Optional[float]] = [None]
    if variant is Variant.TRUNCNORM:
        check_grid_nonempty("gamma", gammas)
        for gamma in gammas:
            check_gamma(gamma)
        gamma_axis = [float(g) for g in gammas]
    k_axis: List[Optional[int]] = [None]
    if kind is ClassifierKind.KNN:
        check_grid_nonempty("k", ks)
        k_axis = [int(k) for k in ks]

    cells = [(float(b), g, k) for k, g, b in itertools.product(k_axis, gamma_axis, betas)]
    fold_losses: Dict[Cell, List[float]] = {cell: [] for cell in cells}
    folds = stratified_kfold(train_set, inner_folds, rng.spawn("inner"))

    for k in k_axis:
        for fold_index, (fit_rows, test_rows) in enumerate(folds):
            fit, test = train_set.subset(fit_rows), train_set.subset(test_rows)
            try:
                bank_supports = cross_predict_supports(
                    kind, fit, k=k or 1, rng=rng.spawn("bank", fold_index, k or 0)
                )
                query_supports = predict_supports(train(kind, fit, k or 1), test.features)
            except (ValueError, RuntimeError) as e:
                logging.debug("Inner fold %d failed for K=%s: %s", fold_index, k, e)
                for cell in cells:
                    if cell[2] == k:
                        fold_losses[cell].append(math.nan)
                continue
            sq_distances = cdist(test.features, fit.features, metric='sqeuclidean')
            for gamma in gamma_axis:
                try:
                    probabilities = rrc_probabilities(
                        np.vstack([bank_supports, query_supports]), variant, gamma or 0.5, mean_mode
                    )
                except (ValueError, RuntimeError) as e:
                    logging.debug("RRC failed for gamma=%s, K=%s: %s", gamma, k, e)
                    probabilities = None
                bank = None
                if probabilities is not None:
                    bank = ValidationBank(fit.features, fit.labels, probabilities[:fit.instance_count], fit.class_count)
                for beta in betas:
                    cell = (float(beta), gamma, k)
                    if bank is None:
                        fold_losses[cell].append(math.nan)
                        continue
                    posteriors = correct_probabilities(
                        bank, probabilities[fit.instance_count:], sq_distances, float(beta)
                    )
                    fold_losses[cell].append(_macro_f1_loss(test.labels, posteriors, fit.class_count))

    # a NaN on any fold disqualifies the cell
    losses = {cell: float(np.mean(values)) for cell, values in fold_losses.items()}
    beta, gamma, k = _select(losses)
    logging.debug("Selected beta=%s gamma=%s K=%s (loss %.4f).", beta, gamma, k, losses[(beta, gamma, k)])
    return GridSearchResult(beta=beta, gamma=gamma, k=k, losses=losses)


def tune_raw(
    kind: ClassifierKind,
    train_set: Dataset,
    rng: SeededRng,
    ks: Sequence[int] = DEFAULT_NEIGHBOURS,
    inner_folds: int = INNER_FOLDS,
) -> GridSearchResult:
    """K of the uncorrected KNN by inner cross-validation; other kinds have nothing to tune."""
    kind = ClassifierKind(kind)
    if kind is not ClassifierKind.KNN:
        return GridSearchResult(beta=None, gamma=None, k=None)
    check_grid_nonempty("k", ks)
    folds = stratified_kfold(train_set, inner_folds, rng.spawn("inner"))
    losses: Dict[Cell, float] = {}
    for k in ks:
        per_fold = []
        for fit_rows, test_rows in folds:
            fit, test = train_set.subset(fit_rows), train_set.subset(test_rows)
            try:
                supports = predict_supports(train(kind, fit, int(k)), test.features)
            except ValueError as e:
                logging.debug("Raw KNN with K=%d failed on an inner fold: %s", k, e)
                per_fold.append(math.nan)
                continue
            per_fold.append(_macro_f1_loss(test.labels, supports, fit.class_count))
        losses[(None, None, int(k))] = float(np.mean(per_fold))
    _, _, k = _select(losses)
    return GridSearchResult(beta=None, gamma=None, k=k, losses=losses)
