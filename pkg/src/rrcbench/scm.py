"""Soft Confusion Matrix correction.

A validation bank stores, for every training instance, the RRC probabilities
of an out-of-fold prediction. Around a query x the bank instances are weighted
by the Gaussian potential exp(−β‖x − x_k‖²) and accumulated into a local soft
confusion matrix ε[m][s]; its column-normalised form P(m|s, x) corrects the RRC
probabilities P(s|x) of the query through P(m|x) = Σ_s P(m|s, x) P(s|x).
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .baseclf import ClassifierKind, TrainedClassifier, cross_predict_supports, predict_supports, train
from .core import Dataset, SeededRng, SupportVector, decide
from .rrc import MeanMode, Variant, rrc_probabilities
from .validation import check_bank_class_sizes, check_feature_dimension

BANK_FOLDS = 5


@dataclass(frozen=True, eq=False)
class ValidationBank:
    """Normalised features, true labels and RRC probabilities of cross-predicted supports."""
    features: np.ndarray
    labels: np.ndarray
    probabilities: np.ndarray
    class_count: int

    @property
    def size(self) -> int:
        return self.labels.size

    @property
    def label_indicator(self) -> np.ndarray:
        return np.eye(self.class_count)[self.labels]


@dataclass(frozen=True, eq=False)
class SoftConfusionMatrix:
    """ε[m][s]: locally weighted mass of true class m predicted as s."""
    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @property
    def degenerate(self) -> bool:
        return not self.total > 0.0

    def conditional(self) -> np.ndarray:
        """P(m|s) as an M×M matrix (rows m, columns s)."""
        return confusion_conditional(self.values)


@dataclass(frozen=True, eq=False)
class ScmClassifier:
    base: TrainedClassifier
    bank: ValidationBank
    beta: float
    gamma: float
    variant: Variant
    mean_mode: MeanMode = MeanMode.MOMENT

    @property
    def class_count(self) -> int:
        return self.bank.class_count


def build_bank(
    kind: ClassifierKind,
    train_set: Dataset,
    variant: Variant,
    gamma: float = 0.5,
    k: int = 1,
    rng: Optional[SeededRng] = None,
    mean_mode: MeanMode = MeanMode.MOMENT,
) -> Tuple[TrainedClassifier, ValidationBank]:
    """Cross-predict the training set, model each support with the RRC, then retrain on everything."""
    check_bank_class_sizes(train_set.labels, train_set.class_count)
    supports = cross_predict_supports(kind, train_set, k=k, folds=BANK_FOLDS, rng=rng)
    bank = ValidationBank(
        features=train_set.features,
        labels=train_set.labels,
        probabilities=rrc_probabilities(supports, variant, gamma, mean_mode),
        class_count=train_set.class_count,
    )
    return train(kind, train_set, k), bank


def build_scm(
    kind: ClassifierKind,
    train_set: Dataset,
    variant: Variant,
    beta: float,
    gamma: float = 0.5,
    k: int = 1,
    rng: Optional[SeededRng] = None,
    mean_mode: MeanMode = MeanMode.MOMENT,
) -> ScmClassifier:
    base, bank = build_bank(kind, train_set, variant, gamma, k, rng, mean_mode)
    variant = Variant(variant)
    logging.debug(
        "Built %s SCM over a bank of %d instance(s), beta=%g, gamma=%g.", variant.value, bank.size, beta, gamma
    )
    return ScmClassifier(
        base=base, bank=bank, beta=float(beta), gamma=float(gamma), variant=variant, mean_mode=MeanMode(mean_mode)
    )


def local_confusion_batch(
    label_indicator: np.ndarray,
    bank_probabilities: np.ndarray,
    sq_distances: np.ndarray,
    beta: float,
) -> np.ndarray:
    """(n, M, M) soft confusion matrices for n queries from their squared distances to the bank."""
    weights = np.exp(-beta * sq_distances)
    return np.einsum('nk,km,ks->nms', weights, label_indicator, bank_probabilities, optimize=True)


def local_confusion(bank: ValidationBank, x: np.ndarray, beta: float) -> SoftConfusionMatrix:
    x = np.asarray(x, dtype=float)
    check_feature_dimension(bank.features.shape[1], x.size)
    sq_distances = cdist(x[None, :], bank.features, metric='sqeuclidean')
    return SoftConfusionMatrix(local_confusion_batch(bank.label_indicator, bank.probabilities, sq_distances, beta)[0])


def confusion_conditional(confusion: np.ndarray) -> np.ndarray:
    """Column-normalise ε[..., m, s] into P(m|s); an empty column s becomes the indicator of m = s."""
    confusion = np.asarray(confusion, dtype=float)
    class_count = confusion.shape[-1]
    column_mass = confusion.sum(axis=-2, keepdims=True)
    empty = column_mass <= 0.0
    conditional = np.divide(confusion, column_mass, out=np.zeros(confusion.shape), where=~empty)
    return np.where(empty, np.eye(class_count), conditional)


def apply_confusion(prior: np.ndarray, conditional: np.ndarray) -> np.ndarray:
    """P(m|x) = Σ_s P(m|s) P(s|x), renormalised; broadcasts over leading axes."""
    posterior = np.einsum('...ms,...s->...m', conditional, prior)
    return posterior / posterior.sum(axis=-1, keepdims=True)


def correct_probabilities(
    bank: ValidationBank,
    query_probabilities: np.ndarray,
    sq_distances: np.ndarray,
    beta: float,
) -> np.ndarray:
    """Corrected posteriors for precomputed query RRC probabilities and squared distances."""
    confusion = local_confusion_batch(bank.label_indicator, bank.probabilities, sq_distances, beta)
    return apply_confusion(query_probabilities, confusion_conditional(confusion))


def corrected_posteriors(scm: ScmClassifier, features: np.ndarray) -> np.ndarray:
    """(n, M) corrected posteriors for an (n, d) query matrix."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    prior = rrc_probabilities(predict_supports(scm.base, features), scm.variant, scm.gamma, scm.mean_mode)
    sq_distances = cdist(features, scm.bank.features, metric='sqeuclidean')
    return correct_probabilities(scm.bank, prior, sq_distances, scm.beta)


def corrected_posterior(scm: ScmClassifier, x: np.ndarray) -> SupportVector:
    return SupportVector(corrected_posteriors(scm, np.asarray(x, dtype=float)[None, :])[0])


def scm_decide(scm: ScmClassifier, x: np.ndarray) -> int:
    return decide(corrected_posterior(scm, x))
