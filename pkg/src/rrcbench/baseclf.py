"""Soft-output base classifiers: kernel naive Bayes, KNN, gain-ratio tree, nearest centroid.

Every model is an immutable dataclass produced by `train` and queried through
`predict_supports` (a matrix of queries) or `predict_support` (one query).
Training is deterministic; none of the models draws random numbers.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp, softmax

from .core import Dataset, SeededRng, SupportVector, stratified_kfold
from .validation import (
    check_all_classes_present,
    check_bank_class_sizes,
    check_feature_dimension,
    check_knn_neighbours,
)

SUPPORT_FLOOR = 1e-12
BANDWIDTH_FLOOR = 1e-6
POINT_MASS_MISS = 1e-6   # likelihood of a constant training feature at any other value
CENTROID_EPSILON = 1e-9
TREE_MIN_LEAF = 2
TREE_MAX_DEPTH = 20
_KDE_QUERY_BLOCK = 256
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ClassifierKind(str, Enum):
    NAIVE_BAYES = "nb"
    KNN = "knn"
    TREE = "tree"
    NEAREST_CENTROID = "nc"


def _floor_and_normalize(supports: np.ndarray) -> np.ndarray:
    supports = np.maximum(supports, SUPPORT_FLOOR)
    return supports / supports.sum(axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class NaiveBayesKDE:
    """Class priors times a product of per-feature Gaussian KDEs."""
    class_count: int
    log_priors: np.ndarray
    samples: Tuple[np.ndarray, ...]     # per class: (n_c, d) training rows
    bandwidths: np.ndarray              # (M, d); 0 marks a constant feature
    kind = ClassifierKind.NAIVE_BAYES

    @property
    def dimensionality(self) -> int:
        return self.bandwidths.shape[1]

    def _class_log_likelihood(self, features: np.ndarray, c: int) -> np.ndarray:
        sample = self.samples[c]
        h = self.bandwidths[c]
        smooth = h > 0
        loglik = np.zeros(features.shape[0])
        if smooth.any():
            z = (features[:, None, smooth] - sample[None, :, smooth]) / h[smooth]
            kernel = logsumexp(-0.5 * z * z, axis=1) - math.log(sample.shape[0])
            loglik += (kernel - _LOG_SQRT_2PI - np.log(h[smooth])).sum(axis=1)
        if (~smooth).any():
            hit = np.isclose(features[:, ~smooth], sample[0, ~smooth], rtol=0.0, atol=1e-12)
            loglik += np.where(hit, 0.0, math.log(POINT_MASS_MISS)).sum(axis=1)
        return loglik

    def predict_supports(self, features: np.ndarray) -> np.ndarray:
        blocks = []
        for start in range(0, features.shape[0], _KDE_QUERY_BLOCK):
            block = features[start:start + _KDE_QUERY_BLOCK]
            scores = np.column_stack([
                self.log_priors[c] + self._class_log_likelihood(block, c) for c in range(self.class_count)
            ])
            blocks.append(softmax(scores, axis=1))
        return _floor_and_normalize(np.vstack(blocks))


@dataclass(frozen=True, eq=False)
class KNearestNeighbours:
    """Laplace-smoothed neighbour votes (count_c + 1)/(K + M)."""
    class_count: int
    features: np.ndarray
    labels: np.ndarray
    k: int
    kind = ClassifierKind.KNN

    @property
    def dimensionality(self) -> int:
        return self.features.shape[1]

    def neighbours(self, features: np.ndarray) -> np.ndarray:
        """Indices of the K nearest training rows; distance ties go to the lower row index."""
        distances = cdist(features, self.features, metric='sqeuclidean')
        k = min(self.k, self.features.shape[0])
        return np.argsort(distances, axis=1, kind='stable')[:, :k]

    def predict_supports(self, features: np.ndarray) -> np.ndarray:
        votes = self.labels[self.neighbours(features)]
        counts = (votes[:, :, None] == np.arange(self.class_count)).sum(axis=1)
        return (counts + 1.0) / (votes.shape[1] + self.class_count)


@dataclass(frozen=True, eq=False)
class GainRatioTree:
    """Binary axis-aligned tree in flat arrays; leaves hold Laplace-smoothed class frequencies."""
    class_count: int
    dimensionality: int
    feature: np.ndarray      # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_support: np.ndarray  # (nodes, M)
    kind = ClassifierKind.TREE

    @property
    def node_count(self) -> int:
        return self.feature.size

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def leaves_of(self, features: np.ndarray) -> np.ndarray:
        node = np.zeros(features.shape[0], dtype=np.int64)
        rows = np.arange(features.shape[0])
        while True:
            inner = self.feature[node] >= 0
            if not inner.any():
                return node
            at = node[inner]
            go_left = features[rows[inner], self.feature[at]] <= self.threshold[at]
            node[inner] = np.where(go_left, self.left[at], self.right[at])

    def predict_supports(self, features: np.ndarray) -> np.ndarray:
        return self.leaf_support[self.leaves_of(features)]


@dataclass(frozen=True, eq=False)
class NearestCentroid:
    """Supports proportional to 1/(distance to class centroid + ε)."""
    class_count: int
    centroids: np.ndarray
    kind = ClassifierKind.NEAREST_CENTROID

    @property
    def dimensionality(self) -> int:
        return self.centroids.shape[1]

    def predict_supports(self, features: np.ndarray) -> np.ndarray:
        inverse = 1.0 / (cdist(features, self.centroids) + CENTROID_EPSILON)
        return _floor_and_normalize(inverse / inverse.sum(axis=1, keepdims=True))


TrainedClassifier = Union[NaiveBayesKDE, KNearestNeighbours, GainRatioTree, NearestCentroid]


# ── Training ───────────────────────────────────────────────────────────────────

def silverman_bandwidth(values: np.ndarray) -> np.ndarray:
    """1.06 · s · n^(-1/5) per column; 0 for constant columns, otherwise floored at BANDWIDTH_FLOOR."""
    n = values.shape[0]
    spread = values.std(axis=0, ddof=1) if n > 1 else np.zeros(values.shape[1])
    bandwidth = 1.06 * spread * n ** (-0.2)
    return np.where(spread > 0, np.maximum(bandwidth, BANDWIDTH_FLOOR), 0.0)


def _train_naive_bayes(dataset: Dataset) -> NaiveBayesKDE:
    counts = np.bincount(dataset.labels, minlength=dataset.class_count)
    samples = tuple(dataset.features[dataset.labels == c] for c in range(dataset.class_count))
    return NaiveBayesKDE(
        class_count=dataset.class_count,
        log_priors=np.log(counts / counts.sum()),
        samples=samples,
        bandwidths=np.vstack([silverman_bandwidth(s) for s in samples]),
    )


def _entropy(counts: np.ndarray) -> np.ndarray:
    """Entropy in bits of count rows (last axis)."""
    totals = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, totals, out=np.zeros(counts.shape), where=totals > 0)
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return -terms.sum(axis=-1)


def _best_threshold(values: np.ndarray, onehot: np.ndarray, min_leaf: int):
    """(gain, gain ratio, threshold) of the highest-gain binary split of one feature, or None."""
    n = values.size
    order = np.argsort(values, kind='stable')
    sorted_values = values[order]
    left_counts = np.cumsum(onehot[order], axis=0)[:-1]           # split after position i
    left_sizes = np.arange(1, n)
    valid = (sorted_values[1:] > sorted_values[:-1]) & (left_sizes >= min_leaf) & (n - left_sizes >= min_leaf)
    if not valid.any():
        return None
    positions = np.flatnonzero(valid)
    left_counts = left_counts[positions]
    right_counts = onehot.sum(axis=0) - left_counts
    share = left_sizes[positions] / n
    gain = (
        _entropy(onehot.sum(axis=0))
        - share * _entropy(left_counts)
        - (1.0 - share) * _entropy(right_counts)
    )
    gain = np.maximum(gain, 0.0)
    best = int(np.argmax(gain))
    split_info = -(share[best] * math.log2(share[best]) + (1.0 - share[best]) * math.log2(1.0 - share[best]))
    p = positions[best]
    threshold = 0.5 * (sorted_values[p] + sorted_values[p + 1])
    return float(gain[best]), float(gain[best] / split_info), float(threshold)


def _choose_split(features: np.ndarray, onehot: np.ndarray, min_leaf: int):
    """C4.5 rule: among features whose best gain is at least the average, take the highest gain ratio.

    Zero-gain splits of impure nodes are admitted so that interactions such as
    XOR, invisible to any single split, can still be separated one level down.
    """
    candidates = []
    for j in range(features.shape[1]):
        found = _best_threshold(features[:, j], onehot, min_leaf)
        if found is not None:
            candidates.append((j,) + found)
    if not candidates:
        return None
    average_gain = sum(c[1] for c in candidates) / len(candidates)
    eligible = [c for c in candidates if c[1] >= average_gain - 1e-12]
    j, _, _, threshold = max(eligible, key=lambda c: (c[2], -c[0]))
    return j, threshold


def _train_tree(dataset: Dataset, min_leaf: int = TREE_MIN_LEAF, max_depth: int = TREE_MAX_DEPTH) -> GainRatioTree:
    class_count = dataset.class_count
    onehot = np.eye(class_count)[dataset.labels]
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    leaf_support: List[np.ndarray] = []

    def new_node(rows: np.ndarray) -> int:
        counts = onehot[rows].sum(axis=0)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_support.append((counts + 1.0) / (rows.size + class_count))
        return len(feature) - 1

    stack = [(new_node(np.arange(dataset.instance_count)), np.arange(dataset.instance_count), 0)]
    while stack:
        node, rows, depth = stack.pop()
        pure = np.count_nonzero(onehot[rows].sum(axis=0)) <= 1
        if pure or depth >= max_depth or rows.size < 2 * min_leaf:
            continue
        split = _choose_split(dataset.features[rows], onehot[rows], min_leaf)
        if split is None:
            continue
        j, cut = split
        goes_left = dataset.features[rows, j] <= cut
        feature[node] = j
        threshold[node] = cut
        left[node] = new_node(rows[goes_left])
        right[node] = new_node(rows[~goes_left])
        stack.append((right[node], rows[~goes_left], depth + 1))
        stack.append((left[node], rows[goes_left], depth + 1))

    logging.debug("Grew a gain-ratio tree with %d node(s).", len(feature))
    return GainRatioTree(
        class_count=class_count,
        dimensionality=dataset.dimensionality,
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        leaf_support=np.vstack(leaf_support),
    )


def _train_nearest_centroid(dataset: Dataset) -> NearestCentroid:
    centroids = np.vstack([
        dataset.features[dataset.labels == c].mean(axis=0) for c in range(dataset.class_count)
    ])
    return NearestCentroid(class_count=dataset.class_count, centroids=centroids)


def train(kind: ClassifierKind, dataset: Dataset, k: int = 1) -> TrainedClassifier:
    """Fit a base classifier. `k` is the neighbour count and is used by KNN only."""
    kind = ClassifierKind(kind)
    check_all_classes_present(dataset.labels, dataset.class_count)
    if kind is ClassifierKind.NAIVE_BAYES:
        return _train_naive_bayes(dataset)
    if kind is ClassifierKind.KNN:
        check_knn_neighbours(k)
        return KNearestNeighbours(
            class_count=dataset.class_count, features=dataset.features, labels=dataset.labels, k=k,
        )
    if kind is ClassifierKind.TREE:
        return _train_tree(dataset)
    return _train_nearest_centroid(dataset)


def predict_supports(model: TrainedClassifier, features: np.ndarray) -> np.ndarray:
    """(n, M) support matrix for an (n, d) query matrix; rows are valid support vectors."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    check_feature_dimension(model.dimensionality, features.shape[1])
    return model.predict_supports(features)


def predict_support(model: TrainedClassifier, x: np.ndarray) -> SupportVector:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"A single query must be a 1-dimensional feature vector, got shape {x.shape}.")
    return SupportVector(predict_supports(model, x[None, :])[0])


def cross_predict_supports(
    kind: ClassifierKind,
    dataset: Dataset,
    k: int = 1,
    folds: int = 5,
    rng: Optional[SeededRng] = None,
) -> np.ndarray:
    """Out-of-fold supports: row i comes from a model that never saw instance i."""
    check_bank_class_sizes(dataset.labels, dataset.class_count)
    supports = np.empty((dataset.instance_count, dataset.class_count))
    for train_rows, test_rows in stratified_kfold(dataset, min(folds, dataset.instance_count), rng):
        model = train(kind, dataset.subset(train_rows), k)
        supports[test_rows] = predict_supports(model, dataset.features[test_rows])
    return supports
