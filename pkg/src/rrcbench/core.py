"""Domain types shared by every module: datasets, support vectors, RNG streams, decisions."""

import zlib
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .validation import check_dataset_valid, check_fold_count, check_small_classes, check_support_valid

StreamKey = Union[int, str]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix with densified integer class labels 0..M-1."""
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_names: Tuple[str, ...] = ()
    relation_name: str = ""
    class_names: Tuple[str, ...] = ()
    dropped_rows: int = 0  # rows removed at load time because of missing values

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=float)
        labels = np.array(self.labels, dtype=np.int64)
        check_dataset_valid(features, labels, self.class_count)
        object.__setattr__(self, 'features', _frozen(features))
        object.__setattr__(self, 'labels', _frozen(labels))
        if not self.feature_names:
            object.__setattr__(self, 'feature_names', tuple(f"x{j}" for j in range(features.shape[1])))
        if not self.class_names:
            object.__setattr__(self, 'class_names', tuple(str(c) for c in range(self.class_count)))

    @property
    def instance_count(self) -> int:
        return self.features.shape[0]

    @property
    def dimensionality(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Rows at `indices`; the class set (and class_count) is kept."""
        return replace(self, features=self.features[indices], labels=self.labels[indices])

    def select_features(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        return replace(
            self,
            features=self.features[:, columns],
            feature_names=tuple(self.feature_names[j] for j in columns),
        )


@dataclass(frozen=True, eq=False)
class SupportVector:
    """Soft classifier output: values in [0, 1] summing to 1."""
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        check_support_valid(values)
        object.__setattr__(self, 'values', _frozen(values))

    @classmethod
    def from_scores(cls, scores: Sequence[float]) -> "SupportVector":
        """Normalise non-negative scores to a support vector."""
        scores = np.asarray(scores, dtype=float)
        return cls(scores / scores.sum())

    @property
    def class_count(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DatasetSummary:
    """The per-dataset characteristics reported in a benchmark table."""
    instance_count: int
    dimensionality: int
    class_count: int
    imbalance_ratio: float


@dataclass(frozen=True, eq=False)
class FeatureScaling:
    """Per-feature min/max of a training sample; maps features affinely onto [0, 1]."""
    minimum: np.ndarray
    maximum: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        span = self.maximum - self.minimum
        scale = np.divide(1.0, span, out=np.zeros_like(span), where=span > 0)
        # constant training features map to 0; values outside the training range are not clamped
        return (np.asarray(features, dtype=float) - self.minimum) * scale


def _stream_key(key: StreamKey) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"RNG stream keys must be non-negative, got {key}.")
    return int(key)


class SeededRng:
    """Splittable random stream identified by (seed, stream path).

    The same seed and stream path always yield the same sequence, whichever
    process or thread draws from it. Streams are meant to be created per task
    with `spawn` and never shared between tasks.
    """

    def __init__(self, seed: int, stream: Sequence[StreamKey] = ()) -> None:
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        self.stream = tuple(_stream_key(k) for k in stream)
        self.generator = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.stream))

    def spawn(self, *keys: StreamKey) -> "SeededRng":
        """Independent child stream; does not advance this stream."""
        return SeededRng(self.seed, self.stream + tuple(keys))

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, stream={self.stream})"


def decide(support: Union[SupportVector, Sequence[float], np.ndarray]) -> int:
    """Maximum a posteriori decision; ties go to the lowest class index."""
    values = support.values if isinstance(support, SupportVector) else np.asarray(support)
    return int(np.argmax(values))


def decide_batch(supports: np.ndarray) -> np.ndarray:
    """Row-wise `decide` over an (n, M) matrix."""
    return np.argmax(np.asarray(supports), axis=1)


def summarize(dataset: Dataset) -> DatasetSummary:
    """|S|, d, C and the average imbalance ratio mean_c(max class size / class size)."""
    counts = np.bincount(dataset.labels, minlength=dataset.class_count)
    counts = counts[counts > 0]
    imbalance_ratio = float(np.mean(counts.max() / counts))
    return DatasetSummary(
        instance_count=dataset.instance_count,
        dimensionality=dataset.dimensionality,
        class_count=dataset.class_count,
        imbalance_ratio=imbalance_ratio,
    )


def fit_scaling(features: np.ndarray) -> FeatureScaling:
    features = np.asarray(features, dtype=float)
    return FeatureScaling(minimum=_frozen(features.min(axis=0)), maximum=_frozen(features.max(axis=0)))


def normalize_features(dataset: Dataset) -> Tuple[Dataset, FeatureScaling]:
    """Map every feature onto [0, 1]; the scaling is returned for use on test folds."""
    scaling = fit_scaling(dataset.features)
    return apply_normalization(dataset, scaling), scaling


def apply_normalization(dataset: Dataset, scaling: FeatureScaling) -> Dataset:
    return replace(dataset, features=scaling.apply(dataset.features))


def stratified_kfold(dataset: Dataset, k: int, rng: Optional[SeededRng] = None) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Stratified k-fold split as (train indices, test indices) pairs.

    Members of each class are shuffled (kept in row order without `rng`), the
    class blocks are concatenated and position p goes to fold p mod k, so
    every fold holds each class to within one instance.
    """
    labels = dataset.labels
    check_fold_count(k, labels.size)
    check_small_classes(labels, k)
    blocks = []
    for c in range(dataset.class_count):
        members = np.flatnonzero(labels == c)
        if rng is not None:
            members = rng.generator.permutation(members)
        blocks.append(members)
    order = np.concatenate(blocks)
    fold_of = np.empty(labels.size, dtype=np.int64)
    fold_of[order] = np.arange(order.size) % k
    return [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)]
