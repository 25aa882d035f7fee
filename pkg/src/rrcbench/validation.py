import logging
from typing import Sequence

import numpy as np


def check_dataset_valid(features: np.ndarray, labels: np.ndarray, class_count: int) -> None:
    """Raise if a feature matrix / label vector pair violates the Dataset invariants."""
    if features.ndim != 2:
        raise ValueError(f"Feature matrix must be 2-dimensional, got shape {features.shape}.")
    n, d = features.shape
    if n < 1 or d < 1:
        raise ValueError(f"Dataset needs at least one instance and one feature, got {n}x{d}.")
    if labels.shape != (n,):
        raise ValueError(f"Label vector has shape {labels.shape}, expected ({n},).")
    if class_count < 2:
        raise ValueError(f"Dataset needs at least 2 classes, got class_count={class_count}.")
    if labels.min() < 0 or labels.max() >= class_count:
        raise ValueError(
            f"Labels must lie in 0..{class_count - 1}; found range "
            f"{labels.min()}..{labels.max()}."
        )
    bad = int((~np.isfinite(features)).sum())
    if bad:
        raise ValueError(f"Feature matrix contains {bad} non-finite value(s).")


def check_support_valid(values: np.ndarray, tolerance: float = 1e-9) -> None:
    """Raise if a vector is not a valid class-support vector."""
    if values.ndim != 1 or values.size < 2:
        raise ValueError(f"Support vector must be 1-dimensional with >= 2 entries, got shape {values.shape}.")
    if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
        raise ValueError(f"Support values must lie in [0, 1]: {values}.")
    total = float(values.sum())
    if abs(total - 1.0) > tolerance:
        raise ValueError(f"Support values must sum to 1 (got {total!r}).")


def check_all_classes_present(labels: np.ndarray, class_count: int) -> None:
    """Raise when some class has no training instance (its prior is undefined)."""
    counts = np.bincount(labels, minlength=class_count)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise ValueError(
            "Class(es) %s have zero training instances; priors are undefined."
            % ", ".join(str(c) for c in missing)
        )


def check_feature_dimension(expected: int, got: int) -> None:
    """Raise on a query whose dimensionality differs from the training data."""
    if expected != got:
        raise ValueError(f"Dimensionality mismatch: model expects {expected} feature(s), query has {got}.")


def check_knn_neighbours(k: int) -> None:
    """Raise unless K is a positive odd integer."""
    if k < 1 or k % 2 == 0:
        raise ValueError(f"KNN needs an odd positive number of neighbours, got K={k}.")


def check_fold_count(k: int, n: int) -> None:
    """Raise when a k-fold split of n instances is impossible."""
    if k < 2:
        raise ValueError(f"Cross-validation needs k >= 2 folds, got k={k}.")
    if k > n:
        raise ValueError(f"Cannot split {n} instance(s) into {k} folds.")


def check_small_classes(labels: np.ndarray, k: int) -> None:
    """Log classes with fewer members than folds; each member then gets its own fold."""
    classes, counts = np.unique(labels, return_counts=True)
    small = classes[counts < k]
    if small.size:
        logging.warning(
            "Class(es) %s have fewer than %d members; their members are spread one per fold.",
            ", ".join(str(c) for c in small),
            k,
        )


def check_bank_class_sizes(labels: np.ndarray, class_count: int) -> None:
    """Raise when a class has fewer than 2 instances (cross-prediction cannot cover it)."""
    counts = np.bincount(labels, minlength=class_count)
    too_small = np.flatnonzero(counts < 2)
    if too_small.size:
        raise ValueError(
            "Validation bank needs >= 2 instances per class; class(es) %s have fewer."
            % ", ".join(str(c) for c in too_small)
        )


def check_grid_nonempty(name: str, values: Sequence[float]) -> None:
    """Raise on an empty hyper-parameter grid axis."""
    if len(values) == 0:
        raise ValueError(f"Grid for '{name}' is empty.")


def check_gamma(gamma: float) -> None:
    """Raise unless the RRC scale exponent lies in (0, 1]."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}.")


def check_dropped_rows(dropped: int, path: str) -> None:
    """Log rows removed because of missing values."""
    if dropped:
        logging.warning("Dropped %d row(s) with missing values from %s.", dropped, path)


def check_family_size(size: int, limit: int) -> None:
    """Raise when an exhaustive-set enumeration would be too large."""
    if size > limit:
        raise ValueError(
            f"Hypothesis family of size {size} is too large for exhaustive enumeration (limit {limit})."
        )


def check_quadrature_finite(integrals: np.ndarray) -> None:
    """Raise when a quadrature row came out NaN or infinite."""
    bad = ~np.isfinite(integrals).all(axis=1)
    if bad.any():
        raise RuntimeError(f"Quadrature produced non-finite class probabilities for {int(bad.sum())} support vector(s).")


def check_quadrature_panels(pending: int, limit: int) -> None:
    """Raise when adaptive refinement keeps more panels open than `limit`."""
    if pending > limit:
        raise RuntimeError(f"Quadrature did not converge: {pending} panels still pending (limit {limit}).")


def check_wilcoxon_sample_size(n: int) -> None:
    """Log a paired sample too small for a meaningful signed-rank test."""
    if n < 5:
        logging.warning("Wilcoxon test on only %d non-zero difference(s); p-value is coarse.", n)
