"""Dataset ingestion (ARFF, CSV, built-in synthetic sets) and correlation-based feature selection."""

import heapq
import logging
import math
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.io import arff

from .core import Dataset, SeededRng
from .validation import check_dropped_rows

SYNTHETIC_PREFIX = "synthetic:"
CFS_MAX_STALE_EXPANSIONS = 5
MISSING_MARKERS = ("?",)


def _decode(value) -> str:
    return value.decode("utf-8") if isinstance(value, bytes) else str(value)


def _densify(values: Sequence[str], declared: Sequence[str], path: str) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Map class values to 0..M-1 following `declared` order; declared values that never occur are dropped."""
    present = set(values)
    unknown = present.difference(declared)
    if unknown:
        raise ValueError(f"{path}: class value(s) {sorted(unknown)} are not declared.")
    class_names = tuple(name for name in declared if name in present)
    unused = [name for name in declared if name not in present]
    if unused:
        logging.warning("%s: declared class value(s) %s have no instances and are ignored.", path, ", ".join(unused))
    if len(class_names) < 2:
        raise ValueError(f"{path}: needs instances of at least 2 classes, found {len(class_names)}.")
    index = {name: i for i, name in enumerate(class_names)}
    return np.array([index[v] for v in values], dtype=np.int64), class_names


def _feature_block(frame: pd.DataFrame, column: str, categories: Optional[Sequence[str]]) -> Tuple[np.ndarray, List[str]]:
    """Numeric column as is; nominal column one-hot in category order."""
    if categories is None:
        return frame[column].to_numpy(dtype=float)[:, None], [column]
    values = frame[column].to_numpy()
    block = np.column_stack([(values == category).astype(float) for category in categories])
    return block, [f"{column}={category}" for category in categories]


def _assemble(
    frame: pd.DataFrame,
    class_column: str,
    nominal: Dict[str, Sequence[str]],
    declared_classes: Sequence[str],
    relation_name: str,
    path: str,
) -> Dataset:
    complete = frame.notna().all(axis=1)
    dropped = int((~complete).sum())
    check_dropped_rows(dropped, path)
    frame = frame[complete]
    if frame.empty:
        raise ValueError(f"{path}: no complete rows left after dropping missing values.")

    blocks, names = [], []
    for column in frame.columns:
        if column == class_column:
            continue
        block, block_names = _feature_block(frame, column, nominal.get(column))
        blocks.append(block)
        names.extend(block_names)
    if not blocks:
        raise ValueError(f"{path}: no feature attributes besides the class '{class_column}'.")
    labels, class_names = _densify([str(v) for v in frame[class_column]], declared_classes, path)
    logging.info("Loaded %d instance(s) with %d feature(s) and %d class(es) from %s",
                 len(frame), len(names), len(class_names), path)
    return Dataset(
        features=np.hstack(blocks),
        labels=labels,
        class_count=len(class_names),
        feature_names=tuple(names),
        relation_name=relation_name,
        class_names=class_names,
        dropped_rows=dropped,
    )


def load_arff(path: Path, class_attribute: Optional[str] = None) -> Dataset:
    """Dense ARFF with numeric and nominal attributes; the last (or the named) attribute is the class."""
    path = Path(path)
    try:
        records, meta = arff.loadarff(str(path))
    except (arff.ArffError, NotImplementedError, ValueError) as e:
        raise ValueError(f"{path}: {e}") from e
    attributes = list(meta.names())
    class_column = class_attribute or attributes[-1]
    if class_column not in attributes:
        raise ValueError(f"{path}: no attribute named '{class_column}'.")

    frame = pd.DataFrame({name: records[name] for name in attributes})
    nominal: Dict[str, Sequence[str]] = {}
    for name, kind in zip(attributes, meta.types()):
        if kind == "nominal":
            categories = [_decode(v) for v in meta[name][1]]
            nominal[name] = categories
            frame[name] = frame[name].map(_decode).replace(list(MISSING_MARKERS), np.nan)
        elif kind != "numeric":
            raise ValueError(f"{path}: attribute '{name}' has unsupported type '{kind}'.")

    if class_column in nominal:
        declared_classes = nominal.pop(class_column)
    else:
        frame[class_column] = frame[class_column].map(lambda v: v if pd.isna(v) else f"{v:g}")
        declared_classes = sorted(frame[class_column].dropna().unique(), key=float)
    return _assemble(frame, class_column, nominal, declared_classes, meta.name, str(path))


def load_csv(path: Path, class_attribute: Optional[str] = None) -> Dataset:
    """Header row, one column per attribute; the last (or the named) column is the class.

    Non-numeric feature columns are one-hot encoded in sorted category order and
    class names are densified in sorted order.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path, na_values=list(MISSING_MARKERS), skipinitialspace=True, float_precision="round_trip"
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ValueError(f"{path}: {e}") from e
    frame.columns = [str(c).strip() for c in frame.columns]
    class_column = class_attribute or frame.columns[-1]
    if class_column not in frame.columns:
        raise ValueError(f"{path}: no column named '{class_column}'.")

    nominal = {
        column: sorted(frame[column].dropna().astype(str).unique())
        for column in frame.columns
        if column != class_column and not pd.api.types.is_numeric_dtype(frame[column])
    }
    for column in nominal:
        frame[column] = frame[column].map(lambda v: v if pd.isna(v) else str(v))
    classes = frame[class_column]
    declared = sorted(classes.dropna().unique())
    frame[class_column] = classes.map(lambda v: v if pd.isna(v) else str(v))
    return _assemble(frame, class_column, nominal, [str(c) for c in declared], path.stem, str(path))


def load_dataset(path: str, fmt: Optional[str] = None, class_attribute: Optional[str] = None) -> Dataset:
    """Load `path` as ARFF or CSV (by `fmt` or suffix), or build `synthetic:<name>`."""
    if str(path).startswith(SYNTHETIC_PREFIX):
        return generate_synthetic(str(path)[len(SYNTHETIC_PREFIX):])
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "arff":
        return load_arff(path, class_attribute)
    if fmt == "csv":
        return load_csv(path, class_attribute)
    raise ValueError(f"{path}: unknown dataset format '{fmt}' (expected arff or csv).")


def dataset_name(source: str) -> str:
    if source.startswith(SYNTHETIC_PREFIX):
        return source[len(SYNTHETIC_PREFIX):]
    return Path(source).stem


def csv_class_order(names: Sequence[str]) -> List[str]:
    """Class names as `load_csv` would return them after reading `names` back.

    A column whose values all parse as numbers comes back numeric, so it is
    sorted by value and re-rendered by `str`.
    """
    values = pd.to_numeric(pd.Series(list(names), dtype=object), errors="coerce")
    if len(names) and values.notna().all():
        return [str(v) for v in sorted(values.to_numpy())]
    return sorted(str(n).strip() for n in names)


def write_csv(dataset: Dataset, path: Path) -> Path:
    """CSV readable by `load_csv` with identical features and labels.

    Class names are written when reading them back yields the same names in
    label order, label indices otherwise.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(dataset.class_names)
    writable = not set(names) & set(MISSING_MARKERS) and csv_class_order(names) == names
    labels = np.array(names, dtype=object)[dataset.labels] if writable else dataset.labels
    frame = pd.DataFrame(dataset.features, columns=list(dataset.feature_names))
    frame["class"] = labels
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


# ── Correlation-based feature selection ───────────────────────────────────────

def _abs_correlation(features: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """|Pearson r| between every feature column and every target column; 0 where undefined."""
    def standardize(a: np.ndarray) -> np.ndarray:
        centered = a - a.mean(axis=0)
        norms = np.linalg.norm(centered, axis=0)
        return np.divide(centered, norms, out=np.zeros_like(centered), where=norms > 0)
    return np.abs(standardize(features).T @ standardize(targets))


def cfs_merit(subset: Sequence[int], class_correlation: np.ndarray, feature_correlation: np.ndarray) -> float:
    """k·mean(r_cf) / sqrt(k + k(k−1)·mean(r_ff))."""
    k = len(subset)
    if k == 0:
        return 0.0
    members = list(subset)
    r_cf = class_correlation[members].mean()
    if k == 1:
        return float(r_cf)
    block = feature_correlation[np.ix_(members, members)]
    r_ff = (block.sum() - np.trace(block)) / (k * (k - 1))
    return float(k * r_cf / math.sqrt(k + k * (k - 1) * r_ff))


def cfs_select(dataset: Dataset) -> List[int]:
    """Forward best-first search over feature subsets maximising the CFS merit.

    Class correlation of a feature is its mean |r| with the one-vs-rest class
    indicators. The search stops after CFS_MAX_STALE_EXPANSIONS expansions in a
    row without a strictly better subset.
    """
    features = dataset.features
    indicators = np.eye(dataset.class_count)[dataset.labels]
    class_correlation = _abs_correlation(features, indicators).mean(axis=1)
    feature_correlation = _abs_correlation(features, features)

    best: Tuple[int, ...] = ()
    best_merit = 0.0
    start: Tuple[int, ...] = ()
    open_list = [(-0.0, 0, start)]
    seen = {start}
    stale = 0
    while open_list and stale < CFS_MAX_STALE_EXPANSIONS:
        _, _, subset = heapq.heappop(open_list)
        improved = False
        for j in range(dataset.dimensionality):
            if j in subset:
                continue
            child = tuple(sorted(subset + (j,)))
            if child in seen:
                continue
            seen.add(child)
            merit = cfs_merit(child, class_correlation, feature_correlation)
            heapq.heappush(open_list, (-merit, len(child), child))
            if merit > best_merit + 1e-12:
                best, best_merit, improved = child, merit, True
        stale = 0 if improved else stale + 1

    if not best:
        best = (int(np.argmax(class_correlation)),)
    logging.debug("CFS kept %d of %d feature(s) (merit %.4f).", len(best), dataset.dimensionality, best_merit)
    return list(best)


# ── Synthetic benchmark sets ───────────────────────────────────────────────────

def _two_class(first: np.ndarray, second: np.ndarray, name: str) -> Dataset:
    return Dataset(
        features=np.vstack([first, second]),
        labels=np.repeat([0, 1], [len(first), len(second)]),
        class_count=2,
        feature_names=("x", "y"),
        relation_name=name,
        class_names=("0", "1"),
    )


def _polar(radius: np.ndarray, angle: np.ndarray) -> np.ndarray:
    return np.column_stack([radius * np.sin(angle), radius * np.cos(angle)])


def _banana(g: np.random.Generator, n: int) -> Dataset:
    r, s = 5.0, 1.0
    first = _polar(r, 0.125 * np.pi + g.random(n) * 1.25 * np.pi) + g.normal(0.0, s, (n, 2))
    second = _polar(r, 0.375 * np.pi - g.random(n) * 1.25 * np.pi) + g.normal(0.0, s, (n, 2)) + [-0.75 * r, 0.75 * r]
    return _two_class(first, second, "banana")


def _gauss2d(g: np.random.Generator, n: int) -> Dataset:
    return _two_class(g.normal(0.0, 1.0, (n, 2)), g.normal(2.0, 1.0, (n, 2)), "gauss2D")


def _gauss_sand(g: np.random.Generator, n: int) -> Dataset:
    return _two_class(g.normal(0.0, 1.0, (n, 2)), g.normal(0.0, 2.0, (n, 2)), "gaussSand")


def _half_rings(g: np.random.Generator, n: int) -> Dataset:
    angle_a, angle_b = g.random(n) * np.pi, g.random(n) * np.pi
    first = np.column_stack([np.cos(angle_a), np.sin(angle_a)]) + g.normal(0.0, 0.1, (n, 2))
    second = np.column_stack([1.0 - np.cos(angle_b), 0.5 - np.sin(angle_b)]) + g.normal(0.0, 0.1, (n, 2))
    return _two_class(first, second, "halfRings")


def _ring2d(g: np.random.Generator, n: int) -> Dataset:
    inner = _polar(np.sqrt(g.random(n)), g.random(n) * 2.0 * np.pi)
    outer = _polar(1.5 + g.random(n), g.random(n) * 2.0 * np.pi)
    return _two_class(inner, outer, "ring2D")


def _spirals(g: np.random.Generator, n: int) -> Dataset:
    t = np.sqrt(g.random(n)) * 3.0 * np.pi
    arm = np.column_stack([t * np.cos(t), t * np.sin(t)])
    return _two_class(arm + g.normal(0.0, 0.5, (n, 2)), -arm + g.normal(0.0, 0.5, (n, 2)), "spirals")


def _lin(g: np.random.Generator, n: int) -> Dataset:
    points = g.random((2 * n, 2))
    labels = (points.sum(axis=1) > 1.0).astype(np.int64)
    flip = g.random(2 * n) < 0.05
    labels = np.where(flip, 1 - labels, labels)
    return Dataset(points, labels, 2, ("x", "y"), "lin", ("0", "1"))


def _check2d(g: np.random.Generator, n: int) -> Dataset:
    points = g.random((2 * n, 2))
    cells = np.floor(points * 4.0).astype(np.int64)
    return Dataset(points, (cells.sum(axis=1) % 2).astype(np.int64), 2, ("x", "y"), "check2D", ("0", "1"))


SYNTHETIC_GENERATORS: Dict[str, Callable[[np.random.Generator, int], Dataset]] = {
    "banana": _banana,
    "gauss2D": _gauss2d,
    "gaussSand": _gauss_sand,
    "halfRings": _half_rings,
    "ring2D": _ring2d,
    "spirals": _spirals,
    "lin": _lin,
    "check2D": _check2d,
}


def generate_synthetic(name: str, per_class: int = 200, rng: Optional[SeededRng] = None) -> Dataset:
    """Built-in 2-D two-class benchmark; the default stream depends on the name only."""
    if name not in SYNTHETIC_GENERATORS:
        raise ValueError(f"Unknown synthetic dataset '{name}'; choose from {', '.join(SYNTHETIC_GENERATORS)}.")
    rng = rng or SeededRng(0, ("synthetic", name))
    return SYNTHETIC_GENERATORS[name](rng.generator, per_class)
