from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from rrcbench.campaign import LOSS_COLUMNS, RESULT_COLUMNS
from rrcbench.core import Dataset, SeededRng

PROJECT_DIR = Path(__file__).parent.parent
DATA_DIR = PROJECT_DIR / "data-sample"


@pytest.fixture
def iris_path():
    return str(DATA_DIR / "iris.arff")


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def two_blobs():
    """Two well separated Gaussian blobs, 20 instances each, features already in [0, 1]."""
    g = SeededRng(11, ("fixture", "two_blobs")).generator
    first = 0.25 + 0.04 * g.standard_normal((20, 2))
    second = 0.75 + 0.04 * g.standard_normal((20, 2))
    return Dataset(
        features=np.vstack([first, second]),
        labels=np.repeat([0, 1], 20),
        class_count=2,
        feature_names=("x", "y"),
        class_names=("a", "b"),
    )


@pytest.fixture
def three_blobs():
    """Three overlapping blobs in 3-D, 15 instances each."""
    g = SeededRng(5, ("fixture", "three_blobs")).generator
    centres = np.array([[0.2, 0.2, 0.5], [0.5, 0.8, 0.5], [0.8, 0.3, 0.4]])
    features = np.vstack([c + 0.12 * g.standard_normal((15, 3)) for c in centres])
    return Dataset(features=features, labels=np.repeat([0, 1, 2], 15), class_count=3)


@pytest.fixture
def xor_dataset():
    """XOR corners, each corner present twice."""
    corners = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    return Dataset(
        features=np.repeat(corners, 2, axis=0),
        labels=np.repeat([0, 1, 1, 0], 2),
        class_count=2,
    )


def _results_frame(rows):
    frame = pd.DataFrame(rows, columns=list(RESULT_COLUMNS))
    for column in ("beta", "gamma", "K"):
        frame[column] = frame[column].astype(float)
    return frame


@pytest.fixture
def results_frame():
    """Hand-made campaign results: 6 datasets, kind nc, 2 folds; beta and truncnorm beat raw everywhere."""
    rows = []
    offsets = {"raw": 0.20, "beta": 0.10, "truncnorm": 0.05}
    for d in range(6):
        for variant, offset in offsets.items():
            for fold in range(2):
                loss = offset + 0.01 * d + 0.002 * fold
                beta = None if variant == "raw" else 3.0
                gamma = 0.5 if variant == "truncnorm" else None
                rows.append([f"set{d}", "nc", variant, 0, fold, beta, gamma, None] + [loss] * len(LOSS_COLUMNS) + [0])
    return _results_frame(rows)


@pytest.fixture
def tiny_config_text():
    return "\n".join([
        "# two synthetic sets, one repetition, small grids",
        "seed = 42",
        "kind = nc",
        "dataset = synthetic:gauss2D, synthetic:lin",
        "beta = 1, 5",
        "gamma = 0.5",
        "repetitions = 1",
        "folds = 5",
        "inner_folds = 2",
        "timings = false",
    ]) + "\n"
