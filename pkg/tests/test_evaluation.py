import math

import numpy as np
import pytest

from rrcbench.core import Dataset, SeededRng
from rrcbench.evaluation import (
    CRITERIA,
    DEFAULT_BETAS,
    DEFAULT_GAMMAS,
    ConfusionCounts,
    compute_losses,
    confusion_counts,
    evaluate_predictions,
    tune_raw,
    tune_scm,
)
from rrcbench.rrc import Variant


class TestComputeLosses:
    def test_perfect(self):
        report = evaluate_predictions(np.array([0, 1, 2, 1]), np.array([0, 1, 2, 1]), 3)
        assert report.as_tuple() == (0.0,) * 7

    def test_two_class_counts(self):
        report = compute_losses(ConfusionCounts(np.array([[3, 1], [2, 4]])))
        assert report.zero_one == pytest.approx(0.3)
        assert report.macro_fdr == pytest.approx(0.3)
        assert report.macro_fnr == pytest.approx(1 - (0.75 + 4 / 6) / 2)
        assert report.macro_fnr == pytest.approx(0.29167, abs=1e-5)
        assert report.macro_f1_loss == pytest.approx(1 - (6 / 9 + 8 / 11) / 2)
        assert report.micro_fdr == pytest.approx(0.3)
        assert report.micro_fnr == pytest.approx(0.3)
        assert report.micro_f1_loss == pytest.approx(0.3)

    def test_absent_class_excluded_from_macro(self):
        report = compute_losses(ConfusionCounts(np.array([[3, 2], [0, 0]])))
        assert report.macro_fdr == pytest.approx(0.0)
        assert report.macro_fnr == pytest.approx(0.4)
        assert report.zero_one == pytest.approx(0.4)

    def test_never_predicted_class_has_full_fdr(self):
        report = compute_losses(ConfusionCounts(np.array([[2, 0], [1, 0]])))
        assert report.macro_fdr == pytest.approx((1 / 3 + 1.0) / 2)
        assert report.macro_fnr == pytest.approx(0.5)

    def test_empty_counts_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            compute_losses(ConfusionCounts(np.zeros((2, 2), dtype=int)))

    def test_confusion_counts(self):
        counts = confusion_counts(np.array([0, 0, 1, 2]), np.array([0, 1, 1, 1]), 3)
        np.testing.assert_array_equal(counts.matrix, [[1, 1, 0], [0, 1, 0], [0, 1, 0]])
        assert counts.total == 4

    def test_criteria_order(self):
        report = compute_losses(ConfusionCounts(np.array([[3, 1], [2, 4]])))
        assert report.as_tuple() == tuple(getattr(report, name) for name in CRITERIA)


def test_micro_losses_equal_zero_one():
    g = SeededRng(1000, ("micro",)).generator
    for _ in range(1000):
        classes = int(g.integers(2, 11))
        matrix = g.integers(0, 20, (classes, classes))
        matrix[0, 0] += 1
        report = compute_losses(ConfusionCounts(matrix))
        assert report.micro_fdr == report.zero_one
        assert report.micro_fnr == report.zero_one
        assert report.micro_f1_loss == report.zero_one


def test_default_grids():
    assert DEFAULT_BETAS == tuple(float(b) for b in range(1, 22))
    assert len(DEFAULT_GAMMAS) == 10
    assert DEFAULT_GAMMAS[0] == 0.1 and DEFAULT_GAMMAS[-1] == 1.0


class TestTuneScm:
    def test_single_cell(self, three_blobs):
        result = tune_scm("nc", three_blobs, Variant.TRUNCNORM, SeededRng(0), betas=[4.0], gammas=[0.3], inner_folds=3)
        assert (result.beta, result.gamma, result.k) == (4.0, 0.3, None)
        assert list(result.losses) == [(4.0, 0.3, None)]

    def test_all_ties_pick_smallest_beta(self, two_blobs):
        result = tune_scm("nc", two_blobs, Variant.BETA, SeededRng(1), betas=[3.0, 1.0, 2.0], inner_folds=3)
        assert result.beta == 1.0
        assert result.gamma is None
        assert set(result.losses.values()) == {0.0}
        assert result.best_loss == 0.0

    def test_grid_shape(self, three_blobs):
        result = tune_scm(
            "knn", three_blobs, "truncnorm", SeededRng(2),
            betas=[1.0, 5.0], gammas=[0.2, 0.6], ks=[1, 3], inner_folds=3,
        )
        assert len(result.losses) == 8
        assert result.k in (1, 3)
        assert result.best_loss == min(result.losses.values())

    def test_beta_variant_has_no_gamma_axis(self, three_blobs):
        result = tune_scm("nb", three_blobs, "beta", SeededRng(3), betas=[1.0, 2.0], gammas=[0.2, 0.4], inner_folds=3)
        assert all(cell[1] is None for cell in result.losses)
        assert len(result.losses) == 2

    def test_deterministic(self, three_blobs):
        a = tune_scm("tree", three_blobs, "beta", SeededRng(4), betas=[1.0, 8.0], inner_folds=3)
        b = tune_scm("tree", three_blobs, "beta", SeededRng(4), betas=[1.0, 8.0], inner_folds=3)
        assert a == b

    def test_empty_grid(self, three_blobs):
        with pytest.raises(ValueError, match="empty"):
            tune_scm("nc", three_blobs, "beta", SeededRng(5), betas=[])

    def test_every_cell_failing(self):
        ds = Dataset(features=np.arange(8, dtype=float)[:, None] / 8, labels=[0] * 6 + [1] * 2, class_count=2)
        with pytest.raises(ValueError, match="Every hyper-parameter cell failed"):
            tune_scm("nc", ds, "beta", SeededRng(6), betas=[1.0], inner_folds=2)


class TestTuneRaw:
    def test_nothing_to_tune(self, three_blobs):
        result = tune_raw("nc", three_blobs, SeededRng(0))
        assert (result.beta, result.gamma, result.k) == (None, None, None)
        assert result.losses == {}

    def test_knn_neighbours(self, three_blobs):
        result = tune_raw("knn", three_blobs, SeededRng(1), ks=[1, 3, 5], inner_folds=3)
        assert result.k in (1, 3, 5)
        assert sorted(cell[2] for cell in result.losses) == [1, 3, 5]
        assert not any(math.isnan(v) for v in result.losses.values())
