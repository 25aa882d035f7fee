import numpy as np
import pytest

from rrcbench.baseclf import ClassifierKind
from rrcbench.core import SeededRng, SupportVector
from rrcbench.rrc import Variant
from rrcbench.scm import (
    SoftConfusionMatrix,
    ValidationBank,
    apply_confusion,
    build_bank,
    build_scm,
    confusion_conditional,
    correct_probabilities,
    corrected_posterior,
    corrected_posteriors,
    local_confusion,
    scm_decide,
)


def _bank(features, labels, probabilities, class_count=2):
    return ValidationBank(
        features=np.asarray(features, dtype=float),
        labels=np.asarray(labels),
        probabilities=np.asarray(probabilities, dtype=float),
        class_count=class_count,
    )


class TestLocalConfusion:
    def test_beta_zero_is_global_matrix(self):
        bank = _bank([[0.0], [1.0], [5.0]], [0, 1, 1], [[0.8, 0.2], [0.3, 0.7], [0.4, 0.6]])
        confusion = local_confusion(bank, np.array([2.0]), beta=0.0)
        np.testing.assert_allclose(confusion.values, [[0.8, 0.2], [0.7, 1.3]])

    def test_single_point(self):
        bank = _bank([[0.5, 0.5]], [0], [[1.0, 0.0]])
        confusion = local_confusion(bank, np.array([0.5, 0.5]), beta=3.0)
        np.testing.assert_allclose(confusion.values, [[1.0, 0.0], [0.0, 0.0]])

    def test_large_beta_isolates_collocated_point(self):
        bank = _bank([[0.0], [1.0], [2.0]], [1, 0, 0], [[0.3, 0.7], [0.9, 0.1], [0.6, 0.4]])
        confusion = local_confusion(bank, np.array([0.0]), beta=1e4)
        np.testing.assert_allclose(confusion.values, [[0.0, 0.0], [0.3, 0.7]], atol=1e-12)

    def test_weights_decay_with_distance(self):
        bank = _bank([[0.0], [0.3]], [0, 1], [[1.0, 0.0], [0.0, 1.0]])
        confusion = local_confusion(bank, np.array([0.0]), beta=2.0)
        assert confusion.values[0, 0] == pytest.approx(1.0)
        assert confusion.values[1, 1] == pytest.approx(np.exp(-2.0 * 0.09))

    def test_far_from_error_region_is_diagonal(self):
        # the classifier is wrong around x = 0 and right around x = 1
        g = SeededRng(21, ("locality",)).generator
        wrong = g.uniform(-0.05, 0.05, 20)
        right = 1.0 + g.uniform(-0.05, 0.05, 20)
        labels = np.tile([0, 1], 20)
        one_hot = np.eye(2)[labels]
        bank = _bank(
            np.concatenate([wrong, right])[:, None],
            labels,
            np.vstack([one_hot[:20, ::-1], one_hot[20:]]),
        )
        beta = 30.0
        assert np.exp(-beta * 0.8 ** 2) < 1e-6
        far = local_confusion(bank, np.array([1.0]), beta=beta).conditional()
        assert far[0, 1] < 1e-3 and far[1, 0] < 1e-3
        near = local_confusion(bank, np.array([0.0]), beta=beta).conditional()
        assert near[0, 1] > 0.999 and near[1, 0] > 0.999

    def test_dimension_mismatch(self):
        bank = _bank([[0.0, 0.0]], [0], [[1.0, 0.0]])
        with pytest.raises(ValueError, match="Dimensionality mismatch"):
            local_confusion(bank, np.array([0.0]), beta=1.0)

    def test_degenerate(self):
        assert SoftConfusionMatrix(np.zeros((2, 2))).degenerate
        assert not SoftConfusionMatrix(np.eye(2)).degenerate


class TestConditional:
    def test_column_normalised(self):
        conditional = confusion_conditional(np.array([[9.0, 1.0], [1.0, 4.0]]))
        np.testing.assert_allclose(conditional, [[0.9, 0.2], [0.1, 0.8]])

    def test_empty_column_becomes_identity(self):
        conditional = confusion_conditional(np.array([[2.0, 0.0], [1.0, 0.0]]))
        np.testing.assert_allclose(conditional[:, 1], [0.0, 1.0])

    def test_batched(self):
        stacked = np.stack([np.eye(2), np.ones((2, 2))])
        np.testing.assert_allclose(confusion_conditional(stacked)[1], np.full((2, 2), 0.5))


class TestApplyConfusion:
    def test_known_product(self):
        posterior = apply_confusion(np.array([0.6, 0.4]), np.array([[0.9, 0.2], [0.1, 0.8]]))
        np.testing.assert_allclose(posterior, [0.62, 0.38])

    def test_diagonal_keeps_prior(self):
        prior = np.array([0.5, 0.3, 0.2])
        assert np.max(np.abs(apply_confusion(prior, np.eye(3)) - prior)) <= 1e-12

    def test_uniform_confusion_gives_uniform_posterior(self):
        posterior = apply_confusion(np.array([0.7, 0.2, 0.1]), confusion_conditional(np.ones((3, 3))))
        np.testing.assert_allclose(posterior, 1 / 3)

    def test_correct_probabilities_with_diagonal_bank(self):
        bank = _bank([[0.0], [1.0]], [0, 1], [[1.0, 0.0], [0.0, 1.0]])
        prior = np.array([[0.55, 0.45], [0.2, 0.8]])
        corrected = correct_probabilities(bank, prior, np.array([[0.0, 1.0], [0.25, 0.25]]), beta=5.0)
        assert np.max(np.abs(corrected - prior)) <= 1e-12


class TestScmClassifier:
    def test_bank_from_separable_data(self, two_blobs):
        base, bank = build_bank(ClassifierKind.KNN, two_blobs, Variant.BETA, k=1, rng=SeededRng(0))
        assert bank.size == two_blobs.instance_count
        np.testing.assert_array_equal(bank.probabilities.argmax(axis=1), two_blobs.labels)
        assert base.kind is ClassifierKind.KNN

    @pytest.mark.parametrize("variant", list(Variant))
    def test_end_to_end(self, variant, two_blobs):
        scm = build_scm("nc", two_blobs, variant, beta=3.0, gamma=0.5, rng=SeededRng(1))
        assert isinstance(corrected_posterior(scm, np.array([0.25, 0.25])), SupportVector)
        assert scm_decide(scm, np.array([0.2, 0.25])) == 0
        assert scm_decide(scm, np.array([0.8, 0.75])) == 1

    def test_posteriors_are_valid(self, three_blobs):
        scm = build_scm("tree", three_blobs, "truncnorm", beta=5.0, gamma=0.3, rng=SeededRng(2))
        posteriors = corrected_posteriors(scm, three_blobs.features[::5])
        assert posteriors.shape == (9, 3)
        np.testing.assert_allclose(posteriors.sum(axis=1), 1.0)
        assert posteriors.min() >= 0.0

    def test_deterministic(self, three_blobs):
        a = corrected_posteriors(build_scm("nb", three_blobs, "beta", 2.0, rng=SeededRng(3)), three_blobs.features)
        b = corrected_posteriors(build_scm("nb", three_blobs, "beta", 2.0, rng=SeededRng(3)), three_blobs.features)
        np.testing.assert_array_equal(a, b)
