import logging

import numpy as np
import pytest

from rrcbench.core import Dataset, SeededRng, summarize
from rrcbench.datasets import (
    SYNTHETIC_GENERATORS,
    cfs_merit,
    cfs_select,
    csv_class_order,
    dataset_name,
    generate_synthetic,
    load_arff,
    load_csv,
    load_dataset,
    write_csv,
)

MINIMAL_ARFF = """\
% two numeric attributes and a nominal class
@RELATION toy

@ATTRIBUTE width NUMERIC
@ATTRIBUTE height REAL
@ATTRIBUTE label {a,b}

@DATA
1.0,2.0,a
1.5,2.5,a
3.0,0.5,b
3.5,1.0,b
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadArff:
    def test_iris(self, iris_path):
        ds = load_dataset(iris_path)
        summary = summarize(ds)
        assert (summary.instance_count, summary.dimensionality, summary.class_count) == (150, 4, 3)
        assert f"{summary.imbalance_ratio:.2f}" == "1.00"
        assert ds.class_names == ("Iris-setosa", "Iris-versicolor", "Iris-virginica")
        assert ds.relation_name == "iris"

    @pytest.mark.parametrize("name, expected", [
        ("iris", (150, 4, 3, "1.00")),
        ("wine", (178, 13, 3, "1.23")),
        ("wdbc", (569, 30, 2, "1.34")),
    ])
    def test_bundled_benchmark_sets(self, data_dir, name, expected):
        ds = load_dataset(str(data_dir / f"{name}.arff"))
        summary = summarize(ds)
        assert ds.dropped_rows == 0
        assert (
            summary.instance_count, summary.dimensionality, summary.class_count, f"{summary.imbalance_ratio:.2f}"
        ) == expected

    def test_minimal(self, tmp_path):
        ds = load_arff(_write(tmp_path, "toy.arff", MINIMAL_ARFF))
        assert (ds.instance_count, ds.dimensionality, ds.class_count) == (4, 2, 2)
        assert ds.feature_names == ("width", "height")
        np.testing.assert_array_equal(ds.labels, [0, 0, 1, 1])

    def test_missing_value_row_dropped(self, tmp_path, caplog):
        path = _write(tmp_path, "toy.arff", MINIMAL_ARFF + "1.0,?,a\n")
        with caplog.at_level(logging.WARNING):
            ds = load_arff(path)
        assert ds.dropped_rows == 1
        assert ds.instance_count == 4
        assert "Dropped 1 row(s)" in caplog.text

    def test_nominal_feature_one_hot(self, tmp_path):
        text = MINIMAL_ARFF.replace("@ATTRIBUTE height REAL", "@ATTRIBUTE shade {x,y,z}")
        text = text.replace("1.0,2.0,a", "1.0,x,a").replace("1.5,2.5,a", "1.5,z,a")
        text = text.replace("3.0,0.5,b", "3.0,y,b").replace("3.5,1.0,b", "3.5,z,b")
        ds = load_arff(_write(tmp_path, "shade.arff", text))
        assert ds.feature_names == ("width", "shade=x", "shade=y", "shade=z")
        np.testing.assert_array_equal(ds.features[:, 1:], [[1, 0, 0], [0, 0, 1], [0, 1, 0], [0, 0, 1]])

    def test_declared_class_without_instances(self, tmp_path, caplog):
        text = MINIMAL_ARFF.replace("{a,b}", "{a,unused,b}")
        with caplog.at_level(logging.WARNING):
            ds = load_arff(_write(tmp_path, "toy.arff", text))
        assert ds.class_names == ("a", "b")
        assert "unused" in caplog.text

    def test_class_attribute_by_name(self, tmp_path):
        text = MINIMAL_ARFF.replace("@ATTRIBUTE width NUMERIC", "@ATTRIBUTE group {g1,g2}")
        text = text.replace("1.0,2.0", "g1,2.0").replace("1.5,2.5", "g2,2.5")
        text = text.replace("3.0,0.5", "g1,0.5").replace("3.5,1.0", "g2,1.0")
        ds = load_arff(_write(tmp_path, "toy.arff", text), class_attribute="group")
        assert ds.class_names == ("g1", "g2")
        assert ds.feature_names == ("height", "label=a", "label=b")

    def test_unknown_class_attribute(self, tmp_path):
        with pytest.raises(ValueError, match="no attribute named"):
            load_arff(_write(tmp_path, "toy.arff", MINIMAL_ARFF), class_attribute="colour")

    def test_malformed_file(self, tmp_path):
        with pytest.raises(ValueError, match="bad.arff"):
            load_arff(_write(tmp_path, "bad.arff", "@RELATION x\n@ATTRIBUTE a NUMERIC\n@ATTRIBUTE c {p,q}\n@DATA\nabc,p\n"))


class TestLoadCsv:
    def test_sorted_classes_and_missing_values(self, tmp_path, caplog):
        path = _write(tmp_path, "toy.csv", "a,b,class\n1,2,pos\n3,?,neg\n5,6,neg\n7,8,pos\n")
        with caplog.at_level(logging.WARNING):
            ds = load_csv(path)
        assert ds.class_names == ("neg", "pos")
        np.testing.assert_array_equal(ds.labels, [1, 0, 1])
        assert ds.dropped_rows == 1
        assert ds.relation_name == "toy"

    def test_text_feature_one_hot(self, tmp_path):
        ds = load_csv(_write(tmp_path, "toy.csv", "colour,size,class\nred,1,y\nblue,2,n\nred,3,n\n"))
        assert ds.feature_names == ("colour=blue", "colour=red", "size")

    def test_write_then_load(self, tmp_path):
        original = generate_synthetic("gauss2D", per_class=25)
        loaded = load_csv(write_csv(original, tmp_path / "out" / "gauss2D.csv"))
        np.testing.assert_array_equal(loaded.features, original.features)
        np.testing.assert_array_equal(loaded.labels, original.labels)

    def test_write_then_load_keeps_every_bit(self, tmp_path):
        features = np.array([[0.1 + 0.2, 1 / 3], [np.nextafter(1.0, 2.0), 2.0 ** -1074], [1e300 / 7, -np.pi]])
        ds = Dataset(features=features, labels=[0, 1, 0], class_count=2, class_names=("a", "b"))
        loaded = load_csv(write_csv(ds, tmp_path / "bits.csv"))
        assert loaded.features.tobytes() == features.tobytes()

    def test_write_unsorted_class_names_as_indices(self, tmp_path):
        ds = Dataset(features=[[0.0], [1.0], [2.0]], labels=[0, 1, 1], class_count=2, class_names=("zeta", "alpha"))
        loaded = load_csv(write_csv(ds, tmp_path / "x.csv"))
        np.testing.assert_array_equal(loaded.labels, ds.labels)

    @pytest.mark.parametrize("names, expected", [
        (("1", "10", "2"), ["1", "2", "10"]),
        (("1", "2", "10"), ["1", "2", "10"]),
        (("0.5", "2"), ["0.5", "2.0"]),
        (("b", "a"), ["a", "b"]),
    ])
    def test_csv_class_order(self, names, expected):
        assert csv_class_order(names) == expected

    def test_numeric_looking_names_in_string_order_keep_labels(self, tmp_path):
        ds = Dataset(
            features=[[0.0], [1.0], [2.0], [3.0]], labels=[0, 1, 2, 1], class_count=3, class_names=("1", "10", "2"),
        )
        loaded = load_csv(write_csv(ds, tmp_path / "numeric.csv"))
        np.testing.assert_array_equal(loaded.labels, ds.labels)

    def test_numeric_names_in_numeric_order_written_as_names(self, tmp_path):
        ds = Dataset(
            features=[[0.0], [1.0], [2.0]], labels=[2, 0, 1], class_count=3, class_names=("1", "2", "10"),
        )
        loaded = load_csv(write_csv(ds, tmp_path / "numeric.csv"))
        assert loaded.class_names == ("1", "2", "10")
        np.testing.assert_array_equal(loaded.labels, ds.labels)


class TestLoadDataset:
    def test_synthetic(self):
        ds = load_dataset("synthetic:banana")
        assert ds.instance_count == 400
        assert ds.relation_name == "banana"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(str(tmp_path / "nope.arff"))

    def test_unknown_format(self, tmp_path):
        path = _write(tmp_path, "toy.txt", "a,class\n1,x\n2,y\n")
        with pytest.raises(ValueError, match="unknown dataset format"):
            load_dataset(str(path))

    def test_explicit_format(self, tmp_path):
        path = _write(tmp_path, "toy.txt", "a,class\n1,x\n2,y\n")
        assert load_dataset(str(path), fmt="csv").instance_count == 2

    def test_names(self):
        assert dataset_name("synthetic:ring2D") == "ring2D"
        assert dataset_name("data/iris.arff") == "iris"


class TestCfs:
    def test_informative_feature_selected(self):
        g = SeededRng(500, ("cfs",)).generator
        labels = g.integers(0, 2, 500)
        features = g.standard_normal((500, 5))
        features[:, 3] = labels + 0.05 * g.standard_normal(500)
        ds = Dataset(features=features, labels=labels, class_count=2)
        assert 3 in cfs_select(ds)

    def test_duplicated_feature_kept_once(self):
        g = SeededRng(7, ("cfs",)).generator
        labels = np.repeat([0, 1], 50)
        column = labels + 0.3 * g.standard_normal(100)
        ds = Dataset(features=np.column_stack([column, column]), labels=labels, class_count=2)
        assert len(cfs_select(ds)) == 1

    def test_uncorrelated_features_fall_back_to_one(self):
        labels = np.tile([0, 1, 0, 1], 2)
        features = np.column_stack([np.tile([0.0, 0.0, 1.0, 1.0], 2), np.tile([0.0, 1.0, 1.0, 0.0], 2)])
        ds = Dataset(features=features, labels=labels, class_count=2)
        assert len(cfs_select(ds)) == 1

    def test_merit(self):
        class_correlation = np.array([0.6, 0.4])
        feature_correlation = np.array([[1.0, 0.5], [0.5, 1.0]])
        assert cfs_merit([0], class_correlation, feature_correlation) == pytest.approx(0.6)
        assert cfs_merit([0, 1], class_correlation, feature_correlation) == pytest.approx(1.0 / np.sqrt(3.0))
        assert cfs_merit([], class_correlation, feature_correlation) == 0.0


class TestSynthetic:
    @pytest.mark.parametrize("name", sorted(SYNTHETIC_GENERATORS))
    def test_shape(self, name):
        ds = generate_synthetic(name)
        assert (ds.instance_count, ds.dimensionality, ds.class_count) == (400, 2, 2)
        assert np.bincount(ds.labels).min() > 50

    def test_deterministic(self):
        np.testing.assert_array_equal(generate_synthetic("spirals").features, generate_synthetic("spirals").features)

    def test_custom_stream(self):
        a = generate_synthetic("lin", per_class=10, rng=SeededRng(1))
        b = generate_synthetic("lin", per_class=10, rng=SeededRng(2))
        assert a.instance_count == 20
        assert not np.array_equal(a.features, b.features)

    def test_unknown(self):
        with pytest.raises(ValueError, match="Unknown synthetic dataset"):
            generate_synthetic("moons")
