import pytest

from rrcbench.campaign import RESULTS_FILE, read_results
from rrcbench.cli import main
from rrcbench.report import build_comparisons


@pytest.fixture
def results_dir(results_frame, tmp_path):
    directory = tmp_path / "results"
    directory.mkdir()
    results_frame.to_csv(directory / RESULTS_FILE, index=False)
    return directory


class TestData:
    def test_info_iris(self, iris_path, capsys):
        assert main(["data", "info", iris_path]) == 0
        out = capsys.readouterr().out
        assert "iris" in out
        for value in ("150", "4", "3", "1.00"):
            assert value in out

    def test_info_bundled_sets(self, data_dir, capsys):
        assert main(["data", "info", str(data_dir / "wine.arff"), str(data_dir / "wdbc.arff")]) == 0
        out = capsys.readouterr().out
        for value in ("wine", "178", "13", "1.23", "wdbc", "569", "30", "1.34"):
            assert value in out

    def test_info_missing_file(self, tmp_path, capsys):
        assert main(["data", "info", str(tmp_path / "none.arff"), "synthetic:lin"]) == 1
        assert "lin" in capsys.readouterr().out

    def test_generate(self, tmp_path):
        assert main(["data", "generate", str(tmp_path), "--names", "banana", "ring2D"]) == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["banana.csv", "ring2D.csv"]
        assert main(["data", "info", str(tmp_path / "banana.csv")]) == 0

    def test_unknown_synthetic_name(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["data", "generate", str(tmp_path), "--names", "moons"])
        assert exc.value.code == 2


class TestBench:
    def test_run_bad_config(self, tmp_path):
        path = tmp_path / "bad.conf"
        path.write_text("dataset = synthetic:lin\n", encoding="utf-8")
        with pytest.raises(SystemExit) as exc:
            main(["bench", "run", str(path)])
        assert exc.value.code == 2

    def test_run_missing_config(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["bench", "run", str(tmp_path / "missing.conf")])

    def test_run(self, tmp_path, iris_path):
        config = tmp_path / "configs" / "run.conf"
        config.parent.mkdir()
        (tmp_path / "data").mkdir()
        (tmp_path / "data" / "iris.arff").write_bytes(open(iris_path, "rb").read())
        config.write_text(
            "seed = 5\nkind = nc\ndataset = ../data/iris.arff\nbeta = 2\ngamma = 0.5\n"
            "repetitions = 1\nfolds = 2\ninner_folds = 2\ntimings = false\n",
            encoding="utf-8",
        )
        out = tmp_path / "out"
        assert main(["bench", "run", str(config), "--output", str(out)]) == 0
        results = read_results(out)
        assert set(results["dataset"]) == {"iris"}
        assert len(results) == 6

    def test_run_with_failures(self, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("seed = 5\ndataset = nowhere.csv\n", encoding="utf-8")
        assert main(["bench", "run", str(config), "--output", str(tmp_path / "out")]) == 1

    def test_summarize(self, results_dir, capsys):
        assert main(["bench", "summarize", str(results_dir)]) == 0
        assert "Mean losses" in capsys.readouterr().out
        assert (results_dir / "tables" / "nc" / "zero_one.csv").exists()

    def test_compare(self, results_dir, tmp_path):
        assert main(["bench", "compare", str(results_dir / RESULTS_FILE), "--output", str(tmp_path / "reports")]) == 0
        assert (tmp_path / "reports" / "comparison_nc.csv").exists()
        assert (tmp_path / "reports" / "comparison_nc.html").exists()

    def test_radar(self, results_dir):
        assert main(["bench", "radar", str(results_dir)]) == 0
        assert "data-variant" in (results_dir / "radar_nc.svg").read_text(encoding="utf-8")

    @pytest.mark.slow
    def test_small_campaign_on_real_data(self, tmp_path, data_dir):
        config = tmp_path / "small.conf"
        config.write_text(
            f"seed = 11\nkind = nc\ndataset = {data_dir / 'wine.arff'}, synthetic:ring2D, synthetic:check2D\n"
            "beta = 10, 40\ngamma = 0.5\nrepetitions = 1\nfolds = 3\ninner_folds = 2\ntimings = false\n",
            encoding="utf-8",
        )
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(["bench", "run", str(config), "--output", str(first)]) == 0
        assert main(["bench", "run", str(config), "--output", str(second)]) == 0
        assert (first / RESULTS_FILE).read_bytes() == (second / RESULTS_FILE).read_bytes()

        (report,) = build_comparisons(read_results(first))
        assert report.datasets == ("check2D", "ring2D", "wine")
        zero_one = next(c for c in report.comparisons if c.criterion == "zero_one")
        ranks = dict(zip(zero_one.classifiers, zero_one.average_ranks))
        assert ranks["raw"] > (ranks["beta"] + ranks["truncnorm"]) / 2
