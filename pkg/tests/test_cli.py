"""Tests for the SecClass command line interface."""

import json
import logging

import pytest

from seclass import __version__
from seclass.cli import create_parser, main
from seclass.corpus import SecurityClass, iter_paragraphs, read_corpus_jsonl, write_corpus_jsonl
from seclass.synthetic import SyntheticSpec, generate_synthetic_corpus

RUN_CONFIG = """
name = "nb"
method = "baseline_nb"

[seeds]
split = 1
model = 2
cluster = 3
topics = 4

[data]
corpus = "corpus.jsonl"

[grid]
nb_alpha = [1.0]
svm_cost = [1.0]
logreg_strength = [0.01]
max_features = ["all"]
normalization = ["l2"]
"""


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    package_logger = logging.getLogger("seclass")
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)
        handler.close()
    package_logger.setLevel(logging.NOTSET)
    package_logger.propagate = True


@pytest.fixture
def corpus_file(tmp_path):
    assert main(["synth", "--out", str(tmp_path / "corpus.jsonl"), "--documents", "40", "--seed", "3"]) == 0
    return tmp_path / "corpus.jsonl"


def error_record(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestParser:
    """Tests for argument parsing."""

    def test_no_command_prints_help(self, capsys):
        """Test that no command prints help and succeeds."""
        assert main([]) == 0
        assert "seclass" in capsys.readouterr().out

    def test_version(self, capsys):
        """Test --version."""
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_seed_required(self):
        """Test that split refuses to run without a seed."""
        with pytest.raises(SystemExit) as exc:
            create_parser().parse_args(["split", "--corpus", "c.jsonl", "--out-dir", "out"])
        assert exc.value.code == 2

    def test_ratios_parsed(self):
        """Test the comma-separated ratios option."""
        args = create_parser().parse_args(
            ["split", "--corpus", "c.jsonl", "--ratios", "0.5,0.25,0.25", "--seed", "1", "--out-dir", "out"]
        )
        assert args.ratios == [0.5, 0.25, 0.25]

    def test_bad_ratios_text(self):
        """Test that non-numeric ratios are a usage error."""
        with pytest.raises(SystemExit) as exc:
            create_parser().parse_args(
                ["split", "--corpus", "c.jsonl", "--ratios", "half,half", "--seed", "1", "--out-dir", "out"]
            )
        assert exc.value.code == 2

    def test_topics_needs_one_source(self):
        """Test that topics takes exactly one of --corpus and --splits."""
        with pytest.raises(SystemExit):
            create_parser().parse_args(["topics", "--seed", "1", "--out", "t"])


class TestPriors:
    """Tests for 'seclass priors'."""

    def test_exact_table(self, capsys):
        """Test the exact prior table."""
        assert main(["priors", "--max-n", "3", "--exact"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["n", "Pr(U)", "Pr(C)", "Pr(S)"]
        assert lines[2].split() == ["2", "1/9", "1/3", "5/9"]
        assert len(lines) == 4

    def test_float_table(self, capsys):
        """Test the decimal prior table."""
        assert main(["priors", "--max-n", "1"]) == 0
        assert capsys.readouterr().out.splitlines()[1].split() == ["1", "0.333333", "0.333333", "0.333333"]

    def test_paragraph_prior(self, capsys):
        """Test a skewed paragraph prior."""
        assert main(["priors", "--max-n", "1", "--paragraph-prior", "0.5,0.3,0.2", "--exact"]) == 0
        assert capsys.readouterr().out.splitlines()[1].split() == ["1", "1/2", "3/10", "1/5"]

    def test_paragraph_prior_needs_three_values(self):
        """Test that two prior values are a usage error."""
        with pytest.raises(SystemExit) as exc:
            main(["priors", "--paragraph-prior", "0.5,0.5"])
        assert exc.value.code == 2

    def test_bad_n(self, capsys):
        """Test that n < 1 exits with the configuration error code."""
        assert main(["priors", "--max-n", "0"]) == 2
        assert error_record(capsys)["error"] == "BadN"


class TestCorpusCommands:
    """Tests for synth, ingest and split."""

    def test_synth(self, corpus_file):
        """Test that synth writes a corpus manifest."""
        paragraphs = read_corpus_jsonl(corpus_file)
        assert paragraphs
        assert {p.label for p in paragraphs} <= set(SecurityClass)

    def test_synth_then_ingest(self, tmp_path, capsys):
        """Test that generated cable files ingest to the same paragraphs."""
        assert main([
            "synth", "--out", str(tmp_path / "a.jsonl"), "--documents", "12", "--seed", "4",
            "--cables-dir", str(tmp_path / "cables"),
        ]) == 0
        assert main(["ingest", "--in", str(tmp_path / "cables"), "--out", str(tmp_path / "b.jsonl")]) == 0
        generated = read_corpus_jsonl(tmp_path / "a.jsonl")
        ingested = read_corpus_jsonl(tmp_path / "b.jsonl")
        assert [(p.text, p.label) for p in ingested] == [(p.text, p.label) for p in generated]
        assert "Ingested 12 cables" in capsys.readouterr().out

    def test_ingest_empty_directory(self, tmp_path, capsys):
        """Test that an empty directory exits with the data error code."""
        (tmp_path / "empty").mkdir()
        assert main(["ingest", "--in", str(tmp_path / "empty"), "--out", str(tmp_path / "c.jsonl")]) == 3
        record = error_record(capsys)
        assert record["family"] == "DataError"
        assert record["exit_code"] == 3

    def test_split(self, tmp_path, corpus_file, capsys):
        """Test writing a split directory."""
        assert main(["split", "--corpus", str(corpus_file), "--seed", "1", "--out-dir", str(tmp_path / "s")]) == 0
        for name in ("train.jsonl", "validation.jsonl", "test.jsonl", "split.json"):
            assert (tmp_path / "s" / name).exists()
        assert "train:" in capsys.readouterr().out

    def test_split_bad_ratios(self, tmp_path, corpus_file, capsys):
        """Test that ratios not summing to one exit with code 2."""
        code = main([
            "split", "--corpus", str(corpus_file), "--ratios", "0.5,0.5,0.5", "--seed", "1",
            "--out-dir", str(tmp_path / "s"),
        ])
        assert code == 2
        assert error_record(capsys)["error"] == "BadRatios"

    def test_split_missing_corpus(self, tmp_path):
        """Test that a missing corpus exits with code 3."""
        code = main(["split", "--corpus", str(tmp_path / "none.jsonl"), "--seed", "1", "--out-dir", str(tmp_path)])
        assert code == 3


class TestExperimentCommands:
    """Tests for run and compare."""

    def test_run_and_compare(self, tmp_path, corpus_file, capsys):
        """Test two runs on one split and their comparison."""
        config = tmp_path / "nb.toml"
        config.write_text(RUN_CONFIG)
        assert main(["run", "--config", str(config), "--out", str(tmp_path / "runs/nb")]) == 0
        assert "Paragraph macro-F1" in capsys.readouterr().out
        assert main([
            "run", "--config", str(config), "--method", "baseline_svm", "--out", str(tmp_path / "runs/svm"),
        ]) == 0
        capsys.readouterr()
        assert main([
            "compare", str(tmp_path / "runs/nb"), str(tmp_path / "runs/svm"), "--csv", str(tmp_path / "t.csv"),
        ]) == 0
        table = capsys.readouterr().out.splitlines()
        assert table[0].split() == ["run", "S", "C", "U", "macro"]
        assert len(table) == 3
        assert (tmp_path / "t.csv").exists()

    def test_run_on_splits(self, tmp_path, corpus_file):
        """Test that --splits replaces the configured data source."""
        assert main(["split", "--corpus", str(corpus_file), "--seed", "2", "--out-dir", str(tmp_path / "s")]) == 0
        config = tmp_path / "nb.toml"
        config.write_text(RUN_CONFIG.replace('corpus = "corpus.jsonl"', 'corpus = "elsewhere.jsonl"'))
        code = main([
            "run", "--config", str(config), "--splits", str(tmp_path / "s"), "--out", str(tmp_path / "runs/nb"),
        ])
        assert code == 0
        assert (tmp_path / "runs/nb/manifest.json").exists()

    def test_run_missing_seed(self, tmp_path, capsys):
        """Test that a config without every seed exits with code 2."""
        config = tmp_path / "bad.toml"
        config.write_text(RUN_CONFIG.replace("topics = 4\n", ""))
        assert main(["run", "--config", str(config)]) == 2
        assert error_record(capsys)["context"]["missing"] == ["topics"]

    def test_compare_mismatched_splits(self, tmp_path, corpus_file, capsys):
        """Test that runs on different splits exit with the data error code."""
        config = tmp_path / "nb.toml"
        config.write_text(RUN_CONFIG)
        other = tmp_path / "nb9.toml"
        other.write_text(RUN_CONFIG.replace("split = 1", "split = 9"))
        assert main(["run", "--config", str(config), "--out", str(tmp_path / "a")]) == 0
        assert main(["run", "--config", str(other), "--out", str(tmp_path / "b")]) == 0
        assert main(["compare", str(tmp_path / "a"), str(tmp_path / "b")]) == 3
        assert error_record(capsys)["error"] == "SplitMismatch"


class TestTopicsCommand:
    """Tests for 'seclass topics'."""

    def test_topics_without_confidential(self, tmp_path, capsys):
        """Test a corpus with no Confidential paragraphs, where nothing can be flagged."""
        spec = SyntheticSpec(n_documents=30, mixture={SecurityClass.U: 0.5, SecurityClass.S: 0.5}, seed=6)
        write_corpus_jsonl(iter_paragraphs(generate_synthetic_corpus(spec)), tmp_path / "corpus.jsonl")
        code = main([
            "topics", "--corpus", str(tmp_path / "corpus.jsonl"), "--seed", "1", "--k-main", "3",
            "--iterations", "5", "--top-words", "4", "--out", str(tmp_path / "topics"),
        ])
        assert code == 0
        assert "Removed:           0" in capsys.readouterr().out
        report = json.loads((tmp_path / "topics/topics_main.json").read_text())
        assert report["K"] == 3
        assert (tmp_path / "topics/removals.csv").read_text() == "paragraph_id,pass,topic,pair\n"
