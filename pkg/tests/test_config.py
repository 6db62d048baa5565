"""Tests for SecClass experiment configuration."""

from pathlib import Path

import pytest

from seclass.config import (
    METHODS,
    ExperimentConfig,
    RunSeeds,
    canonical_json,
    config_hash,
    load_toml,
)
from seclass.corpus import SecurityClass
from seclass.errors import BadSpec, ConfigError
from seclass.synthetic import SyntheticSpec

EXAMPLE = """
name = "acess-synthetic"
method = "acess"
out_dir = "runs/acess"
ratios = [0.7, 0.15, 0.15]

[seeds]
split = 1
model = 2
cluster = 3
topics = 4
synthetic = 5

[data.synthetic]
n_documents = 40
paragraphs_per_document = [2, 4]

[features]
ngram_range = [1, 2]

[grid]
svm_cost = [0.1, 1.0]
max_features = [500, "all"]

[acess]
cluster_divisor = 100

[prune]
iterations = 50
threshold_overrides = { C = [0.1, 0.6] }
"""

SEEDS = {"split": 1, "model": 2, "cluster": 3, "topics": 4}


@pytest.fixture
def example_file(tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text(EXAMPLE)
    return path


class TestLoadToml:
    """Tests for reading experiment files."""

    def test_full_example(self, example_file):
        """Test that every section lands in the config."""
        config = ExperimentConfig.from_toml(example_file)
        assert config.name == "acess-synthetic"
        assert config.method == "acess"
        assert config.out_dir == example_file.parent / "runs/acess"
        assert config.ratios == (0.7, 0.15, 0.15)
        assert config.seeds == RunSeeds(1, 2, 3, 4, 5)
        assert config.synthetic.n_documents == 40
        assert config.synthetic.paragraphs_per_document == (2, 4)
        assert config.features.ngram_range == (1, 2)
        assert config.grid.svm_cost == (0.1, 1.0)
        assert config.grid.max_features == (500, None)
        assert config.acess.cluster_divisor == 100
        assert config.prune.iterations == 50
        assert config.prune.threshold_overrides == {SecurityClass.C: (0.1, 0.6)}

    def test_seeds_applied(self, example_file):
        """Test that run seeds override the component seeds."""
        config = ExperimentConfig.from_toml(example_file)
        assert config.seeded_acess().kmeans_seed == 3
        assert config.seeded_acess().model_seed == 2
        assert config.seeded_prune().seed == 4
        assert config.seeded_synthetic().seed == 5

    def test_missing_file(self, tmp_path):
        """Test that a missing file raises ConfigError."""
        with pytest.raises(ConfigError):
            load_toml(tmp_path / "nope.toml")

    def test_invalid_toml(self, tmp_path):
        """Test that broken TOML raises ConfigError."""
        path = tmp_path / "broken.toml"
        path.write_text("method = \n")
        with pytest.raises(ConfigError):
            load_toml(path)


class TestExperimentConfig:
    """Tests for validation and hashing."""

    def test_missing_seed(self):
        """Test that every seed must be given."""
        with pytest.raises(ConfigError) as exc:
            ExperimentConfig.from_dict({"method": "baseline_nb", "seeds": {"split": 1}, "data": {"corpus": "c.jsonl"}})
        assert exc.value.context["missing"] == ["model", "cluster", "topics"]

    def test_synthetic_needs_its_seed(self):
        """Test that generated data needs seeds.synthetic."""
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"method": "acess", "seeds": SEEDS, "data": {"synthetic": {}}})

    def test_bool_seed_rejected(self):
        """Test that seeds must be integers."""
        with pytest.raises(ConfigError):
            RunSeeds.from_dict({**SEEDS, "split": True})

    @pytest.mark.parametrize("data", [
        {},
        {"corpus": "c.jsonl", "splits": "splits"},
        {"corpus": "c.jsonl", "synthetic": {"n_documents": 5}},
    ])
    def test_exactly_one_source(self, data):
        """Test that exactly one data source is required."""
        seeds = {**SEEDS, "synthetic": 1}
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"method": "baseline_nb", "seeds": seeds, "data": data})

    def test_unknown_method(self):
        """Test that methods outside the list raise ConfigError."""
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"method": "bert", "seeds": SEEDS, "data": {"corpus": "c.jsonl"}})

    def test_unknown_key(self):
        """Test that unknown top-level keys raise ConfigError."""
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"method": "acess", "epochs": 3})

    def test_bad_synthetic_spec(self):
        """Test that generator errors surface as BadSpec."""
        with pytest.raises(BadSpec):
            ExperimentConfig.from_dict({
                "method": "acess", "seeds": {**SEEDS, "synthetic": 1},
                "data": {"synthetic": {"n_groups": 0}},
            })

    def test_relative_paths_resolved(self, tmp_path):
        """Test that relative data paths are resolved against the base directory."""
        config = ExperimentConfig.from_dict(
            {"method": "baseline_svm", "seeds": SEEDS, "data": {"splits": "splits/berlin"}}, base_dir=tmp_path,
        )
        assert config.splits == tmp_path / "splits/berlin"
        assert config.out_dir == tmp_path / "runs/baseline_svm"
        assert config.name == "baseline_svm"

    def test_hash_ignores_out_dir(self):
        """Test that moving the output directory keeps the config hash."""
        base = ExperimentConfig(
            name="x", method="acess", seeds=RunSeeds(1, 2, 3, 4, 5), out_dir=Path("a"),
            synthetic=SyntheticSpec(n_documents=10),
        )
        assert base.to_hash() == base.with_overrides(out_dir=Path("b")).to_hash()
        assert base.to_hash() != base.with_overrides(method="baseline_nb").to_hash()
        assert base.to_hash() != base.with_overrides(seeds=RunSeeds(1, 2, 3, 4, 6)).to_hash()

    def test_with_overrides_skips_none(self):
        """Test that None overrides leave fields alone."""
        base = ExperimentConfig(
            name="x", method="acess", seeds=RunSeeds(1, 2, 3, 4), out_dir=Path("a"), corpus=Path("c.jsonl"),
        )
        assert base.with_overrides(method=None, out_dir=Path("b")).method == "acess"

    def test_methods(self):
        """Test the supported method names."""
        assert set(METHODS) == {"baseline_nb", "baseline_svm", "baseline_logreg", "prune_logreg", "acess"}


class TestCanonicalJson:
    """Tests for the canonical JSON hash."""

    def test_key_order_irrelevant(self):
        """Test that key order does not change the hash."""
        assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
        assert canonical_json({"b": 1, "a": 2}) == '{"a":2,"b":1}'

    def test_hex_digest(self):
        """Test the digest format."""
        digest = config_hash({})
        assert len(digest) == 64
        assert int(digest, 16) >= 0


class TestShippedConfigs:
    """Tests for the example experiment files under configs/."""

    @pytest.mark.parametrize("name", ["acess.toml", "prune_logreg.toml"])
    def test_loads(self, name):
        """Test that each shipped config validates."""
        path = Path(__file__).parent.parent / "configs" / name
        config = ExperimentConfig.from_toml(path)
        assert config.method in METHODS
        assert config.synthetic is not None
        assert config.seeds.synthetic == 5
