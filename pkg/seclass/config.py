"""
SecClass - Experiment Configuration
TOML experiment files, the ExperimentConfig they describe, and the
canonical-JSON hash that identifies a configuration in run manifests.

Example file:

    name = "acess-synthetic"
    method = "acess"
    out_dir = "runs/acess"
    ratios = [0.6, 0.2, 0.2]

    [seeds]
    split = 1
    model = 2
    cluster = 3
    topics = 4
    synthetic = 5

    [data.synthetic]
    n_documents = 1000
    paragraphs_per_document = [2, 4]

    [acess]
    cluster_divisor = 200

Every seed is mandatory; there are no wall-clock defaults.

MIT License - SecClass contributors, 2026
"""

import hashlib
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

from seclass.acess import AcessConfig
from seclass.errors import ConfigError
from seclass.features import VectorizerConfig
from seclass.models import GridSpec
from seclass.synthetic import SyntheticSpec
from seclass.topics import PruneConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

METHODS = ("baseline_nb", "baseline_svm", "baseline_logreg", "prune_logreg", "acess")
SEED_NAMES = ("split", "model", "cluster", "topics")


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(data: Mapping) -> str:
    """SHA-256 over the canonical JSON form."""
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


def load_toml(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}", path=str(path))
    try:
        with path.open("rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Invalid TOML in {path}: {e}", path=str(path)) from e


@dataclass(frozen=True)
class RunSeeds:
    split: int
    model: int
    cluster: int
    topics: int
    synthetic: Optional[int] = None

    def to_dict(self) -> Dict[str, Optional[int]]:
        return {
            "split": self.split, "model": self.model, "cluster": self.cluster,
            "topics": self.topics, "synthetic": self.synthetic,
        }

    @classmethod
    def from_dict(cls, data: Mapping, need_synthetic: bool = False) -> "RunSeeds":
        required = SEED_NAMES + (("synthetic",) if need_synthetic else ())
        missing = [name for name in required if data.get(name) is None]
        if missing:
            raise ConfigError(f"Missing seeds: {missing}; every seed must be set explicitly",
                              missing=missing)
        unknown = set(data) - set(SEED_NAMES) - {"synthetic"}
        if unknown:
            raise ConfigError(f"Unknown seed names: {sorted(unknown)}")
        values = {}
        for name, value in data.items():
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"Seed {name} must be an integer, got {value!r}")
            values[name] = value
        return cls(**values)


@dataclass(frozen=True)
class ExperimentConfig:
    """One method over one dataset (corpus manifest, split directory or generator spec)."""
    name: str
    method: str
    seeds: RunSeeds
    out_dir: Path
    corpus: Optional[Path] = None
    splits: Optional[Path] = None
    synthetic: Optional[SyntheticSpec] = None
    origins: Tuple[str, ...] = ()
    ratios: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    grid: GridSpec = field(default_factory=GridSpec)
    features: VectorizerConfig = field(default_factory=VectorizerConfig)
    acess: AcessConfig = field(default_factory=AcessConfig)
    prune: PruneConfig = field(default_factory=PruneConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"Unknown method {self.method!r}; expected one of {METHODS}")
        sources = [s for s in (self.corpus, self.splits, self.synthetic) if s is not None]
        if len(sources) != 1:
            raise ConfigError("Exactly one of data.corpus, data.splits or data.synthetic must be set")
        if self.synthetic is not None and self.seeds.synthetic is None:
            raise ConfigError("Synthetic data needs seeds.synthetic")
        if len(self.ratios) != 3:
            raise ConfigError(f"ratios needs three values, got {self.ratios}")

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def seeded_acess(self) -> AcessConfig:
        return replace(self.acess, kmeans_seed=self.seeds.cluster, model_seed=self.seeds.model)

    def seeded_prune(self) -> PruneConfig:
        return replace(self.prune, seed=self.seeds.topics)

    def seeded_synthetic(self) -> Optional[SyntheticSpec]:
        if self.synthetic is None:
            return None
        return replace(self.synthetic, seed=self.seeds.synthetic)

    def to_dict(self) -> dict:
        synthetic = self.seeded_synthetic()
        return {
            "name": self.name,
            "method": self.method,
            "seeds": self.seeds.to_dict(),
            "out_dir": str(self.out_dir),
            "data": {
                "corpus": str(self.corpus) if self.corpus else None,
                "splits": str(self.splits) if self.splits else None,
                "synthetic": synthetic.to_dict() if synthetic else None,
                "origins": list(self.origins),
            },
            "ratios": list(self.ratios),
            "grid": self.grid.to_dict(),
            "features": self.features.to_dict(),
            "acess": self.seeded_acess().to_dict(),
            "prune": self.seeded_prune().to_dict(),
        }

    def to_hash(self) -> str:
        """Identifies the experiment; the output directory does not take part."""
        data = self.to_dict()
        data.pop("out_dir")
        return config_hash(data)

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        base_dir = Path(base_dir) if base_dir else Path.cwd()
        known = {"name", "method", "seeds", "out_dir", "data", "ratios", "grid", "features", "acess", "prune"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        if "method" not in data:
            raise ConfigError("Config needs a method")

        source = dict(data.get("data", {}))
        synthetic = source.get("synthetic")
        if isinstance(synthetic, Mapping):
            spec_values = {k: v for k, v in synthetic.items() if k != "seed"}
            synthetic_spec: Optional[SyntheticSpec] = SyntheticSpec.from_dict(spec_values)
        elif synthetic:
            synthetic_spec = SyntheticSpec()
        else:
            synthetic_spec = None

        def _path(value) -> Optional[Path]:
            if not value:
                return None
            path = Path(value)
            return path if path.is_absolute() else base_dir / path

        features = dict(data.get("features", {}))
        if "ngram_range" in features:
            features["ngram_range"] = tuple(features["ngram_range"])
        return cls(
            name=str(data.get("name", data["method"])),
            method=data["method"],
            seeds=RunSeeds.from_dict(data.get("seeds", {}), need_synthetic=synthetic_spec is not None),
            out_dir=_path(data.get("out_dir", f"runs/{data['method']}")),
            corpus=_path(source.get("corpus")),
            splits=_path(source.get("splits")),
            synthetic=synthetic_spec,
            origins=tuple(source.get("origins", ())),
            ratios=tuple(float(r) for r in data.get("ratios", (0.6, 0.2, 0.2))),
            grid=GridSpec.from_dict(data["grid"]) if "grid" in data else GridSpec(),
            features=VectorizerConfig.from_dict(features),
            acess=AcessConfig.from_dict(data["acess"]) if "acess" in data else AcessConfig(),
            prune=PruneConfig.from_dict(data["prune"]) if "prune" in data else PruneConfig(),
        )

    @classmethod
    def from_toml(cls, path: Path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(load_toml(path), base_dir=path.parent)
