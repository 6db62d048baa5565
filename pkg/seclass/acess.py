"""
SecClass - ACESS Engine
Partitioned per-cluster classification: cluster the training
paragraphs in a similarity space, route validation and test paragraphs
to their nearest training cluster, grid-search one classifier per
cluster on its own validation bucket, and pool the test predictions.

MIT License - SecClass contributors, 2026
"""

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from seclass.clustering import (
    ClusterModel,
    assign_many,
    default_cluster_count,
    fit_kmeans,
    write_cluster_model,
    write_partitions,
)
from seclass.corpus import DataSplit, Paragraph, SecurityClass, group_by_document
from seclass.errors import AllTrainingsFailed, ConfigError, EmptyTrainingSet, NoTermsSurvive, SingleClassCorpus
from seclass.features import VectorizerConfig, build_vocabulary, vectorize_many
from seclass.logs import stage
from seclass.metrics import ConfusionMatrix, EvalReport, document_level_eval, f1_per_class
from seclass.models import (
    MODEL_KINDS,
    GridSpec,
    TrainedClassifier,
    constant_classifier,
    fit_grid_point,
    grid_search,
    predict_texts,
)

logger = logging.getLogger(__name__)

# Security features: document frequency, unigrams + bigrams, top 1000.
SECURITY_FEATURES = VectorizerConfig(
    weighting="doc_frequency", ngram_range=(1, 2), max_features=1000,
    normalization="l2", alphabetic_only=True,
)

# Per-cluster grids only vary the classifier's own hyperparameter.
ACESS_GRID = GridSpec(max_features=(1000,), normalization=("l2",))


@dataclass(frozen=True)
class AcessConfig:
    cluster_divisor: int = 200
    n_clusters: Optional[int] = None
    similarity_top_k: int = 1000
    security_features: VectorizerConfig = SECURITY_FEATURES
    classifier: str = "linear_svm"
    grid: GridSpec = ACESS_GRID
    kmeans_seed: int = 0
    model_seed: int = 0
    max_iter: int = 300
    tol: float = 1e-6
    workers: int = 1
    class_weights: Optional[str] = "balanced"

    def __post_init__(self):
        if self.cluster_divisor < 1 or self.similarity_top_k < 1 or self.workers < 1:
            raise ConfigError("cluster_divisor, similarity_top_k and workers must be >= 1")
        if self.n_clusters is not None and self.n_clusters < 1:
            raise ConfigError(f"n_clusters must be >= 1, got {self.n_clusters}")
        if self.classifier not in MODEL_KINDS:
            raise ConfigError(f"Unknown classifier {self.classifier!r}; expected one of {MODEL_KINDS}")

    @property
    def similarity_features(self) -> VectorizerConfig:
        """TF-IDF unigrams, top-K with ties, no normalization."""
        return VectorizerConfig(
            weighting="tfidf", ngram_range=(1,), max_features=self.similarity_top_k,
            normalization="none", alphabetic_only=True,
        )

    def to_dict(self) -> dict:
        return {
            "cluster_divisor": self.cluster_divisor,
            "n_clusters": self.n_clusters,
            "similarity_top_k": self.similarity_top_k,
            "security_features": self.security_features.to_dict(),
            "classifier": self.classifier,
            "grid": self.grid.to_dict(),
            "kmeans_seed": self.kmeans_seed,
            "model_seed": self.model_seed,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "workers": self.workers,
            "class_weights": self.class_weights,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "AcessConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown acess keys: {sorted(unknown)}")
        values = dict(data)
        if "security_features" in values:
            values["security_features"] = VectorizerConfig.from_dict(values["security_features"])
        if "grid" in values:
            values["grid"] = GridSpec.from_dict(values["grid"])
        return cls(**values)


@dataclass
class ClusterResult:
    index: int
    n_train: int
    n_validation: int
    n_test: int
    classes: Tuple[SecurityClass, ...]
    hyperparameters: Dict[str, object] = field(default_factory=dict)
    validation_score: Optional[float] = None
    test_f1: Dict[SecurityClass, float] = field(default_factory=dict)
    constant_predictor: bool = False
    skipped_validation: bool = False
    n_features: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "n_train": self.n_train,
            "n_validation": self.n_validation,
            "n_test": self.n_test,
            "classes": [c.name for c in self.classes],
            "hyperparameters": dict(self.hyperparameters),
            "validation_score": self.validation_score,
            "test_f1": {c.name: v for c, v in sorted(self.test_f1.items())},
            "constant_predictor": self.constant_predictor,
            "skipped_validation": self.skipped_validation,
            "n_features": self.n_features,
        }


@dataclass
class RoutingReport:
    """Per-cluster bucket sizes for each partition."""
    k: int
    counts: Dict[str, List[int]]

    @property
    def unused_validation(self) -> List[int]:
        return [i for i, n in enumerate(self.counts["validation"]) if n == 0]

    @property
    def unused_test(self) -> List[int]:
        return [i for i, n in enumerate(self.counts["test"]) if n == 0]

    @property
    def totals(self) -> Dict[str, int]:
        return {name: int(sum(sizes)) for name, sizes in self.counts.items()}

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "counts": {name: list(sizes) for name, sizes in self.counts.items()},
            "totals": self.totals,
            "unused_validation": self.unused_validation,
            "unused_test": self.unused_test,
        }


def _predict(model: TrainedClassifier, paragraphs: Sequence[Paragraph]) -> List[SecurityClass]:
    if not paragraphs:
        return []
    return predict_texts(model, [p.text for p in paragraphs])


def _majority(paragraphs: Sequence[Paragraph]) -> SecurityClass:
    counts = Counter(p.label for p in paragraphs)
    # Ties go to the higher class.
    return max(counts, key=lambda c: (counts[c], int(c)))


class AcessEngine:
    """
    Runs the partitioned pipeline on one DataSplit.

    Example:
        engine = AcessEngine(AcessConfig(kmeans_seed=1, model_seed=2))
        results, report = engine.run(split)
        engine.write_artifacts(Path("runs/acess"))
    """

    def __init__(self, config: Optional[AcessConfig] = None):
        self.config = config or AcessConfig()
        self.split: Optional[DataSplit] = None
        self.cluster_model: Optional[ClusterModel] = None
        self.partitions: Dict[str, Dict[int, List[Paragraph]]] = {}
        self.models: List[TrainedClassifier] = []
        self.results: List[ClusterResult] = []
        self.predictions: Dict[str, SecurityClass] = {}
        self.report: Optional[EvalReport] = None

    # -- clustering and routing ----------------------------------------------

    def route(self, split: DataSplit) -> RoutingReport:
        """Build the similarity space, cluster train and route validation / test."""
        if not split.train:
            raise EmptyTrainingSet("ACESS needs a non-empty training set")
        classes = {p.label for p in split.train}
        if len(classes) < 2:
            raise SingleClassCorpus(
                f"Training set holds a single class ({next(iter(classes)).name})",
            )
        config = self.config
        self.split = split
        train_texts = [p.text for p in split.train]

        with stage("acess_similarity_space", logger) as info:
            sim_config = config.similarity_features
            vocab = build_vocabulary(train_texts, sim_config)
            X_train = vectorize_many(train_texts, vocab, sim_config)
            info.update(features=len(vocab))

        k = config.n_clusters or default_cluster_count(len(split.train), config.cluster_divisor)
        with stage("acess_kmeans", logger, k=k) as info:
            self.cluster_model = fit_kmeans(
                X_train, k, config.kmeans_seed, config.max_iter, config.tol,
                vocabulary=vocab, vectorizer_config=sim_config,
            )
            info.update(iterations=self.cluster_model.n_iter, inertia=self.cluster_model.inertia)

        self.partitions = {"train": self._buckets(split.train, self.cluster_model.labels)}
        for name in ("validation", "test"):
            paragraphs = split.partitions()[name]
            X = vectorize_many([p.text for p in paragraphs], vocab, sim_config)
            self.partitions[name] = self._buckets(paragraphs, assign_many(self.cluster_model, X))
        return self.routing_report()

    def _buckets(self, paragraphs: Sequence[Paragraph], labels: np.ndarray) -> Dict[int, List[Paragraph]]:
        buckets: Dict[int, List[Paragraph]] = {i: [] for i in range(self.cluster_model.k)}
        for p, cluster in zip(paragraphs, labels):
            buckets[int(cluster)].append(p)
        return buckets

    def routing_report(self) -> RoutingReport:
        if self.cluster_model is None:
            raise ConfigError("Routing has not run yet")
        return RoutingReport(
            k=self.cluster_model.k,
            counts={
                name: [len(self.partitions[name][i]) for i in range(self.cluster_model.k)]
                for name in ("train", "validation", "test")
            },
        )

    # -- per-cluster models ---------------------------------------------------

    def _fit_cluster(self, index: int) -> Tuple[TrainedClassifier, ClusterResult]:
        config = self.config
        train = self.partitions["train"][index]
        validation = self.partitions["validation"][index]
        test = self.partitions["test"][index]
        result = ClusterResult(
            index=index, n_train=len(train), n_validation=len(validation), n_test=len(test),
            classes=tuple(sorted({p.label for p in train})),
        )
        if len(result.classes) < 2:
            # Empty clusters fall back to the training majority.
            model = self._constant_model(_majority(train or self.split.train), train)
            result.constant_predictor = True
            result.skipped_validation = True
        elif not validation:
            default_point = config.grid.points(config.classifier)[0]
            model = fit_grid_point(train, default_point, config.classifier, config.security_features,
                                   config.model_seed, config.class_weights)
            result.skipped_validation = True
        else:
            try:
                found = grid_search(
                    train, validation, config.grid, config.classifier, config.security_features,
                    seed=config.model_seed, class_weights=config.class_weights,
                )
                model = found.best_model
                scored = [t for t in model.grid_provenance if t.get("status") == "ok"]
                result.validation_score = max(t["score"] for t in scored)
            except AllTrainingsFailed:
                logger.warning("Cluster %d: every grid point failed; using its majority class", index)
                model = self._constant_model(_majority(train), train)
                result.constant_predictor = True

        result.hyperparameters = dict(model.hyperparameters)
        result.n_features = model.vocabulary.dim if model.vocabulary is not None else 0
        if test:
            cm = ConfusionMatrix.from_labels([p.label for p in test], _predict(model, test))
            result.test_f1 = f1_per_class(cm)
        return model, result

    def _constant_model(self, cls: SecurityClass, train: Sequence[Paragraph]) -> TrainedClassifier:
        """Constant predictor that still carries the cluster's security feature space."""
        features = self.config.security_features
        vocabulary = None
        if train:
            try:
                vocabulary = build_vocabulary([p.text for p in train], features)
            except NoTermsSurvive:
                vocabulary = None
        return constant_classifier(
            self.config.classifier, cls, vocabulary.dim if vocabulary is not None else 0,
            self.config.model_seed, vocabulary=vocabulary,
            vectorizer_config=features if vocabulary is not None else None,
        )

    # -- pooled evaluation ----------------------------------------------------

    def run(self, split: DataSplit) -> Tuple[List[ClusterResult], EvalReport]:
        self.route(split)
        k = self.cluster_model.k
        with stage("acess_cluster_models", logger, k=k, workers=self.config.workers):
            if self.config.workers > 1:
                with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                    fitted = list(pool.map(self._fit_cluster, range(k)))
            else:
                fitted = [self._fit_cluster(i) for i in range(k)]
        self.models = [m for m, _ in fitted]
        self.results = [r for _, r in fitted]

        predictions: Dict[str, SecurityClass] = {}
        for index, model in enumerate(self.models):
            test = self.partitions["test"][index]
            for p, label in zip(test, _predict(model, test)):
                predictions[p.id.serialize()] = label
        self.predictions = predictions

        y_true = [p.label for p in split.test]
        y_pred = [predictions[p.id.serialize()] for p in split.test]
        self.report = EvalReport.from_labels(y_true, y_pred, provenance={"method": "acess"})
        logger.info("ACESS pooled macro-F1 %.4f over %d test paragraphs in %d clusters",
                    self.report.macro_f1, len(split.test), k)
        return self.results, self.report

    # -- reporting -------------------------------------------------------------

    def test_predictions(self) -> List[Tuple[Paragraph, SecurityClass]]:
        """(paragraph, predicted label) in test-set order."""
        return [(p, self.predictions[p.id.serialize()]) for p in self.split.test]

    def document_report(self) -> EvalReport:
        groups = group_by_document(self.split.test)
        predicted = {key: [self.predictions[p.id.serialize()] for p in ps] for key, ps in groups.items()}
        truth = {key: max(p.label for p in ps) for key, ps in groups.items()}
        return document_level_eval(predicted, truth, provenance={"method": "acess"})

    def manifest(self) -> dict:
        """Clustering statistics: cluster count and similarity feature count."""
        routing = self.routing_report()
        return {
            "k": self.cluster_model.k,
            "similarity_features": self.cluster_model.vocabulary.dim,
            "similarity_top_k": self.config.similarity_top_k,
            "cluster_divisor": self.config.cluster_divisor,
            "kmeans_iterations": self.cluster_model.n_iter,
            "unused_validation": len(routing.unused_validation),
            "unused_test": len(routing.unused_test),
            "constant_clusters": sum(r.constant_predictor for r in self.results),
        }

    def write_artifacts(self, out_dir: Path) -> None:
        """clusters.json, routing.json, cluster_model.json, similarity_vocab.json and partitions/."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "clusters.json").write_text(
            json.dumps([r.to_dict() for r in self.results], indent=2, sort_keys=True) + "\n"
        )
        (out_dir / "routing.json").write_text(
            json.dumps(self.routing_report().to_dict(), indent=2, sort_keys=True) + "\n"
        )
        write_cluster_model(self.cluster_model, out_dir)
        write_partitions(self.partitions, out_dir / "partitions")


def run_acess(split: DataSplit, config: Optional[AcessConfig] = None) -> Tuple[List[ClusterResult], EvalReport]:
    return AcessEngine(config).run(split)


def explain_routing(split: DataSplit, config: Optional[AcessConfig] = None) -> RoutingReport:
    """Per-cluster membership counts and the clusters left unused by validation / test."""
    return AcessEngine(config).route(split)
