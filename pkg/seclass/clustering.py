"""
SecClass - Similarity Clusters
Lloyd's K-means over sparse similarity vectors with random
distinct-point initialization, and nearest-centroid routing of
validation / test paragraphs.

MIT License - SecClass contributors, 2026
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from seclass.corpus import Paragraph, write_corpus_jsonl
from seclass.errors import ConfigError, DimensionMismatch, EmptyInput, KTooLarge
from seclass.features import SparseVector, VectorizerConfig, Vocabulary, as_matrix, vectorize_many

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ClusterModel:
    """Fitted centroids plus the feature space they live in."""
    k: int
    centroids: np.ndarray
    seed: int
    inertia_history: List[float] = field(default_factory=list)
    labels: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    vocabulary: Optional[Vocabulary] = None
    vectorizer_config: Optional[VectorizerConfig] = None
    n_iter: int = 0

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.k < 1 or self.centroids.shape[0] != self.k:
            raise ConfigError(f"ClusterModel needs k >= 1 centroids, got {self.centroids.shape[0]}")
        if self.vocabulary is not None and self.centroids.shape[1] != self.vocabulary.dim:
            raise DimensionMismatch("Centroids and similarity vocabulary differ in dimensionality")

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1] if self.inertia_history else 0.0

    def to_dict(self, vocab_ref: str = "similarity_vocab.json") -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "vocab_ref": vocab_ref,
            "centroids": self.centroids.tolist(),
            "inertia_history": list(self.inertia_history),
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, data: Mapping, vocabulary: Optional[Vocabulary] = None,
                  vectorizer_config: Optional[VectorizerConfig] = None) -> "ClusterModel":
        centroids = np.array(data["centroids"], dtype=np.float64)
        return cls(
            k=int(data["k"]),
            centroids=centroids.reshape(int(data["k"]), -1),
            seed=int(data["seed"]),
            inertia_history=[float(v) for v in data.get("inertia_history", [])],
            vocabulary=vocabulary,
            vectorizer_config=vectorizer_config,
            n_iter=int(data.get("n_iter", 0)),
        )


def default_cluster_count(n_train: int, divisor: int = 200) -> int:
    """max(1, n_train / divisor rounded half up)."""
    if n_train < 1 or divisor < 1:
        raise ConfigError(f"Need n_train >= 1 and divisor >= 1, got {n_train}, {divisor}")
    return max(1, (2 * n_train + divisor) // (2 * divisor))


def squared_distances(X: sp.csr_matrix, centroids: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances, clipped at zero."""
    x_sq = np.asarray(X.multiply(X).sum(axis=1)).reshape(-1, 1)
    cross = np.asarray(X @ centroids.T)
    c_sq = np.einsum("ij,ij->i", centroids, centroids)
    return np.maximum(x_sq - 2.0 * cross + c_sq, 0.0)


def _means(X: sp.csr_matrix, labels: np.ndarray, k: int):
    n = X.shape[0]
    membership = sp.csr_matrix((np.ones(n), (labels, np.arange(n))), shape=(k, n))
    sums = np.asarray((membership @ X).todense())
    counts = np.bincount(labels, minlength=k)
    means = np.zeros_like(sums)
    filled = counts > 0
    means[filled] = sums[filled] / counts[filled, None]
    return means, counts


def fit_kmeans(
    X,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-6,
    vocabulary: Optional[Vocabulary] = None,
    vectorizer_config: Optional[VectorizerConfig] = None,
) -> ClusterModel:
    """
    Lloyd's algorithm from k distinct random points.

    Iterates assign / recompute until the total centroid shift drops
    below tol or max_iter is reached. A cluster left empty is re-seeded
    with the point farthest from its own centroid. The stored labels
    are the assignment to the final centroids.

    Raises:
        EmptyInput: no points.
        KTooLarge: k exceeds the number of points.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if n == 0:
        raise EmptyInput("Cannot cluster an empty set")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the {n} points to cluster", k=k, n=n)

    rng = np.random.default_rng(seed)
    start = np.sort(rng.choice(n, size=k, replace=False))
    centroids = np.asarray(X[start].todense(), dtype=np.float64)
    history: List[float] = []

    iteration = 0
    for iteration in range(1, max_iter + 1):
        d2 = squared_distances(X, centroids)
        labels = np.argmin(d2, axis=1)
        own = d2[np.arange(n), labels]
        history.append(float(own.sum()))

        new_centroids, counts = _means(X, labels, k)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            # Farthest points first, each used at most once.
            candidates = np.argsort(-own, kind="stable")
            for j, point in zip(empty, candidates):
                new_centroids[j] = np.asarray(X[point].todense()).ravel()
            logger.debug("Re-seeded %d empty clusters at iteration %d", empty.size, iteration)

        shift = float(np.sqrt(np.sum((new_centroids - centroids) ** 2)))
        centroids = new_centroids
        if shift < tol:
            break

    d2 = squared_distances(X, centroids)
    labels = np.argmin(d2, axis=1).astype(np.int64)
    history.append(float(d2[np.arange(n), labels].sum()))

    logger.info("Fitted %d clusters on %d points in %d iterations (inertia %.4f)",
                k, n, iteration, history[-1])
    return ClusterModel(
        k=k,
        centroids=centroids,
        seed=seed,
        inertia_history=history,
        labels=labels,
        vocabulary=vocabulary,
        vectorizer_config=vectorizer_config,
        n_iter=iteration,
    )


def assign_many(model: ClusterModel, X) -> np.ndarray:
    """Nearest centroid for every row; ties go to the lowest index."""
    X = as_matrix(X, model.dim)
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmin(squared_distances(X, model.centroids), axis=1).astype(np.int64)


def assign(model: ClusterModel, x: SparseVector) -> int:
    if x.dim != model.dim:
        raise DimensionMismatch(f"Vector has {x.dim} dimensions, centroids have {model.dim}")
    return int(assign_many(model, x.to_csr())[0])


def partition_by_cluster(
    model: ClusterModel,
    paragraphs: Sequence[Paragraph],
    X=None,
) -> Dict[int, List[Paragraph]]:
    """
    Route paragraphs to clusters. Every cluster index has a bucket,
    empty ones included; buckets keep input order.
    """
    if X is None and paragraphs:
        if model.vocabulary is None or model.vectorizer_config is None:
            raise ConfigError("ClusterModel has no similarity vocabulary; pass vectors explicitly")
        X = vectorize_many([p.text for p in paragraphs], model.vocabulary, model.vectorizer_config)
    buckets: Dict[int, List[Paragraph]] = {i: [] for i in range(model.k)}
    if paragraphs:
        for p, cluster in zip(paragraphs, assign_many(model, X)):
            buckets[int(cluster)].append(p)
    return buckets


def write_partitions(partitions: Mapping[str, Mapping[int, Sequence[Paragraph]]], out_dir: Path) -> List[Path]:
    """Write cluster_<i>.<split>.jsonl for every cluster of every split."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for split_name, buckets in partitions.items():
        for index in sorted(buckets):
            path = out_dir / f"cluster_{index}.{split_name}.jsonl"
            write_corpus_jsonl(buckets[index], path)
            written.append(path)
    return written


def write_cluster_model(model: ClusterModel, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "cluster_model.json").write_text(json.dumps(model.to_dict(), sort_keys=True))
    if model.vocabulary is not None:
        (out_dir / "similarity_vocab.json").write_text(json.dumps(model.vocabulary.to_dict(), sort_keys=True))
