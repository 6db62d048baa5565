"""Tests for the SecClass similarity clustering module."""

import json

import numpy as np
import pytest
import scipy.sparse as sp

from seclass.clustering import (
    ClusterModel,
    assign,
    assign_many,
    default_cluster_count,
    fit_kmeans,
    partition_by_cluster,
    squared_distances,
    write_cluster_model,
    write_partitions,
)
from seclass.corpus import Paragraph, ParagraphId, SecurityClass
from seclass.errors import ConfigError, DimensionMismatch, EmptyInput, KTooLarge
from seclass.features import SparseVector, VectorizerConfig, build_vocabulary, vectorize_many


def random_dataset(rng):
    n = int(rng.integers(30, 80))
    d = int(rng.integers(2, 7))
    k = int(rng.integers(1, 7))
    return rng.normal(size=(n, d)) * rng.uniform(0.5, 3.0), k


def make_paragraph(i: int, text: str = "alpha beta") -> Paragraph:
    pid = ParagraphId("BERLIN", 2009, 5, f"{i:06d}", 1, SecurityClass.U)
    return Paragraph(pid, text, SecurityClass.U, 1)


class TestDefaultClusterCount:
    """Tests for the default k rule."""

    def test_examples(self):
        """Test n / 200 rounded half up, at least 1."""
        assert default_cluster_count(1000) == 5
        assert default_cluster_count(100) == 1
        assert default_cluster_count(300) == 2
        assert default_cluster_count(250) == 1
        assert default_cluster_count(1) == 1

    def test_custom_divisor(self):
        """Test a different divisor."""
        assert default_cluster_count(1000, divisor=100) == 10

    def test_invalid(self):
        """Test that non-positive inputs raise ConfigError."""
        with pytest.raises(ConfigError):
            default_cluster_count(0)


class TestFitKmeans:
    """Tests for Lloyd's algorithm."""

    def test_inertia_non_increasing(self):
        """Test that inertia never increases across Lloyd steps on 20 datasets."""
        rng = np.random.default_rng(42)
        for seed in range(20):
            X, k = random_dataset(rng)
            model = fit_kmeans(X, k, seed=seed)
            history = model.inertia_history
            for before, after in zip(history, history[1:]):
                assert after <= before * (1 + 1e-9) + 1e-12

    def test_final_assignment_is_fixed_point(self):
        """Test that the centroids are the means of their final members."""
        rng = np.random.default_rng(43)
        for seed in range(20):
            X, k = random_dataset(rng)
            model = fit_kmeans(X, k, seed=seed)
            assert model.n_iter < 300
            np.testing.assert_array_equal(assign_many(model, X), model.labels)
            for j in range(k):
                members = X[model.labels == j]
                if len(members):
                    np.testing.assert_allclose(model.centroids[j], members.mean(axis=0), atol=1e-6)

    def test_assign_matches_brute_force(self):
        """Test assign against a nearest-centroid scan on 100 query points per dataset."""
        rng = np.random.default_rng(44)
        for seed in range(20):
            X, k = random_dataset(rng)
            model = fit_kmeans(X, k, seed=seed)
            for point in rng.normal(size=(100, X.shape[1])) * 2:
                expected = int(np.argmin([np.sum((point - c) ** 2) for c in model.centroids]))
                assert assign(model, SparseVector.from_dense(point)) == expected

    def test_two_far_blobs(self):
        """Test that two well-separated blobs end up in different clusters."""
        rng = np.random.default_rng(5)
        X = np.vstack([rng.normal(size=(25, 3)), rng.normal(size=(25, 3)) + 50.0])
        model = fit_kmeans(X, 2, seed=0)
        assert len(set(model.labels[:25])) == 1
        assert len(set(model.labels[25:])) == 1
        assert model.labels[0] != model.labels[-1]

    def test_seeded(self):
        """Test that the same seed gives the same centroids."""
        X = np.random.default_rng(1).normal(size=(40, 4))
        a = fit_kmeans(X, 4, seed=9)
        b = fit_kmeans(X, 4, seed=9)
        np.testing.assert_array_equal(a.centroids, b.centroids)
        assert a.inertia_history == b.inertia_history

    def test_k_equals_n(self):
        """Test that k = n gives zero inertia."""
        X = np.arange(12, dtype=float).reshape(6, 2)
        model = fit_kmeans(X, 6, seed=0)
        assert model.inertia == pytest.approx(0.0)

    def test_k_too_large(self):
        """Test that k > n raises KTooLarge."""
        with pytest.raises(KTooLarge):
            fit_kmeans(np.ones((3, 2)), 4, seed=0)

    def test_empty_input(self):
        """Test that no points raise EmptyInput."""
        with pytest.raises(EmptyInput):
            fit_kmeans(sp.csr_matrix((0, 3)), 1, seed=0)

    def test_squared_distances_match_direct(self):
        """Test the expanded distance formula."""
        rng = np.random.default_rng(3)
        X, centroids = rng.normal(size=(10, 4)), rng.normal(size=(3, 4))
        direct = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        np.testing.assert_allclose(squared_distances(sp.csr_matrix(X), centroids), direct, atol=1e-10)


class TestRouting:
    """Tests for assignment and partitioning."""

    MODEL = ClusterModel(k=3, centroids=np.array([[0.0, 0.0], [10.0, 10.0], [100.0, 100.0]]), seed=0)

    def test_tie_goes_to_lowest_index(self):
        """Test that an equidistant point goes to the lower cluster."""
        assert assign(self.MODEL, SparseVector((0, 1), (5.0, 5.0), 2)) == 0

    def test_dimension_mismatch(self):
        """Test that a vector of the wrong size is rejected."""
        with pytest.raises(DimensionMismatch):
            assign(self.MODEL, SparseVector((0,), (1.0,), 3))

    def test_partition_keeps_every_cluster(self):
        """Test that empty clusters still get a bucket and order is kept."""
        paragraphs = [make_paragraph(i) for i in range(4)]
        X = np.array([[1.0, 0.0], [9.0, 9.0], [0.0, 1.0], [11.0, 10.0]])
        buckets = partition_by_cluster(self.MODEL, paragraphs, X)
        assert set(buckets) == {0, 1, 2}
        assert buckets[0] == [paragraphs[0], paragraphs[2]]
        assert buckets[1] == [paragraphs[1], paragraphs[3]]
        assert buckets[2] == []

    def test_partition_empty_input(self):
        """Test routing no paragraphs."""
        assert partition_by_cluster(self.MODEL, []) == {0: [], 1: [], 2: []}

    def test_partition_needs_feature_space(self):
        """Test that routing raw text needs the similarity vocabulary."""
        with pytest.raises(ConfigError):
            partition_by_cluster(self.MODEL, [make_paragraph(0)])

    def test_partition_vectorizes_with_own_vocabulary(self):
        """Test routing raw text through the model's vocabulary."""
        texts = ["alpha alpha", "alpha beta", "gamma delta", "delta delta gamma"]
        config = VectorizerConfig()
        vocab = build_vocabulary(texts, config)
        X = vectorize_many(texts, vocab, config)
        model = fit_kmeans(X, 2, seed=1, vocabulary=vocab, vectorizer_config=config)
        paragraphs = [make_paragraph(i, t) for i, t in enumerate(texts)]
        buckets = partition_by_cluster(model, paragraphs)
        assert sum(len(b) for b in buckets.values()) == 4
        for p, cluster in zip(paragraphs, model.labels):
            assert p in buckets[int(cluster)]


class TestClusterFiles:
    """Tests for cluster artifacts."""

    def test_model_round_trip(self, tmp_path):
        """Test writing and reading the cluster model."""
        texts = ["alpha beta", "gamma delta", "alpha gamma"]
        vocab = build_vocabulary(texts)
        model = fit_kmeans(vectorize_many(texts, vocab), 2, seed=0, vocabulary=vocab)
        write_cluster_model(model, tmp_path)
        data = json.loads((tmp_path / "cluster_model.json").read_text())
        assert data["vocab_ref"] == "similarity_vocab.json"
        assert (tmp_path / "similarity_vocab.json").exists()
        restored = ClusterModel.from_dict(data, vocabulary=vocab)
        np.testing.assert_array_equal(restored.centroids, model.centroids)
        assert restored.k == 2

    def test_write_partitions(self, tmp_path):
        """Test one file per cluster and split."""
        buckets = {0: [make_paragraph(1)], 1: []}
        written = write_partitions({"train": buckets, "test": buckets}, tmp_path)
        names = sorted(p.name for p in written)
        assert names == [
            "cluster_0.test.jsonl", "cluster_0.train.jsonl",
            "cluster_1.test.jsonl", "cluster_1.train.jsonl",
        ]
        assert (tmp_path / "cluster_1.train.jsonl").read_text() == ""
