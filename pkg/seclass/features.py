"""
SecClass - Text Features
Tokenization, n-grams, vocabulary building with tie-inclusive top-K
selection, and TF-IDF / document-frequency / count vectorization.

Stemming is never applied. The built-in English stopword list ships as
package data and is content-hashed so run manifests can record exactly
which list was used.

MIT License - SecClass contributors, 2026
"""

import hashlib
import logging
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, replace
from importlib import resources
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
import scipy.sparse as sp
from sklearn.preprocessing import normalize

from seclass.errors import ConfigError, DataError, DimensionMismatch, EmptyCorpus, NoTermsSurvive

logger = logging.getLogger(__name__)

WEIGHTINGS = ("tfidf", "doc_frequency", "count")
NORMALIZATIONS = ("none", "l1", "l2")
MIN_TOKEN_LENGTH = 2

_TOKEN = re.compile(r"[^\W_]+")


def _load_stopwords() -> Tuple[frozenset, str]:
    raw = resources.files("seclass").joinpath("data/stopwords.txt").read_bytes()
    words = frozenset(
        line.strip().lower() for line in raw.decode("utf-8").splitlines() if line.strip()
    )
    return words, hashlib.sha256(raw).hexdigest()


STOPWORDS, STOPWORDS_SHA256 = _load_stopwords()


@dataclass(frozen=True)
class VectorizerConfig:
    """How paragraphs become feature vectors."""
    weighting: str = "tfidf"
    ngram_range: Tuple[int, ...] = (1,)
    max_features: Optional[int] = None
    normalization: str = "none"
    alphabetic_only: bool = True
    remove_stopwords: bool = True

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"Unknown weighting {self.weighting!r}; expected one of {WEIGHTINGS}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(
                f"Unknown normalization {self.normalization!r}; expected one of {NORMALIZATIONS}"
            )
        grams = tuple(sorted(set(int(n) for n in self.ngram_range)))
        if not grams or any(n not in (1, 2) for n in grams):
            raise ConfigError(f"ngram_range must be a non-empty subset of {{1, 2}}, got {self.ngram_range}")
        object.__setattr__(self, "ngram_range", grams)
        if self.max_features is not None and int(self.max_features) < 1:
            raise ConfigError(f"max_features must be >= 1, got {self.max_features}")

    def with_changes(self, **changes) -> "VectorizerConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["ngram_range"] = list(self.ngram_range)
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "VectorizerConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"Unknown vectorizer keys: {sorted(unknown)}")
        if "ngram_range" in known:
            known["ngram_range"] = tuple(known["ngram_range"])
        return cls(**known)


@dataclass(frozen=True)
class SparseVector:
    """Sorted (index, weight) pairs with no explicit zeros."""
    indices: Tuple[int, ...]
    values: Tuple[float, ...]
    dim: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise DataError("SparseVector indices and values differ in length")
        previous = -1
        for i in self.indices:
            if i <= previous or i >= self.dim:
                raise DataError(f"SparseVector indices must be increasing and < {self.dim}")
            previous = i
        if any(v == 0 for v in self.values):
            raise DataError("SparseVector stores no explicit zeros")

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        dense[list(self.indices)] = self.values
        return dense

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.asarray(self.values, dtype=np.float64), np.asarray(self.indices, dtype=np.int64),
             np.array([0, self.nnz])),
            shape=(1, self.dim),
        )

    @classmethod
    def from_dense(cls, dense: Sequence[float]) -> "SparseVector":
        arr = np.asarray(dense, dtype=np.float64)
        nz = np.flatnonzero(arr)
        return cls(tuple(int(i) for i in nz), tuple(float(arr[i]) for i in nz), int(arr.shape[0]))


class Vocabulary:
    """
    Immutable term table: dense indices in sorted term order, document
    frequencies and the selection score each term was ranked by.
    """

    __slots__ = ("_terms", "_index", "_df", "_scores", "n_documents")

    def __init__(
        self,
        terms: Iterable[str],
        df: Mapping[str, int],
        scores: Mapping[str, float],
        n_documents: int,
    ):
        ordered = tuple(sorted(terms))
        if len(set(ordered)) != len(ordered):
            raise DataError("Vocabulary terms must be unique")
        for term in ordered:
            if df[term] < 1:
                raise DataError(f"Term {term!r} has document frequency {df[term]}")
        self._terms = ordered
        self._index = MappingProxyType({t: i for i, t in enumerate(ordered)})
        self._df = np.array([df[t] for t in ordered], dtype=np.int64)
        self._df.setflags(write=False)
        self._scores = np.array([scores[t] for t in ordered], dtype=np.float64)
        self._scores.setflags(write=False)
        self.n_documents = int(n_documents)

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self._terms == other._terms
            and self.n_documents == other.n_documents
            and np.array_equal(self._df, other._df)
            and np.array_equal(self._scores, other._scores)
        )

    def __repr__(self) -> str:
        return f"Vocabulary({len(self)} terms, n_documents={self.n_documents})"

    @property
    def dim(self) -> int:
        return len(self._terms)

    @property
    def terms(self) -> Tuple[str, ...]:
        return self._terms

    @property
    def index(self) -> Mapping[str, int]:
        return self._index

    @property
    def document_frequencies(self) -> np.ndarray:
        return self._df

    @property
    def scores(self) -> np.ndarray:
        return self._scores

    def df(self, term: str) -> int:
        return int(self._df[self._index[term]])

    def score(self, term: str) -> float:
        return float(self._scores[self._index[term]])

    def idf_vector(self) -> np.ndarray:
        return idf(self._df, self.n_documents)

    def to_dict(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "terms": [
                {"term": t, "index": i, "df": int(self._df[i]), "score": float(self._scores[i])}
                for i, t in enumerate(self._terms)
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Vocabulary":
        entries = data["terms"]
        vocab = cls(
            terms=[e["term"] for e in entries],
            df={e["term"]: int(e["df"]) for e in entries},
            scores={e["term"]: float(e["score"]) for e in entries},
            n_documents=int(data["n_documents"]),
        )
        for e in entries:
            if vocab.index[e["term"]] != int(e["index"]):
                raise DataError(f"Vocabulary index mismatch for {e['term']!r}")
        return vocab


def idf(df, n_documents: int):
    """Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1."""
    return np.log((1.0 + n_documents) / (1.0 + np.asarray(df, dtype=np.float64))) + 1.0


def tokenize(text: str, config: Optional[VectorizerConfig] = None) -> List[str]:
    """
    Lower-case word tokens with stopwords removed, then bigrams of
    adjacent surviving tokens. Unigrams come first when both are on.
    """
    config = config or VectorizerConfig()
    tokens = [t for t in _TOKEN.findall(text.lower()) if len(t) >= MIN_TOKEN_LENGTH]
    if config.alphabetic_only:
        tokens = [t for t in tokens if t.isalpha()]
    if config.remove_stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]

    terms: List[str] = []
    if 1 in config.ngram_range:
        terms.extend(tokens)
    if 2 in config.ngram_range:
        terms.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return terms


def select_top_features(scored_terms: Mapping[str, float], k: int) -> Set[str]:
    """
    Every term scoring at least the K-th highest score.

    Ties at the cutoff are all kept, so the result can exceed K.
    """
    if k < 1:
        raise ConfigError(f"K must be >= 1, got {k}")
    if len(scored_terms) <= k:
        return set(scored_terms)
    cutoff = sorted(scored_terms.values(), reverse=True)[k - 1]
    return {term for term, score in scored_terms.items() if score >= cutoff}


def build_vocabulary(texts: Sequence[str], config: Optional[VectorizerConfig] = None) -> Vocabulary:
    """
    Score every term over the corpus and keep the top max_features.

    Scores: tfidf = max over documents of tf * idf, doc_frequency = df,
    count = total occurrences.
    """
    config = config or VectorizerConfig()
    if not texts:
        raise EmptyCorpus("Cannot build a vocabulary from no texts")

    df: Counter = Counter()
    total: Counter = Counter()
    max_tf: Dict[str, int] = {}
    for text in texts:
        counts = Counter(tokenize(text, config))
        df.update(counts.keys())
        total.update(counts)
        for term, tf in counts.items():
            if tf > max_tf.get(term, 0):
                max_tf[term] = tf

    if not df:
        raise NoTermsSurvive(f"No terms survive tokenization of {len(texts)} texts")

    n = len(texts)
    if config.weighting == "tfidf":
        scores = {t: max_tf[t] * (math.log((1.0 + n) / (1.0 + df[t])) + 1.0) for t in df}
    elif config.weighting == "doc_frequency":
        scores = {t: float(df[t]) for t in df}
    else:
        scores = {t: float(total[t]) for t in df}

    kept = set(scores) if config.max_features is None else select_top_features(scores, config.max_features)
    if config.max_features is not None and len(kept) > config.max_features:
        logger.debug("Kept %d terms for top-%d (ties at cutoff)", len(kept), config.max_features)
    return Vocabulary(kept, df, scores, n)


def _row(text: str, vocab: Vocabulary, config: VectorizerConfig) -> Tuple[np.ndarray, np.ndarray]:
    counts: Counter = Counter()
    index = vocab.index
    for term in tokenize(text, config):
        i = index.get(term)
        if i is not None:
            counts[i] += 1
    if not counts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64)

    cols = np.array(sorted(counts), dtype=np.int64)
    tf = np.array([counts[i] for i in cols], dtype=np.float64)
    dfs = vocab.document_frequencies[cols].astype(np.float64)
    if config.weighting == "tfidf":
        values = tf * idf(dfs, vocab.n_documents)
    elif config.weighting == "doc_frequency":
        values = dfs
    else:
        values = tf

    return cols, values


def vectorize(text: str, vocab: Vocabulary, config: Optional[VectorizerConfig] = None) -> SparseVector:
    """Vectorize one text; out-of-vocabulary terms are ignored."""
    row = vectorize_many([text], vocab, config)
    return SparseVector(tuple(int(c) for c in row.indices), tuple(float(v) for v in row.data), vocab.dim)


def vectorize_many(
    texts: Sequence[str], vocab: Vocabulary, config: Optional[VectorizerConfig] = None,
) -> sp.csr_matrix:
    """Vectorize texts into an (n, |V|) CSR matrix, row for row equal to vectorize()."""
    config = config or VectorizerConfig()
    indptr = [0]
    indices: List[np.ndarray] = []
    data: List[np.ndarray] = []
    for text in texts:
        cols, values = _row(text, vocab, config)
        indices.append(cols)
        data.append(values)
        indptr.append(indptr[-1] + len(cols))
    matrix = sp.csr_matrix(
        (
            np.concatenate(data) if data else np.zeros(0),
            np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
            np.array(indptr, dtype=np.int64),
        ),
        shape=(len(texts), vocab.dim),
    )
    if config.normalization != "none":
        # Empty rows stay empty.
        matrix = normalize(matrix, norm=config.normalization, copy=False)
    return matrix


def as_matrix(X, dim: Optional[int] = None) -> sp.csr_matrix:
    """Accept a CSR matrix, a dense array or a list of SparseVector."""
    if sp.issparse(X):
        matrix = sp.csr_matrix(X, dtype=np.float64)
    elif isinstance(X, np.ndarray):
        matrix = sp.csr_matrix(np.atleast_2d(X).astype(np.float64))
    else:
        vectors = list(X)
        dims = {v.dim for v in vectors}
        if len(dims) > 1:
            raise DimensionMismatch(f"Vectors have mixed dimensionality {sorted(dims)}")
        width = dims.pop() if dims else (dim or 0)
        indptr = np.cumsum([0] + [v.nnz for v in vectors])
        matrix = sp.csr_matrix(
            (
                np.array([x for v in vectors for x in v.values], dtype=np.float64),
                np.array([i for v in vectors for i in v.indices], dtype=np.int64),
                indptr,
            ),
            shape=(len(vectors), width),
        )
    if dim is not None and matrix.shape[1] != dim:
        raise DimensionMismatch(f"Expected dimensionality {dim}, got {matrix.shape[1]}")
    return matrix
