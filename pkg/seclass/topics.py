"""
SecClass - Topic Purity Pruning
Collapsed-Gibbs LDA over training paragraphs, per-topic class
composition, purity bands derived from the training class mix, and
two-pass pruning of paragraphs caught in impure (sub)topics.

MIT License - SecClass contributors, 2026
"""

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from seclass.corpus import ALL_CLASSES, Paragraph, SecurityClass
from seclass.errors import (
    BadFractions,
    ConfigError,
    EmptyCorpus,
    EverythingPruned,
    KTooLarge,
    LabelCountMismatch,
    OutOfRange,
)
from seclass.features import VectorizerConfig, tokenize
from seclass.logs import stage

logger = logging.getLogger(__name__)

Pair = Tuple[SecurityClass, SecurityClass]

# Only confusions involving Confidential are examined.
FLAG_PAIRS: Tuple[Pair, ...] = (
    (SecurityClass.S, SecurityClass.C),
    (SecurityClass.U, SecurityClass.C),
)

TOPIC_FEATURES = VectorizerConfig(weighting="count", ngram_range=(1,), alphabetic_only=True)

GibbsCallback = Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]


def pair_name(pair: Pair) -> str:
    return f"{pair[0].name}&{pair[1].name}"


@dataclass(eq=False)
class TopicModel:
    """
    State of a collapsed Gibbs chain.

    n_wk is (V, K), n_dk is (D, K), n_k is (K,); assignments[d] holds
    the topic of every token of document d.
    """
    K: int
    alpha: float
    beta: float
    vocabulary: Tuple[str, ...]
    n_wk: np.ndarray
    n_dk: np.ndarray
    n_k: np.ndarray
    assignments: List[np.ndarray]
    documents: List[np.ndarray]
    seed: int
    iterations: int

    @property
    def n_documents(self) -> int:
        return int(self.n_dk.shape[0])

    def theta(self) -> np.ndarray:
        """(D, K) document-topic distributions."""
        n_d = self.n_dk.sum(axis=1, keepdims=True)
        return (self.n_dk + self.alpha) / (n_d + self.K * self.alpha)

    def phi(self) -> np.ndarray:
        """(K, V) topic-word distributions."""
        V = len(self.vocabulary)
        return (self.n_wk.T + self.beta) / (self.n_k[:, None] + V * self.beta)

    def top_words(self, topic: int, n: int = 10) -> List[str]:
        if not 0 <= topic < self.K:
            raise OutOfRange(f"Topic {topic} outside 0..{self.K - 1}")
        counts = self.n_wk[:, topic]
        # Highest count first, then term order.
        order = np.lexsort((np.arange(len(counts)), -counts))
        return [self.vocabulary[i] for i in order[:n]]


def fit_lda_tokens(
    documents: Sequence[Sequence[str]],
    K: int,
    alpha: Optional[float] = None,
    beta: float = 0.01,
    iterations: int = 500,
    seed: int = 0,
    callback: Optional[GibbsCallback] = None,
) -> TopicModel:
    """
    Collapsed Gibbs sampling over pre-tokenized documents.

    A sweep visits token positions in order; at step i, token i of every
    document is resampled at once, excluding its own assignment from the
    counts. Documents are updated in parallel against the word-topic
    counts from the start of the step, tokens within a document in order.

    alpha defaults to 50 / K. The callback, if given, is invoked after
    every sweep with (iteration, n_wk, n_dk, n_k).

    Raises:
        EmptyCorpus: no documents or no tokens.
        KTooLarge: K exceeds the vocabulary size.
    """
    if not documents:
        raise EmptyCorpus("Cannot fit topics on no documents")
    if K < 2:
        raise ConfigError(f"K must be >= 2, got {K}")
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    alpha = 50.0 / K if alpha is None else float(alpha)
    if alpha <= 0 or beta <= 0:
        raise ConfigError(f"alpha and beta must be > 0, got {alpha}, {beta}")

    vocabulary = tuple(sorted({w for doc in documents for w in doc}))
    if not vocabulary:
        raise EmptyCorpus("No tokens to fit topics on")
    V = len(vocabulary)
    if K > V:
        raise KTooLarge(f"K={K} exceeds vocabulary size {V}", k=K, vocabulary=V)

    index = {w: i for i, w in enumerate(vocabulary)}
    docs = [np.array([index[w] for w in doc], dtype=np.int64) for doc in documents]
    D = len(docs)
    lengths = np.array([len(doc) for doc in docs], dtype=np.int64)
    offsets = np.concatenate(([0], np.cumsum(lengths)))
    words = np.concatenate(docs)
    doc_of = np.repeat(np.arange(D), lengths)
    total_tokens = int(lengths.sum())

    rng = np.random.default_rng(seed)
    z = rng.integers(K, size=total_tokens)
    n_wk = np.zeros((V, K), dtype=np.int64)
    n_dk = np.zeros((D, K), dtype=np.int64)
    np.add.at(n_wk, (words, z), 1)
    np.add.at(n_dk, (doc_of, z), 1)
    n_k = np.bincount(z, minlength=K).astype(np.int64)

    # Flat index of token i of every document that has one.
    steps = [offsets[:-1][lengths > i] + i for i in range(int(lengths.max()))]
    v_beta = V * beta
    for it in range(1, iterations + 1):
        uniforms = rng.random(total_tokens)
        for tokens in steps:
            w, d, old = words[tokens], doc_of[tokens], z[tokens]
            rows = np.arange(len(tokens))
            word_counts = n_wk[w]
            word_counts[rows, old] -= 1
            doc_counts = n_dk[d]
            doc_counts[rows, old] -= 1
            topic_counts = np.tile(n_k, (len(tokens), 1))
            topic_counts[rows, old] -= 1
            weights = (word_counts + beta) * (doc_counts + alpha) / (topic_counts + v_beta)
            cumulative = np.cumsum(weights, axis=1)
            draws = uniforms[tokens] * cumulative[:, -1]
            new = np.minimum((cumulative <= draws[:, None]).sum(axis=1), K - 1)

            z[tokens] = new
            np.add.at(n_wk, (w, old), -1)
            np.add.at(n_wk, (w, new), 1)
            n_dk[d, old] -= 1
            n_dk[d, new] += 1
            n_k += np.bincount(new, minlength=K) - np.bincount(old, minlength=K)
        if callback is not None:
            callback(it, n_wk, n_dk, n_k)

    logger.debug("Fitted LDA with K=%d on %d documents, %d tokens", K, D, total_tokens)
    assignments = [z[offsets[d]:offsets[d + 1]].copy() for d in range(D)]
    return TopicModel(
        K=K, alpha=alpha, beta=beta, vocabulary=vocabulary,
        n_wk=n_wk, n_dk=n_dk, n_k=n_k, assignments=assignments, documents=docs,
        seed=seed, iterations=iterations,
    )


def fit_lda_gibbs(
    texts: Sequence[str],
    K: int,
    alpha: Optional[float] = None,
    beta: float = 0.01,
    iterations: int = 500,
    seed: int = 0,
    config: VectorizerConfig = TOPIC_FEATURES,
    callback: Optional[GibbsCallback] = None,
) -> TopicModel:
    """Tokenize texts (unigrams, stopwords removed) and fit LDA."""
    if not texts:
        raise EmptyCorpus("Cannot fit topics on no texts")
    return fit_lda_tokens([tokenize(t, config) for t in texts], K, alpha, beta, iterations, seed, callback)


def dominant_topic(model: TopicModel, document: int) -> Optional[int]:
    """argmax of theta for one document; ties go to the lowest topic. None when it has no tokens."""
    if not 0 <= document < model.n_documents:
        raise OutOfRange(f"Document {document} outside 0..{model.n_documents - 1}")
    counts = model.n_dk[document]
    if not counts.any():
        return None
    return int(np.argmax(counts))


@dataclass
class TopicComposition:
    """Class make-up of the documents whose dominant topic is `topic`."""
    topic: int
    members: Tuple[int, ...]
    member_ids: Tuple[str, ...]
    fractions: Dict[SecurityClass, float]
    counts: Dict[SecurityClass, int]
    flagged_pairs: Tuple[Pair, ...] = ()

    def fraction(self, cls: SecurityClass) -> float:
        return self.fractions.get(cls, 0.0)

    def to_dict(self, top_words: Optional[List[str]] = None) -> dict:
        data = {
            "index": self.topic,
            "size": len(self.members),
            "class_fractions": {c.name: self.fraction(c) for c in ALL_CLASSES},
            "class_counts": {c.name: self.counts.get(c, 0) for c in ALL_CLASSES},
            "flagged_pair": [pair_name(p) for p in self.flagged_pairs] or None,
        }
        if top_words is not None:
            data["top_words"] = top_words
        return data


def topic_class_composition(
    model: TopicModel,
    labels: Sequence[SecurityClass],
    ids: Optional[Sequence[str]] = None,
) -> List[TopicComposition]:
    """
    Group documents by dominant topic. Topics with no members are left
    out, and so are documents with no tokens.
    """
    if len(labels) != model.n_documents:
        raise LabelCountMismatch(f"{len(labels)} labels for {model.n_documents} documents")
    ids = list(ids) if ids is not None else [str(i) for i in range(model.n_documents)]
    has_tokens = model.n_dk.any(axis=1)
    dominant = np.where(has_tokens, np.argmax(model.n_dk, axis=1), -1)
    compositions = []
    for topic in range(model.K):
        members = tuple(int(d) for d in np.flatnonzero(dominant == topic))
        if not members:
            continue
        counts = Counter(SecurityClass(labels[d]) for d in members)
        compositions.append(TopicComposition(
            topic=topic,
            members=members,
            member_ids=tuple(ids[d] for d in members),
            fractions={c: counts[c] / len(members) for c in sorted(counts)},
            counts=dict(sorted(counts.items())),
        ))
    untokenized = int((~has_tokens).sum())
    if untokenized:
        logger.debug("%d documents have no tokens and no dominant topic", untokenized)
    empty = model.K - len(compositions)
    if empty:
        logger.debug("%d of %d topics have no dominant members", empty, model.K)
    return compositions


@dataclass(frozen=True)
class PurityThresholds:
    """Inclusive [lower, upper] fraction band per class."""
    bands: Mapping[SecurityClass, Tuple[float, float]]

    def __post_init__(self):
        for cls, (lo, hi) in self.bands.items():
            if not 0.0 <= lo < hi <= 1.0:
                raise BadFractions(f"Band for {SecurityClass(cls).name} must satisfy 0 <= lower < upper <= 1, "
                                   f"got [{lo}, {hi}]")

    def contains(self, cls: SecurityClass, fraction: float) -> bool:
        band = self.bands.get(cls)
        return band is not None and band[0] <= fraction <= band[1]

    def to_dict(self) -> dict:
        return {c.name: list(band) for c, band in sorted(self.bands.items())}


def class_fractions(labels: Sequence[SecurityClass]) -> Dict[SecurityClass, float]:
    counts = Counter(SecurityClass(label) for label in labels)
    return {c: counts[c] / len(labels) for c in ALL_CLASSES}


def derive_thresholds(
    train_class_fractions: Mapping[SecurityClass, float],
    lo_factor: float = 0.5,
    hi_factor: float = 1.5,
    overrides: Optional[Mapping[SecurityClass, Tuple[float, float]]] = None,
) -> PurityThresholds:
    """
    Band per class c with training fraction p_c > 0:
    [lo_factor * p_c, min(1, hi_factor * p_c)]. overrides replace
    individual bands.
    """
    if not 0 < lo_factor < hi_factor:
        raise BadFractions(f"Need 0 < lo_factor < hi_factor, got {lo_factor}, {hi_factor}")
    fractions = {SecurityClass(c): float(p) for c, p in train_class_fractions.items()}
    if any(p < 0 for p in fractions.values()) or abs(sum(fractions.values()) - 1.0) > 1e-6:
        raise BadFractions(f"Class fractions must be non-negative and sum to 1, got {fractions}")
    bands = {c: (lo_factor * p, min(1.0, hi_factor * p)) for c, p in fractions.items() if p > 0}
    for c, band in (overrides or {}).items():
        bands[SecurityClass(c)] = (float(band[0]), float(band[1]))
    return PurityThresholds(bands)


def flag_impure_topics(
    compositions: Sequence[TopicComposition], thresholds: PurityThresholds,
) -> Set[Tuple[int, Pair]]:
    """(topic, pair) for every pair in FLAG_PAIRS whose two fractions both sit in band."""
    flags = set()
    for comp in compositions:
        pairs = tuple(
            pair for pair in FLAG_PAIRS
            if all(thresholds.contains(c, comp.fraction(c)) for c in pair)
        )
        comp.flagged_pairs = pairs
        flags.update((comp.topic, pair) for pair in pairs)
    return flags


# -- Pruning -------------------------------------------------------------------

@dataclass(frozen=True)
class PruneConfig:
    """Topic counts default to max(10, n/500) and max(5, n_extracted/200)."""
    k_main: Optional[int] = None
    k_sub: Optional[int] = None
    alpha: Optional[float] = None
    beta: float = 0.01
    iterations: int = 500
    lo_factor: float = 0.5
    hi_factor: float = 1.5
    threshold_overrides: Optional[Mapping[SecurityClass, Tuple[float, float]]] = None
    seed: int = 0
    top_words: int = 10

    def to_dict(self) -> dict:
        return {
            "k_main": self.k_main,
            "k_sub": self.k_sub,
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "lo_factor": self.lo_factor,
            "hi_factor": self.hi_factor,
            "threshold_overrides": (
                {SecurityClass(c).name: list(b) for c, b in sorted(self.threshold_overrides.items())}
                if self.threshold_overrides else None
            ),
            "seed": self.seed,
            "top_words": self.top_words,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PruneConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown prune keys: {sorted(unknown)}")
        values = dict(data)
        if values.get("threshold_overrides"):
            values["threshold_overrides"] = {
                SecurityClass.parse(c): tuple(b) for c, b in values["threshold_overrides"].items()
            }
        return cls(**values)


@dataclass(frozen=True)
class RemovalRecord:
    paragraph_id: str
    pass_number: int
    topic: int
    pair: Pair

    def row(self) -> List[str]:
        return [self.paragraph_id, str(self.pass_number), str(self.topic), pair_name(self.pair)]


@dataclass
class TopicPass:
    """One LDA run of the pruning procedure, kept for reporting."""
    model: TopicModel
    compositions: List[TopicComposition]
    flags: Set[Tuple[int, Pair]]

    def report(self, top_words: int = 10) -> dict:
        return {
            "K": self.model.K,
            "seed": self.model.seed,
            "alpha": self.model.alpha,
            "beta": self.model.beta,
            "iterations": self.model.iterations,
            "n_documents": self.model.n_documents,
            "topics": [c.to_dict(self.model.top_words(c.topic, top_words)) for c in self.compositions],
        }


@dataclass
class PruneResult:
    pruned: List[Paragraph]
    removals: List[RemovalRecord]
    thresholds: PurityThresholds
    main: Optional[TopicPass] = None
    sub: Optional[TopicPass] = None
    extracted: List[str] = field(default_factory=list)
    untokenized: List[str] = field(default_factory=list)

    @property
    def removed_ids(self) -> Set[str]:
        return {r.paragraph_id for r in self.removals}

    def stats(self) -> dict:
        return {
            "n_input": len(self.pruned) + len(self.removals),
            "n_pruned": len(self.pruned),
            "n_extracted": len(self.extracted),
            "n_untokenized": len(self.untokenized),
            "n_removed": len(self.removals),
            "k_main": self.main.model.K if self.main else None,
            "k_sub": self.sub.model.K if self.sub else None,
            "flagged_main": len(self.main.flags) if self.main else 0,
            "flagged_sub": len(self.sub.flags) if self.sub else 0,
            "thresholds": self.thresholds.to_dict(),
        }


def _topic_count(requested: Optional[int], default: int, vocabulary_size: int) -> int:
    k = requested if requested is not None else default
    return max(2, min(k, vocabulary_size))


def _run_pass(
    tokens: List[List[str]], labels, ids, K, config: PruneConfig, seed: int, thresholds,
) -> TopicPass:
    model = fit_lda_tokens(tokens, K, config.alpha, config.beta, config.iterations, seed)
    compositions = topic_class_composition(model, labels, ids)
    flags = flag_impure_topics(compositions, thresholds)
    return TopicPass(model, compositions, flags)


def _members_in_pairs(topic_pass: TopicPass, labels) -> Dict[int, Tuple[int, Pair]]:
    """Document index -> (topic, pair) for members of flagged topics in a flagged pair class."""
    hits: Dict[int, Tuple[int, Pair]] = {}
    for comp in topic_pass.compositions:
        for pair in comp.flagged_pairs:
            for d in comp.members:
                if SecurityClass(labels[d]) in pair and d not in hits:
                    hits[d] = (comp.topic, pair)
    return hits


def prune_training_set(train: Sequence[Paragraph], config: Optional[PruneConfig] = None) -> PruneResult:
    """
    Two-pass topic purity pruning.

    Pass 1 fits main topics on the whole training set and extracts, from
    every impure topic, the members of its flagged class pair. Pass 2
    fits subtopics on all extracted members pooled together; members of
    impure subtopics in the flagged pair are removed, every other
    extracted paragraph goes back into the training set.

    Raises:
        EverythingPruned: nothing survives, or a class disappears.
    """
    config = config or PruneConfig()
    if not train:
        raise EmptyCorpus("Cannot prune an empty training set")

    labels = [p.label for p in train]
    ids = [p.id.serialize() for p in train]
    thresholds = derive_thresholds(class_fractions(labels), config.lo_factor, config.hi_factor,
                                   config.threshold_overrides)
    tokens = [tokenize(p.text, TOPIC_FEATURES) for p in train]
    untokenized = [ids[i] for i, doc in enumerate(tokens) if not doc]
    if untokenized:
        logger.info("%d training paragraphs have no topic tokens and are kept as is", len(untokenized))
    vocabulary_size = len({w for doc in tokens for w in doc})

    with stage("prune_main_topics", logger, n=len(train)) as info:
        k_main = _topic_count(config.k_main, max(10, len(train) // 500), vocabulary_size)
        main = _run_pass(tokens, labels, ids, k_main, config, config.seed, thresholds)
        extracted = sorted(_members_in_pairs(main, labels))
        info.update(k=k_main, flagged=len(main.flags), extracted=len(extracted))

    if not extracted:
        logger.info("No impure main topics; training set unchanged")
        return PruneResult(list(train), [], thresholds, main=main, untokenized=untokenized)

    sub_tokens = [tokens[i] for i in extracted]
    sub_vocabulary = len({w for doc in sub_tokens for w in doc})
    removed: Dict[int, Tuple[int, Pair]] = {}
    sub: Optional[TopicPass] = None
    if sub_vocabulary >= 2:
        with stage("prune_subtopics", logger, n=len(extracted)) as info:
            k_sub = _topic_count(config.k_sub, max(5, len(extracted) // 200), sub_vocabulary)
            sub_labels = [labels[i] for i in extracted]
            sub = _run_pass(sub_tokens, sub_labels, [ids[i] for i in extracted], k_sub, config,
                            config.seed + 1, thresholds)
            removed = {extracted[d]: hit for d, hit in _members_in_pairs(sub, sub_labels).items()}
            info.update(k=k_sub, flagged=len(sub.flags), removed=len(removed))
    else:
        logger.warning("Extracted paragraphs share fewer than two terms; skipping subtopics")

    removals = [RemovalRecord(ids[i], 2, removed[i][0], removed[i][1]) for i in sorted(removed)]
    pruned = [p for i, p in enumerate(train) if i not in removed]
    result = PruneResult(pruned, removals, thresholds, main=main, sub=sub,
                         extracted=[ids[i] for i in extracted], untokenized=untokenized)

    lost = set(labels) - {p.label for p in pruned}
    if not pruned or lost:
        raise EverythingPruned(
            "Pruning removed every paragraph" if not pruned
            else f"Pruning removed every paragraph of class {sorted(c.name for c in lost)}",
            removed=len(removals), lost=[c.name for c in sorted(lost)],
        )
    logger.info("Pruned %d of %d training paragraphs (%d extracted)", len(removals), len(train), len(extracted))
    return result


def write_topic_report(topic_pass: TopicPass, path: Path, top_words: int = 10) -> None:
    Path(path).write_text(json.dumps(topic_pass.report(top_words), indent=2, sort_keys=True) + "\n")


def write_removals_csv(removals: Sequence[RemovalRecord], path: Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["paragraph_id", "pass", "topic", "pair"])
        for record in removals:
            writer.writerow(record.row())


def write_prune_artifacts(result: PruneResult, out_dir: Path, top_words: int = 10) -> None:
    """topics_main.json, topics_sub.json (when pass 2 ran) and removals.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if result.main is not None:
        write_topic_report(result.main, out_dir / "topics_main.json", top_words)
    if result.sub is not None:
        write_topic_report(result.sub, out_dir / "topics_sub.json", top_words)
    write_removals_csv(result.removals, out_dir / "removals.csv")
