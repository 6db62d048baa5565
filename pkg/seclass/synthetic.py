"""
SecClass - Synthetic Cables
Deterministic generator of cable-formatted documents for testing and
experiments without the real (non-redistributable) corpus.

Each document belongs to one similarity group. A paragraph's tokens mix
three sources:
  - group background words (shared by every class in the group),
  - local marker words: blocks of a shared pool, block (c + g) % 3
    serving class c in group g when markers rotate, so they only
    separate classes once the group is known,
  - global marker words, drawn from the paragraph's own class list with
    probability global_marker_purity and from another class otherwise.
Optionally a fraction of paragraphs is replaced by a confusable topic:
one shared vocabulary, labeled S or C at random.

MIT License - SecClass contributors, 2026
"""

import itertools
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Set, Tuple

import numpy as np

from seclass.corpus import ALL_CLASSES, Document, SecurityClass, derive_document_label, parse_cable
from seclass.errors import BadSpec
from seclass.features import STOPWORDS

logger = logging.getLogger(__name__)

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"
_SYLLABLES = [c + v for c in _CONSONANTS for v in _VOWELS]

DEFAULT_ORIGINS = ("BERLIN", "LONDON", "BAGHDAD", "DAMASCUS")


@dataclass(frozen=True)
class SyntheticSpec:
    n_documents: int = 300
    paragraphs_per_document: Tuple[int, int] = (1, 5)
    words_per_paragraph: Tuple[int, int] = (12, 20)
    mixture: Mapping[SecurityClass, float] = field(
        default_factory=lambda: {SecurityClass.U: 0.4, SecurityClass.C: 0.3, SecurityClass.S: 0.3}
    )
    n_groups: int = 3
    background_vocab_size: int = 40
    marker_vocab_size: int = 15
    background_rate: float = 0.4
    local_marker_rate: float = 0.4
    global_marker_rate: float = 0.2
    global_marker_purity: float = 0.6
    rotate_local_markers: bool = True
    confusable_rate: float = 0.0
    confusable_vocab_size: int = 30
    origins: Tuple[str, ...] = DEFAULT_ORIGINS
    seed: int = 0

    def __post_init__(self):
        mixture = {SecurityClass.parse(c) if isinstance(c, str) else SecurityClass(c): float(p)
                   for c, p in self.mixture.items()}
        object.__setattr__(self, "mixture", mixture)
        if any(p < 0 for p in mixture.values()) or abs(sum(mixture.values()) - 1.0) > 1e-9:
            raise BadSpec(f"Class mixture must be non-negative and sum to 1, got {mixture}")
        if self.n_groups < 1:
            raise BadSpec(f"Need at least one similarity group, got {self.n_groups}")
        if self.n_documents < 1:
            raise BadSpec(f"n_documents must be >= 1, got {self.n_documents}")
        for name in ("paragraphs_per_document", "words_per_paragraph"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise BadSpec(f"{name} must be a range 1 <= lo <= hi, got ({lo}, {hi})")
            object.__setattr__(self, name, (int(lo), int(hi)))
        rates = (self.background_rate, self.local_marker_rate, self.global_marker_rate)
        if any(r < 0 for r in rates) or abs(sum(rates) - 1.0) > 1e-9:
            raise BadSpec(f"Token source rates must be non-negative and sum to 1, got {rates}")
        if not 0.0 <= self.global_marker_purity <= 1.0 or not 0.0 <= self.confusable_rate <= 1.0:
            raise BadSpec("global_marker_purity and confusable_rate must lie in [0, 1]")
        if min(self.background_vocab_size, self.marker_vocab_size, self.confusable_vocab_size) < 1:
            raise BadSpec("Vocabulary sizes must be >= 1")
        if not self.origins:
            raise BadSpec("Need at least one origin")
        object.__setattr__(self, "origins", tuple(self.origins))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mixture"] = {c.name: p for c, p in sorted(self.mixture.items())}
        data["paragraphs_per_document"] = list(self.paragraphs_per_document)
        data["words_per_paragraph"] = list(self.words_per_paragraph)
        data["origins"] = list(self.origins)
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> "SyntheticSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise BadSpec(f"Unknown synthetic spec keys: {sorted(unknown)}")
        values = dict(data)
        for name in ("paragraphs_per_document", "words_per_paragraph", "origins"):
            if name in values:
                values[name] = tuple(values[name])
        return cls(**values)


def _pseudo_words() -> Iterator[str]:
    """Three-syllable nonsense words in a fixed order, stopwords skipped."""
    for parts in itertools.product(_SYLLABLES, repeat=3):
        word = "".join(parts)
        if word not in STOPWORDS:
            yield word


@dataclass
class _Lexicon:
    background: List[List[str]]
    local_blocks: List[List[str]]
    global_markers: Dict[SecurityClass, List[str]]
    confusable: List[str]


def _lexicon(spec: SyntheticSpec) -> _Lexicon:
    words = _pseudo_words()

    def take(n: int) -> List[str]:
        return list(itertools.islice(words, n))

    return _Lexicon(
        background=[take(spec.background_vocab_size) for _ in range(spec.n_groups)],
        local_blocks=[take(spec.marker_vocab_size) for _ in range(3)],
        global_markers={c: take(spec.marker_vocab_size) for c in ALL_CLASSES},
        confusable=take(spec.confusable_vocab_size),
    )


def _paragraph_words(
    rng: np.random.Generator, spec: SyntheticSpec, lexicon: _Lexicon, group: int,
    label: SecurityClass, confusable: bool,
) -> List[str]:
    length = int(rng.integers(spec.words_per_paragraph[0], spec.words_per_paragraph[1] + 1))
    background = lexicon.background[group]
    if confusable:
        # Confusable paragraphs: mostly the shared vocabulary, some background.
        picks = rng.random(length) < spec.background_rate / 2
        return [
            background[rng.integers(len(background))] if bg
            else lexicon.confusable[rng.integers(len(lexicon.confusable))]
            for bg in picks
        ]

    block = (int(label) + group) % 3 if spec.rotate_local_markers else int(label)
    local = lexicon.local_blocks[block]
    rates = np.array([spec.background_rate, spec.local_marker_rate, spec.global_marker_rate])
    sources = rng.choice(3, size=length, p=rates / rates.sum())
    words = []
    for source in sources:
        if source == 0:
            words.append(background[rng.integers(len(background))])
        elif source == 1:
            words.append(local[rng.integers(len(local))])
        else:
            marker_class = label
            if rng.random() >= spec.global_marker_purity:
                others = [c for c in ALL_CLASSES if c != label]
                marker_class = others[rng.integers(len(others))]
            pool = lexicon.global_markers[marker_class]
            words.append(pool[rng.integers(len(pool))])
    return words


def render_cable(
    header: SecurityClass, origin: str, year: int, month: int, day: int,
    cable_number: str, subject: str, paragraphs: List[Tuple[SecurityClass, str]],
) -> str:
    """Cable text in the layout parse_cable reads."""
    lines = [
        header.word,
        f"ORIGIN: {origin}",
        f"DATE: {year:04d}-{month:02d}-{day:02d}",
        f"CABLE: {cable_number}",
        f"SUBJECT: {subject}",
        "",
    ]
    for position, (label, text) in enumerate(paragraphs, 1):
        lines.append(f"{position}. ({label.name}) {text}")
        lines.append("")
    return "\n".join(lines)


def generate_synthetic_cables(spec: SyntheticSpec) -> Tuple[List[Tuple[str, str]], Set[Tuple[str, int]]]:
    """
    Raw cable texts as (cable_number, text), plus the (cable_number,
    position) of every confusable paragraph.
    """
    rng = np.random.default_rng(spec.seed)
    lexicon = _lexicon(spec)
    classes = [c for c in ALL_CLASSES if spec.mixture.get(c, 0.0) > 0]
    probabilities = np.array([spec.mixture[c] for c in classes])
    probabilities = probabilities / probabilities.sum()

    cables: List[Tuple[str, str]] = []
    injected: Set[Tuple[str, int]] = set()
    for doc_index in range(spec.n_documents):
        group = int(rng.integers(spec.n_groups))
        origin = spec.origins[group % len(spec.origins)]
        number = f"{doc_index + 1:06d}"
        year, month, day = int(rng.integers(2003, 2011)), int(rng.integers(1, 13)), int(rng.integers(1, 29))
        n_paragraphs = int(rng.integers(spec.paragraphs_per_document[0], spec.paragraphs_per_document[1] + 1))

        paragraphs: List[Tuple[SecurityClass, str]] = []
        for position in range(1, n_paragraphs + 1):
            confusable = spec.confusable_rate > 0 and rng.random() < spec.confusable_rate
            if confusable:
                label = SecurityClass.S if rng.random() < 0.5 else SecurityClass.C
                injected.add((number, position))
            else:
                label = classes[int(rng.choice(len(classes), p=probabilities))]
            words = _paragraph_words(rng, spec, lexicon, group, label, confusable)
            paragraphs.append((label, " ".join(words) + "."))

        header = derive_document_label([label for label, _ in paragraphs])
        background = lexicon.background[group]
        subject = " ".join(background[int(i)] for i in rng.integers(len(background), size=3)).upper()
        cables.append((number, render_cable(header, origin, year, month, day, number, subject, paragraphs)))

    return cables, injected


def generate_synthetic_corpus_with_truth(spec: SyntheticSpec) -> Tuple[List[Document], Set[str]]:
    """Parsed documents plus the paragraph IDs of injected confusable paragraphs."""
    cables, injected = generate_synthetic_cables(spec)
    documents = [parse_cable(text) for _, text in cables]
    injected_ids = {
        p.id.serialize()
        for d in documents for p in d.paragraphs
        if (d.cable_number, p.position) in injected
    }
    logger.info("Generated %d synthetic documents (%d paragraphs, %d confusable)",
                len(documents), sum(len(d.paragraphs) for d in documents), len(injected_ids))
    return documents, injected_ids


def generate_synthetic_corpus(spec: SyntheticSpec) -> List[Document]:
    return generate_synthetic_corpus_with_truth(spec)[0]


def write_synthetic_cables(spec: SyntheticSpec, out_dir: Path) -> List[Path]:
    """One cable_<number>.txt per document, for exercising ingestion."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for number, text in generate_synthetic_cables(spec)[0]:
        path = out_dir / f"cable_{number}.txt"
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths
