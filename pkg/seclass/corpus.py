"""
SecClass - Cable Corpus
Parses diplomatic cable text into labeled documents and paragraphs,
builds paragraph IDs, applies the max rule and splits corpora into
train / validation / test partitions at document granularity.

A cable has three sections: the head (classification in full words,
origin, date, reference number), the subject line and the body, whose
paragraphs carry bracketed single-letter markings such as "(C)".

MIT License - SecClass contributors, 2026
"""

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from seclass.errors import (
    BadRatios,
    DataError,
    EmptyBody,
    EmptyInput,
    MissingHeaderLabel,
    TooFewDocuments,
    UnknownMarking,
)

logger = logging.getLogger(__name__)


class SecurityClass(IntEnum):
    """Ordinal security label: U < C < S."""
    U = 0
    C = 1
    S = 2

    @classmethod
    def parse(cls, value: str) -> "SecurityClass":
        """Parse a full word ("SECRET") or a single letter ("S")."""
        key = re.sub(r"\s+", "", str(value)).upper()
        if key in _FULL_WORDS:
            return _FULL_WORDS[key]
        if key in cls.__members__:
            return cls[key]
        raise DataError(f"Not a security class: {value!r}", value=value)

    @property
    def word(self) -> str:
        return {0: "UNCLASSIFIED", 1: "CONFIDENTIAL", 2: "SECRET"}[int(self)]

    def __str__(self) -> str:
        return self.name


_FULL_WORDS = {
    "UNCLASSIFIED": SecurityClass.U,
    "UNCLAS": SecurityClass.U,
    "CONFIDENTIAL": SecurityClass.C,
    "SECRET": SecurityClass.S,
}

ALL_CLASSES: Tuple[SecurityClass, ...] = (SecurityClass.U, SecurityClass.C, SecurityClass.S)


def normalize_origin(origin: str) -> str:
    """Origin as it appears in paragraph IDs: upper case, no whitespace or hyphens."""
    return re.sub(r"[\s\-]+", "", origin).upper()


@dataclass(frozen=True)
class ParagraphId:
    """
    Provenance of one paragraph: ORIGIN-YYYYMM-CABLE-POS-L.

    Only year and month are kept, never the day.
    """
    origin: str
    year: int
    month: int
    cable_number: str
    position: int
    label: SecurityClass

    def __post_init__(self):
        object.__setattr__(self, "origin", normalize_origin(self.origin))
        if "-" in self.origin or not self.origin:
            raise DataError(f"Invalid origin for paragraph ID: {self.origin!r}")
        if "-" in self.cable_number or not self.cable_number:
            raise DataError(f"Invalid cable number: {self.cable_number!r}")
        if self.position < 1:
            raise DataError(f"Paragraph position must be >= 1, got {self.position}")

    @property
    def document_key(self) -> str:
        return f"{self.origin}-{self.cable_number}"

    @property
    def year_month(self) -> str:
        return f"{self.year:04d}{self.month:02d}"

    def serialize(self) -> str:
        return (
            f"{self.origin}-{self.year_month}-{self.cable_number}-"
            f"{self.position:02d}-{self.label.name}"
        )

    @classmethod
    def parse(cls, text: str) -> "ParagraphId":
        parts = text.strip().split("-")
        if len(parts) != 5 or len(parts[1]) != 6 or not parts[1].isdigit():
            raise DataError(f"Malformed paragraph ID: {text!r}")
        origin, ym, cable, pos, label = parts
        return cls(
            origin=origin,
            year=int(ym[:4]),
            month=int(ym[4:]),
            cable_number=cable,
            position=int(pos),
            label=SecurityClass.parse(label),
        )

    def __str__(self) -> str:
        return self.serialize()


@dataclass(frozen=True)
class Paragraph:
    """One marked body paragraph of a cable."""
    id: ParagraphId
    text: str
    label: SecurityClass
    position: int

    def __post_init__(self):
        if not self.text.strip():
            raise DataError("Paragraph text is empty", paragraph=str(self.id))
        if self.position < 1:
            raise DataError(f"Paragraph position must be >= 1, got {self.position}")

    @property
    def document_key(self) -> str:
        return self.id.document_key

    def to_record(self) -> dict:
        """Corpus manifest record (one JSON Lines row)."""
        return {
            "id": self.id.serialize(),
            "doc": self.document_key,
            "origin": self.id.origin,
            "year_month": self.id.year_month,
            "position": self.position,
            "label": self.label.name,
            "text": self.text,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Paragraph":
        pid = ParagraphId.parse(record["id"])
        return cls(
            id=pid,
            text=record["text"],
            label=SecurityClass.parse(record["label"]),
            position=int(record.get("position", pid.position)),
        )


@dataclass(frozen=True)
class Document:
    """A parsed cable."""
    cable_number: str
    origin: str
    year_month: Tuple[int, int]
    header_label: SecurityClass
    subject: str
    paragraphs: Tuple[Paragraph, ...]

    def __post_init__(self):
        if not self.paragraphs:
            raise EmptyBody("Document has no paragraphs", cable=self.cable_number)
        positions = [p.position for p in self.paragraphs]
        if positions != list(range(1, len(positions) + 1)):
            raise DataError(f"Paragraph positions must be 1..n, got {positions}")

    @property
    def key(self) -> str:
        return f"{normalize_origin(self.origin)}-{self.cable_number}"

    @property
    def derived_label(self) -> SecurityClass:
        return derive_document_label([p.label for p in self.paragraphs])


def derive_document_label(paragraph_labels: Sequence[SecurityClass]) -> SecurityClass:
    """A document carries the highest class of any of its paragraphs."""
    if not paragraph_labels:
        raise EmptyInput("Cannot derive a document label from no paragraphs")
    return max(SecurityClass(label) for label in paragraph_labels)


# -- Parsing -----------------------------------------------------------------

_SPACED_WORD = re.compile(r"\b(?:[A-Z] ){3,}[A-Z]\b")
_HEADER_LABEL = re.compile(r"\b(UNCLASSIFIED|UNCLAS|CONFIDENTIAL|SECRET)\b")
_SUBJECT = re.compile(r"^[ \t]*SUBJ(?:ECT)?[ \t]*:[ \t]*(.*)$", re.IGNORECASE | re.MULTILINE)
_ORIGIN = re.compile(r"^[ \t]*ORIGIN[ \t]*:[ \t]*(?:US[ \t]+)?(?:EMBASSY|CONSULATE)?[ \t]*(.+?)[ \t]*$",
                     re.IGNORECASE | re.MULTILINE)
_FROM = re.compile(r"^[ \t]*FM[ \t]+AM(?:EMBASSY|CONSUL)[ \t]+(.+?)[ \t]*$", re.IGNORECASE | re.MULTILINE)
_DATE = re.compile(r"^[ \t]*(?:DATE|CREATED)[ \t]*:[ \t]*(\d{4})-(\d{2})", re.IGNORECASE | re.MULTILINE)
_CABLE = re.compile(r"^[ \t]*(?:CABLE|REFERENCE[ \t]+ID)[ \t]*:[ \t]*\S*?(\d+)[ \t]*$",
                    re.IGNORECASE | re.MULTILINE)
_MARKING = re.compile(r"^\s*(?:\d+\s*\.\s*)?\(([A-Z]{1,4}(?:/[A-Z]{1,8})*)\)\s*")
_MARKED_LINE = re.compile(r"^[ \t]*(?:\d+[ \t]*\.[ \t]*)?\([A-Z]{1,4}(?:/[A-Z]{1,8})*\)", re.MULTILINE)
_PARAGRAPH_BREAK = re.compile(r"\n\s*\n")


def _header_label(head: str) -> Optional[SecurityClass]:
    collapsed = _SPACED_WORD.sub(lambda m: m.group(0).replace(" ", ""), head.upper())
    match = _HEADER_LABEL.search(collapsed)
    return _FULL_WORDS[match.group(1)] if match else None


def _split_sections(raw: str) -> Tuple[str, str, int, str]:
    """Return (head, subject, body offset, body)."""
    subject_match = _SUBJECT.search(raw)
    if subject_match:
        head = raw[:subject_match.start()]
        subject = subject_match.group(1).strip()
        body_start = subject_match.end()
    else:
        # No subject line: the body starts at the first line opening with a marking.
        marked = _MARKED_LINE.search(raw)
        body_start = marked.start() if marked else len(raw)
        head, subject = raw[:body_start], ""
    return head, subject, body_start, raw[body_start:]


def _iter_chunks(text: str, offset: int = 0) -> Iterable[Tuple[int, str]]:
    """Yield (absolute offset, chunk) for blank-line separated chunks."""
    start = 0
    for match in _PARAGRAPH_BREAK.finditer(text):
        chunk = text[start:match.start()]
        if chunk.strip():
            yield offset + start, chunk
        start = match.end()
    tail = text[start:]
    if tail.strip():
        yield offset + start, tail


def parse_cable(
    raw: str,
    *,
    origin: Optional[str] = None,
    cable_number: Optional[str] = None,
    inherit_header_label: bool = False,
) -> Document:
    """
    Parse one cable into a Document.

    Args:
        raw: Cable text.
        origin: Fallback origin when the head has none.
        cable_number: Fallback cable number when the head has none.
        inherit_header_label: Give unmarked body paragraphs the header
            class instead of skipping them.

    Raises:
        MissingHeaderLabel: no full-word classification in the head.
        EmptyBody: no parseable body paragraph.
        UnknownMarking: a bracketed marking outside {U, C, S}.
    """
    raw = raw.replace("\r\n", "\n")
    head, subject, body_start, body = _split_sections(raw)

    header_label = _header_label(head)
    if header_label is None:
        raise MissingHeaderLabel("No full-word classification found in cable head")

    origin_match = _ORIGIN.search(head) or _FROM.search(head)
    cable_origin = origin_match.group(1).strip() if origin_match else (origin or "UNKNOWN")
    date_match = _DATE.search(head)
    year_month = (int(date_match.group(1)), int(date_match.group(2))) if date_match else (0, 0)
    cable_match = _CABLE.search(head)
    number = cable_match.group(1) if cable_match else (cable_number or "0")
    number = number.zfill(6) if number.isdigit() else normalize_origin(number)
    if not origin_match and origin is None:
        logger.warning("Cable has no origin; using UNKNOWN")
    if not date_match:
        logger.warning("Cable %s has no date; using 0000-00", number)

    paragraphs: List[Paragraph] = []
    for chunk_offset, chunk in _iter_chunks(body, body_start):
        marking = _MARKING.match(chunk)
        if marking:
            letters = marking.group(1)
            first = letters.split("/")[0]
            if first not in SecurityClass.__members__:
                raise UnknownMarking(
                    f"Unknown paragraph marking ({letters}) at offset "
                    f"{chunk_offset + marking.start(1) - 1}",
                    marking=letters,
                    offset=chunk_offset + marking.start(1) - 1,
                )
            label = SecurityClass[first]
            text = " ".join(chunk[marking.end():].split())
        elif inherit_header_label:
            label = header_label
            text = " ".join(chunk.split())
        else:
            logger.warning(
                "Skipping unmarked paragraph at offset %d in cable %s", chunk_offset, number,
                extra={"offset": chunk_offset},
            )
            continue
        if not text:
            continue
        position = len(paragraphs) + 1
        pid = ParagraphId(
            origin=cable_origin,
            year=year_month[0],
            month=year_month[1],
            cable_number=number,
            position=position,
            label=label,
        )
        paragraphs.append(Paragraph(id=pid, text=text, label=label, position=position))

    if not paragraphs:
        raise EmptyBody("Cable body contains no parseable paragraphs", cable=number)

    return Document(
        cable_number=number,
        origin=cable_origin,
        year_month=year_month,
        header_label=header_label,
        subject=subject,
        paragraphs=tuple(paragraphs),
    )


def ingest_directory(
    directory: Path,
    pattern: str = "*.txt",
    inherit_header_label: bool = False,
    workers: int = 4,
) -> List[Document]:
    """
    Parse every cable file under a directory.

    Files are parsed concurrently; results come back in sorted path
    order. The file stem is the fallback cable number.
    """
    paths = sorted(Path(directory).glob(pattern))
    if not paths:
        raise EmptyInput(f"No files matching {pattern} in {directory}")

    def _parse(path: Path) -> Document:
        try:
            return parse_cable(
                path.read_text(encoding="utf-8"),
                cable_number=re.sub(r"\W", "", path.stem) or None,
                inherit_header_label=inherit_header_label,
            )
        except DataError as e:
            e.context.setdefault("path", str(path))
            raise

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        documents = list(pool.map(_parse, paths))
    logger.info("Ingested %d cables from %s", len(documents), directory)
    return documents


def filter_by_origin(documents: Iterable[Document], origins: Iterable[str]) -> List[Document]:
    """Keep documents from the given embassies (one dataset per origin)."""
    wanted = {normalize_origin(o) for o in origins}
    return [d for d in documents if normalize_origin(d.origin) in wanted]


def iter_paragraphs(documents: Iterable[Document]) -> List[Paragraph]:
    return [p for d in documents for p in d.paragraphs]


def group_by_document(paragraphs: Iterable[Paragraph]) -> Dict[str, List[Paragraph]]:
    """Group paragraphs by document key, preserving first-seen order."""
    groups: Dict[str, List[Paragraph]] = {}
    for p in paragraphs:
        groups.setdefault(p.document_key, []).append(p)
    return groups


def documents_from_paragraphs(paragraphs: Iterable[Paragraph]) -> List[Document]:
    """Rebuild documents from manifest paragraphs (header = max rule)."""
    documents = []
    for key, members in group_by_document(paragraphs).items():
        members = sorted(members, key=lambda p: p.position)
        first = members[0].id
        documents.append(Document(
            cable_number=first.cable_number,
            origin=first.origin,
            year_month=(first.year, first.month),
            header_label=derive_document_label([p.label for p in members]),
            subject="",
            paragraphs=tuple(members),
        ))
    return documents


# -- Splitting ---------------------------------------------------------------

@dataclass
class DataSplit:
    """Train / validation / test paragraphs; no document straddles partitions."""
    train: List[Paragraph]
    validation: List[Paragraph]
    test: List[Paragraph]
    seed: int
    ratios: Tuple[float, float, float]
    document_keys: Dict[str, List[str]] = field(default_factory=dict)

    def partitions(self) -> Dict[str, List[Paragraph]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}

    def __repr__(self) -> str:
        return (
            f"DataSplit(train={len(self.train)}, validation={len(self.validation)}, "
            f"test={len(self.test)}, seed={self.seed})"
        )


def split_corpus(
    documents: Sequence[Document],
    ratios: Sequence[float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> DataSplit:
    """
    Shuffle documents with the seed and cut the permutation by ratio.

    Every partition receives at least one document.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"Ratios must be three positive fractions summing to 1, got {ratios}")
    n = len(documents)
    if n < 3:
        raise TooFewDocuments(f"Need at least 3 documents to split, got {n}")

    order = np.random.default_rng(seed).permutation(n)
    cut_train = min(max(int(round(n * ratios[0])), 1), n - 2)
    cut_val = min(max(int(round(n * (ratios[0] + ratios[1]))), cut_train + 1), n - 1)

    parts = {
        "train": [documents[i] for i in order[:cut_train]],
        "validation": [documents[i] for i in order[cut_train:cut_val]],
        "test": [documents[i] for i in order[cut_val:]],
    }
    split = DataSplit(
        train=iter_paragraphs(parts["train"]),
        validation=iter_paragraphs(parts["validation"]),
        test=iter_paragraphs(parts["test"]),
        seed=seed,
        ratios=ratios,  # type: ignore[arg-type]
        document_keys={name: [d.key for d in docs] for name, docs in parts.items()},
    )
    logger.info(
        "Split %d documents into %d/%d/%d", n,
        len(parts["train"]), len(parts["validation"]), len(parts["test"]),
    )
    return split


# -- Files -------------------------------------------------------------------

def write_corpus_jsonl(paragraphs: Iterable[Paragraph], path: Path) -> int:
    """Write a corpus manifest, one paragraph per line. Returns the count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as f:
        for p in paragraphs:
            f.write(json.dumps(p.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_corpus_jsonl(path: Path) -> List[Paragraph]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Corpus manifest not found: {path}", path=str(path))
    paragraphs = []
    with Path(path).open(encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                paragraphs.append(Paragraph.from_record(json.loads(line)))
            except (KeyError, json.JSONDecodeError) as e:
                raise DataError(f"Bad corpus record at {path}:{line_no}: {e}") from e
    return paragraphs


def write_split(split: DataSplit, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, paragraphs in split.partitions().items():
        write_corpus_jsonl(paragraphs, out_dir / f"{name}.jsonl")
    meta = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "documents": split.document_keys,
        "sizes": {name: len(ps) for name, ps in split.partitions().items()},
    }
    (out_dir / "split.json").write_text(json.dumps(meta, indent=2, sort_keys=True))


def read_split(split_dir: Path) -> DataSplit:
    split_dir = Path(split_dir)
    meta_file = split_dir / "split.json"
    if not meta_file.exists():
        raise DataError(f"No split.json in {split_dir}")
    meta = json.loads(meta_file.read_text())
    return DataSplit(
        train=read_corpus_jsonl(split_dir / "train.jsonl"),
        validation=read_corpus_jsonl(split_dir / "validation.jsonl"),
        test=read_corpus_jsonl(split_dir / "test.jsonl"),
        seed=int(meta["seed"]),
        ratios=tuple(meta["ratios"]),  # type: ignore[arg-type]
        document_keys=meta.get("documents", {}),
    )
