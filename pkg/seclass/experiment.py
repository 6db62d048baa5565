"""
SecClass - Experiments
Runs one method end to end and writes a self-describing run directory;
compares finished runs from their reports alone.

Run directory layout:
    config.json, seeds.json, manifest.json
    paragraph_report.json / .csv, document_report.json / .csv
    predictions.jsonl
    acess:        clusters.json, routing.json, cluster_model.json,
                  similarity_vocab.json, partitions/
    prune_logreg: topics_main.json, topics_sub.json, removals.csv
    run.log.jsonl (timings; not part of the reproducible output)

MIT License - SecClass contributors, 2026
"""

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

from seclass import __version__
from seclass.acess import AcessEngine
from seclass.config import ExperimentConfig
from seclass.corpus import (
    DataSplit,
    Paragraph,
    SecurityClass,
    documents_from_paragraphs,
    filter_by_origin,
    group_by_document,
    read_corpus_jsonl,
    read_split,
    split_corpus,
)
from seclass.errors import ConfigError, DataError, SplitMismatch
from seclass.features import STOPWORDS_SHA256
from seclass.logs import add_log_file, stage
from seclass.metrics import EvalReport, document_level_eval
from seclass.models import grid_search, predict_texts
from seclass.synthetic import generate_synthetic_corpus
from seclass.topics import prune_training_set, write_prune_artifacts

logger = logging.getLogger(__name__)

RUN_SCHEMA = "seclass/run-v1"

BASELINE_KINDS = {
    "baseline_nb": "naive_bayes",
    "baseline_svm": "linear_svm",
    "baseline_logreg": "logreg_ovo",
}

COMPARISON_COLUMNS = ("S", "C", "U", "macro")


def split_digest(test: Sequence[Paragraph]) -> str:
    """Identifies a test set: SHA-256 of its sorted paragraph IDs."""
    ids = "\n".join(sorted(p.id.serialize() for p in test))
    return hashlib.sha256(ids.encode()).hexdigest()


def load_split(config: ExperimentConfig) -> DataSplit:
    """The split a config describes: read, or built from a corpus / generator."""
    if config.splits is not None:
        split = read_split(config.splits)
        if config.origins:
            raise ConfigError("origins filtering applies to corpus or synthetic data, not stored splits")
        return split
    if config.corpus is not None:
        if not config.corpus.exists():
            raise DataError(f"Corpus not found: {config.corpus}", path=str(config.corpus))
        documents = documents_from_paragraphs(read_corpus_jsonl(config.corpus))
    else:
        documents = generate_synthetic_corpus(config.seeded_synthetic())
    if config.origins:
        documents = filter_by_origin(documents, config.origins)
    return split_corpus(documents, config.ratios, config.seeds.split)


@dataclass
class RunResult:
    out_dir: Path
    paragraph_report: EvalReport
    document_report: EvalReport
    manifest: Dict[str, object]
    predictions: List[Tuple[Paragraph, SecurityClass]] = field(default_factory=list)


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _run_baseline(config: ExperimentConfig, split: DataSplit, kind: str, train: Sequence[Paragraph]):
    found = grid_search(
        train, split.validation, config.grid, kind, config.features, seed=config.seeds.model,
    )
    predicted = predict_texts(found.best_model, [p.text for p in split.test])
    stats = {
        "model_kind": kind,
        "best_point": found.best_point.as_dict(),
        "n_features": found.best_model.vocabulary.dim,
        "grid_points": len(found.best_model.grid_provenance),
    }
    return predicted, stats, found.best_model


def run_experiment(config: ExperimentConfig) -> RunResult:
    """
    Execute config.method and write the run directory.

    Report files hold no wall-clock values, so identical configs give
    byte-identical reports.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    package_logger = logging.getLogger("seclass")
    previous_level = package_logger.level
    # Stage timings go to the run log even when the console is quieter.
    if package_logger.getEffectiveLevel() > logging.INFO:
        package_logger.setLevel(logging.INFO)
    handler = add_log_file(out_dir / "run.log.jsonl")
    try:
        return _run(config, out_dir)
    finally:
        package_logger.removeHandler(handler)
        package_logger.setLevel(previous_level)
        handler.close()


def _run(config: ExperimentConfig, out_dir: Path) -> RunResult:
    config_id = config.to_hash()
    logger.info("Run %s: method %s, config %s", config.name, config.method, config_id[:12])

    with stage("load_split", logger) as info:
        split = load_split(config)
        info.update(train=len(split.train), validation=len(split.validation), test=len(split.test))
    if not split.test:
        raise DataError("Test partition is empty")

    method_stats: Dict[str, object] = {}
    if config.method in BASELINE_KINDS:
        with stage("train_baseline", logger, method=config.method):
            predicted, method_stats, _ = _run_baseline(config, split, BASELINE_KINDS[config.method], split.train)
    elif config.method == "prune_logreg":
        with stage("prune", logger):
            pruned = prune_training_set(split.train, config.seeded_prune())
        write_prune_artifacts(pruned, out_dir, config.prune.top_words)
        with stage("train_pruned_logreg", logger):
            predicted, method_stats, _ = _run_baseline(config, split, "logreg_ovo", pruned.pruned)
        method_stats["pruning"] = pruned.stats()
    else:
        engine = AcessEngine(config.seeded_acess())
        with stage("acess", logger):
            engine.run(split)
        engine.write_artifacts(out_dir)
        predicted = [label for _, label in engine.test_predictions()]
        method_stats = engine.manifest()

    provenance = {"run": config.name, "method": config.method, "config_hash": config_id}
    paragraph_report = EvalReport.from_labels(
        [p.label for p in split.test], predicted, level="paragraph", provenance=provenance,
    )
    by_id = {p.id.serialize(): label for p, label in zip(split.test, predicted)}
    groups = group_by_document(split.test)
    document_report = document_level_eval(
        {key: [by_id[p.id.serialize()] for p in ps] for key, ps in groups.items()},
        {key: max(p.label for p in ps) for key, ps in groups.items()},
        provenance=provenance,
    )

    manifest = {
        "schema": RUN_SCHEMA,
        "seclass_version": __version__,
        "name": config.name,
        "method": config.method,
        "config_hash": config_id,
        "stopwords_sha256": STOPWORDS_SHA256,
        "seeds": config.seeds.to_dict(),
        "test_digest": split_digest(split.test),
        "statistics": {
            "n_train": len(split.train),
            "n_validation": len(split.validation),
            "n_test": len(split.test),
            "n_test_documents": len(groups),
            **method_stats,
        },
        "paragraph_macro_f1": paragraph_report.macro_f1,
        "document_macro_f1": document_report.macro_f1,
    }

    _write_json(out_dir / "config.json", config.to_dict())
    _write_json(out_dir / "seeds.json", config.seeds.to_dict())
    _write_json(out_dir / "manifest.json", manifest)
    paragraph_report.write_json(out_dir / "paragraph_report.json")
    paragraph_report.write_csv(out_dir / "paragraph_report.csv")
    document_report.write_json(out_dir / "document_report.json")
    document_report.write_csv(out_dir / "document_report.csv")
    with (out_dir / "predictions.jsonl").open("w", encoding="utf-8") as f:
        for p, label in zip(split.test, predicted):
            f.write(json.dumps({"id": p.id.serialize(), "label": p.label.name, "predicted": label.name},
                               sort_keys=True) + "\n")

    logger.info("Run %s finished: paragraph macro-F1 %.4f, document macro-F1 %.4f",
                config.name, paragraph_report.macro_f1, document_report.macro_f1)
    return RunResult(out_dir, paragraph_report, document_report, manifest, list(zip(split.test, predicted)))


# -- Comparison ----------------------------------------------------------------

@dataclass
class ComparisonTable:
    """Per-class F1 rows (one per run); best[column] names the winning rows."""
    rows: List[Tuple[str, Dict[str, float]]]
    best: Dict[str, List[int]]

    def to_csv(self, path: Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["run", *COMPARISON_COLUMNS, "best"])
            for i, (name, values) in enumerate(self.rows):
                flags = [c for c in COMPARISON_COLUMNS if i in self.best[c]]
                writer.writerow([name, *(f"{values[c]:.6f}" for c in COMPARISON_COLUMNS), " ".join(flags)])

    def to_text(self) -> str:
        """Aligned table; '*' marks the best value of each column."""
        width = max(len("run"), *(len(name) for name, _ in self.rows))
        lines = ["run".ljust(width) + "".join(c.rjust(10) for c in COMPARISON_COLUMNS)]
        for i, (name, values) in enumerate(self.rows):
            cells = "".join(
                (f"{values[c]:.4f}" + ("*" if i in self.best[c] else " ")).rjust(10)
                for c in COMPARISON_COLUMNS
            )
            lines.append(name.ljust(width) + cells)
        return "\n".join(lines)


def compare_runs(run_dirs: Sequence[Path]) -> ComparisonTable:
    """
    Build the F1 comparison from the runs' manifests and paragraph
    reports only.

    Raises:
        SplitMismatch: the runs were evaluated on different test sets.
    """
    if len(run_dirs) < 2:
        raise ConfigError("compare needs at least two run directories")
    rows: List[Tuple[str, Dict[str, float]]] = []
    digests = {}
    for run_dir in map(Path, run_dirs):
        manifest_file = run_dir / "manifest.json"
        report_file = run_dir / "paragraph_report.json"
        if not manifest_file.exists() or not report_file.exists():
            raise DataError(f"{run_dir} is not a completed run", path=str(run_dir))
        manifest = json.loads(manifest_file.read_text())
        report = EvalReport.load(report_file)
        digests[str(run_dir)] = manifest["test_digest"]
        values = {c.name: float(report.f1[c]) for c in report.confusion.classes}
        values["macro"] = report.macro_f1
        rows.append((manifest.get("name") or manifest["method"], values))

    if len(set(digests.values())) > 1:
        raise SplitMismatch("Runs were evaluated on different test sets", digests=sorted(digests.items()))

    best = {}
    for column in COMPARISON_COLUMNS:
        top = max(values[column] for _, values in rows)
        best[column] = [i for i, (_, values) in enumerate(rows) if values[column] == top]
    return ComparisonTable(rows, best)
