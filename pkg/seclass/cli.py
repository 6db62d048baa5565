"""
SecClass Command Line Interface.

Provides commands for building corpora and splits, running and
comparing experiments, and inspecting document priors and topic purity.
"""

import argparse
import dataclasses
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from seclass import __version__
from seclass.config import METHODS, ExperimentConfig
from seclass.corpus import (
    SecurityClass,
    documents_from_paragraphs,
    filter_by_origin,
    ingest_directory,
    iter_paragraphs,
    read_corpus_jsonl,
    read_split,
    split_corpus,
    write_corpus_jsonl,
    write_split,
)
from seclass.errors import SecClassError
from seclass.experiment import compare_runs, run_experiment
from seclass.logs import configure_logging
from seclass.metrics import prior_table
from seclass.synthetic import SyntheticSpec, generate_synthetic_corpus, write_synthetic_cables
from seclass.topics import PruneConfig, prune_training_set, write_prune_artifacts

logger = logging.getLogger(__name__)


def _floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_ingest(args) -> int:
    """Handle 'seclass ingest' command."""
    documents = ingest_directory(
        Path(args.input), pattern=args.pattern,
        inherit_header_label=args.inherit_header_label, workers=args.workers,
    )
    if args.origin:
        documents = filter_by_origin(documents, args.origin)
    count = write_corpus_jsonl(iter_paragraphs(documents), Path(args.out))

    print(f"Ingested {len(documents)} cables ({count} paragraphs) -> {args.out}")
    return 0


def cmd_split(args) -> int:
    """Handle 'seclass split' command."""
    documents = documents_from_paragraphs(read_corpus_jsonl(Path(args.corpus)))
    split = split_corpus(documents, args.ratios, args.seed)
    write_split(split, Path(args.out_dir))

    print(f"Split {len(documents)} documents -> {args.out_dir}")
    for name, paragraphs in split.partitions().items():
        print(f"  {name + ':':<12} {len(split.document_keys[name]):>6} documents {len(paragraphs):>7} paragraphs")
    return 0


def cmd_synth(args) -> int:
    """Handle 'seclass synth' command."""
    spec = SyntheticSpec(
        n_documents=args.documents,
        n_groups=args.groups,
        confusable_rate=args.confusable_rate,
        seed=args.seed,
    )
    documents = generate_synthetic_corpus(spec)
    count = write_corpus_jsonl(iter_paragraphs(documents), Path(args.out))
    print(f"Generated {len(documents)} documents ({count} paragraphs) -> {args.out}")

    if args.cables_dir:
        paths = write_synthetic_cables(spec, Path(args.cables_dir))
        print(f"Wrote {len(paths)} cable files -> {args.cables_dir}")
    return 0


def cmd_run(args) -> int:
    """Handle 'seclass run' command."""
    config = ExperimentConfig.from_toml(Path(args.config))
    if args.method:
        config = dataclasses.replace(config, method=args.method)
    if args.splits:
        config = dataclasses.replace(config, splits=Path(args.splits), corpus=None, synthetic=None)
    if args.out:
        config = dataclasses.replace(config, out_dir=Path(args.out))

    result = run_experiment(config)

    print(f"Run {config.name} ({config.method})")
    print("=" * 50)
    print(f"  Output:              {result.out_dir}")
    print(f"  Config hash:         {result.manifest['config_hash'][:16]}")
    print(f"  Paragraph macro-F1:  {result.paragraph_report.macro_f1:.4f}")
    print(f"  Document macro-F1:   {result.document_report.macro_f1:.4f}")
    for c in sorted(SecurityClass, reverse=True):
        print(f"  F1 {c.name}:                {float(result.paragraph_report.f1[c]):.4f}")
    return 0


def cmd_compare(args) -> int:
    """Handle 'seclass compare' command."""
    table = compare_runs([Path(d) for d in args.runs])
    print(table.to_text())
    if args.csv:
        table.to_csv(Path(args.csv))
    return 0


def cmd_priors(args) -> int:
    """Handle 'seclass priors' command."""
    paragraph_prior = None
    if args.paragraph_prior:
        if len(args.paragraph_prior) != 3:
            raise argparse.ArgumentTypeError("--paragraph-prior needs three values: U,C,S")
        # Decimal text, so "0.3" stays 3/10 in the exact table.
        exact = (Fraction(str(v)) for v in args.paragraph_prior)
        paragraph_prior = dict(zip((SecurityClass.U, SecurityClass.C, SecurityClass.S), exact))

    rows = prior_table(args.max_n, paragraph_prior)
    print(f"{'n':>3}  {'Pr(U)':>14}  {'Pr(C)':>14}  {'Pr(S)':>14}")
    for row in rows:
        cells = [
            str(row[name]) if args.exact else f"{float(row[name]):.6f}"
            for name in ("U", "C", "S")
        ]
        print(f"{row['n']:>3}  " + "  ".join(f"{cell:>14}" for cell in cells))
    return 0


def cmd_topics(args) -> int:
    """Handle 'seclass topics' command."""
    if args.splits:
        paragraphs = read_split(Path(args.splits)).train
    else:
        paragraphs = read_corpus_jsonl(Path(args.corpus))

    config = PruneConfig(
        k_main=args.k_main, k_sub=args.k_sub, iterations=args.iterations,
        seed=args.seed, top_words=args.top_words,
    )
    result = prune_training_set(paragraphs, config)
    write_prune_artifacts(result, Path(args.out), config.top_words)

    stats = result.stats()
    print(f"Topic purity -> {args.out}")
    print("=" * 50)
    print(f"  Paragraphs:        {stats['n_input']}")
    print(f"  Main topics:       {stats['k_main']} ({stats['flagged_main']} flagged)")
    print(f"  Extracted:         {stats['n_extracted']}")
    print(f"  Subtopics:         {stats['k_sub']} ({stats['flagged_sub']} flagged)")
    print(f"  Removed:           {stats['n_removed']}")
    return 0


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser for the CLI."""
    parser = argparse.ArgumentParser(
        prog="seclass",
        description="SecClass - paragraph security classification experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  seclass synth --out corpus.jsonl --documents 1000 --seed 7
  seclass ingest --in cables/ --out corpus.jsonl --origin BERLIN
  seclass split --corpus corpus.jsonl --ratios 0.6,0.2,0.2 --seed 1 --out-dir splits/
  seclass run --config acess.toml --splits splits/ --out runs/acess
  seclass compare runs/acess runs/svm runs/nb --csv table.csv
  seclass priors --max-n 8 --exact
  seclass topics --splits splits/ --seed 4 --out topics/

Exit codes: 0 success, 2 configuration error, 3 data error, 4 method error.
        """
    )

    parser.add_argument(
        "--version", "-v",
        action="version",
        version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Log level (default: INFO)"
    )
    parser.add_argument(
        "--log-format",
        default="json",
        choices=["json", "text"],
        help="Log record format on stderr (default: json)"
    )

    subparsers = parser.add_subparsers(
        title="commands",
        dest="command",
        metavar="<command>"
    )

    # ===== Corpus commands =====
    ingest_parser = subparsers.add_parser("ingest", help="Parse a directory of cables into a corpus manifest")
    ingest_parser.add_argument("--in", dest="input", required=True, help="Directory of cable text files")
    ingest_parser.add_argument("--out", required=True, help="Output corpus manifest (JSON Lines)")
    ingest_parser.add_argument("--pattern", default="*.txt", help="File glob (default: *.txt)")
    ingest_parser.add_argument("--origin", action="append", help="Keep only this embassy (repeatable)")
    ingest_parser.add_argument(
        "--inherit-header-label", action="store_true",
        help="Give unmarked paragraphs the header label instead of skipping them"
    )
    ingest_parser.add_argument("--workers", type=int, default=4, help="Parser threads (default: 4)")
    ingest_parser.set_defaults(func=cmd_ingest)

    split_parser = subparsers.add_parser("split", help="Split a corpus by document into train/validation/test")
    split_parser.add_argument("--corpus", required=True, help="Corpus manifest")
    split_parser.add_argument("--ratios", type=_floats, default=[0.6, 0.2, 0.2],
                              help="Train,validation,test fractions (default: 0.6,0.2,0.2)")
    split_parser.add_argument("--seed", type=int, required=True, help="Shuffle seed")
    split_parser.add_argument("--out-dir", required=True, help="Output split directory")
    split_parser.set_defaults(func=cmd_split)

    synth_parser = subparsers.add_parser("synth", help="Generate a synthetic cable corpus")
    synth_parser.add_argument("--out", required=True, help="Output corpus manifest")
    synth_parser.add_argument("--documents", type=int, default=300, help="Number of documents (default: 300)")
    synth_parser.add_argument("--groups", type=int, default=3, help="Similarity groups (default: 3)")
    synth_parser.add_argument("--confusable-rate", type=float, default=0.0,
                              help="Fraction of confusable S/C paragraphs (default: 0)")
    synth_parser.add_argument("--seed", type=int, required=True, help="Generator seed")
    synth_parser.add_argument("--cables-dir", help="Also write raw cable files here")
    synth_parser.set_defaults(func=cmd_synth)

    # ===== Experiment commands =====
    run_parser = subparsers.add_parser("run", help="Run one experiment from a TOML config")
    run_parser.add_argument("--config", required=True, help="Experiment TOML file")
    run_parser.add_argument("--method", choices=METHODS, help="Override the configured method")
    run_parser.add_argument("--splits", help="Use this split directory as the data source")
    run_parser.add_argument("--out", help="Override the output directory")
    run_parser.set_defaults(func=cmd_run)

    compare_parser = subparsers.add_parser("compare", help="Compare finished runs on per-class F1")
    compare_parser.add_argument("runs", nargs="+", help="Run directories")
    compare_parser.add_argument("--csv", help="Also write the table as CSV")
    compare_parser.set_defaults(func=cmd_compare)

    # ===== Analysis commands =====
    priors_parser = subparsers.add_parser("priors", help="Print max-rule document class priors")
    priors_parser.add_argument("--max-n", type=int, default=8, help="Largest paragraph count (default: 8)")
    priors_parser.add_argument("--paragraph-prior", type=_floats,
                               help="Paragraph class probabilities U,C,S (default: uniform)")
    priors_parser.add_argument("--exact", action="store_true", help="Print exact fractions")
    priors_parser.set_defaults(func=cmd_priors)

    topics_parser = subparsers.add_parser("topics", help="Run topic purity pruning and write composition data")
    source = topics_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--corpus", help="Corpus manifest (all paragraphs)")
    source.add_argument("--splits", help="Split directory (training partition)")
    topics_parser.add_argument("--seed", type=int, required=True, help="Sampler seed")
    topics_parser.add_argument("--k-main", type=int, help="Main topic count (default: max(10, n/500))")
    topics_parser.add_argument("--k-sub", type=int, help="Subtopic count (default: max(5, n/200))")
    topics_parser.add_argument("--iterations", type=int, default=500, help="Gibbs sweeps (default: 500)")
    topics_parser.add_argument("--top-words", type=int, default=10, help="Words listed per topic (default: 10)")
    topics_parser.add_argument("--out", required=True, help="Output directory")
    topics_parser.set_defaults(func=cmd_topics)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    parser = create_parser()
    args = parser.parse_args(argv)

    # Show help if no command provided
    if args.command is None:
        parser.print_help()
        return 0

    configure_logging(args.log_level, json_lines=args.log_format == "json")

    try:
        return args.func(args)
    except SecClassError as e:
        logger.debug("Command %s failed", args.command, exc_info=True)
        print(json.dumps(e.to_record(), sort_keys=True), file=sys.stderr)
        return e.exit_code
    except argparse.ArgumentTypeError as e:
        parser.error(str(e))


if __name__ == "__main__":
    sys.exit(main() or 0)
