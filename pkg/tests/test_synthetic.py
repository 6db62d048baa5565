"""Tests for the SecClass synthetic cable generator."""

import pytest

from seclass.corpus import SecurityClass, derive_document_label, ingest_directory, iter_paragraphs
from seclass.errors import BadSpec
from seclass.features import tokenize
from seclass.synthetic import (
    SyntheticSpec,
    generate_synthetic_cables,
    generate_synthetic_corpus,
    generate_synthetic_corpus_with_truth,
    render_cable,
    write_synthetic_cables,
)

U, C, S = SecurityClass.U, SecurityClass.C, SecurityClass.S


class TestSyntheticSpec:
    """Tests for generator settings."""

    def test_mixture_keys_parsed(self):
        """Test that class names are accepted as mixture keys."""
        spec = SyntheticSpec(mixture={"U": 0.5, "C": 0.25, "S": 0.25})
        assert spec.mixture == {U: 0.5, C: 0.25, S: 0.25}

    @pytest.mark.parametrize("changes", [
        {"mixture": {U: 0.5, C: 0.2}},
        {"mixture": {U: 1.5, C: -0.5}},
        {"n_groups": 0},
        {"n_documents": 0},
        {"paragraphs_per_document": (3, 2)},
        {"words_per_paragraph": (0, 5)},
        {"background_rate": 0.5},
        {"global_marker_purity": 1.5},
        {"confusable_rate": -0.1},
        {"marker_vocab_size": 0},
        {"origins": ()},
    ])
    def test_invalid(self, changes):
        """Test that invalid settings raise BadSpec."""
        with pytest.raises(BadSpec):
            SyntheticSpec(**changes)

    def test_dict_round_trip(self):
        """Test to_dict / from_dict."""
        spec = SyntheticSpec(n_documents=12, confusable_rate=0.1, seed=4)
        assert SyntheticSpec.from_dict(spec.to_dict()) == spec

    def test_unknown_key(self):
        """Test that unknown keys raise BadSpec."""
        with pytest.raises(BadSpec):
            SyntheticSpec.from_dict({"languages": 2})


class TestGenerate:
    """Tests for corpus generation."""

    def test_deterministic(self):
        """Test that the same spec gives the same cables."""
        spec = SyntheticSpec(n_documents=30, seed=11)
        assert generate_synthetic_cables(spec) == generate_synthetic_cables(spec)

    def test_seed_changes_output(self):
        """Test that another seed gives other cables."""
        a = generate_synthetic_cables(SyntheticSpec(n_documents=10, seed=1))[0]
        b = generate_synthetic_cables(SyntheticSpec(n_documents=10, seed=2))[0]
        assert a != b

    def test_single_class_mixture(self):
        """Test that mixture {U: 1} gives only unclassified paragraphs."""
        documents = generate_synthetic_corpus(SyntheticSpec(n_documents=40, mixture={U: 1.0}))
        assert {p.label for p in iter_paragraphs(documents)} == {U}
        assert {d.header_label for d in documents} == {U}

    def test_header_is_max_of_paragraphs(self):
        """Test the max rule on 1000 generated documents."""
        documents = generate_synthetic_corpus(SyntheticSpec(n_documents=1000, seed=3))
        assert len(documents) == 1000
        for document in documents:
            assert document.header_label == derive_document_label([p.label for p in document.paragraphs])

    def test_shape_ranges(self):
        """Test paragraph counts and lengths stay within the configured ranges."""
        spec = SyntheticSpec(n_documents=50, paragraphs_per_document=(2, 3), words_per_paragraph=(5, 8))
        for document in generate_synthetic_corpus(spec):
            assert 2 <= len(document.paragraphs) <= 3
            for p in document.paragraphs:
                assert 5 <= len(tokenize(p.text)) <= 8

    def test_origins_follow_groups(self):
        """Test that documents take their origin from the configured list."""
        spec = SyntheticSpec(n_documents=60, origins=("PARIS", "ROME"), seed=2)
        assert {d.origin for d in generate_synthetic_corpus(spec)} <= {"PARIS", "ROME"}

    def test_confusable_truth(self):
        """Test that injected paragraphs are S or C and reported by ID."""
        spec = SyntheticSpec(n_documents=80, confusable_rate=0.3, seed=5)
        documents, injected = generate_synthetic_corpus_with_truth(spec)
        by_id = {p.id.serialize(): p for p in iter_paragraphs(documents)}
        assert injected
        assert injected <= set(by_id)
        assert {by_id[i].label for i in injected} <= {S, C}

    def test_no_confusables_by_default(self):
        """Test that the default spec injects nothing."""
        _, injected = generate_synthetic_corpus_with_truth(SyntheticSpec(n_documents=20))
        assert injected == set()


class TestSyntheticFiles:
    """Tests for writing cable files."""

    def test_render_cable_parses(self):
        """Test that a rendered cable carries its header and paragraph markings."""
        text = render_cable(S, "BERLIN", 2009, 5, 12, "000042", "TALKS", [(U, "embassy staff"), (S, "visit route")])
        assert text.splitlines()[0] == S.word
        assert "1. (U) embassy staff" in text
        assert "2. (S) visit route" in text

    def test_written_cables_ingest(self, tmp_path):
        """Test that written cables parse back to the generated corpus."""
        spec = SyntheticSpec(n_documents=15, seed=8)
        paths = write_synthetic_cables(spec, tmp_path)
        assert len(paths) == 15
        ingested = ingest_directory(tmp_path, workers=2)
        generated = generate_synthetic_corpus(spec)
        assert [(p.text, p.label) for p in iter_paragraphs(ingested)] == [
            (p.text, p.label) for p in iter_paragraphs(generated)
        ]
        assert [d.header_label for d in ingested] == [d.header_label for d in generated]
