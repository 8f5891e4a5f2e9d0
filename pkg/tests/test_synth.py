import numpy as np
import pytest

from tutorec.corpus import (
    load_annotations,
    load_ontology,
    load_transcripts,
    load_tutorial_pool,
)
from tutorec.embed import load_embeddings
from tutorec.evaluation import baseline_keyword, hit_at_k
from tutorec.synth import SynthConfig, generate_corpus, write_corpus


class TestConfigValidation:
    def test_counts_must_be_positive(self):
        with pytest.raises(ValueError):
            SynthConfig(num_tutorials=0)

    def test_noise_range(self):
        with pytest.raises(ValueError):
            SynthConfig(noise_rate=1.5)

    def test_subset_size_bounded_by_vocab(self):
        with pytest.raises(ValueError):
            SynthConfig(tools_per_tutorial=10, tool_vocab_size=5)

    def test_infeasible_subset_count(self):
        # only C(3,2)=3 distinct subsets exist
        with pytest.raises(ValueError, match="distinct tool subsets"):
            generate_corpus(SynthConfig(num_tutorials=5, tools_per_tutorial=2,
                                        tool_vocab_size=3, num_transcripts=2,
                                        transcript_length=30))

    def test_transcript_too_short_for_coverage(self):
        with pytest.raises(ValueError, match="cannot cover"):
            generate_corpus(SynthConfig(num_tutorials=2, tools_per_tutorial=5,
                                        tool_vocab_size=12, num_transcripts=2,
                                        transcript_length=3, noise_rate=0.0))


class TestGeneratorContract:
    @pytest.mark.parametrize("seed", [0, 1, 7])
    def test_noiseless_keyword_recovery(self, seed):
        config = SynthConfig(num_tutorials=8, num_transcripts=16, noise_rate=0.0,
                             transcript_length=40, tool_vocab_size=30, seed=seed)
        corpus = generate_corpus(config)
        for t in corpus.transcripts:
            ranking = baseline_keyword(t, corpus.pool, corpus.ontology)
            gold = corpus.gold_by_transcript[t.id]
            assert hit_at_k(ranking.ids(), {gold}, 1) == 1

    def test_full_noise_only_chitchat(self):
        config = SynthConfig(num_tutorials=4, num_transcripts=6, noise_rate=1.0,
                             transcript_length=30, tool_vocab_size=20, seed=3)
        corpus = generate_corpus(config)
        for t in corpus.transcripts:
            assert all(tok.startswith("chat") for tok in t.tokens)
        assert corpus.annotations == []
        # keyword baseline degenerates to id order
        ranking = baseline_keyword(corpus.transcripts[0], corpus.pool, corpus.ontology)
        assert ranking.ids() == sorted(ranking.ids())

    def test_gold_links_point_at_planted_tutorial(self):
        corpus = generate_corpus(SynthConfig(num_transcripts=10, seed=2))
        for rec in corpus.annotations:
            assert rec.linked_tutorial_ids == (corpus.gold_by_transcript[rec.transcript_id],)

    def test_every_transcript_covers_its_gold_tools(self):
        corpus = generate_corpus(SynthConfig(noise_rate=0.3, seed=4))
        from tutorec.corpus import match_tool_names, tool_names_in_tokens

        for t in corpus.transcripts:
            gold = corpus.pool.get(corpus.gold_by_transcript[t.id])
            gold_names = tool_names_in_tokens(corpus.ontology, gold.text_tokens)
            assert gold_names <= match_tool_names(t, corpus.ontology)


class TestDeterminismAndRoundTrip:
    def test_byte_identical_files_for_fixed_seed(self, tmp_path):
        config = SynthConfig(num_tutorials=5, num_transcripts=8, tool_vocab_size=20,
                             transcript_length=30, seed=9)
        paths_a = write_corpus(generate_corpus(config), tmp_path / "a")
        paths_b = write_corpus(generate_corpus(config), tmp_path / "b")
        for name in paths_a:
            assert paths_a[name].read_bytes() == paths_b[name].read_bytes()

    def test_different_seeds_differ(self, tmp_path):
        base = dict(num_tutorials=5, num_transcripts=8, tool_vocab_size=20,
                    transcript_length=30)
        paths_a = write_corpus(generate_corpus(SynthConfig(seed=1, **base)), tmp_path / "a")
        paths_b = write_corpus(generate_corpus(SynthConfig(seed=2, **base)), tmp_path / "b")
        assert paths_a["transcripts"].read_bytes() != paths_b["transcripts"].read_bytes()

    def test_round_trip_through_loaders(self, tmp_path):
        corpus = generate_corpus(SynthConfig(num_tutorials=6, num_transcripts=10,
                                             tool_vocab_size=25, transcript_length=35,
                                             seed=5))
        paths = write_corpus(corpus, tmp_path)
        transcripts = load_transcripts(paths["transcripts"])
        pool = load_tutorial_pool(paths["tutorials"])
        ontology = load_ontology(paths["ontology"])
        annotations = load_annotations(paths["annotations"], transcripts, pool)
        table = load_embeddings(paths["embeddings"])

        assert transcripts == corpus.transcripts
        assert [t.id for t in pool.tutorials] == [t.id for t in corpus.pool.tutorials]
        assert ontology == corpus.ontology
        assert annotations == corpus.annotations
        assert table.dim == corpus.embedding_dim
        for token, vec in corpus.embedding_vectors.items():
            assert np.array_equal(table.vectors[token], vec)

    def test_embeddings_cover_corpus_vocabulary(self):
        corpus = generate_corpus(SynthConfig(seed=6))
        vocab = set(corpus.embedding_vectors)
        for t in corpus.transcripts:
            assert set(t.tokens) <= vocab
        for tut in corpus.pool.real:
            assert set(tut.text_tokens) <= vocab


class TestStructure:
    def test_disjoint_subsets_when_possible(self):
        corpus = generate_corpus(SynthConfig(seed=0))
        from tutorec.corpus import tool_names_in_tokens

        seen = set()
        for tut in corpus.pool.real:
            names = tool_names_in_tokens(corpus.ontology, tut.body_tokens)
            own = {n for n in names}
            assert not (own & seen), "tool subsets expected to be disjoint"
            seen |= own

    def test_overlapping_fallback_still_distinct(self):
        config = SynthConfig(num_tutorials=10, tools_per_tutorial=3, tool_vocab_size=8,
                             num_transcripts=5, transcript_length=30, seed=1)
        corpus = generate_corpus(config)
        from tutorec.corpus import tool_names_in_tokens

        subsets = [
            frozenset(tool_names_in_tokens(corpus.ontology, tut.body_tokens))
            for tut in corpus.pool.real
        ]
        assert len(set(subsets)) == len(subsets)

    def test_pool_has_both_kinds_and_none(self):
        corpus = generate_corpus(SynthConfig(seed=0))
        kinds = {t.kind.value for t in corpus.pool.real}
        assert kinds == {"using", "howto"}
        assert corpus.pool.none.id == "none"
