import json

import numpy as np
import pytest

from conftest import make_ontology, make_pool, make_transcript, make_tutorial
from tutorec.corpus import AnnotationRecord
from tutorec.embed import EmbeddingTable
from tutorec.evaluation import (
    EvalReport,
    baseline_information,
    baseline_keyword,
    baseline_string_similarity,
    evaluate_supervised,
    evaluate_unsupervised,
    hit_at_k,
    sentence_gold,
    transcript_gold,
)
from tutorec.ranker import make_ranked_list, score_str


class TestHitAtK:
    def test_gold_at_rank_two(self):
        assert hit_at_k(["a", "g", "b"], {"g"}, 3) == 1

    def test_gold_below_cutoff(self):
        assert hit_at_k(["a", "b", "c", "g"], {"g"}, 3) == 0

    def test_any_gold_counts(self):
        ranked = ["x1", "x2", "x3", "x4", "g1", "g2"]
        assert hit_at_k(ranked, {"g1", "g2"}, 5) == 1

    def test_monotone_in_k(self):
        rng = np.random.default_rng(0)
        ids = [f"t{i}" for i in range(10)]
        for _ in range(50):
            ranked = list(rng.permutation(ids))
            gold = {str(rng.choice(ids))}
            assert hit_at_k(ranked, gold, 3) <= hit_at_k(ranked, gold, 5)

    def test_validation(self):
        with pytest.raises(ValueError):
            hit_at_k(["a"], {"a"}, 0)
        with pytest.raises(ValueError):
            hit_at_k(["a"], set(), 3)


@pytest.fixture
def basis_table():
    vectors = {}
    for axis, token in enumerate(("x", "y", "z", "chat")):
        vec = np.zeros(4)
        vec[axis] = 1.0
        vectors[token] = vec
    return EmbeddingTable(dim=4, vectors=vectors)


@pytest.fixture
def planted():
    transcripts = [
        make_transcript("dx", ["x", "x", "chat"]),
        make_transcript("dy", ["y", "chat", "y"]),
    ]
    pool = make_pool(
        make_tutorial("tx", ["x", "x"]),
        make_tutorial("ty", ["y", "y"]),
        make_tutorial("tz", ["z"]),
    )
    annotations = [
        AnnotationRecord("dx", 0, ("tx",)),
        AnnotationRecord("dy", 0, ("ty",)),
    ]
    return transcripts, pool, annotations


class TestBaselines:
    def test_string_identical_text_ranks_first(self, planted, basis_table):
        transcripts, pool, _ = planted
        ranking = baseline_string_similarity(transcripts[0], pool, basis_table)
        assert ranking.ids()[0] == "tx"

    def test_string_full_pool_permutation(self, planted, basis_table):
        transcripts, pool, _ = planted
        ranking = baseline_string_similarity(transcripts[0], pool, basis_table)
        assert sorted(ranking.ids()) == ["tx", "ty", "tz"]

    def test_string_matches_component_recomputation(self, planted, basis_table):
        # the baseline is score_str over the raw transcript, nothing else
        transcripts, pool, _ = planted
        t = transcripts[0]
        expected = make_ranked_list(
            [(tut.id, score_str(tut, list(t.tokens), basis_table), 0.0) for tut in pool.real]
        )
        assert baseline_string_similarity(t, pool, basis_table) == expected

    def test_keyword_more_shared_names_wins(self):
        ontology = make_ontology("x", "y", "z")
        t = make_transcript("d", ["x", "y", "chat"])
        pool = make_pool(
            make_tutorial("both", ["x", "y"]),
            make_tutorial("one", ["x", "z"]),
            make_tutorial("zero", ["z"]),
        )
        ranking = baseline_keyword(t, pool, ontology)
        assert ranking.ids() == ["both", "one", "zero"]

    def test_keyword_no_shared_names_pure_id_order(self):
        ontology = make_ontology("q")
        t = make_transcript("d", ["chat"])
        pool = make_pool(make_tutorial("b", ["x"]), make_tutorial("a", ["y"]))
        assert baseline_keyword(t, pool, ontology).ids() == ["a", "b"]

    def test_information_orders_by_similarity(self, toy_stats):
        # D=[b]: never-co-occurring [c] scores 0, co-occurring [a] scores log(1/3)
        t = make_transcript("d", ["b"])
        pool = make_pool(make_tutorial("ta", ["a"]), make_tutorial("tc", ["c"]))
        ranking = baseline_information(t, pool, toy_stats)
        assert ranking.ids() == ["tc", "ta"]
        assert ranking.entries[0].total == pytest.approx(0.0)
        assert ranking.entries[1].total == pytest.approx(-1.0986122886681098)

    def test_information_tie_break(self, toy_stats):
        t = make_transcript("d", ["b"])
        pool = make_pool(make_tutorial("t2", ["c"]), make_tutorial("t1", ["c"]))
        assert baseline_information(t, pool, toy_stats).ids() == ["t1", "t2"]


class TestGoldExtraction:
    def test_transcript_union_excludes_none(self):
        annotations = [
            AnnotationRecord("d", 0, ("a", "none")),
            AnnotationRecord("d", 2, ("b",)),
            AnnotationRecord("d", 3, ("none",)),
        ]
        assert transcript_gold(annotations, "none") == {"d": {"a", "b"}}

    def test_sentence_gold_merges_duplicates(self):
        annotations = [
            AnnotationRecord("d", 0, ("a",)),
            AnnotationRecord("d", 0, ("b",)),
        ]
        assert sentence_gold(annotations, "none") == {("d", 0): {"a", "b"}}


class TestEvaluateUnsupervised:
    def test_mean_over_transcripts(self, planted):
        transcripts, pool, annotations = planted
        systems = {
            "hit_first_only": lambda t: ["tx", "tz", "ty"],
        }
        report = evaluate_unsupervised(transcripts, annotations, "none", systems, ks=(1, 3))
        assert report.rows["hit_first_only"]["hit_at_1"] == pytest.approx(0.5)
        assert report.rows["hit_first_only"]["hit_at_3"] == pytest.approx(1.0)
        assert report.counts["units"] == 2

    def test_transcripts_without_gold_skipped_and_counted(self, planted):
        transcripts, pool, annotations = planted
        transcripts = transcripts + [make_transcript("dz", ["chat"])]
        report = evaluate_unsupervised(
            transcripts, annotations, "none", {"s": lambda t: ["tx"]}, ks=(1,))
        assert report.counts["skipped_transcripts"] == 1
        assert report.counts["units"] == 2

    def test_sentence_granularity_counts_sentences(self, planted):
        transcripts, pool, annotations = planted
        annotations = annotations + [AnnotationRecord("dx", 1, ("tx",))]
        report = evaluate_unsupervised(
            transcripts, annotations, "none", {"s": lambda t: ["tx"]},
            ks=(1,), granularity="sentence")
        assert report.counts["units"] == 3

    def test_no_gold_anywhere_is_an_error(self, planted):
        transcripts, pool, _ = planted
        with pytest.raises(ValueError):
            evaluate_unsupervised(transcripts, [], "none", {"s": lambda t: []})

    def test_ranked_list_accepted(self, planted, basis_table):
        transcripts, pool, annotations = planted
        systems = {"string": lambda t: baseline_string_similarity(t, pool, basis_table)}
        report = evaluate_unsupervised(transcripts, annotations, "none", systems)
        assert report.rows["string"]["hit_at_3"] == pytest.approx(1.0)

    def test_hit3_never_exceeds_hit5(self, planted, basis_table):
        transcripts, pool, annotations = planted
        systems = {"string": lambda t: baseline_string_similarity(t, pool, basis_table)}
        report = evaluate_unsupervised(transcripts, annotations, "none", systems, ks=(3, 5))
        row = report.rows["string"]
        assert row["hit_at_3"] <= row["hit_at_5"]


class TestEvaluateSupervised:
    def test_perfect_predictions(self):
        annotations = [AnnotationRecord("d", 0, ("a",)), AnnotationRecord("d", 1, ("b",))]
        predictions = {
            ("d", 0): [("a", 0.9), ("none", 0.2), ("b", 0.1)],
            ("d", 1): [("b", 0.8), ("none", 0.3), ("a", 0.2)],
        }
        report = evaluate_supervised(predictions, annotations, "none")
        assert report.rows["supervised"]["f1"] == pytest.approx(1.0)

    def test_no_positive_predictions_gives_zero(self):
        annotations = [AnnotationRecord("d", 0, ("a",))]
        predictions = {("d", 0): [("none", 0.9), ("a", 0.4)]}
        report = evaluate_supervised(predictions, annotations, "none")
        assert report.rows["supervised"]["f1"] == 0.0

    def test_coverage_gap_lists_sentences(self):
        annotations = [AnnotationRecord("d", 0, ("a",)), AnnotationRecord("d", 3, ("a",))]
        with pytest.raises(ValueError, match=r"\('d', 3\)"):
            evaluate_supervised({("d", 0): [("a", 0.9), ("none", 0.1)]}, annotations, "none")

    def test_beats_none_required(self):
        annotations = [AnnotationRecord("d", 0, ("a",))]
        predictions = {("d", 0): [("none", 0.95), ("a", 0.9)]}
        report = evaluate_supervised(predictions, annotations, "none")
        assert report.counts["predicted_pairs"] == 0

    def test_false_positives_on_unannotated_sentences_count(self):
        annotations = [AnnotationRecord("d", 0, ("a",))]
        predictions = {
            ("d", 0): [("a", 0.9), ("none", 0.1)],
            ("d", 1): [("b", 0.9), ("none", 0.1)],
        }
        report = evaluate_supervised(predictions, annotations, "none")
        row = report.rows["supervised"]
        assert row["recall"] == pytest.approx(1.0)
        assert row["precision"] == pytest.approx(0.5)


class TestReport:
    def test_render_contains_rows_and_counts(self):
        report = EvalReport(
            rows={"ours": {"hit_at_3": 0.55, "hit_at_5": 0.65}},
            counts={"units": 20},
        )
        text = report.render()
        assert "ours" in text
        assert "hit_at_3" in text
        assert "units=20" in text

    def test_json_rows_parse(self):
        report = EvalReport(rows={"a": {"f1": 0.5}}, counts={"units": 3})
        (line,) = report.json_rows()
        assert json.loads(line) == {"system": "a", "f1": 0.5, "count_units": 3}
