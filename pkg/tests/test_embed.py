import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_transcript
from tutorec.corpus import FormatError
from tutorec.embed import (
    EmbeddingTable,
    ExternalTokenVectors,
    cosine,
    load_embeddings,
    load_token_vectors,
    pool_max,
    pool_mean,
    save_embeddings,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


class TestLoadEmbeddings:
    def test_basic_file(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1 0 0 0\ndog 0 1 0 0\nbrush 0 0 1 0\n")
        table = load_embeddings(path)
        assert table.dim == 4
        assert len(table.vectors) == 3
        assert np.array_equal(table.embed_word("cat"), [1, 0, 0, 0])

    def test_dim_mismatch_reports_line(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1 0 0 0\ndog 0 1 0\n")
        with pytest.raises(FormatError, match=":2"):
            load_embeddings(path)

    def test_duplicate_token_last_wins(self, tmp_path, caplog):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1 0\ncat 0 2\n")
        with caplog.at_level("WARNING"):
            table = load_embeddings(path)
        assert "duplicate embedding" in caplog.text
        assert np.array_equal(table.embed_word("cat"), [0, 2])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("")
        with pytest.raises(FormatError, match="empty"):
            load_embeddings(path)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("cat 1 x\n")
        with pytest.raises(FormatError, match=":1"):
            load_embeddings(path)

    def test_save_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        table = EmbeddingTable(dim=3, vectors={f"w{i}": rng.standard_normal(3) for i in range(4)})
        path = tmp_path / "emb.txt"
        save_embeddings(path, table)
        loaded = load_embeddings(path)
        for token, vec in table.vectors.items():
            assert np.array_equal(loaded.vectors[token], vec)


class TestOov:
    def test_in_vocab_returns_stored(self):
        table = EmbeddingTable(dim=2, vectors={"brush": np.array([3.0, 4.0])})
        assert np.array_equal(table.embed_word("brush"), [3.0, 4.0])

    def test_oov_deterministic_for_seed(self):
        t1 = EmbeddingTable(dim=8, vectors={}, oov_seed=42)
        t2 = EmbeddingTable(dim=8, vectors={}, oov_seed=42)
        assert np.array_equal(t1.embed_word("mystery"), t2.embed_word("mystery"))

    def test_oov_depends_on_seed(self):
        t1 = EmbeddingTable(dim=8, vectors={}, oov_seed=1)
        t2 = EmbeddingTable(dim=8, vectors={}, oov_seed=2)
        assert not np.allclose(t1.embed_word("mystery"), t2.embed_word("mystery"))

    def test_short_token_single_bucket(self):
        table = EmbeddingTable(dim=8, vectors={})
        vec = table.embed_word("ab")
        # whole-token bucket vectors are unit length; trigram means are not
        assert np.linalg.norm(vec) == pytest.approx(1.0)

    def test_trigram_mean(self):
        table = EmbeddingTable(dim=8, vectors={})
        expected = np.mean([table.embed_word("abc"), table.embed_word("bcd")], axis=0)
        # "abcd" has trigrams abc, bcd; each is itself a single-bucket token
        assert np.allclose(table.embed_word("abcd"), expected)


class TestPooling:
    def test_pool_max(self):
        assert np.array_equal(pool_max([[1, 5], [3, 2]]), [3, 5])

    def test_pool_mean(self):
        assert np.array_equal(pool_mean([[1, 5], [3, 3]]), [2, 4])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            pool_max([])
        with pytest.raises(ValueError):
            pool_mean([])

    @given(st.lists(st.lists(finite, min_size=3, max_size=3), min_size=1, max_size=6))
    def test_pool_max_permutation_and_duplication_invariant(self, rows):
        base = pool_max(rows)
        assert np.array_equal(pool_max(rows[::-1]), base)
        assert np.array_equal(pool_max(rows + rows), base)


class TestCosine:
    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_identity(self):
        v = np.array([0.3, -2.0, 1.0])
        assert cosine(v, v) == pytest.approx(1.0)

    def test_zero_norm_guard(self):
        assert cosine(np.zeros(3), np.ones(3)) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            cosine(np.ones(2), np.ones(3))

    @given(
        st.lists(finite, min_size=3, max_size=3),
        st.lists(finite, min_size=3, max_size=3),
        st.floats(min_value=0.1, max_value=100.0),
    )
    def test_symmetry_and_scale_invariance(self, u, v, scale):
        u, v = np.array(u), np.array(v)
        assert cosine(u, v) == pytest.approx(cosine(v, u), abs=1e-12)
        assert cosine(scale * u, v) == pytest.approx(cosine(u, v), abs=1e-9)


class TestExternalTokenVectors:
    def test_load_and_lookup(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("vid0 0 1 0\nvid0 1 0 1\n")
        vecs = load_token_vectors(path)
        t = make_transcript("vid0", ["hello", "there"])
        assert vecs.token_vectors(t).shape == (2, 2)

    def test_missing_transcript(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("vid0 0 1 0\n")
        vecs = load_token_vectors(path)
        with pytest.raises(KeyError, match="vid9"):
            vecs.token_vectors(make_transcript("vid9", ["x"]))

    def test_non_contiguous_indices(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("vid0 0 1 0\nvid0 2 0 1\n")
        with pytest.raises(FormatError, match="contiguous"):
            load_token_vectors(path)

    def test_token_count_mismatch(self):
        vecs = ExternalTokenVectors(dim=2, by_transcript={"v": np.zeros((2, 2))})
        with pytest.raises(ValueError, match="cover"):
            vecs.token_vectors(make_transcript("v", ["a", "b", "c"]))
