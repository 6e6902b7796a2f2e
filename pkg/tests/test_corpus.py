"""Corpus module: mining, tokenization, statistics."""

from collections import Counter

import numpy as np
import pytest

from reference import ref_greedy_tokens, ref_ngram_counts
from topiary.corpus import TermSet, clean_words, load_corpus, mine_terms, tokenize


class TestCleanWords:
    def test_lowercase_and_strip(self):
        assert clean_words("Pose Estimation, 3D!") == ["pose", "estimation", "3d"]

    def test_keeps_underscore_and_hyphen(self):
        assert clean_words("pose_estimation k-means") == ["pose_estimation", "k-means"]

    def test_drops_pure_punctuation(self):
        assert clean_words("a -- b") == ["a", "b"]


class TestTermSet:
    def test_dense_ids(self):
        ts = TermSet(["b", "a", "c"])
        assert [ts.id_of[t] for t in ["b", "a", "c"]] == [0, 1, 2]
        assert ts.term(1) == "a"

    def test_duplicates_collapse(self):
        ts = TermSet(["a", "a", "b"])
        assert len(ts) == 2

    def test_save_load_roundtrip(self, tmp_path):
        ts = TermSet(["x_y", "z", "k-means"])
        path = tmp_path / "terms.txt"
        ts.save(path)
        again = TermSet.load(path)
        assert again.terms == ts.terms
        assert again.id_of == ts.id_of

    def test_max_words(self):
        assert TermSet(["a", "b_c_d"]).max_words == 3


class TestMineTerms:
    def test_all_meet_threshold(self):
        ts = mine_terms(["x y", "x y"], min_count=2, max_ngram=2)
        assert set(ts.terms) == {"x", "y", "x_y"}

    def test_below_threshold_empty(self):
        assert len(mine_terms(["x"], min_count=2, max_ngram=1)) == 0

    def test_stopword_only_ngrams_removed(self):
        docs = ["the cat sat on the mat"] * 5
        ts = mine_terms(docs, min_count=5, max_ngram=2)
        assert "the" not in ts
        assert "on_the" not in ts
        assert "the_cat" in ts  # contains a non-stopword
        assert "cat" in ts

    def test_planted_bigram_found(self):
        rng = np.random.default_rng(3)
        filler = [f"f{i}" for i in range(30)]
        docs = []
        for _ in range(50):
            words = [filler[rng.integers(30)] for _ in range(6)]
            words.insert(int(rng.integers(5)), "alpha beta")
            docs.append(" ".join(words))
        ts = mine_terms(docs, min_count=50, max_ngram=2)
        assert "alpha_beta" in ts

    def test_matches_bruteforce_counts(self):
        rng = np.random.default_rng(11)
        words = [f"w{i}" for i in range(8)]
        docs = [" ".join(words[rng.integers(8)] for _ in range(rng.integers(3, 12)))
                for _ in range(40)]
        min_count, max_ngram = 4, 3
        mined = set(mine_terms(docs, min_count=min_count, max_ngram=max_ngram).terms)
        counts = ref_ngram_counts([d.split() for d in docs], max_ngram)
        expected = {g for g, c in counts.items() if c >= min_count}
        assert mined == expected

    def test_monotone_in_min_count(self):
        rng = np.random.default_rng(5)
        docs = [" ".join(f"w{rng.integers(6)}" for _ in range(10)) for _ in range(30)]
        previous = None
        for min_count in (1, 2, 4, 8, 16):
            current = set(mine_terms(docs, min_count=min_count, max_ngram=2).terms)
            if previous is not None:
                assert current <= previous
            previous = current

    def test_validation(self):
        with pytest.raises(ValueError):
            mine_terms(["a"], min_count=0)
        with pytest.raises(ValueError):
            mine_terms(["a"], max_ngram=0)


class TestTokenize:
    def test_longest_match(self):
        ts = TermSet(["x_y", "z"])
        assert tokenize("x y z", ts).tokens == [ts.id_of["x_y"], ts.id_of["z"]]

    def test_oov_dropped(self):
        ts = TermSet(["x"])
        assert tokenize("q q", ts).tokens == []

    def test_prejoined_token_matches(self):
        ts = TermSet(["x_y"])
        assert tokenize("x_y", ts).tokens == [ts.id_of["x_y"]]

    def test_greedy_matches_reference(self):
        rng = np.random.default_rng(9)
        vocab_words = [f"w{i}" for i in range(6)]
        # terms: random unigrams/bigrams/trigrams over a tiny alphabet
        terms = set()
        for _ in range(12):
            n = int(rng.integers(1, 4))
            terms.add("_".join(vocab_words[rng.integers(6)] for _ in range(n)))
        ts = TermSet(sorted(terms))
        for _ in range(200):
            words = [vocab_words[rng.integers(6)] for _ in range(rng.integers(1, 15))]
            got = [ts.term(t) for t in tokenize(" ".join(words), ts).tokens]
            assert got == ref_greedy_tokens(words, set(ts.terms))

    def test_deterministic(self):
        ts = TermSet(["a", "b", "a_b"])
        text = "a b a b b a"
        assert tokenize(text, ts).tokens == tokenize(text, ts).tokens


class TestLoadCorpus:
    def test_counts_example(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("a b a\nb c\n", encoding="utf-8")
        corpus = load_corpus(path, TermSet(["a", "b", "c"]))
        ts = corpus.term_set
        assert corpus.term_freq[ts.id_of["a"]] == 2
        assert corpus.term_doc_freq[ts.id_of["b"]] == 2
        assert corpus.term_freq[ts.id_of["c"]] == 1
        assert corpus.num_docs == 2

    def test_empty_file_errors(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ValueError, match="zero documents"):
            load_corpus(path, TermSet(["a"]))

    def test_no_vocab_docs_error(self, tmp_path):
        path = tmp_path / "oov.txt"
        path.write_text("q q\nr r\n", encoding="utf-8")
        with pytest.raises(ValueError, match="zero documents"):
            load_corpus(path, TermSet(["a"]))

    def test_empty_docs_dropped_and_counted(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("a a\nq q\n\nb\n", encoding="utf-8")
        corpus = load_corpus(path, TermSet(["a", "b"]))
        assert corpus.num_docs == 2
        assert corpus.num_dropped == 2
        # doc ids are dense positions
        assert [d.doc_id for d in corpus.documents] == [0, 1]

    def test_statistics_recompute(self, tmp_path):
        rng = np.random.default_rng(21)
        path = tmp_path / "corpus.txt"
        lines = [" ".join(f"w{rng.integers(10)}" for _ in range(rng.integers(1, 20)))
                 for _ in range(50)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        corpus = load_corpus(path, TermSet([f"w{i}" for i in range(10)]))
        tf = np.zeros(10, dtype=np.int64)
        df = np.zeros(10, dtype=np.int64)
        for doc in corpus.documents:
            for t, c in Counter(doc.tokens).items():
                tf[t] += c
                df[t] += 1
        assert np.array_equal(tf, corpus.term_freq)
        assert np.array_equal(df, corpus.term_doc_freq)
        assert (corpus.term_freq >= corpus.term_doc_freq).all()

    def test_unknown_format(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("a\n", encoding="utf-8")
        with pytest.raises(ValueError, match="format"):
            load_corpus(path, TermSet(["a"]), fmt="parquet")

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_corpus(tmp_path / "nope.txt", TermSet(["a"]))

    def test_tokens_format_skips_cleaning(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("A_B x\n", encoding="utf-8")
        ts = TermSet(["A_B", "x"])
        corpus = load_corpus(path, ts, fmt="tokens")
        assert corpus.documents[0].tokens == [ts.id_of["A_B"], ts.id_of["x"]]
