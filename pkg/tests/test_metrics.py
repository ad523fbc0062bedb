import math
import random

import numpy as np
import pytest

import oracles
from music2image.errors import (
    DimensionMismatch,
    EmptyCorpus,
    EmptyUnion,
    LengthMismatch,
    OutOfRange,
    ZeroVector,
)
from music2image.ingest import VAPoint
from music2image.metrics import (
    MetricsReport,
    TokenizedPromptSet,
    aesthetic_mean,
    build_report,
    category_entropy,
    clip_score_mean,
    copy_rate,
    distinct_n,
    mean_jaccard,
    render_table,
    semantic_score,
    tokenize,
    va_similarity,
)


class TestTokenize:
    def test_case_and_punctuation(self):
        assert tokenize("A cat, a CAT!") == ["a", "cat", "a", "cat"]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("  ,,, ") == []

    def test_hyphen_splits(self):
        assert tokenize("low-angle shot") == ["low", "angle", "shot"]

    def test_unicode_punctuation(self):
        assert tokenize("café — night… music") == ["café", "night", "music"]


class TestDistinctN:
    def test_all_unique(self):
        assert distinct_n([["a", "b", "c"]], 1) == 1.0

    def test_repeat_unigram(self):
        assert distinct_n([["a", "a", "b"]], 1) == pytest.approx(2 / 3, abs=1e-12)

    def test_bigram_hand_case(self):
        assert distinct_n([["the", "cat", "sat", "the", "cat"]], 2) == pytest.approx(
            0.75, abs=1e-12
        )

    def test_no_cross_prompt_ngrams(self):
        # bigrams: (a b) and (c d); the pair (b, c) never forms
        assert distinct_n([["a", "b"], ["c", "d"]], 2) == 1.0

    def test_duplicating_prompt_never_increases(self):
        rng = random.Random(31)
        for _ in range(50):
            prompts = [
                [rng.choice("abcde") for _ in range(rng.randint(1, 8))]
                for _ in range(rng.randint(1, 5))
            ]
            for n in (1, 2):
                try:
                    base = distinct_n(prompts, n)
                    doubled = distinct_n(prompts + [prompts[0]], n)
                except EmptyCorpus:
                    continue
                assert doubled <= base + 1e-15

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            distinct_n([], 1)
        with pytest.raises(EmptyCorpus):
            distinct_n([["a"]], 2)

    def test_accepts_tokenized_prompt_set(self):
        tps = TokenizedPromptSet.from_texts(["a cat", "a dog"])
        assert distinct_n(tps, 1) == pytest.approx(3 / 4)


class TestCategoryEntropy:
    def test_single_label_zero(self):
        assert category_entropy(["x", "x", "x"]) == 0.0

    def test_uniform_two(self):
        assert category_entropy(["a", "b"]) == pytest.approx(math.log(2), abs=1e-12)

    def test_half_quarter_quarter(self):
        labels = ["a", "a", "b", "c"]
        assert category_entropy(labels) == pytest.approx(1.5 * math.log(2), abs=1e-12)

    def test_uniform_is_maximal(self):
        uniform = ["a", "b", "c", "d"] * 3
        assert category_entropy(uniform) == pytest.approx(math.log(4), abs=1e-12)
        skewed = ["a", "a", "a", "b", "c", "d"] * 2
        assert category_entropy(skewed) < math.log(4)

    def test_empty(self):
        with pytest.raises(EmptyCorpus):
            category_entropy([])


class TestMeanJaccard:
    def test_identical(self):
        assert mean_jaccard([(["a", "b"], ["b", "a"])]) == 1.0

    def test_disjoint(self):
        assert mean_jaccard([(["a"], ["b"])]) == 0.0

    def test_hand_case(self):
        assert mean_jaccard([(["a", "b", "c"], ["b", "c", "d"])]) == 0.5

    def test_token_sets_not_counts(self):
        assert mean_jaccard([(["a", "a", "a"], ["a"])]) == 1.0

    def test_empty_union(self):
        with pytest.raises(EmptyUnion):
            mean_jaccard([([], [])])


class TestCopyRate:
    def test_verbatim_prompt(self):
        tokens = ["one", "two", "three", "four", "five", "six", "seven"]
        assert copy_rate([(tokens, tokens)]) == 1.0

    def test_no_shared_run(self):
        p = ["a", "b", "c", "d", "e", "f", "g"]
        r = ["a", "b", "c", "x", "d", "e", "f"]
        assert copy_rate([(p, r)]) == 0.0

    def test_mixed_batch(self):
        tokens = ["one", "two", "three", "four", "five", "six"]
        other = ["u", "v", "w", "x", "y", "z"]
        assert copy_rate([(tokens, tokens), (other, tokens)]) == 0.5

    def test_short_reference_never_copies(self):
        assert copy_rate([(["a", "b", "c", "d", "e", "f"], ["a", "b"])]) == 0.0


class TestSemanticScore:
    def test_identical_vectors(self):
        vecs = [np.array([1.0, 2.0]), np.array([0.5, -1.0])]
        assert semantic_score(vecs, vecs) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        a = [np.array([1.0, 0.0])]
        b = [np.array([0.0, 1.0])]
        assert semantic_score(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_mean_of_cosines(self):
        prompts = [np.array([1.0, 0.0]), np.array([1.0, 0.0])]
        refs = [np.array([1.0, 0.0]), np.array([1.0, math.sqrt(3)])]
        assert semantic_score(prompts, refs) == pytest.approx(0.75, abs=1e-12)

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            semantic_score([np.zeros(2)], [np.ones(2)])

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatch):
            semantic_score([np.ones(2)], [np.ones(3)])

    def test_count_mismatch(self):
        with pytest.raises(LengthMismatch):
            semantic_score([np.ones(2)], [np.ones(2), np.ones(2)])


class TestAestheticAndClip:
    def test_aesthetic_means(self):
        assert aesthetic_mean([6.0, 6.0, 6.0]) == 6.0
        assert aesthetic_mean([4.0, 8.0]) == 6.0

    def test_aesthetic_empty(self):
        with pytest.raises(EmptyCorpus):
            aesthetic_mean([])

    def test_clip_identical(self):
        vecs = [np.array([0.3, 0.4])]
        assert clip_score_mean(vecs, vecs) == pytest.approx(2.5, abs=1e-12)

    def test_clip_floors_negative(self):
        assert clip_score_mean(
            [np.array([1.0, 0.0])], [np.array([-1.0, 0.0])]
        ) == 0.0

    def test_clip_hand_mean(self):
        ims = [np.array([1.0, 0.0]), np.array([1.0, 0.0])]
        prs = [np.array([0.8, 0.6]), np.array([0.4, math.sqrt(1 - 0.16)])]
        assert clip_score_mean(ims, prs) == pytest.approx(2.5 * 0.6, abs=1e-12)


class TestVaSimilarity:
    def test_identical(self):
        pts = [VAPoint(0.2, 0.8), VAPoint(0.5, 0.5)]
        assert va_similarity(pts, pts) == pytest.approx(1.0, abs=1e-12)

    def test_diameter(self):
        assert va_similarity([VAPoint(0.0, 0.0)], [VAPoint(1.0, 1.0)]) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_hand_case(self):
        got = va_similarity([VAPoint(0.2, 0.4)], [VAPoint(0.5, 0.8)])
        assert got == pytest.approx(1.0 - 0.5 / math.sqrt(2.0), abs=1e-12)

    def test_symmetry_and_translation(self):
        rng = random.Random(5)
        music = [(rng.uniform(0, 0.5), rng.uniform(0, 0.5)) for _ in range(20)]
        image = [(rng.uniform(0, 0.5), rng.uniform(0, 0.5)) for _ in range(20)]
        base = va_similarity(music, image)
        assert va_similarity(image, music) == pytest.approx(base, abs=1e-12)
        shifted_m = [(v + 0.3, a + 0.4) for v, a in music]
        shifted_i = [(v + 0.3, a + 0.4) for v, a in image]
        assert va_similarity(shifted_m, shifted_i) == pytest.approx(base, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            va_similarity([(1.5, 0.0)], [(0.0, 0.0)])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            va_similarity([(0.1, 0.1)], [])

    def test_cosine_mode_flag(self):
        assert va_similarity([(1.0, 0.0)], [(0.0, 1.0)], mode="cosine") == pytest.approx(
            0.0, abs=1e-12
        )
        assert va_similarity([(0.5, 0.5)], [(1.0, 1.0)], mode="cosine") == pytest.approx(
            1.0, abs=1e-12
        )


class TestOracleSweep:
    def test_all_metrics_match_bruteforce(self):
        rng = random.Random(2024)
        vocab = ["sun", "rain", "cat", "city", "wave", "gold", "calm", "storm"]
        for _ in range(200):
            n_prompts = rng.randint(1, 10)
            prompts = [
                [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
                for _ in range(n_prompts)
            ]
            refs = [
                [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
                for _ in range(n_prompts)
            ]
            pairs = list(zip(prompts, refs))
            labels = [rng.choice("abcd") for _ in range(rng.randint(1, 20))]
            dim = rng.randint(2, 6)
            p_vecs = [[rng.uniform(-1, 1) for _ in range(dim)] for _ in range(n_prompts)]
            r_vecs = [[rng.uniform(-1, 1) for _ in range(dim)] for _ in range(n_prompts)]
            music = [(rng.random(), rng.random()) for _ in range(n_prompts)]
            image = [(rng.random(), rng.random()) for _ in range(n_prompts)]

            assert distinct_n(prompts, 1) == pytest.approx(
                oracles.distinct_n(prompts, 1), abs=1e-12
            )
            if any(len(p) >= 2 for p in prompts):
                assert distinct_n(prompts, 2) == pytest.approx(
                    oracles.distinct_n(prompts, 2), abs=1e-12
                )
            assert category_entropy(labels) == pytest.approx(
                oracles.entropy(labels), abs=1e-12
            )
            assert mean_jaccard(pairs) == pytest.approx(
                oracles.jaccard_mean(pairs), abs=1e-12
            )
            assert copy_rate(pairs) == pytest.approx(
                oracles.copy_rate(pairs), abs=1e-12
            )
            assert semantic_score(p_vecs, r_vecs) == pytest.approx(
                oracles.semantic_score(p_vecs, r_vecs), abs=1e-12
            )
            assert clip_score_mean(p_vecs, r_vecs) == pytest.approx(
                oracles.clip_score(p_vecs, r_vecs), abs=1e-12
            )
            assert va_similarity(music, image) == pytest.approx(
                oracles.va_similarity(music, image), abs=1e-12
            )

    def test_permutation_invariance(self):
        rng = random.Random(77)
        prompts = [[rng.choice("abc") for _ in range(5)] for _ in range(6)]
        refs = [[rng.choice("abc") for _ in range(5)] for _ in range(6)]
        pairs = list(zip(prompts, refs))
        shuffled = pairs[:]
        rng.shuffle(shuffled)
        assert distinct_n([p for p, _ in pairs], 2) == distinct_n(
            [p for p, _ in shuffled], 2
        )
        assert mean_jaccard(pairs) == pytest.approx(mean_jaccard(shuffled), abs=1e-15)
        labels = [rng.choice("xyz") for _ in range(30)]
        shuffled_labels = labels[:]
        rng.shuffle(shuffled_labels)
        assert category_entropy(labels) == pytest.approx(
            category_entropy(shuffled_labels), abs=1e-12
        )


class TestReport:
    def _inputs(self):
        prompts = [["a", "cat", "sings"], ["a", "dog", "howls"]]
        refs = [["a", "cat"], ["a", "dog"]]
        vecs = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        return dict(
            prompts=prompts,
            reference_pairs=list(zip(prompts, refs)),
            labels=["urban", "nature"],
            prompt_embeddings=vecs,
            reference_embeddings=vecs,
            aesthetic_scores=[5.0, 7.0],
            music_va=[(0.5, 0.5), (0.2, 0.2)],
            image_va=[(0.5, 0.5), (0.2, 0.2)],
        )

    def test_full_report(self):
        report = build_report(
            **self._inputs(),
            image_embeddings=[np.ones(3)],
            image_prompt_embeddings=[np.ones(3)],
        )
        assert report.aesthetic == 6.0
        assert report.va_similarity == pytest.approx(1.0)
        assert report.clip_score == pytest.approx(2.5)
        assert report.copy_rate == 0.0

    def test_optional_fields_absent(self):
        report = build_report(**self._inputs(), with_copy_rate=False)
        assert report.clip_score is None
        assert report.copy_rate is None
        assert "clip_score" not in report.as_dict()

    def test_table_column_order(self):
        report = build_report(**self._inputs())
        table = render_table([("Ours", report)])
        header = table.splitlines()[0]
        cols = ["Aesthetic", "V-A Sim", "Distinct-1", "Distinct-2",
                "Jaccard", "Category Entropy", "Sem-score"]
        positions = [header.index(c) for c in cols]
        assert positions == sorted(positions)
