import math
import random

import pytest

import oracles
from music2image.errors import EmptyInput
from music2image.ingest import VAPoint
from music2image.pairing import CrossModalPair, pair_by_va, va_pair_similarity


def pts(rows):
    return [(name, VAPoint(v, a)) for name, v, a in rows]


class TestBasics:
    def test_exact_match_dominates(self):
        music = pts([("m1", 0.5, 0.5)])
        images = pts([("exact", 0.5, 0.5), ("far", 0.0, 0.0)])
        pairs = pair_by_va(music, images, n_pairs=1, min_similarity=0.0)
        assert pairs == [CrossModalPair("m1", "exact", 1.0)]

    def test_empty_inputs(self):
        with pytest.raises(EmptyInput):
            pair_by_va([], pts([("i", 0.5, 0.5)]), 1)
        with pytest.raises(EmptyInput):
            pair_by_va(pts([("m", 0.5, 0.5)]), [], 1)

    def test_min_similarity_filters(self):
        music = pts([("m1", 0.0, 0.0)])
        images = pts([("i1", 1.0, 1.0)])  # similarity exactly 0
        assert pair_by_va(music, images, 1, min_similarity=0.5) == []

    def test_shortfall_reported_not_fatal(self, caplog):
        music = pts([("m1", 0.1, 0.1), ("m2", 0.9, 0.9)])
        images = pts([("i1", 0.1, 0.1)])
        pairs = pair_by_va(music, images, n_pairs=2, min_similarity=0.0)
        assert len(pairs) == 1

    def test_similarity_formula(self):
        a, b = VAPoint(0.2, 0.4), VAPoint(0.5, 0.8)
        assert va_pair_similarity(a, b) == pytest.approx(
            1.0 - 0.5 / math.sqrt(2.0), abs=1e-12
        )


class TestAgainstOracle:
    def test_toy_3x3_matches_exhaustive_scan(self):
        music = pts([("m1", 0.1, 0.1), ("m2", 0.5, 0.5), ("m3", 0.9, 0.9)])
        images = pts([("i1", 0.2, 0.1), ("i2", 0.5, 0.6), ("i3", 0.8, 0.8)])
        got = pair_by_va(music, images, n_pairs=3, min_similarity=0.0)
        want = oracles.greedy_pairs(
            [(n, (p.valence, p.arousal)) for n, p in music],
            [(n, (p.valence, p.arousal)) for n, p in images],
            3, 0.0,
        )
        assert [(p.clip_id, p.image_id) for p in got] == [(c, i) for c, i, _ in want]
        for p, (_, _, s) in zip(got, want):
            assert p.similarity == pytest.approx(s, abs=1e-12)

    def test_random_instances_match_oracle(self):
        rng = random.Random(42)
        for _ in range(100):
            n_m, n_i = rng.randint(1, 6), rng.randint(1, 6)
            music = [(f"m{j}", (rng.random(), rng.random())) for j in range(n_m)]
            images = [(f"i{j}", (rng.random(), rng.random())) for j in range(n_i)]
            n_pairs = rng.randint(1, 6)
            thr = rng.choice([0.0, 0.5, 0.8])
            got = pair_by_va(
                [(n, VAPoint(*p)) for n, p in music],
                [(n, VAPoint(*p)) for n, p in images],
                n_pairs, thr,
            )
            want = oracles.greedy_pairs(music, images, n_pairs, thr)
            assert [(p.clip_id, p.image_id) for p in got] == [(c, i) for c, i, _ in want]


class TestInvariants:
    def _random_instance(self, rng):
        n_m, n_i = rng.randint(2, 12), rng.randint(2, 12)
        music = [(f"m{j}", VAPoint(rng.random(), rng.random())) for j in range(n_m)]
        images = [(f"i{j}", VAPoint(rng.random(), rng.random())) for j in range(n_i)]
        return music, images

    def test_injectivity_and_ordering(self):
        rng = random.Random(7)
        for _ in range(100):
            music, images = self._random_instance(rng)
            pairs = pair_by_va(music, images, n_pairs=10, min_similarity=0.0)
            clips = [p.clip_id for p in pairs]
            imgs = [p.image_id for p in pairs]
            assert len(set(clips)) == len(clips)
            assert len(set(imgs)) == len(imgs)
            sims = [p.similarity for p in pairs]
            assert sims == sorted(sims, reverse=True)

    def test_input_permutation_invariance(self):
        rng = random.Random(9)
        music, images = self._random_instance(rng)
        base = pair_by_va(music, images, n_pairs=8, min_similarity=0.0)
        shuffled_m, shuffled_i = music[:], images[:]
        rng.shuffle(shuffled_m)
        rng.shuffle(shuffled_i)
        again = pair_by_va(shuffled_m, shuffled_i, n_pairs=8, min_similarity=0.0)
        assert base == again
