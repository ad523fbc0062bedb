"""Cross-modal benchmark construction: greedy one-to-one matching in VA space.

Pair similarity is the same functional form as the per-pair affect metric:
1 - ||va_music - va_image|| / sqrt(2). Candidates are taken in descending
similarity with a total lexicographic tie-break on (clip_id, image_id), so
the selected pair set is invariant to input ordering.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInput
from .ingest import VAPoint

log = logging.getLogger(__name__)

DEFAULT_MIN_SIMILARITY = 0.85


@dataclass(frozen=True)
class CrossModalPair:
    clip_id: str
    image_id: str
    similarity: float

    def to_json(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "image_id": self.image_id,
            "similarity": self.similarity,
        }


def va_pair_similarity(a: VAPoint, b: VAPoint) -> float:
    return 1.0 - math.hypot(a.valence - b.valence, a.arousal - b.arousal) / math.sqrt(2.0)


def pair_by_va(
    music: Sequence[tuple[str, VAPoint]],
    images: Sequence[tuple[str, VAPoint]],
    n_pairs: int,
    min_similarity: float = DEFAULT_MIN_SIMILARITY,
) -> list[CrossModalPair]:
    """Greedily match music clips to images by VA similarity.

    Each clip and each image is used at most once. Fewer qualifying
    candidates than n_pairs is reported, not fatal: the caller gets what
    exists. Quadratic in the input sizes; fine for benchmark-scale corpora.
    """
    if not music or not images:
        raise EmptyInput("both music and image lists must be non-empty")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")

    m_pts = np.array([[p.valence, p.arousal] for _, p in music], dtype=np.float64)
    i_pts = np.array([[p.valence, p.arousal] for _, p in images], dtype=np.float64)
    dist = np.sqrt(((m_pts[:, None, :] - i_pts[None, :, :]) ** 2).sum(axis=-1))
    sim = 1.0 - dist / math.sqrt(2.0)

    mi, ii = np.nonzero(sim >= min_similarity)
    candidates = sorted(
        ((-float(sim[a, b]), music[a][0], images[b][0], int(a), int(b))
         for a, b in zip(mi, ii)),
    )

    used_music: set[int] = set()
    used_images: set[int] = set()
    pairs: list[CrossModalPair] = []
    for neg_sim, clip_id, image_id, a, b in candidates:
        if a in used_music or b in used_images:
            continue
        used_music.add(a)
        used_images.add(b)
        pairs.append(CrossModalPair(clip_id, image_id, -neg_sim))
        if len(pairs) == n_pairs:
            break
    if len(pairs) < n_pairs:
        log.warning(
            "only %d of %d requested pairs reach similarity >= %s",
            len(pairs), n_pairs, min_similarity,
        )
    return pairs


def write_pairs_jsonl(path, pairs: Sequence[CrossModalPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_json(), sort_keys=True) + "\n")
