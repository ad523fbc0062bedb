"""Corpus-level evaluation metrics for prompt sets and generated images.

Conventions fixed here (and relied on by the report golden files):
entropy uses the natural log; n-grams are pooled across the prompt set and
never cross prompt boundaries; Jaccard works on token sets, not occurrence
counts; the music-image affect similarity is one minus the mean Euclidean
VA distance normalized by sqrt(2), the diameter of the unit square.
"""

from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyCorpus,
    EmptyUnion,
    LengthMismatch,
    OutOfRange,
    ZeroVector,
)
from .ingest import VAPoint

TOKENIZER_ID = "punct-fold-v1"

COPY_RATE_MIN_RUN = 6

CLIP_SCORE_SCALE = 2.5

TABLE_COLUMNS = (
    "Aesthetic", "V-A Sim", "Distinct-1", "Distinct-2",
    "Jaccard", "Category Entropy", "Sem-score",
)


def tokenize(text: str) -> list[str]:
    """Case-fold, replace Unicode punctuation with spaces, split on whitespace."""
    folded = text.casefold()
    cleaned = "".join(
        " " if unicodedata.category(ch).startswith("P") else ch for ch in folded
    )
    return cleaned.split()


@dataclass(frozen=True)
class TokenizedPromptSet:
    prompts: tuple[tuple[str, ...], ...]
    tokenizer_id: str = TOKENIZER_ID

    @classmethod
    def from_texts(cls, texts: Sequence[str]) -> "TokenizedPromptSet":
        return cls(tuple(tuple(tokenize(t)) for t in texts))


def _prompt_lists(prompts) -> list[Sequence[str]]:
    if isinstance(prompts, TokenizedPromptSet):
        return [list(p) for p in prompts.prompts]
    return [list(p) for p in prompts]


def distinct_n(prompts, n: int) -> float:
    """Unique n-grams over total n-grams, pooled across the prompt set."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 0
    unique: set[tuple[str, ...]] = set()
    for tokens in _prompt_lists(prompts):
        for i in range(len(tokens) - n + 1):
            unique.add(tuple(tokens[i:i + n]))
            total += 1
    if total == 0:
        raise EmptyCorpus(f"no {n}-grams in the prompt set")
    return len(unique) / total


def category_entropy(labels: Sequence[str]) -> float:
    """Shannon entropy (nats) of the empirical label distribution."""
    if not labels:
        raise EmptyCorpus("no category labels")
    counts = Counter(labels)
    n = len(labels)
    return -sum((c / n) * math.log(c / n) for c in counts.values())


def _check_pair_union(p_tokens, r_tokens, index: int) -> tuple[set, set]:
    sp, sr = set(p_tokens), set(r_tokens)
    if not sp and not sr:
        raise EmptyUnion(f"pair {index}: both token sets empty")
    return sp, sr


def mean_jaccard(pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> float:
    """Mean intersection-over-union of token sets across (prompt, reference) pairs."""
    if not pairs:
        raise EmptyCorpus("no pairs")
    total = 0.0
    for i, (p, r) in enumerate(pairs):
        sp, sr = _check_pair_union(p, r, i)
        total += len(sp & sr) / len(sp | sr)
    return total / len(pairs)


def _has_shared_run(prompt: Sequence[str], reference: Sequence[str], run: int) -> bool:
    if len(reference) < run or len(prompt) < run:
        return False
    ref_grams = {tuple(reference[i:i + run]) for i in range(len(reference) - run + 1)}
    return any(tuple(prompt[i:i + run]) in ref_grams for i in range(len(prompt) - run + 1))


def copy_rate(
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
    min_run: int = COPY_RATE_MIN_RUN,
) -> float:
    """Fraction of prompts containing a verbatim reference run of >= min_run tokens."""
    if not pairs:
        raise EmptyCorpus("no pairs")
    hits = 0
    for i, (p, r) in enumerate(pairs):
        _check_pair_union(p, r, i)
        if _has_shared_run(list(p), list(r), min_run):
            hits += 1
    return hits / len(pairs)


def _cosine(u, v, index: int) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"pair {index}: dims {u.shape} vs {v.shape}")
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector(f"pair {index}: zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


def semantic_score(prompt_embeddings: Sequence, reference_embeddings: Sequence) -> float:
    """Mean cosine similarity over aligned (prompt, reference) embedding pairs."""
    if len(prompt_embeddings) != len(reference_embeddings):
        raise LengthMismatch(
            f"{len(prompt_embeddings)} prompts vs {len(reference_embeddings)} references"
        )
    if not prompt_embeddings:
        raise EmptyCorpus("no embedding pairs")
    return sum(
        _cosine(p, r, i) for i, (p, r) in enumerate(zip(prompt_embeddings, reference_embeddings))
    ) / len(prompt_embeddings)


def aesthetic_mean(scores: Sequence[float]) -> float:
    if not scores:
        raise EmptyCorpus("no aesthetic scores")
    return float(sum(scores) / len(scores))


def clip_score_mean(image_embeddings: Sequence, prompt_embeddings: Sequence) -> float:
    """Mean of scale * max(cosine, 0) over aligned image/prompt embedding pairs."""
    if len(image_embeddings) != len(prompt_embeddings):
        raise LengthMismatch(
            f"{len(image_embeddings)} images vs {len(prompt_embeddings)} prompts"
        )
    if not image_embeddings:
        raise EmptyCorpus("no embedding pairs")
    return sum(
        CLIP_SCORE_SCALE * max(_cosine(im, pr, i), 0.0)
        for i, (im, pr) in enumerate(zip(image_embeddings, prompt_embeddings))
    ) / len(image_embeddings)


def _as_point(p) -> tuple[float, float]:
    if isinstance(p, VAPoint):
        return p.as_tuple()
    v, a = float(p[0]), float(p[1])
    return (v, a)


def va_similarity(music: Sequence, image: Sequence, mode: str = "complement_l2") -> float:
    """Affect similarity between aligned music and image VA points.

    The default is 1 - mean(||m_i - g_i|| / sqrt(2)). ``mode="cosine"`` gives
    the mean cosine between the raw VA vectors instead (kept behind a flag;
    the two disagree and the normalized-distance form is the default).
    """
    if len(music) != len(image):
        raise LengthMismatch(f"{len(music)} music points vs {len(image)} image points")
    if not music:
        raise LengthMismatch("need at least one pair")
    pts_m = [_as_point(p) for p in music]
    pts_i = [_as_point(p) for p in image]
    for pt in pts_m + pts_i:
        if not (0.0 <= pt[0] <= 1.0 and 0.0 <= pt[1] <= 1.0):
            raise OutOfRange(f"VA point {pt} outside the unit square")
    if mode == "complement_l2":
        total = sum(
            math.hypot(m[0] - g[0], m[1] - g[1]) / math.sqrt(2.0)
            for m, g in zip(pts_m, pts_i)
        )
        return 1.0 - total / len(pts_m)
    if mode == "cosine":
        return sum(_cosine(m, g, i) for i, (m, g) in enumerate(zip(pts_m, pts_i))) / len(pts_m)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class MetricsReport:
    """One row of the evaluation table."""

    aesthetic: float
    va_similarity: float
    distinct1: float
    distinct2: float
    jaccard: float
    category_entropy: float
    sem_score: float
    clip_score: float | None = None
    copy_rate: float | None = None

    def as_dict(self) -> dict:
        out = {
            "aesthetic": self.aesthetic,
            "va_similarity": self.va_similarity,
            "distinct1": self.distinct1,
            "distinct2": self.distinct2,
            "jaccard": self.jaccard,
            "category_entropy": self.category_entropy,
            "sem_score": self.sem_score,
        }
        if self.clip_score is not None:
            out["clip_score"] = self.clip_score
        if self.copy_rate is not None:
            out["copy_rate"] = self.copy_rate
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"


def build_report(
    prompts,
    reference_pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
    labels: Sequence[str],
    prompt_embeddings: Sequence,
    reference_embeddings: Sequence,
    aesthetic_scores: Sequence[float],
    music_va: Sequence,
    image_va: Sequence,
    image_embeddings: Sequence | None = None,
    image_prompt_embeddings: Sequence | None = None,
    with_copy_rate: bool = True,
) -> MetricsReport:
    """Assemble one report row; absent optional inputs yield absent fields."""
    clip = None
    if image_embeddings is not None and image_prompt_embeddings is not None:
        clip = clip_score_mean(image_embeddings, image_prompt_embeddings)
    return MetricsReport(
        aesthetic=aesthetic_mean(aesthetic_scores),
        va_similarity=va_similarity(music_va, image_va),
        distinct1=distinct_n(prompts, 1),
        distinct2=distinct_n(prompts, 2),
        jaccard=mean_jaccard(reference_pairs),
        category_entropy=category_entropy(labels),
        sem_score=semantic_score(prompt_embeddings, reference_embeddings),
        clip_score=clip,
        copy_rate=copy_rate(reference_pairs) if with_copy_rate else None,
    )


def render_table(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    """Fixed-width text table in the canonical column order."""
    name_w = max(16, max((len(n) for n, _ in rows), default=0) + 2)
    header = f"{'Method':<{name_w}}" + "".join(f"{c:>18}" for c in TABLE_COLUMNS)
    lines = [header, "-" * len(header)]
    for name, rep in rows:
        cells = (
            f"{rep.aesthetic:.2f}",
            f"{rep.va_similarity:.3f}",
            f"{rep.distinct1:.3f}",
            f"{rep.distinct2:.3f}",
            f"{rep.jaccard:.3f}",
            f"{rep.category_entropy:.3f}",
            f"{rep.sem_score:.3f}",
        )
        lines.append(f"{name:<{name_w}}" + "".join(f"{c:>18}" for c in cells))
    return "\n".join(lines) + "\n"
