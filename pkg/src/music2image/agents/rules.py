"""Deterministic, lexicon-driven attribute derivations.

These double as the offline rule backend's brain and as the tables the
validator checks against, so an agent's rule-path output can never
contradict the validator.
"""

from __future__ import annotations

import hashlib

from ..ingest import VAPoint
from ..metrics import tokenize
from .bundle import (
    ColorAttributes,
    CompositionAttributes,
    SceneAttributes,
    StyleAttributes,
    VerbAttributes,
)
from .lexicon import ENERGY_CLASSES, Lexicon, VAQuadrant

# Arousal bands map [0,1] onto the five energy classes in order.
AROUSAL_BANDS = ((0.0, 0.2), (0.2, 0.4), (0.4, 0.6), (0.6, 0.8), (0.8, 1.0))

# Composition bias: high arousal widens the framing and lifts the viewpoint.
HIGH_AROUSAL_THRESHOLD = 0.6
COMPOSITION_TABLE = {
    "high": {"framing": ("wide", "panoramic"), "viewpoints": ("low-angle", "aerial")},
    "low": {"framing": ("close-up", "medium"), "viewpoints": ("eye-level", "high-angle")},
}

ENV_PREPOSITIONS = (" in ", " at ", " on ", " inside ", " through ",
                    " across ", " over ", " beneath ", " under ")

ARTICLES = ("a ", "an ", "the ")

DEFAULT_SUBJECT = "lone figure"
DEFAULT_ENVIRONMENT = "open space"
DEFAULT_CATEGORY = "abstract"

PALETTE_SIZE = 3


def _stable_index(n: int, *parts: str) -> int:
    """Deterministic index into a sequence, stable across runs and platforms."""
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % n


def _stable_choice(seq, *parts: str):
    return seq[_stable_index(len(seq), *parts)]


def arousal_band(arousal: float) -> int:
    for idx, (lo, hi) in enumerate(AROUSAL_BANDS):
        if lo <= arousal < hi:
            return idx
    return len(AROUSAL_BANDS) - 1  # arousal == 1.0


def energy_class_for(arousal: float) -> str:
    return ENERGY_CLASSES[arousal_band(arousal)]


def va_quadrant(va: VAPoint) -> VAQuadrant:
    """Componentwise threshold at 0.5; values exactly 0.5 count as high."""
    high_v = va.valence >= 0.5
    high_a = va.arousal >= 0.5
    if high_v and high_a:
        return VAQuadrant.Q1
    if not high_v and high_a:
        return VAQuadrant.Q2
    if not high_v and not high_a:
        return VAQuadrant.Q3
    return VAQuadrant.Q4


def _singular(token: str) -> str:
    return token[:-1] if len(token) > 3 and token.endswith("s") else token


def _match_tokens(text: str) -> list[str]:
    return [_singular(t) for t in tokenize(text)]


def derive_scene(caption: str, lexicon: Lexicon) -> SceneAttributes:
    caption_tokens = _match_tokens(caption)
    known = {_singular(s): s for s in lexicon.subjects}
    subjects: list[str] = []
    for tok in caption_tokens:
        subj = known.get(tok)
        if subj is not None and subj not in subjects:
            subjects.append(subj)
    if not subjects:
        subjects = [DEFAULT_SUBJECT]

    lowered = caption.lower()
    environment = ""
    best = len(lowered) + 1
    for prep in ENV_PREPOSITIONS:
        pos = lowered.find(prep)
        if pos != -1 and pos < best:
            best = pos
            environment = caption[pos + len(prep):].strip()
    if environment:
        env_low = environment.lower()
        for art in ARTICLES:
            if env_low.startswith(art):
                environment = environment[len(art):]
                break
    if not environment:
        environment = DEFAULT_ENVIRONMENT

    env_tokens = set(_match_tokens(environment)) or set(caption_tokens)
    best_cat, best_hits = DEFAULT_CATEGORY, 0
    for cat, keywords in lexicon.scene_categories.items():
        hits = sum(1 for kw in keywords if _singular(kw.lower()) in env_tokens)
        if hits > best_hits:
            best_cat, best_hits = cat, hits
    return SceneAttributes(tuple(subjects), environment, best_cat)


def derive_verb(caption: str, va: VAPoint, lexicon: Lexicon) -> VerbAttributes:
    energy = energy_class_for(va.arousal)
    candidates = lexicon.verbs[energy]
    caption_tokens = set(_match_tokens(caption))
    for verb in candidates:
        if set(_match_tokens(verb)) & caption_tokens:
            return VerbAttributes(verb, energy)
    return VerbAttributes(_stable_choice(candidates, "verb", caption, energy), energy)


def derive_style(caption: str, va: VAPoint, lexicon: Lexicon) -> StyleAttributes:
    quad = va_quadrant(va).name
    caption_tokens = set(_match_tokens(caption))
    for genre in lexicon.styles_by_genre:
        if _singular(genre.lower()) in caption_tokens:
            label = lexicon.styles_by_genre[genre].get(quad)
            if label is not None:
                return StyleAttributes(label)
    return StyleAttributes(lexicon.styles_by_quadrant[quad])


def derive_color(caption: str, va: VAPoint, lexicon: Lexicon) -> ColorAttributes:
    quad = va_quadrant(va).name
    terms = lexicon.palettes[quad]
    start = _stable_index(len(terms), "palette", caption, quad)
    palette = tuple(terms[(start + i) % len(terms)] for i in range(PALETTE_SIZE))
    lighting = _stable_choice(lexicon.lighting[quad], "lighting", caption, quad)
    return ColorAttributes(palette, lighting)


def derive_composition(caption: str, va: VAPoint, lexicon: Lexicon) -> CompositionAttributes:
    band = "high" if va.arousal >= HIGH_AROUSAL_THRESHOLD else "low"
    framing = _stable_choice(COMPOSITION_TABLE[band]["framing"], "framing", caption, band)
    viewpoint = _stable_choice(COMPOSITION_TABLE[band]["viewpoints"], "viewpoint", caption, band)
    return CompositionAttributes(framing, viewpoint)


DERIVATIONS = {
    "scene": lambda caption, va, lex: derive_scene(caption, lex),
    "verb": derive_verb,
    "style": derive_style,
    "color": derive_color,
    "composition": derive_composition,
}
