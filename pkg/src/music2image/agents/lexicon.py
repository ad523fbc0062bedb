"""Shared lexicon: the one table agents, the rule backend, and the validator read."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import ConfigError

ENERGY_CLASSES = ("static", "gentle", "moderate", "dynamic", "explosive")

FRAMINGS = ("close-up", "medium", "wide", "panoramic")

VIEWPOINTS = ("eye-level", "low-angle", "high-angle", "aerial")


class VAQuadrant(enum.Enum):
    """Quadrant of the unit VA square, thresholded at 0.5 per axis, ties high."""

    Q1 = "high_v_high_a"
    Q2 = "low_v_high_a"
    Q3 = "low_v_low_a"
    Q4 = "high_v_low_a"


QUADRANT_NAMES = tuple(q.name for q in VAQuadrant)


@dataclass(frozen=True)
class Lexicon:
    verbs: dict[str, list[str]]
    style_labels: list[str]
    styles_by_genre: dict[str, dict[str, str]]
    styles_by_quadrant: dict[str, str]
    palettes: dict[str, list[str]]
    lighting: dict[str, list[str]]
    framing: list[str]
    viewpoints: list[str]
    scene_categories: dict[str, list[str]]
    subjects: list[str]
    synonyms: dict[str, list[str]]

    def all_palette_terms(self) -> set[str]:
        return {term for terms in self.palettes.values() for term in terms}

    def synonyms_for(self, term: str) -> list[str]:
        """The term itself first, then its configured alternatives."""
        return [term, *self.synonyms.get(term, [])]


def _check_sections(raw: dict) -> None:
    required = (
        "verbs", "styles", "palettes", "lighting", "framing",
        "viewpoints", "scene_categories", "subjects", "synonyms",
    )
    missing = [s for s in required if s not in raw]
    if missing:
        raise ConfigError(f"lexicon missing sections {missing}")


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load and validate a lexicon file; None loads the shipped default."""
    if path is None:
        text = resources.files("music2image.data").joinpath("lexicon.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    _check_sections(raw)

    if set(raw["verbs"]) != set(ENERGY_CLASSES):
        raise ConfigError(f"verbs must cover exactly the classes {ENERGY_CLASSES}")
    for section in ("palettes", "lighting"):
        if set(raw[section]) != set(QUADRANT_NAMES):
            raise ConfigError(f"{section} must cover exactly quadrants {QUADRANT_NAMES}")
    if tuple(raw["framing"]) != FRAMINGS:
        raise ConfigError(f"framing must be exactly {FRAMINGS}")
    if tuple(raw["viewpoints"]) != VIEWPOINTS:
        raise ConfigError(f"viewpoints must be exactly {VIEWPOINTS}")

    styles = raw["styles"]
    labels = list(styles.get("labels", []))
    if not labels:
        raise ConfigError("styles.labels must be non-empty")
    for genre, table in styles.get("by_genre", {}).items():
        for quad, label in table.items():
            if quad not in QUADRANT_NAMES or label not in labels:
                raise ConfigError(f"bad style mapping for genre {genre!r}: {quad}={label!r}")
    by_quadrant = styles.get("by_quadrant", {})
    if set(by_quadrant) != set(QUADRANT_NAMES):
        raise ConfigError("styles.by_quadrant must cover every quadrant")
    for quad, terms in raw["palettes"].items():
        if len(terms) < 3:
            raise ConfigError(f"palette {quad} needs at least 3 terms")
    for quad, phrases in raw["lighting"].items():
        if not phrases:
            raise ConfigError(f"lighting {quad} must be non-empty")
    if not raw["subjects"]:
        raise ConfigError("subjects must be non-empty")
    if not raw["scene_categories"]:
        raise ConfigError("scene_categories must be non-empty")

    return Lexicon(
        verbs={k: list(v) for k, v in raw["verbs"].items()},
        style_labels=labels,
        styles_by_genre={g: dict(t) for g, t in styles.get("by_genre", {}).items()},
        styles_by_quadrant=dict(by_quadrant),
        palettes={k: list(v) for k, v in raw["palettes"].items()},
        lighting={k: list(v) for k, v in raw["lighting"].items()},
        framing=list(raw["framing"]),
        viewpoints=list(raw["viewpoints"]),
        scene_categories={k: list(v) for k, v in raw["scene_categories"].items()},
        subjects=list(raw["subjects"]),
        synonyms={k: list(v) for k, v in raw["synonyms"].items()},
    )
