"""The structured text block agents speak: fenced, line-oriented key: value.

Free-form model prose is never consumed downstream; everything crossing an
agent boundary goes through parse_block and the per-role converters here.
"""

from __future__ import annotations

from ..errors import UnparseableOutput
from ..ingest import VAPoint
from .bundle import (
    ColorAttributes,
    CompositionAttributes,
    SceneAttributes,
    StyleAttributes,
    VerbAttributes,
)
from .lexicon import ENERGY_CLASSES, FRAMINGS, VIEWPOINTS, Lexicon
from .rules import COMPOSITION_TABLE, HIGH_AROUSAL_THRESHOLD, energy_class_for, va_quadrant

FENCE = "```"

ROLE_KEYS = {
    "scene": ("subjects", "environment", "category"),
    "verb": ("action", "energy_class"),
    "style": ("label",),
    "color": ("palette", "lighting"),
    "composition": ("framing", "viewpoint"),
}


def format_block(fields: dict[str, str]) -> str:
    body = "\n".join(f"{key}: {value}" for key, value in fields.items())
    return f"{FENCE}\n{body}\n{FENCE}"


def parse_block(text: str, allowed_keys: tuple[str, ...]) -> dict[str, str]:
    """Extract the first fenced block and parse its key: value lines.

    Unknown keys, duplicate keys, missing keys, and empty values are all
    rejected; the caller decides whether to retry or fall back.
    """
    lines = text.splitlines()
    fence_idx = [i for i, ln in enumerate(lines) if ln.strip().startswith(FENCE)]
    if len(fence_idx) < 2:
        raise UnparseableOutput("no fenced block found")
    start, end = fence_idx[0] + 1, fence_idx[1]
    fields: dict[str, str] = {}
    for raw in lines[start:end]:
        line = raw.strip()
        if not line:
            continue
        if ":" not in line:
            raise UnparseableOutput(f"not a key: value line: {line!r}")
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key not in allowed_keys:
            raise UnparseableOutput(f"unknown key {key!r}")
        if key in fields:
            raise UnparseableOutput(f"duplicate key {key!r}")
        if not value:
            raise UnparseableOutput(f"empty value for key {key!r}")
        fields[key] = value
    missing = [k for k in allowed_keys if k not in fields]
    if missing:
        raise UnparseableOutput(f"missing keys {missing}")
    return fields


def _split_list(value: str) -> tuple[str, ...]:
    items = tuple(part.strip() for part in value.split(",") if part.strip())
    if not items:
        raise UnparseableOutput(f"empty list value {value!r}")
    return items


# --- per-role conversions; parsing validates against the shared tables ---

def scene_to_fields(attrs: SceneAttributes) -> dict[str, str]:
    return {
        "subjects": ", ".join(attrs.subjects),
        "environment": attrs.environment,
        "category": attrs.category,
    }


def fields_to_scene(fields: dict[str, str], lexicon: Lexicon, va: VAPoint) -> SceneAttributes:
    subjects = _split_list(fields["subjects"])
    if fields["category"] not in lexicon.scene_categories:
        raise UnparseableOutput(f"category {fields['category']!r} not in the scene taxonomy")
    return SceneAttributes(subjects, fields["environment"], fields["category"])


def verb_to_fields(attrs: VerbAttributes) -> dict[str, str]:
    return {"action": attrs.action, "energy_class": attrs.energy_class}


def fields_to_verb(fields: dict[str, str], lexicon: Lexicon, va: VAPoint) -> VerbAttributes:
    energy = fields["energy_class"]
    if energy not in ENERGY_CLASSES:
        raise UnparseableOutput(f"unknown energy class {energy!r}")
    if energy != energy_class_for(va.arousal):
        raise UnparseableOutput(
            f"energy class {energy!r} does not match arousal {va.arousal}"
        )
    return VerbAttributes(fields["action"], energy)


def style_to_fields(attrs: StyleAttributes) -> dict[str, str]:
    return {"label": attrs.label}


def fields_to_style(fields: dict[str, str], lexicon: Lexicon, va: VAPoint) -> StyleAttributes:
    if fields["label"] not in lexicon.style_labels:
        raise UnparseableOutput(f"style label {fields['label']!r} not in the lexicon")
    return StyleAttributes(fields["label"])


def color_to_fields(attrs: ColorAttributes) -> dict[str, str]:
    return {"palette": ", ".join(attrs.palette), "lighting": attrs.lighting}


def fields_to_color(fields: dict[str, str], lexicon: Lexicon, va: VAPoint) -> ColorAttributes:
    palette = _split_list(fields["palette"])
    if not 2 <= len(palette) <= 5:
        raise UnparseableOutput(f"palette must have 2-5 terms, got {len(palette)}")
    quadrant_terms = set(lexicon.palettes[va_quadrant(va).name])
    bad = [t for t in palette if t not in quadrant_terms]
    if bad:
        raise UnparseableOutput(f"palette terms {bad} outside the quadrant family")
    return ColorAttributes(palette, fields["lighting"])


def composition_to_fields(attrs: CompositionAttributes) -> dict[str, str]:
    return {"framing": attrs.framing, "viewpoint": attrs.viewpoint}


def fields_to_composition(
    fields: dict[str, str], lexicon: Lexicon, va: VAPoint
) -> CompositionAttributes:
    framing, viewpoint = fields["framing"], fields["viewpoint"]
    if framing not in FRAMINGS:
        raise UnparseableOutput(f"unknown framing {framing!r}")
    if viewpoint not in VIEWPOINTS:
        raise UnparseableOutput(f"unknown viewpoint {viewpoint!r}")
    band = "high" if va.arousal >= HIGH_AROUSAL_THRESHOLD else "low"
    if framing not in COMPOSITION_TABLE[band]["framing"]:
        raise UnparseableOutput(f"framing {framing!r} off the {band}-arousal table")
    if viewpoint not in COMPOSITION_TABLE[band]["viewpoints"]:
        raise UnparseableOutput(f"viewpoint {viewpoint!r} off the {band}-arousal table")
    return CompositionAttributes(framing, viewpoint)


TO_FIELDS = {
    "scene": scene_to_fields,
    "verb": verb_to_fields,
    "style": style_to_fields,
    "color": color_to_fields,
    "composition": composition_to_fields,
}

FROM_FIELDS = {
    "scene": fields_to_scene,
    "verb": fields_to_verb,
    "style": fields_to_style,
    "color": fields_to_color,
    "composition": fields_to_composition,
}
