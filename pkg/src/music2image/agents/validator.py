"""Report-only consistency rules over an attribute bundle.

The validator never edits attributes: it emits a report and the pipeline
decides what to re-query. Rules R1-R4 cover redundancy, format, affect
contradictions, and emptiness/overflow; a bundle passes iff no flag has
error severity. Attributes ablated to None are skipped by every rule.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ingest import VAPoint
from ..metrics import tokenize
from .bundle import AttributeBundle
from .lexicon import ENERGY_CLASSES, FRAMINGS, VIEWPOINTS, Lexicon
from .rules import arousal_band, va_quadrant

MAX_FIELD_CHARS = 512

ENERGY_BAND_TOLERANCE = 1

STOPWORDS = frozenset({
    "a", "an", "the", "in", "on", "at", "of", "to", "and", "or", "with",
    "is", "are", "was", "be", "by", "for", "from", "into", "through",
    "over", "under", "up", "down", "its", "it",
})


@dataclass(frozen=True)
class ValidationFlag:
    rule_id: str
    severity: str  # warning | error
    message: str
    fields: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "severity": self.severity,
            "message": self.message,
            "fields": list(self.fields),
        }


@dataclass(frozen=True)
class ValidationReport:
    flags: tuple[ValidationFlag, ...]

    @property
    def passed(self) -> bool:
        return not any(f.severity == "error" for f in self.flags)

    def error_fields(self) -> set[str]:
        return {path for f in self.flags if f.severity == "error" for path in f.fields}

    def to_json(self) -> dict:
        return {"passed": self.passed, "flags": [f.to_json() for f in self.flags]}


def _text_fields(bundle: AttributeBundle) -> dict[str, str]:
    fields: dict[str, str] = {}
    if bundle.scene is not None:
        fields["scene.subjects"] = ", ".join(bundle.scene.subjects)
        fields["scene.environment"] = bundle.scene.environment
        fields["scene.category"] = bundle.scene.category
    if bundle.verb is not None:
        fields["verb.action"] = bundle.verb.action
    if bundle.style is not None:
        fields["style.label"] = bundle.style.label
    if bundle.color is not None:
        fields["color.palette"] = ", ".join(bundle.color.palette)
        fields["color.lighting"] = bundle.color.lighting
    if bundle.composition is not None:
        fields["composition.framing"] = bundle.composition.framing
        fields["composition.viewpoint"] = bundle.composition.viewpoint
    return fields


def _redundancy_flags(fields: dict[str, str]) -> list[ValidationFlag]:
    seen: dict[str, set[str]] = {}
    for path, text in fields.items():
        for token in set(tokenize(text)) - STOPWORDS:
            seen.setdefault(token, set()).add(path)
    flags = []
    for token in sorted(seen):
        paths = seen[token]
        if len(paths) >= 3:
            flags.append(ValidationFlag(
                "R1", "warning",
                f"word {token!r} repeated across {len(paths)} attribute fields",
                tuple(sorted(paths)),
            ))
    return flags


def validate(bundle: AttributeBundle, va: VAPoint, lexicon: Lexicon) -> ValidationReport:
    flags: list[ValidationFlag] = []
    fields = _text_fields(bundle)
    quadrant = va_quadrant(va)

    # R1: the same content word in >= 3 attribute fields
    flags.extend(_redundancy_flags(fields))

    # R2: format and lexicon membership
    if bundle.scene is not None and bundle.scene.category not in lexicon.scene_categories:
        flags.append(ValidationFlag(
            "R2", "error",
            f"scene category {bundle.scene.category!r} not in the taxonomy",
            ("scene.category",),
        ))
    if bundle.verb is not None and bundle.verb.energy_class not in ENERGY_CLASSES:
        flags.append(ValidationFlag(
            "R2", "error",
            f"unknown energy class {bundle.verb.energy_class!r}",
            ("verb.energy_class",),
        ))
    if bundle.style is not None and bundle.style.label not in lexicon.style_labels:
        flags.append(ValidationFlag(
            "R2", "error",
            f"style label {bundle.style.label!r} not in the lexicon",
            ("style.label",),
        ))
    if bundle.color is not None:
        if not 2 <= len(bundle.color.palette) <= 5:
            flags.append(ValidationFlag(
                "R2", "error",
                f"palette has {len(bundle.color.palette)} terms, expected 2-5",
                ("color.palette",),
            ))
        known_terms = lexicon.all_palette_terms()
        unknown = [t for t in bundle.color.palette if t not in known_terms]
        if unknown:
            flags.append(ValidationFlag(
                "R2", "error",
                f"unknown palette terms {unknown}",
                ("color.palette",),
            ))
    if bundle.composition is not None:
        if bundle.composition.framing not in FRAMINGS:
            flags.append(ValidationFlag(
                "R2", "error",
                f"unknown framing {bundle.composition.framing!r}",
                ("composition.framing",),
            ))
        if bundle.composition.viewpoint not in VIEWPOINTS:
            flags.append(ValidationFlag(
                "R2", "error",
                f"unknown viewpoint {bundle.composition.viewpoint!r}",
                ("composition.viewpoint",),
            ))

    # R3: affect contradictions against the shared tables
    if bundle.verb is not None and bundle.verb.energy_class in ENERGY_CLASSES:
        distance = abs(ENERGY_CLASSES.index(bundle.verb.energy_class) - arousal_band(va.arousal))
        if distance > ENERGY_BAND_TOLERANCE:
            flags.append(ValidationFlag(
                "R3", "error",
                f"energy class {bundle.verb.energy_class!r} is {distance} bands "
                f"from arousal {va.arousal}",
                ("verb.energy_class",),
            ))
    if bundle.color is not None:
        family = set(lexicon.palettes[quadrant.name])
        off_family = [t for t in bundle.color.palette if t not in family]
        if off_family:
            flags.append(ValidationFlag(
                "R3", "error",
                f"palette terms {off_family} inconsistent with quadrant {quadrant.name}",
                ("color.palette",),
            ))

    # R4: emptiness and overflow
    if bundle.scene is not None and not bundle.scene.subjects:
        flags.append(ValidationFlag(
            "R4", "error", "scene has no subjects", ("scene.subjects",),
        ))
    for path, text in fields.items():
        if len(text) > MAX_FIELD_CHARS:
            flags.append(ValidationFlag(
                "R4", "error",
                f"field {path} is {len(text)} chars, limit {MAX_FIELD_CHARS}",
                (path,),
            ))

    return ValidationReport(tuple(flags))
