"""Structured attribute types exchanged between agents, validator, and prompter."""

from __future__ import annotations

from dataclasses import dataclass

AGENT_NAMES = ("scene", "verb", "style", "color", "composition")


@dataclass(frozen=True)
class SceneAttributes:
    subjects: tuple[str, ...]
    environment: str
    category: str


@dataclass(frozen=True)
class VerbAttributes:
    action: str
    energy_class: str


@dataclass(frozen=True)
class StyleAttributes:
    label: str


@dataclass(frozen=True)
class ColorAttributes:
    palette: tuple[str, ...]
    lighting: str


@dataclass(frozen=True)
class CompositionAttributes:
    framing: str
    viewpoint: str


@dataclass(frozen=True)
class AttributeBundle:
    """Joint agent output for one clip; ablated attributes are None."""

    scene: SceneAttributes | None
    verb: VerbAttributes | None
    style: StyleAttributes | None
    color: ColorAttributes | None
    composition: CompositionAttributes | None

    def present(self) -> tuple[str, ...]:
        return tuple(name for name in AGENT_NAMES if getattr(self, name) is not None)

    def replace(self, name: str, value) -> "AttributeBundle":
        if name not in AGENT_NAMES:
            raise ValueError(f"unknown attribute {name!r}")
        fields = {n: getattr(self, n) for n in AGENT_NAMES}
        fields[name] = value
        return AttributeBundle(**fields)

    def to_json(self) -> dict:
        return {
            "scene": None if self.scene is None else {
                "subjects": list(self.scene.subjects),
                "environment": self.scene.environment,
                "category": self.scene.category,
            },
            "verb": None if self.verb is None else {
                "action": self.verb.action,
                "energy_class": self.verb.energy_class,
            },
            "style": None if self.style is None else {"label": self.style.label},
            "color": None if self.color is None else {
                "palette": list(self.color.palette),
                "lighting": self.color.lighting,
            },
            "composition": None if self.composition is None else {
                "framing": self.composition.framing,
                "viewpoint": self.composition.viewpoint,
            },
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AttributeBundle":
        scene = obj.get("scene")
        verb = obj.get("verb")
        style = obj.get("style")
        color = obj.get("color")
        comp = obj.get("composition")
        return cls(
            scene=None if scene is None else SceneAttributes(
                tuple(scene["subjects"]), scene["environment"], scene["category"]
            ),
            verb=None if verb is None else VerbAttributes(verb["action"], verb["energy_class"]),
            style=None if style is None else StyleAttributes(style["label"]),
            color=None if color is None else ColorAttributes(
                tuple(color["palette"]), color["lighting"]
            ),
            composition=None if comp is None else CompositionAttributes(
                comp["framing"], comp["viewpoint"]
            ),
        )
