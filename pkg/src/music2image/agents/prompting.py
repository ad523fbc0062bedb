"""Deterministic k-way prompt recombination from a validated bundle.

Variation comes from three sources: permuting the order of the tail
clauses, substituting lexicon synonyms (action, lighting, framing,
viewpoint), and eliding at most one non-scene attribute (verb or
composition; style and color stay because every prompt must keep the
style label and at least one palette term). Prompt 1 is always the
canonical template rendering.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
from dataclasses import dataclass

from ..errors import InsufficientDiversity
from .bundle import AttributeBundle
from .lexicon import Lexicon, load_lexicon

ELIDABLE = ("verb", "composition")

# Most variants keep every clause; elision is an occasional recombination move.
ELISION_WEIGHT = 8

TAIL_UNITS = ("style", "palette", "lighting", "composition")

COMPOSITION_PATTERNS = (
    "{framing} shot, {viewpoint}",
    "{framing} framing, {viewpoint}",
    "a {framing} composition, {viewpoint}",
)


@dataclass(frozen=True)
class PromptSet:
    clip_id: str
    prompts: tuple[str, ...]
    seed: int
    bundle: AttributeBundle

    def to_json(self) -> dict:
        return {"clip_id": self.clip_id, "prompts": list(self.prompts), "seed": self.seed}


def _bundle_digest(bundle: AttributeBundle, k: int, ablate: tuple[str, ...]) -> str:
    payload = json.dumps(
        {"bundle": bundle.to_json(), "k": k, "ablate": sorted(ablate)},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _check_containment(prompt: str, bundle: AttributeBundle) -> None:
    folded = prompt.casefold()
    if bundle.scene is not None:
        for subject in bundle.scene.subjects:
            assert subject.casefold() in folded, f"subject {subject!r} missing from prompt"
    if bundle.style is not None:
        assert bundle.style.label.casefold() in folded, "style label missing from prompt"
    if bundle.color is not None:
        assert any(t.casefold() in folded for t in bundle.color.palette), \
            "no palette term in prompt"


def assemble_prompts(
    bundle: AttributeBundle,
    k: int,
    seed: int,
    clip_id: str = "",
    lexicon: Lexicon | None = None,
    ablate: tuple[str, ...] = (),
) -> PromptSet:
    """Produce k distinct prompts, deterministic under (bundle, k, seed)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if bundle.scene is None:
        raise ValueError("cannot assemble prompts without scene attributes")
    lexicon = lexicon if lexicon is not None else load_lexicon()
    ablated = {name for name in ablate}

    scene = bundle.scene
    subjects_text = " and ".join(scene.subjects)

    action_choices = (
        lexicon.synonyms_for(bundle.verb.action)
        if bundle.verb is not None and "verb" not in ablated else [None]
    )
    lighting_choices = (
        lexicon.synonyms_for(bundle.color.lighting)
        if bundle.color is not None and "color" not in ablated else [None]
    )
    framing_choices = (
        lexicon.synonyms_for(bundle.composition.framing)
        if bundle.composition is not None and "composition" not in ablated else [None]
    )
    viewpoint_choices = (
        lexicon.synonyms_for(bundle.composition.viewpoint)
        if bundle.composition is not None and "composition" not in ablated else [None]
    )

    present_units = []
    if bundle.style is not None and "style" not in ablated:
        present_units.append("style")
    if bundle.color is not None and "color" not in ablated:
        present_units.extend(["palette", "lighting"])
    if bundle.composition is not None and "composition" not in ablated:
        present_units.append("composition")
    present_units.sort(key=TAIL_UNITS.index)  # canonical order first

    orders = list(itertools.permutations(present_units))
    elide_choices: list[str | None] = [None] * ELISION_WEIGHT
    for name in ELIDABLE:
        if name in ablated:
            continue
        if name == "verb" and bundle.verb is not None:
            elide_choices.append("verb")
        if name == "composition" and bundle.composition is not None:
            elide_choices.append("composition")

    comp_patterns = (
        list(COMPOSITION_PATTERNS)
        if bundle.composition is not None and "composition" not in ablated else [None]
    )

    axes = [orders, action_choices, lighting_choices,
            framing_choices, viewpoint_choices, comp_patterns, elide_choices]
    sizes = [len(a) for a in axes]
    total = 1
    for s in sizes:
        total *= s

    def decode(flat: int) -> tuple:
        picks = []
        for size in reversed(sizes):
            picks.append(flat % size)
            flat //= size
        return tuple(axes[i][p] for i, p in enumerate(reversed(picks)))

    def render(order, action, lighting, framing, viewpoint, pattern, elide) -> str:
        head = [subjects_text]
        if action is not None and elide != "verb":
            head.append(action)
        head.append(f"in {scene.environment}")
        clauses = [" ".join(head)]
        for unit in order:
            if unit == "style":
                clauses.append(bundle.style.label)
            elif unit == "palette":
                clauses.append(" ".join(bundle.color.palette) + " palette")
            elif unit == "lighting":
                clauses.append(lighting)
            elif unit == "composition":
                if elide == "composition":
                    continue
                clauses.append(pattern.format(framing=framing, viewpoint=viewpoint))
        return ", ".join(clauses)

    rng = random.Random(f"{seed}|{_bundle_digest(bundle, k, tuple(ablated))}")
    rest = list(range(1, total))
    rng.shuffle(rest)

    prompts: list[str] = []
    seen: set[str] = set()
    for flat in itertools.chain([0], rest):
        prompt = render(*decode(flat))
        if prompt in seen:
            continue
        _check_containment(prompt, bundle)
        seen.add(prompt)
        prompts.append(prompt)
        if len(prompts) == k:
            break
    if len(prompts) < k:
        raise InsufficientDiversity(
            f"only {len(prompts)} distinct prompts possible, {k} requested; "
            "the lexicon's synonym sets are too small"
        )
    return PromptSet(clip_id, tuple(prompts), seed, bundle)
