"""The five attribute agents: templated chat extraction with a rule fallback.

Each agent renders its instruction template, asks the chat backend, and
parses the fenced block it gets back. A schema-invalid reply earns exactly
one corrective retry; after that the deterministic rule derivation takes
over, so the pipeline stays viable with no working chat backend at all.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..backends.config import ChatRequest
from ..errors import BackendError, UnparseableOutput
from ..ingest import CaptionRecord, VAPoint
from . import blocks, rules
from .bundle import (
    AGENT_NAMES,
    ColorAttributes,
    CompositionAttributes,
    SceneAttributes,
    StyleAttributes,
    VerbAttributes,
)
from .lexicon import Lexicon, load_lexicon

log = logging.getLogger(__name__)

NEUTRAL_VA = VAPoint(0.5, 0.5)

CORRECTION_NOTE = (
    "\nYour previous reply was rejected: {reason}. "
    "Reply again with one fenced block of key: value lines only."
)


def load_templates(dir_path: str | Path | None = None) -> dict[str, str]:
    """Load the per-agent instruction templates; None loads the shipped set."""
    templates: dict[str, str] = {}
    for role in AGENT_NAMES:
        if dir_path is None:
            text = resources.files("music2image.data.templates").joinpath(
                f"{role}.txt"
            ).read_text("utf-8")
        else:
            text = (Path(dir_path) / f"{role}.txt").read_text("utf-8")
        templates[role] = text
    return templates


def render_template(template: str, caption: str, va: VAPoint) -> str:
    return template.format(
        caption=caption,
        valence=f"{va.valence:.4f}",
        arousal=f"{va.arousal:.4f}",
        quadrant=rules.va_quadrant(va).name,
    )


@dataclass(frozen=True)
class AgentResult:
    role: str
    attributes: object
    source: str  # chat | chat-retry | rule
    attempts: int


def _caption_text(caption: CaptionRecord | str) -> str:
    text = caption.caption if isinstance(caption, CaptionRecord) else caption
    if not text or not text.strip():
        raise ValueError("caption must be non-empty")
    return text.strip()


def run_agent(
    role: str,
    caption: CaptionRecord | str,
    va: VAPoint | None,
    backend,
    lexicon: Lexicon | None = None,
    templates: dict[str, str] | None = None,
    rule_fallback: bool = True,
    correction: str | None = None,
) -> AgentResult:
    """Run one attribute agent end to end and report which path answered."""
    if role not in AGENT_NAMES:
        raise ValueError(f"unknown agent role {role!r}")
    text = _caption_text(caption)
    va = va if va is not None else NEUTRAL_VA
    lexicon = lexicon if lexicon is not None else load_lexicon()
    templates = templates if templates is not None else load_templates()

    instruction = render_template(templates[role], text, va)
    if correction:
        instruction += CORRECTION_NOTE.format(reason=correction)

    attempts = 0
    reason = correction or ""
    for source in ("chat", "chat-retry"):
        attempts += 1
        request = ChatRequest(model="attribute-agent", messages=(
            {"role": "user", "content": instruction},
        ))
        try:
            response = backend.chat(request)
            fields = blocks.parse_block(response.text, blocks.ROLE_KEYS[role])
            attrs = blocks.FROM_FIELDS[role](fields, lexicon, va)
            return AgentResult(role, attrs, source, attempts)
        except BackendError as exc:
            if not rule_fallback:
                raise
            log.warning("%s agent: backend unavailable (%s); using rule backend", role, exc)
            break
        except UnparseableOutput as exc:
            reason = str(exc)
            log.debug("%s agent attempt %d rejected: %s", role, attempts, reason)
            instruction = render_template(templates[role], text, va)
            instruction += CORRECTION_NOTE.format(reason=reason)

    if not rule_fallback:
        raise UnparseableOutput(f"{role} agent failed after retry: {reason}")
    try:
        attrs = rules.DERIVATIONS[role](text, va, lexicon)
    except Exception as exc:
        raise UnparseableOutput(
            f"{role} rule derivation failed; lexicon misconfiguration? ({exc})"
        ) from exc
    return AgentResult(role, attrs, "rule", attempts)


def run_scene_agent(caption, backend, va=None, **kwargs) -> SceneAttributes:
    return run_agent("scene", caption, va, backend, **kwargs).attributes


def run_verb_agent(caption, va: VAPoint, backend, **kwargs) -> VerbAttributes:
    return run_agent("verb", caption, va, backend, **kwargs).attributes


def run_style_agent(caption, va: VAPoint, backend, **kwargs) -> StyleAttributes:
    return run_agent("style", caption, va, backend, **kwargs).attributes


def run_color_agent(caption, va: VAPoint, backend, **kwargs) -> ColorAttributes:
    return run_agent("color", caption, va, backend, **kwargs).attributes


def run_composition_agent(caption, va: VAPoint, backend, **kwargs) -> CompositionAttributes:
    return run_agent("composition", caption, va, backend, **kwargs).attributes
