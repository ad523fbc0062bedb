"""End-to-end per-record orchestration: agents, validation loop, prompts, images.

The correction policy is: run all agents, validate, re-query each
error-flagged agent once with the violation spelled out, re-validate, then
substitute the deterministic rule derivation for anything still failing.
A bundle that fails even on rule output means the lexicon and validator
disagree, which is a configuration bug, not an input problem.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ValidationUnrecoverable
from ..ingest import CaptionRecord, VAPoint
from . import rules
from .attribute_agents import NEUTRAL_VA, load_templates, run_agent
from .bundle import AGENT_NAMES, AttributeBundle
from .lexicon import Lexicon, load_lexicon
from .prompting import PromptSet, assemble_prompts
from .validator import ValidationReport, validate

log = logging.getLogger(__name__)

ABLATABLE_AGENTS = ("verb", "style", "color", "composition")


@dataclass
class PipelineBackends:
    chat: object
    imagegen: object | None = None


@dataclass(frozen=True)
class RecordOutput:
    clip_id: str
    bundle: AttributeBundle
    report: ValidationReport
    prompt_set: PromptSet
    image_refs: tuple[dict, ...]
    provenance: dict

    def to_json(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "bundle": self.bundle.to_json(),
            "report": self.report.to_json(),
            "prompts": list(self.prompt_set.prompts),
            "image_refs": [dict(r) for r in self.image_refs],
            "provenance": self.provenance,
        }


def _failing_roles(report: ValidationReport, roles: Sequence[str]) -> list[str]:
    prefixes = {path.split(".", 1)[0] for path in report.error_fields()}
    return [r for r in roles if r in prefixes]


def _flag_summary(report: ValidationReport, role: str) -> str:
    msgs = [
        f.message for f in report.flags
        if f.severity == "error" and any(p.startswith(role + ".") for p in f.fields)
    ]
    return "; ".join(msgs) or "validation failed"


def _image_seed(seed: int, clip_id: str, index: int) -> int:
    digest = hashlib.sha256(f"{seed}|{clip_id}|{index}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def run_pipeline(
    record: CaptionRecord,
    backends: PipelineBackends,
    lexicon: Lexicon | None = None,
    templates: dict[str, str] | None = None,
    k: int = 4,
    seed: int = 0,
    ablate: tuple[str, ...] = (),
) -> RecordOutput:
    """Process one caption record into a validated bundle, prompts, and images."""
    lexicon = lexicon if lexicon is not None else load_lexicon()
    templates = templates if templates is not None else load_templates()

    va = record.va if record.va is not None else NEUTRAL_VA
    va_source = "caption" if record.va is not None else "default"

    roles = tuple(r for r in AGENT_NAMES if r not in ablate)
    sources: dict[str, str] = {}
    attrs: dict[str, object] = {name: None for name in AGENT_NAMES}
    for role in roles:
        result = run_agent(role, record, va, backends.chat, lexicon, templates)
        attrs[role] = result.attributes
        sources[role] = result.source
    bundle = AttributeBundle(**attrs)

    report = validate(bundle, va, lexicon)
    corrected: list[str] = []
    substituted: list[str] = []
    if not report.passed:
        for role in _failing_roles(report, roles):
            result = run_agent(
                role, record, va, backends.chat, lexicon, templates,
                correction=_flag_summary(report, role),
            )
            bundle = bundle.replace(role, result.attributes)
            sources[role] = result.source
            corrected.append(role)
        report = validate(bundle, va, lexicon)
    if not report.passed:
        for role in _failing_roles(report, roles):
            caption_text = record.caption
            bundle = bundle.replace(role, rules.DERIVATIONS[role](caption_text, va, lexicon))
            sources[role] = "rule-substituted"
            substituted.append(role)
        report = validate(bundle, va, lexicon)
    if not report.passed:
        raise ValidationUnrecoverable(
            f"{record.clip_id}: rule output fails validation; "
            f"flags: {[f.message for f in report.flags if f.severity == 'error']}"
        )

    prompt_set = assemble_prompts(
        bundle, k, seed, clip_id=record.clip_id, lexicon=lexicon, ablate=tuple(ablate),
    )

    image_refs: list[dict] = []
    if backends.imagegen is not None:
        for idx, prompt in enumerate(prompt_set.prompts):
            result = backends.imagegen.generate_image(
                prompt, _image_seed(seed, record.clip_id, idx)
            )
            image_refs.append({
                "image_id": result.image_id,
                "path": result.url_or_path,
                "seed": result.seed,
            })

    provenance = {
        "agents": {role: sources[role] for role in sorted(sources)},
        "corrected": sorted(corrected),
        "substituted": sorted(substituted),
        "ablated": sorted(ablate),
        "va_source": va_source,
        "seed": seed,
        "k": k,
    }
    return RecordOutput(
        record.clip_id, bundle, report, prompt_set, tuple(image_refs), provenance
    )


def run_batch(
    records: Sequence[CaptionRecord],
    backends: PipelineBackends,
    lexicon: Lexicon | None = None,
    templates: dict[str, str] | None = None,
    k: int = 4,
    seed: int = 0,
    ablate: tuple[str, ...] = (),
    workers: int = 1,
) -> list[RecordOutput]:
    """Process a batch; output order is clip_id-sorted regardless of scheduling."""
    lexicon = lexicon if lexicon is not None else load_lexicon()
    templates = templates if templates is not None else load_templates()

    def one(record: CaptionRecord) -> RecordOutput:
        return run_pipeline(record, backends, lexicon, templates, k, seed, ablate)

    if workers <= 1:
        outputs = [one(r) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(one, records))
    return sorted(outputs, key=lambda out: out.clip_id)


def write_outputs_jsonl(path, outputs: Sequence[RecordOutput]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for out in outputs:
            fh.write(json.dumps(out.to_json(), sort_keys=True) + "\n")
