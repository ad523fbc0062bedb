"""Offline rule backend: answers agent chat requests from the lexicon tables.

The agent templates carry machine-readable header lines (agent, caption,
valence, arousal); this backend parses those, runs the shared deterministic
derivation for the named role, and replies with a schema-valid fenced block.
No network, no state, identical output for identical requests.
"""

from __future__ import annotations

import re

from ..agents import blocks, rules
from ..agents.bundle import AGENT_NAMES
from ..agents.lexicon import Lexicon, load_lexicon
from ..errors import UnknownRole
from ..ingest import VAPoint
from .config import ChatRequest, ChatResponse

_HEADER_RE = re.compile(r"^(agent|caption|valence|arousal):\s*(.*)$")


def _parse_header(content: str) -> dict[str, str]:
    fields: dict[str, str] = {}
    for line in content.splitlines():
        match = _HEADER_RE.match(line.strip())
        if match and match.group(1) not in fields:
            fields[match.group(1)] = match.group(2).strip()
    return fields


class RuleChatBackend:
    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = lexicon if lexicon is not None else load_lexicon()

    def chat(self, request: ChatRequest) -> ChatResponse:
        header = _parse_header(request.last_user_content())
        role = header.get("agent")
        if role not in AGENT_NAMES:
            raise UnknownRole(f"request does not identify a known agent role: {role!r}")
        caption = header.get("caption", "")
        try:
            va = VAPoint(float(header.get("valence", 0.5)), float(header.get("arousal", 0.5)))
        except ValueError:
            va = VAPoint(0.5, 0.5)
        attrs = rules.DERIVATIONS[role](caption, va, self.lexicon)
        return ChatResponse(blocks.format_block(blocks.TO_FIELDS[role](attrs)))
