"""Backend configuration and the wire request/response shapes.

Requests serialize to the documented JSON schemas exactly (modulo key
order); responses are validated before anything downstream touches them.
Auth tokens are referenced by environment-variable name only and must never
appear in serialized requests or logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ConfigError, DimensionMismatch, MalformedResponse

BACKEND_KINDS = ("chat", "embed", "imagegen", "aesthetic")


@dataclass(frozen=True)
class BackendConfig:
    kind: str
    endpoint: str
    auth_env: str | None = None
    timeout_ms: int = 10_000
    max_retries: int = 2
    max_concurrent_requests: int = 4

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"kind must be one of {BACKEND_KINDS}, got {self.kind!r}")
        if self.timeout_ms <= 0:
            raise ConfigError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_concurrent_requests < 1:
            raise ConfigError("max_concurrent_requests must be >= 1")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[dict, ...]
    temperature: float = 0.0
    seed: int | None = None

    def to_payload(self) -> dict:
        payload = {
            "model": self.model,
            "messages": [dict(m) for m in self.messages],
            "temperature": self.temperature,
        }
        if self.seed is not None:
            payload["seed"] = self.seed
        return payload

    def last_user_content(self) -> str:
        for message in reversed(self.messages):
            if message.get("role") == "user":
                return str(message.get("content", ""))
        return ""


@dataclass(frozen=True)
class ChatResponse:
    text: str

    @classmethod
    def from_payload(cls, obj) -> "ChatResponse":
        if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
            raise MalformedResponse("chat response must be an object with a 'text' string")
        return cls(obj["text"])


@dataclass(frozen=True)
class EmbedRequest:
    inputs: tuple[str, ...]
    modality: str = "text"

    def __post_init__(self):
        if self.modality not in ("text", "image"):
            raise ConfigError(f"modality must be 'text' or 'image', got {self.modality!r}")

    def to_payload(self) -> dict:
        return {"inputs": list(self.inputs), "modality": self.modality}


@dataclass(frozen=True)
class EmbedResponse:
    dim: int
    vectors: tuple[tuple[float, ...], ...]

    @classmethod
    def from_payload(cls, obj, expected_count: int) -> "EmbedResponse":
        if not isinstance(obj, dict):
            raise MalformedResponse("embed response must be an object")
        dim = obj.get("dim")
        vectors = obj.get("vectors")
        if not isinstance(dim, int) or dim < 1 or not isinstance(vectors, list):
            raise MalformedResponse("embed response needs integer 'dim' and list 'vectors'")
        if len(vectors) != expected_count:
            raise MalformedResponse(
                f"embed response has {len(vectors)} vectors for {expected_count} inputs"
            )
        out = []
        for vec in vectors:
            if not isinstance(vec, list):
                raise MalformedResponse("embed vectors must be arrays")
            if len(vec) != dim:
                raise DimensionMismatch(
                    f"embed reply mixes dims: got {len(vec)}, declared {dim}"
                )
            out.append(tuple(float(x) for x in vec))
        return cls(dim, tuple(out))


@dataclass(frozen=True)
class ImageRequest:
    prompt: str
    seed: int
    width: int = 512
    height: int = 512

    def to_payload(self) -> dict:
        return {
            "prompt": self.prompt,
            "seed": self.seed,
            "width": self.width,
            "height": self.height,
        }


@dataclass(frozen=True)
class ImageResult:
    image_id: str
    url_or_path: str
    seed: int

    @classmethod
    def from_payload(cls, obj, seed: int) -> "ImageResult":
        if (
            not isinstance(obj, dict)
            or not isinstance(obj.get("image_id"), str)
            or not isinstance(obj.get("url_or_path"), str)
        ):
            raise MalformedResponse("imagegen response needs 'image_id' and 'url_or_path'")
        return cls(obj["image_id"], obj["url_or_path"], seed)


@dataclass(frozen=True)
class AestheticRequest:
    image_refs: tuple[str, ...]

    def to_payload(self) -> dict:
        return {"image_refs": list(self.image_refs)}


def parse_aesthetic_payload(obj, expected_count: int) -> list[float]:
    if not isinstance(obj, dict) or not isinstance(obj.get("scores"), list):
        raise MalformedResponse("aesthetic response needs a 'scores' list")
    scores = obj["scores"]
    if len(scores) != expected_count:
        raise MalformedResponse(
            f"aesthetic response has {len(scores)} scores for {expected_count} images"
        )
    out = []
    for s in scores:
        if isinstance(s, bool) or not isinstance(s, (int, float)) or not 0.0 <= float(s) <= 10.0:
            raise MalformedResponse(f"aesthetic score {s!r} outside the 0-10 scale")
        out.append(float(s))
    return out
