"""Deterministic offline backends: pure functions of (request, configured seed).

These make the whole pipeline runnable and byte-reproducible with no
network. Embeddings are hash expansions, images are placeholder files whose
bytes depend only on the request, and aesthetic scores hash the image bytes.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np

from ..ingest import EmbeddingVector, VAPoint
from .config import ChatRequest, ChatResponse, ImageResult


def _digest(*parts) -> bytes:
    joined = "\x1f".join(str(p) for p in parts)
    return hashlib.sha256(joined.encode("utf-8")).digest()


def _expand_floats(key: bytes, count: int) -> np.ndarray:
    """Expand a digest into `count` floats in [-1, 1) by counter-mode hashing."""
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        block = hashlib.sha256(key + i.to_bytes(4, "big")).digest()
        u = int.from_bytes(block[:8], "big")
        out[i] = u / 2**63 - 1.0
    return out


class MockChatBackend:
    """Returns stable pseudo-text; useful for exercising parse-failure paths."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def chat(self, request: ChatRequest) -> ChatResponse:
        digest = _digest("chat", self.seed, request.to_payload())
        return ChatResponse(f"mock-chat {digest.hex()[:24]}")


class ScriptedChatBackend:
    """Test helper: replays a fixed sequence of responses (or exceptions)."""

    def __init__(self, responses):
        self._responses = list(responses)
        self.requests: list[ChatRequest] = []

    def chat(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        if not self._responses:
            raise AssertionError("scripted chat backend exhausted")
        item = self._responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return ChatResponse(item)


class MockEmbedBackend:
    """Unit-normalized hash expansion of each input string; fixed dimension."""

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.seed = seed

    def embed(self, inputs, modality: str = "text") -> list[EmbeddingVector]:
        if not inputs:
            raise ValueError("embed requires a non-empty batch")
        out = []
        for text in inputs:
            vec = _expand_floats(_digest("embed", self.seed, modality, text), self.dim)
            vec = vec / np.linalg.norm(vec)
            out.append(EmbeddingVector(str(text), modality, vec))
        return out


class MockImageBackend:
    """Writes a deterministic placeholder file per (prompt, seed, size)."""

    def __init__(self, out_dir, seed: int = 0, ref_prefix: str | None = None):
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.ref_prefix = ref_prefix

    def generate_image(
        self, prompt: str, seed: int, width: int = 512, height: int = 512
    ) -> ImageResult:
        if len(prompt) > 512:
            raise ValueError(f"prompt is {len(prompt)} chars, limit 512")
        digest = _digest("image", self.seed, prompt, seed, width, height).hex()
        image_id = digest[:16]
        filename = f"{image_id}.ppm"
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / filename
        path.write_bytes(_placeholder_ppm(digest, width, height))
        ref = f"{self.ref_prefix}/{filename}" if self.ref_prefix else str(path)
        return ImageResult(image_id, ref, seed)


def _placeholder_ppm(digest: str, width: int, height: int) -> bytes:
    """A tiny valid PPM whose pixels are a function of the digest alone."""
    vals = [int(digest[i:i + 2], 16) for i in range(0, 24, 2)]
    rows = []
    for r in range(2):
        row = []
        for c in range(2):
            base = (r * 2 + c) * 3
            row.extend(str(vals[base + i]) for i in range(3))
        rows.append(" ".join(row))
    body = "\n".join(rows)
    return f"P3\n# {digest}\n# target {width}x{height}\n2 2\n255\n{body}\n".encode("ascii")


class MockAestheticBackend:
    """0-10 score derived from the referenced image bytes (or the ref string)."""

    def __init__(self, seed: int = 0, base_dir=None):
        self.seed = seed
        self.base_dir = Path(base_dir) if base_dir is not None else None

    def _resolve(self, ref: str) -> bytes:
        path = Path(ref)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / ref
        if path.is_file():
            return path.read_bytes()
        return ref.encode("utf-8")

    def aesthetic_score(self, image_refs) -> list[float]:
        if not image_refs:
            raise ValueError("aesthetic_score requires a non-empty batch")
        scores = []
        for ref in image_refs:
            digest = hashlib.sha256(bytes(_digest("aesthetic", self.seed)) +
                                    self._resolve(ref)).digest()
            scores.append(round(int.from_bytes(digest[:4], "big") % 1001 / 100.0, 2))
        return scores


class MockVAPredictor:
    """Deterministic stand-in for an image-side affect head, keyed on bytes."""

    def __init__(self, seed: int = 0, base_dir=None):
        self.seed = seed
        self.base_dir = Path(base_dir) if base_dir is not None else None

    def predict(self, image_ref: str) -> VAPoint:
        path = Path(image_ref)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / image_ref
        payload = path.read_bytes() if path.is_file() else image_ref.encode("utf-8")
        digest = hashlib.sha256(bytes(_digest("va", self.seed)) + payload).digest()
        v = int.from_bytes(digest[:4], "big") / 2**32
        a = int.from_bytes(digest[4:8], "big") / 2**32
        return VAPoint(v, a)
