"""HTTP clients for the four backend kinds, with retry, backoff, and limits.

Retry policy: transport failures and 5xx responses are retried up to
max_retries with exponential backoff (base 250 ms, factor 2, full jitter);
4xx responses are never retried. Exhausted timeouts raise Timeout, other
exhausted failures raise BackendUnavailable, undecodable or schema-invalid
bodies raise MalformedResponse, and an imagegen refusal raises
ContentRejected. In-flight requests per backend never exceed
max_concurrent_requests.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time

import numpy as np
import requests

from ..errors import (
    BackendUnavailable,
    ContentRejected,
    MalformedResponse,
    Timeout,
)
from ..ingest import EmbeddingVector
from .config import (
    AestheticRequest,
    BackendConfig,
    ChatRequest,
    ChatResponse,
    EmbedRequest,
    EmbedResponse,
    ImageRequest,
    ImageResult,
    parse_aesthetic_payload,
)

log = logging.getLogger(__name__)

BACKOFF_BASE_S = 0.25
BACKOFF_FACTOR = 2.0

REFUSAL_MARKER = "content_policy"


class HttpBackendClient:
    """Shared transport; immutable after construction, safe to share."""

    def __init__(self, config: BackendConfig, session=None, sleep=time.sleep, rng=None):
        self.config = config
        self._session = session if session is not None else requests.Session()
        self._sleep = sleep
        self._rng = rng if rng is not None else random.random
        self._limiter = threading.BoundedSemaphore(config.max_concurrent_requests)

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_env:
            token = os.environ.get(self.config.auth_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers

    def _post(self, payload: dict) -> dict:
        timeout_s = self.config.timeout_ms / 1000.0
        attempt = 0
        while True:
            failure = None  # ("timeout"|"transport"|"5xx", detail)
            with self._limiter:
                try:
                    response = self._session.post(
                        self.config.endpoint,
                        json=payload,
                        timeout=timeout_s,
                        headers=self._headers(),
                    )
                except requests.Timeout:
                    failure = ("timeout", f"no response within {self.config.timeout_ms} ms")
                except requests.RequestException as exc:
                    failure = ("transport", str(exc))
                else:
                    status = response.status_code
                    if 200 <= status < 300:
                        try:
                            body = response.json()
                        except (ValueError, json.JSONDecodeError):
                            raise MalformedResponse(
                                f"{self.config.kind}: response body is not JSON"
                            ) from None
                        return body
                    if status >= 500:
                        failure = ("5xx", f"server returned {status}")
                    else:
                        self._raise_client_error(status, response)
            if attempt >= self.config.max_retries:
                kind, detail = failure
                if kind == "timeout":
                    raise Timeout(f"{self.config.kind}: {detail}")
                raise BackendUnavailable(
                    f"{self.config.kind}: {detail} after {attempt} retries"
                )
            delay = self._rng() * BACKOFF_BASE_S * (BACKOFF_FACTOR ** attempt)
            log.debug(
                "%s backend %s; retry %d/%d in %.0f ms",
                self.config.kind, failure[0], attempt + 1, self.config.max_retries,
                delay * 1000,
            )
            self._sleep(delay)
            attempt += 1

    def _raise_client_error(self, status: int, response) -> None:
        detail = ""
        try:
            body = response.json()
            detail = str(body.get("error", ""))
        except (ValueError, json.JSONDecodeError):
            pass
        if self.config.kind == "imagegen" and REFUSAL_MARKER in detail:
            raise ContentRejected(f"imagegen refused the prompt: {detail}")
        raise BackendUnavailable(f"{self.config.kind}: client error {status} {detail}".strip())


class ChatClient(HttpBackendClient):
    def chat(self, request: ChatRequest) -> ChatResponse:
        return ChatResponse.from_payload(self._post(request.to_payload()))


class EmbedClient(HttpBackendClient):
    def embed(self, inputs, modality: str = "text") -> list[EmbeddingVector]:
        if not inputs:
            raise ValueError("embed requires a non-empty batch")
        request = EmbedRequest(tuple(str(x) for x in inputs), modality)
        response = EmbedResponse.from_payload(self._post(request.to_payload()), len(inputs))
        return [
            EmbeddingVector(str(inp), modality, np.asarray(vec, dtype=np.float64))
            for inp, vec in zip(inputs, response.vectors)
        ]


class ImageGenClient(HttpBackendClient):
    def generate_image(
        self, prompt: str, seed: int, width: int = 512, height: int = 512
    ) -> ImageResult:
        if len(prompt) > 512:
            raise ValueError(f"prompt is {len(prompt)} chars, limit 512")
        request = ImageRequest(prompt, seed, width, height)
        return ImageResult.from_payload(self._post(request.to_payload()), seed)


class AestheticClient(HttpBackendClient):
    def aesthetic_score(self, image_refs) -> list[float]:
        if not image_refs:
            raise ValueError("aesthetic_score requires a non-empty batch")
        request = AestheticRequest(tuple(str(r) for r in image_refs))
        return parse_aesthetic_payload(self._post(request.to_payload()), len(image_refs))


CLIENT_CLASSES = {
    "chat": ChatClient,
    "embed": EmbedClient,
    "imagegen": ImageGenClient,
    "aesthetic": AestheticClient,
}
