"""Backend client behaviour against an instrumented in-process HTTP server."""

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from music2image.backends.clients import (
    AestheticClient,
    ChatClient,
    EmbedClient,
    ImageGenClient,
)
from music2image.backends.config import BackendConfig, ChatRequest
from music2image.backends.mock import (
    MockAestheticBackend,
    MockChatBackend,
    MockEmbedBackend,
    MockImageBackend,
)
from music2image.errors import (
    BackendUnavailable,
    ContentRejected,
    DimensionMismatch,
    MalformedResponse,
    Timeout,
)


class ScriptedServer:
    """HTTP server that replays a scripted list of behaviours per request.

    Behaviours: ("ok", body) | ("status", code) | ("sleep", seconds, body)
    | ("raw", bytes). Tracks request count and the high-water mark of
    concurrent in-flight requests.
    """

    def __init__(self, script=None, default=None):
        self.script = list(script or [])
        self.default = default or ("ok", {"text": "ok"})
        self.lock = threading.Lock()
        self.calls = 0
        self.in_flight = 0
        self.max_in_flight = 0

        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                with server.lock:
                    server.calls += 1
                    server.in_flight += 1
                    server.max_in_flight = max(server.max_in_flight, server.in_flight)
                    action = server.script.pop(0) if server.script else server.default
                try:
                    self._respond(action)
                finally:
                    with server.lock:
                        server.in_flight -= 1

            def _respond(self, action):
                try:
                    self.rfile.read(int(self.headers.get("Content-Length", 0)))
                    if action[0] == "sleep":
                        time.sleep(action[1])
                        action = ("ok", action[2])
                    if action[0] == "ok":
                        body = json.dumps(action[1]).encode()
                        self.send_response(200)
                        self.send_header("Content-Type", "application/json")
                        self.send_header("Content-Length", str(len(body)))
                        self.end_headers()
                        self.wfile.write(body)
                    elif action[0] == "status":
                        body = json.dumps(action[2] if len(action) > 2 else {}).encode()
                        self.send_response(action[1])
                        self.send_header("Content-Type", "application/json")
                        self.send_header("Content-Length", str(len(body)))
                        self.end_headers()
                        self.wfile.write(body)
                    elif action[0] == "raw":
                        self.send_response(200)
                        self.send_header("Content-Type", "application/json")
                        self.send_header("Content-Length", str(len(action[1])))
                        self.end_headers()
                        self.wfile.write(action[1])
                except (BrokenPipeError, ConnectionResetError):
                    pass  # client gave up (timeout test); nothing to do

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self):
        host, port = self.httpd.server_address
        return f"http://{host}:{port}/"

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def server():
    servers = []

    def make(script=None, default=None):
        s = ScriptedServer(script, default)
        servers.append(s)
        return s

    yield make
    for s in servers:
        s.close()


def chat_config(endpoint, **overrides):
    kwargs = dict(kind="chat", endpoint=endpoint, timeout_ms=2000,
                  max_retries=2, max_concurrent_requests=4)
    kwargs.update(overrides)
    return BackendConfig(**kwargs)


def no_sleep(_):
    pass


REQUEST = ChatRequest("m", ({"role": "user", "content": "hi"},))


class TestRetryAndBackoff:
    def test_two_500s_then_success(self, server):
        s = server(script=[("status", 500), ("status", 500), ("ok", {"text": "done"})])
        client = ChatClient(chat_config(s.url), sleep=no_sleep)
        assert client.chat(REQUEST).text == "done"
        assert s.calls == 3

    def test_retries_exhausted_raises_unavailable(self, server):
        s = server(default=("status", 503))
        client = ChatClient(chat_config(s.url, max_retries=1), sleep=no_sleep)
        with pytest.raises(BackendUnavailable):
            client.chat(REQUEST)
        assert s.calls == 2

    def test_4xx_never_retried(self, server):
        s = server(default=("status", 401))
        client = ChatClient(chat_config(s.url, max_retries=3), sleep=no_sleep)
        with pytest.raises(BackendUnavailable):
            client.chat(REQUEST)
        assert s.calls == 1

    def test_backoff_schedule_exponential(self, server):
        s = server(script=[("status", 500), ("status", 500), ("ok", {"text": "x"})])
        delays = []
        client = ChatClient(chat_config(s.url), sleep=delays.append, rng=lambda: 1.0)
        client.chat(REQUEST)
        assert delays == [0.25, 0.5]

    def test_jitter_scales_delay(self, server):
        s = server(script=[("status", 500), ("ok", {"text": "x"})])
        delays = []
        client = ChatClient(chat_config(s.url), sleep=delays.append, rng=lambda: 0.5)
        client.chat(REQUEST)
        assert delays == [0.125]


class TestFaultMatrix:
    def test_timeout_maps_to_timeout(self, server):
        s = server(default=("sleep", 1.0, {"text": "late"}))
        client = ChatClient(
            chat_config(s.url, timeout_ms=100, max_retries=0), sleep=no_sleep
        )
        with pytest.raises(Timeout):
            client.chat(REQUEST)

    def test_5xx_maps_to_unavailable(self, server):
        s = server(default=("status", 500))
        client = ChatClient(chat_config(s.url, max_retries=0), sleep=no_sleep)
        with pytest.raises(BackendUnavailable):
            client.chat(REQUEST)

    def test_malformed_body_maps_to_malformed(self, server):
        s = server(default=("raw", b"this is not json"))
        client = ChatClient(chat_config(s.url, max_retries=0), sleep=no_sleep)
        with pytest.raises(MalformedResponse):
            client.chat(REQUEST)

    def test_missing_keys_map_to_malformed(self, server):
        s = server(default=("ok", {"wrong": "shape"}))
        client = ChatClient(chat_config(s.url, max_retries=0), sleep=no_sleep)
        with pytest.raises(MalformedResponse):
            client.chat(REQUEST)

    def test_refusal_maps_to_content_rejected(self, server):
        s = server(default=("status", 400, {"error": "content_policy violation"}))
        config = BackendConfig(kind="imagegen", endpoint=s.url, timeout_ms=2000,
                               max_retries=0, max_concurrent_requests=2)
        client = ImageGenClient(config, sleep=no_sleep)
        with pytest.raises(ContentRejected):
            client.generate_image("a prompt", seed=1)

    def test_transport_error_maps_to_unavailable(self):
        config = chat_config("http://127.0.0.1:1/", max_retries=0)
        client = ChatClient(config, sleep=no_sleep)
        with pytest.raises(BackendUnavailable):
            client.chat(REQUEST)


class TestEmbedAndAestheticClients:
    def test_embed_round_trip(self, server):
        s = server(default=("ok", {"dim": 2, "vectors": [[0.1, 0.2], [0.3, 0.4]]}))
        config = BackendConfig(kind="embed", endpoint=s.url, timeout_ms=2000)
        client = EmbedClient(config, sleep=no_sleep)
        vecs = client.embed(["a", "b"])
        assert [v.id for v in vecs] == ["a", "b"]
        assert list(vecs[1].vec) == [0.3, 0.4]

    def test_embed_mixed_dims(self, server):
        s = server(default=("ok", {"dim": 2, "vectors": [[0.1, 0.2], [0.3]]}))
        config = BackendConfig(kind="embed", endpoint=s.url, timeout_ms=2000,
                               max_retries=0)
        client = EmbedClient(config, sleep=no_sleep)
        with pytest.raises(DimensionMismatch):
            client.embed(["a", "b"])

    def test_embed_count_mismatch(self, server):
        s = server(default=("ok", {"dim": 1, "vectors": [[0.1]]}))
        config = BackendConfig(kind="embed", endpoint=s.url, timeout_ms=2000)
        client = EmbedClient(config, sleep=no_sleep)
        with pytest.raises(MalformedResponse):
            client.embed(["a", "b"])

    def test_aesthetic_score_range_enforced(self, server):
        s = server(default=("ok", {"scores": [11.0]}))
        config = BackendConfig(kind="aesthetic", endpoint=s.url, timeout_ms=2000)
        client = AestheticClient(config, sleep=no_sleep)
        with pytest.raises(MalformedResponse):
            client.aesthetic_score(["img1"])

    def test_oversize_prompt_rejected_before_network(self):
        config = BackendConfig(kind="imagegen", endpoint="http://127.0.0.1:1/",
                               timeout_ms=100)
        client = ImageGenClient(config, sleep=no_sleep)
        with pytest.raises(ValueError):
            client.generate_image("x" * 513, seed=0)


class TestBoundedConcurrency:
    def test_burst_never_exceeds_limit(self, server):
        limit = 3
        s = server(default=("sleep", 0.02, {"text": "ok"}))
        client = ChatClient(
            chat_config(s.url, max_concurrent_requests=limit, timeout_ms=5000),
            sleep=no_sleep,
        )
        with ThreadPoolExecutor(max_workers=16) as pool:
            futures = [pool.submit(client.chat, REQUEST) for _ in range(64)]
            for f in futures:
                f.result()
        assert s.calls == 64
        assert s.max_in_flight <= limit


class TestNoSecretLeakage:
    def test_token_absent_from_payload_and_logs(self, server, monkeypatch, caplog):
        token = "super-secret-token-value-1234"
        monkeypatch.setenv("M2I_TEST_TOKEN", token)
        s = server(script=[("status", 500), ("ok", {"text": "fine"})])
        client = ChatClient(
            chat_config(s.url, auth_env="M2I_TEST_TOKEN"), sleep=no_sleep
        )
        with caplog.at_level(logging.DEBUG):
            client.chat(REQUEST)
        assert token not in json.dumps(REQUEST.to_payload())
        for record in caplog.records:
            assert token not in record.getMessage()


class TestMockDeterminism:
    def test_mock_chat_pure_function(self):
        a = MockChatBackend(5).chat(REQUEST)
        b = MockChatBackend(5).chat(REQUEST)
        assert a == b
        assert MockChatBackend(6).chat(REQUEST) != a

    def test_mock_embed_deterministic_unit_norm(self):
        backend = MockEmbedBackend(dim=64, seed=0)
        v1 = backend.embed(["same text"])[0]
        v2 = MockEmbedBackend(dim=64, seed=0).embed(["same text"])[0]
        assert np.array_equal(v1.vec, v2.vec)
        assert np.linalg.norm(v1.vec) == pytest.approx(1.0, abs=1e-12)
        v3 = backend.embed(["other text"])[0]
        assert not np.array_equal(v1.vec, v3.vec)

    def test_mock_embed_batch_order(self):
        backend = MockEmbedBackend(dim=8, seed=1)
        batch = backend.embed(["a", "b", "c"])
        assert [e.id for e in batch] == ["a", "b", "c"]
        solo = backend.embed(["b"])[0]
        assert np.array_equal(batch[1].vec, solo.vec)

    def test_mock_image_byte_identical(self, tmp_path):
        backend = MockImageBackend(tmp_path, seed=0)
        r1 = backend.generate_image("a pianist", 42)
        data1 = (tmp_path / f"{r1.image_id}.ppm").read_bytes()
        r2 = MockImageBackend(tmp_path, seed=0).generate_image("a pianist", 42)
        assert r1.image_id == r2.image_id
        assert (tmp_path / f"{r2.image_id}.ppm").read_bytes() == data1
        r3 = backend.generate_image("a pianist", 43)
        assert r3.image_id != r1.image_id

    def test_mock_image_rejects_oversize_prompt(self, tmp_path):
        with pytest.raises(ValueError):
            MockImageBackend(tmp_path).generate_image("y" * 600, 1)

    def test_mock_aesthetic_fixed_scores(self, tmp_path):
        backend = MockImageBackend(tmp_path, seed=0)
        ref = backend.generate_image("calm sea", 1).url_or_path
        scorer = MockAestheticBackend(seed=0)
        s1 = scorer.aesthetic_score([ref])
        s2 = MockAestheticBackend(seed=0).aesthetic_score([ref])
        assert s1 == s2
        assert 0.0 <= s1[0] <= 10.0

    def test_mock_aesthetic_batch_order(self, tmp_path):
        backend = MockImageBackend(tmp_path, seed=0)
        refs = [backend.generate_image(p, 1).url_or_path for p in ("a", "b", "c")]
        scorer = MockAestheticBackend(seed=0)
        scores = scorer.aesthetic_score(refs)
        assert scores == [scorer.aesthetic_score([r])[0] for r in refs]
