"""Run configuration: one JSON file drives every command."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .backends.config import BackendConfig

OFFLINE_ENV = "MESA_OFFLINE"

INPUT_PATH_KEYS = (
    "annotations_csv", "captions_jsonl", "images_jsonl",
    "music_embeddings", "image_embeddings", "image_va_model",
    "lexicon", "templates_dir",
)


@dataclass(frozen=True)
class PathsConfig:
    output_dir: Path
    annotations_csv: Path | None = None
    captions_jsonl: Path | None = None
    images_jsonl: Path | None = None
    music_embeddings: Path | None = None
    image_embeddings: Path | None = None
    image_va_model: Path | None = None
    lexicon: Path | None = None
    templates_dir: Path | None = None

    def require(self, key: str) -> Path:
        value = getattr(self, key)
        if value is None:
            raise ConfigError(f"this command needs paths.{key} in the config")
        return value


@dataclass(frozen=True)
class BackendsConfig:
    offline: bool = True
    mock_seed: int = 0
    embed_dim: int = 64
    chat: BackendConfig | None = None
    embed: BackendConfig | None = None
    imagegen: BackendConfig | None = None
    aesthetic: BackendConfig | None = None

    def effective_offline(self) -> bool:
        return self.offline or os.environ.get(OFFLINE_ENV) == "1"


@dataclass(frozen=True)
class IngestConfig:
    clip_ms: int = 5000
    music_va_range: tuple[float, float] = (-1.0, 1.0)
    image_va_range: tuple[float, float] = (1.0, 10.0)
    captions_va_range: tuple[float, float] = (0.0, 1.0)


@dataclass(frozen=True)
class SplitConfig:
    ratios: tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 13


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 4
    workers: int = 1
    generate_images: bool = True


@dataclass(frozen=True)
class PairingConfig:
    n_pairs: int = 400
    min_similarity: float = 0.85


@dataclass(frozen=True)
class MetricsConfig:
    clip_score: bool = True
    copy_rate: bool = True


@dataclass(frozen=True)
class RunConfig:
    paths: PathsConfig
    backends: BackendsConfig = field(default_factory=BackendsConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    pairing: PairingConfig = field(default_factory=PairingConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    seed: int = 0

    def with_seed(self, seed: int) -> "RunConfig":
        return RunConfig(
            paths=self.paths, backends=self.backends, ingest=self.ingest,
            split=self.split, pipeline=self.pipeline, pairing=self.pairing,
            metrics=self.metrics, seed=seed,
        )


def _range_pair(raw, name: str) -> tuple[float, float]:
    if (not isinstance(raw, (list, tuple)) or len(raw) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw)):
        raise ConfigError(f"{name} must be a [lo, hi] number pair")
    lo, hi = float(raw[0]), float(raw[1])
    if lo >= hi:
        raise ConfigError(f"{name} has lo >= hi")
    return (lo, hi)


def _backend(raw, kind: str) -> BackendConfig | None:
    if raw is None:
        return None
    if not isinstance(raw, dict) or "endpoint" not in raw:
        raise ConfigError(f"backends.{kind} must be an object with an endpoint")
    return BackendConfig(
        kind=kind,
        endpoint=str(raw["endpoint"]),
        auth_env=raw.get("auth_env"),
        timeout_ms=int(raw.get("timeout_ms", 10_000)),
        max_retries=int(raw.get("max_retries", 2)),
        max_concurrent_requests=int(raw.get("max_concurrent_requests", 4)),
    )


def load_config(path: str | Path) -> RunConfig:
    """Parse and fully validate a config file before any command runs."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    base = path.parent

    raw_paths = raw.get("paths", {})
    if "output_dir" not in raw_paths:
        raise ConfigError("paths.output_dir is required")

    def resolve(key: str) -> Path | None:
        value = raw_paths.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    inputs: dict[str, Path | None] = {}
    for key in INPUT_PATH_KEYS:
        resolved = resolve(key)
        if resolved is not None and not resolved.exists():
            raise ConfigError(f"paths.{key} = {resolved} does not exist")
        inputs[key] = resolved
    paths = PathsConfig(output_dir=resolve("output_dir"), **inputs)

    raw_backends = raw.get("backends", {})
    backends = BackendsConfig(
        offline=bool(raw_backends.get("offline", True)),
        mock_seed=int(raw_backends.get("mock_seed", 0)),
        embed_dim=int(raw_backends.get("embed_dim", 64)),
        chat=_backend(raw_backends.get("chat"), "chat"),
        embed=_backend(raw_backends.get("embed"), "embed"),
        imagegen=_backend(raw_backends.get("imagegen"), "imagegen"),
        aesthetic=_backend(raw_backends.get("aesthetic"), "aesthetic"),
    )
    if backends.embed_dim < 1:
        raise ConfigError("backends.embed_dim must be >= 1")

    raw_ingest = raw.get("ingest", {})
    clip_ms = int(raw_ingest.get("clip_ms", 5000))
    if clip_ms <= 0:
        raise ConfigError("ingest.clip_ms must be positive")
    ingest = IngestConfig(
        clip_ms=clip_ms,
        music_va_range=_range_pair(raw_ingest.get("music_va_range", [-1, 1]),
                                   "ingest.music_va_range"),
        image_va_range=_range_pair(raw_ingest.get("image_va_range", [1, 10]),
                                   "ingest.image_va_range"),
        captions_va_range=_range_pair(raw_ingest.get("captions_va_range", [0, 1]),
                                      "ingest.captions_va_range"),
    )

    raw_split = raw.get("split", {})
    ratios = raw_split.get("ratios", [0.7, 0.15, 0.15])
    if (not isinstance(ratios, list) or len(ratios) != 3
            or any(not isinstance(r, (int, float)) or r <= 0 for r in ratios)):
        raise ConfigError("split.ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError("split.ratios must sum to 1")
    split = SplitConfig(ratios=tuple(float(r) for r in ratios),
                        seed=int(raw_split.get("seed", 13)))

    raw_pipe = raw.get("pipeline", {})
    k = int(raw_pipe.get("k", 4))
    workers = int(raw_pipe.get("workers", 1))
    if k < 1 or workers < 1:
        raise ConfigError("pipeline.k and pipeline.workers must be >= 1")
    pipeline = PipelineConfig(
        k=k, workers=workers,
        generate_images=bool(raw_pipe.get("generate_images", True)),
    )

    raw_pair = raw.get("pairing", {})
    n_pairs = int(raw_pair.get("n_pairs", 400))
    min_sim = float(raw_pair.get("min_similarity", 0.85))
    if n_pairs < 1:
        raise ConfigError("pairing.n_pairs must be >= 1")
    if not 0.0 <= min_sim <= 1.0:
        raise ConfigError("pairing.min_similarity must be in [0, 1]")
    pairing = PairingConfig(n_pairs=n_pairs, min_similarity=min_sim)

    raw_metrics = raw.get("metrics", {})
    metrics = MetricsConfig(
        clip_score=bool(raw_metrics.get("clip_score", True)),
        copy_rate=bool(raw_metrics.get("copy_rate", True)),
    )

    return RunConfig(
        paths=paths, backends=backends, ingest=ingest, split=split,
        pipeline=pipeline, pairing=pairing, metrics=metrics,
        seed=int(raw.get("seed", 0)),
    )
