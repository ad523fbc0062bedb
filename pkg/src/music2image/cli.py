"""Operator surface: reproducible subcommands over one JSON config.

Exit codes: 0 success, 1 validation/config/data error, 2 backend failure.
Logs go to stderr; artifacts go to the configured run directory, which is
locked for the duration of a command.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import affect, ingest, metrics as metrics_mod, pairing
from .agents.bundle import AttributeBundle
from .agents.lexicon import load_lexicon
from .agents.attribute_agents import load_templates
from .agents.pipeline import (
    ABLATABLE_AGENTS,
    PipelineBackends,
    run_batch,
    write_outputs_jsonl,
)
from .backends.clients import CLIENT_CLASSES
from .backends.mock import (
    MockAestheticBackend,
    MockEmbedBackend,
    MockImageBackend,
    MockVAPredictor,
)
from .backends.rule import RuleChatBackend
from .config import RunConfig, load_config
from .errors import (
    BackendError,
    ConfigError,
    EmptyCorpus,
    Music2ImageError,
    UnknownAgent,
)

log = logging.getLogger(__name__)

ABLATION_LABELS = {
    "verb": "w/o Verb",
    "composition": "w/o Composition",
    "color": "w/o Color",
    "style": "w/o Style",
}


@contextlib.contextmanager
def run_lock(run_dir: Path):
    run_dir.mkdir(parents=True, exist_ok=True)
    lock = run_dir / ".m2i.lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"run directory locked by another process: {lock}") from None
    os.write(fd, f"{os.getpid()}\n".encode("ascii"))
    os.close(fd)
    try:
        yield
    finally:
        lock.unlink(missing_ok=True)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _lexicon(config: RunConfig):
    return load_lexicon(config.paths.lexicon)


def _chat_backend(config: RunConfig, lexicon):
    if config.backends.effective_offline():
        return RuleChatBackend(lexicon)
    if config.backends.chat is None:
        raise ConfigError("online mode needs backends.chat")
    return CLIENT_CLASSES["chat"](config.backends.chat)


def _embed_backend(config: RunConfig):
    if config.backends.effective_offline():
        return MockEmbedBackend(config.backends.embed_dim, config.backends.mock_seed)
    if config.backends.embed is None:
        raise ConfigError("online mode needs backends.embed")
    return CLIENT_CLASSES["embed"](config.backends.embed)


def _imagegen_backend(config: RunConfig, run_dir: Path):
    if not config.pipeline.generate_images:
        return None
    if config.backends.effective_offline():
        return MockImageBackend(run_dir / "images", config.backends.mock_seed,
                                ref_prefix="images")
    if config.backends.imagegen is None:
        raise ConfigError("online mode needs backends.imagegen")
    return CLIENT_CLASSES["imagegen"](config.backends.imagegen)


def _aesthetic_backend(config: RunConfig, run_dir: Path):
    if config.backends.effective_offline():
        return MockAestheticBackend(config.backends.mock_seed, base_dir=run_dir)
    if config.backends.aesthetic is None:
        raise ConfigError("online mode needs backends.aesthetic")
    return CLIENT_CLASSES["aesthetic"](config.backends.aesthetic)


# --- ingest ---

def cmd_ingest(config: RunConfig) -> int:
    run_dir = config.paths.output_dir
    ann_path = config.paths.require("annotations_csv")
    with run_lock(run_dir):
        tracks = ingest.parse_annotation_csv(ann_path)
        if not tracks:
            raise ConfigError(f"{ann_path} contains no annotation rows")
        segments = []
        clip_to_track: dict[str, str] = {}
        for track_id, frames in tracks:
            for seg in ingest.segment_track(
                track_id, frames, config.ingest.clip_ms, config.ingest.music_va_range
            ):
                segments.append(seg)
                clip_to_track[seg.clip_id] = track_id
        _write_jsonl(run_dir / "segments.jsonl",
                     (ingest.segment_to_json(s) for s in segments))

        counts = {"tracks": len(tracks), "segments": len(segments)}

        if config.paths.captions_jsonl is not None:
            captions = ingest.load_captions(
                config.paths.captions_jsonl, config.ingest.captions_va_range
            )
            _write_jsonl(run_dir / "captions.jsonl",
                         (ingest.caption_to_json(c) for c in captions))
            counts["captions"] = len(captions)
        if config.paths.images_jsonl is not None:
            images = ingest.load_image_records(
                config.paths.images_jsonl, config.ingest.image_va_range
            )
            _write_jsonl(run_dir / "images.jsonl",
                         (ingest.image_record_to_json(r) for r in images))
            counts["images"] = len(images)

        assignment = ingest.split_dataset(
            sorted(clip_to_track), config.split.ratios, config.split.seed,
            group_fn=clip_to_track.get,
        )
        _write_jsonl(run_dir / "splits.jsonl",
                     ({"clip_id": cid, "split": assignment.mapping[cid]}
                      for cid in sorted(assignment.mapping)))
        counts.update({f"split_{k}": v for k, v in assignment.sizes().items()})

        artifacts = ["segments.jsonl", "splits.jsonl"]
        if "captions" in counts:
            artifacts.append("captions.jsonl")
        if "images" in counts:
            artifacts.append("images.jsonl")
        manifest = {
            "counts": counts,
            "checksums": {name: _sha256(run_dir / name) for name in sorted(artifacts)},
            "clip_ms": config.ingest.clip_ms,
            "split_ratios": list(config.split.ratios),
            "split_seed": config.split.seed,
        }
        _write_json(run_dir / "manifest.json", manifest)
    log.info("ingest: %s", counts)
    return 0


# --- train-va ---

def _read_segments_va(run_dir: Path) -> dict[str, tuple[float, float]]:
    path = run_dir / "segments.jsonl"
    if not path.is_file():
        raise ConfigError(f"{path} not found; run ingest first")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            out[obj["clip_id"]] = (obj["valence"], obj["arousal"])
    return out


def _read_splits(run_dir: Path) -> dict[str, str]:
    path = run_dir / "splits.jsonl"
    if not path.is_file():
        raise ConfigError(f"{path} not found; run ingest first")
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            out[obj["clip_id"]] = obj["split"]
    return out


def _matrices(ids, embeddings, targets):
    X = np.stack([embeddings[i].vec for i in ids])
    Y = np.array([targets[i] for i in ids], dtype=np.float64)
    return X, Y


def cmd_train_va(config: RunConfig, side: str) -> int:
    if side not in ("music", "image"):
        raise ConfigError(f"side must be music or image, got {side!r}")
    run_dir = config.paths.output_dir
    with run_lock(run_dir):
        if side == "music":
            embeddings = ingest.load_embeddings(config.paths.require("music_embeddings"))
            targets = _read_segments_va(run_dir)
            splits = _read_splits(run_dir)
        else:
            embeddings = ingest.load_embeddings(config.paths.require("image_embeddings"))
            images = ingest.load_image_records(
                config.paths.require("images_jsonl"), config.ingest.image_va_range
            )
            targets = {r.image_id: (r.vad[0], r.vad[1]) for r in images}
            assignment = ingest.split_dataset(
                sorted(targets), config.split.ratios, config.split.seed
            )
            splits = assignment.mapping

        usable = sorted(set(embeddings) & set(targets) & set(splits))
        skipped = len(set(targets) & set(splits)) - len(usable)
        if skipped:
            log.warning("train-va %s: %d records lack embeddings", side, skipped)
        by_split = {name: [i for i in usable if splits[i] == name]
                    for name in ingest.SPLIT_NAMES}
        for name, ids in by_split.items():
            if len(ids) < 2:
                raise ConfigError(f"split {name!r} has {len(ids)} usable records; need >= 2")

        X_tr, Y_tr = _matrices(by_split["train"], embeddings, targets)
        X_val, Y_val = _matrices(by_split["validation"], embeddings, targets)
        X_te, Y_te = _matrices(by_split["test"], embeddings, targets)

        lam, head = affect.select_lambda(X_tr, Y_tr, X_val, Y_val, side=side)
        result = affect.evaluate(head, X_te, Y_te)

        model_path = run_dir / f"model_{side}.jsonl"
        affect.save_head(head, model_path)
        _write_json(run_dir / f"metrics_{side}.json", {
            "side": side, "lambda": lam,
            "n_train": len(by_split["train"]),
            "n_validation": len(by_split["validation"]),
            "n_test": len(by_split["test"]),
            "metrics": result.as_dict(),
        })
        table = affect.render_metrics_table(f"VA head ({side} side)", result)
        (run_dir / f"metrics_{side}.txt").write_text(table, encoding="utf-8")
        sys.stdout.write(table)
    log.info("train-va %s: lambda=%s model=%s", side, lam, model_path)
    return 0


# --- pipeline ---

def _load_caption_records(config: RunConfig):
    return ingest.load_captions(
        config.paths.require("captions_jsonl"), config.ingest.captions_va_range
    )


def cmd_pipeline(config: RunConfig, ablate: tuple[str, ...] = (),
                 subdir: str | None = None) -> int:
    run_dir = config.paths.output_dir
    out_dir = run_dir / subdir if subdir else run_dir
    with run_lock(run_dir):
        records = _load_caption_records(config)
        lexicon = _lexicon(config)
        templates = load_templates(config.paths.templates_dir)
        backends = PipelineBackends(
            chat=_chat_backend(config, lexicon),
            imagegen=_imagegen_backend(config, out_dir),
        )
        outputs = run_batch(
            records, backends, lexicon, templates,
            k=config.pipeline.k, seed=config.seed, ablate=ablate,
            workers=config.pipeline.workers,
        )
        out_dir.mkdir(parents=True, exist_ok=True)
        write_outputs_jsonl(out_dir / "pipeline_outputs.jsonl", outputs)
    log.info("pipeline: %d records -> %s", len(outputs), out_dir / "pipeline_outputs.jsonl")
    return 0


# --- evaluate ---

def _image_va_predictor(config: RunConfig, run_dir: Path):
    if config.paths.image_va_model is not None:
        head = affect.load_head(config.paths.image_va_model)
        embedder = _embed_backend(config)

        def predict(ref: str):
            vec = embedder.embed([ref], modality="image")[0].vec
            return affect.predict(head, vec)

        return predict
    mock = MockVAPredictor(config.backends.mock_seed, base_dir=run_dir)
    return mock.predict


def evaluate_outputs(config: RunConfig, outputs_path: Path,
                     images_base: Path) -> metrics_mod.MetricsReport:
    if not outputs_path.is_file():
        raise ConfigError(f"{outputs_path} not found; run pipeline first")
    entries = []
    with open(outputs_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                entries.append(json.loads(line))
    if not entries:
        raise EmptyCorpus(f"{outputs_path} holds no pipeline outputs")

    references = {r.clip_id: r for r in _load_caption_records(config)}

    prompt_texts: list[str] = []
    ref_texts: list[str] = []
    token_pairs = []
    labels: list[str] = []
    image_paths: list[str] = []
    image_music_va = []
    image_prompts: list[str] = []
    for entry in entries:
        clip_id = entry["clip_id"]
        ref = references.get(clip_id)
        if ref is None:
            raise ConfigError(f"no reference caption for {clip_id!r}")
        ref_tokens = metrics_mod.tokenize(ref.caption)
        for prompt in entry["prompts"]:
            prompt_texts.append(prompt)
            ref_texts.append(ref.caption)
            token_pairs.append((metrics_mod.tokenize(prompt), ref_tokens))
        bundle = AttributeBundle.from_json(entry["bundle"])
        if bundle.scene is not None:
            labels.append(bundle.scene.category)
        if bundle.style is not None:
            labels.append(bundle.style.label)
        music_va = ref.va.as_tuple() if ref.va is not None else (0.5, 0.5)
        for idx, img in enumerate(entry["image_refs"]):
            image_paths.append(img["path"])
            image_music_va.append(music_va)
            image_prompts.append(entry["prompts"][idx])

    if not image_paths:
        raise ConfigError(
            "pipeline outputs carry no image refs; enable pipeline.generate_images"
        )

    embedder = _embed_backend(config)
    prompt_vecs = [e.vec for e in embedder.embed(prompt_texts, modality="text")]
    ref_vecs = [e.vec for e in embedder.embed(ref_texts, modality="text")]

    aesthetic = _aesthetic_backend(config, images_base)
    scores = aesthetic.aesthetic_score(image_paths)

    predict_va = _image_va_predictor(config, images_base)
    image_va = [predict_va(p) for p in image_paths]

    image_embs = prompt_embs_for_images = None
    if config.metrics.clip_score:
        image_embs = [e.vec for e in embedder.embed(image_paths, modality="image")]
        prompt_embs_for_images = [
            e.vec for e in embedder.embed(image_prompts, modality="text")
        ]

    return metrics_mod.build_report(
        prompts=[p for p, _ in token_pairs],
        reference_pairs=token_pairs,
        labels=labels,
        prompt_embeddings=prompt_vecs,
        reference_embeddings=ref_vecs,
        aesthetic_scores=scores,
        music_va=image_music_va,
        image_va=image_va,
        image_embeddings=image_embs,
        image_prompt_embeddings=prompt_embs_for_images,
        with_copy_rate=config.metrics.copy_rate,
    )


def cmd_evaluate(config: RunConfig, subdir: str | None = None,
                 name: str = "Ours") -> int:
    run_dir = config.paths.output_dir
    out_dir = run_dir / subdir if subdir else run_dir
    with run_lock(run_dir):
        report = evaluate_outputs(config, out_dir / "pipeline_outputs.jsonl", out_dir)
        (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
        table = metrics_mod.render_table([(name, report)])
        (out_dir / "report.txt").write_text(table, encoding="utf-8")
        sys.stdout.write(table)
    return 0


# --- ablate ---

def cmd_ablate(config: RunConfig, drop: str) -> int:
    if drop not in ABLATABLE_AGENTS:
        raise UnknownAgent(
            f"cannot ablate {drop!r}; choose one of {ABLATABLE_AGENTS} "
            "(the scene agent anchors every prompt and is not removable)"
        )
    run_dir = config.paths.output_dir
    subdir = f"ablation_{drop}"
    cmd_pipeline(config, ablate=(drop,), subdir=subdir)
    cmd_evaluate(config, subdir=subdir, name=ABLATION_LABELS[drop])

    full_report_path = run_dir / "report.json"
    ablated = json.loads((run_dir / subdir / "report.json").read_text("utf-8"))
    if full_report_path.is_file():
        full = json.loads(full_report_path.read_text("utf-8"))
        rows = [
            (ABLATION_LABELS[drop], metrics_mod.MetricsReport(**ablated)),
            ("Ours", metrics_mod.MetricsReport(**full)),
        ]
        table = metrics_mod.render_table(rows)
        (run_dir / subdir / "comparison.txt").write_text(table, encoding="utf-8")
        sys.stdout.write(table)
    return 0


# --- pair ---

def cmd_pair(config: RunConfig) -> int:
    run_dir = config.paths.output_dir
    with run_lock(run_dir):
        segments = _read_segments_va(run_dir)
        splits = _read_splits(run_dir)
        music = [
            (cid, ingest.VAPoint(*va)) for cid, va in sorted(segments.items())
            if splits.get(cid) == "test"
        ]
        images_all = ingest.load_image_records(
            config.paths.require("images_jsonl"), config.ingest.image_va_range
        )
        image_split = ingest.split_dataset(
            sorted(r.image_id for r in images_all), config.split.ratios, config.split.seed
        )
        images = [
            (r.image_id, r.va) for r in sorted(images_all, key=lambda r: r.image_id)
            if image_split.mapping[r.image_id] == "test"
        ]
        pairs = pairing.pair_by_va(
            music, images, config.pairing.n_pairs, config.pairing.min_similarity
        )
        pairing.write_pairs_jsonl(run_dir / "pairs.jsonl", pairs)
        summary = {
            "requested": config.pairing.n_pairs,
            "selected": len(pairs),
            "min_similarity": config.pairing.min_similarity,
            "lowest_selected": pairs[-1].similarity if pairs else None,
        }
        _write_json(run_dir / "pairs_summary.json", summary)
    log.info("pair: %s", summary)
    return 0


# --- report ---

def cmd_report(config: RunConfig) -> int:
    run_dir = config.paths.output_dir
    rows = []
    for agent in ("verb", "composition", "color", "style"):
        path = run_dir / f"ablation_{agent}" / "report.json"
        if path.is_file():
            rows.append((ABLATION_LABELS[agent],
                         metrics_mod.MetricsReport(**json.loads(path.read_text("utf-8")))))
    full_path = run_dir / "report.json"
    if full_path.is_file():
        rows.append(("Ours", metrics_mod.MetricsReport(**json.loads(full_path.read_text("utf-8")))))
    if not rows:
        raise ConfigError(f"no report.json files under {run_dir}; run evaluate first")
    table = metrics_mod.render_table(rows)
    (run_dir / "summary_table.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="m2i",
        description="Music-derived caption to emotion-aligned image prompt toolkit",
    )
    parser.add_argument("--config", required=True, help="path to the run config JSON")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed everywhere")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", help="parse, segment, normalize, split; write artifacts")
    p_train = sub.add_parser("train-va", help="fit and evaluate a VA regression head")
    p_train.add_argument("--side", required=True, choices=["music", "image"])
    sub.add_parser("pipeline", help="run the agent pipeline over the caption corpus")
    sub.add_parser("evaluate", help="score pipeline outputs and render the report table")
    p_ablate = sub.add_parser("ablate", help="re-run the pipeline without one agent")
    p_ablate.add_argument("--drop", required=True)
    sub.add_parser("pair", help="build the cross-modal benchmark pairs")
    sub.add_parser("report", help="render the combined full-vs-ablations table")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "train-va":
            return cmd_train_va(config, args.side)
        if args.command == "pipeline":
            return cmd_pipeline(config)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        if args.command == "ablate":
            return cmd_ablate(config, args.drop)
        if args.command == "pair":
            return cmd_pair(config)
        if args.command == "report":
            return cmd_report(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except BackendError as exc:
        log.error("backend failure: %s", exc)
        return 2
    except Music2ImageError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
