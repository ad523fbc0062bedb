import { readFileSync } from "node:fs";
import { loadManifest, ManifestEntry } from "./manifest.js";
import {
  AudioCaption,
  captionBytes,
  embedBytes,
  embedText,
  Modality,
  modelChecksum,
  resolveModel,
} from "./models.js";
import { renderCaptionsFile, renderEmbeddingFile, writeText } from "./format.js";

export interface ExtractionJob {
  manifestPath: string;
  modality: Modality;
  modelId: string;
  outPath: string;
  batchSize?: number;
}

export interface SkipRecord {
  id: string;
  reason: string;
}

export interface ExtractionResult {
  written: number;
  skipped: SkipRecord[];
}

function readAsset(entry: ManifestEntry): Buffer | null {
  try {
    return readFileSync(entry.path);
  } catch {
    return null;
  }
}

/**
 * Convert raw assets into the canonical embedding file. Rows follow manifest
 * order; unreadable or degenerate assets are skipped and reported, never
 * fatal. Vectors are l2-normalized at extraction time (noted in the header).
 */
export function extract(job: ExtractionJob): ExtractionResult {
  const spec = resolveModel(job.modelId, job.modality);
  const entries = loadManifest(job.manifestPath);
  const rows: Array<{ id: string; vec: number[] }> = [];
  const skipped: SkipRecord[] = [];
  for (const entry of entries) {
    const data = readAsset(entry);
    if (data === null) {
      skipped.push({ id: entry.id, reason: `unreadable asset ${entry.path}` });
      continue;
    }
    const vec =
      job.modality === "text"
        ? embedText(data.toString("utf8"), spec)
        : embedBytes(data, spec);
    if (vec === null) {
      skipped.push({ id: entry.id, reason: "empty or degenerate asset" });
      continue;
    }
    rows.push({ id: entry.id, vec });
  }
  const comments = [
    `model: ${job.modelId}`,
    `model-checksum: ${modelChecksum(job.modelId)}`,
    "normalized: l2",
  ];
  writeText(
    job.outPath,
    renderEmbeddingFile(spec.dim ?? 64, job.modality, rows, comments),
  );
  return { written: rows.length, skipped };
}

/** Caption audio clips into the canonical captions JSONL (VA in [0, 1]). */
export function captionAudio(job: ExtractionJob): ExtractionResult {
  const spec = resolveModel(job.modelId, "audio");
  const entries = loadManifest(job.manifestPath);
  const rows: Array<{ clip_id: string; caption: string; valence: number; arousal: number }> = [];
  const skipped: SkipRecord[] = [];
  for (const entry of entries) {
    const data = readAsset(entry);
    const cap: AudioCaption | null =
      data === null ? null : captionBytes(data, spec, entry.id);
    if (data === null) {
      skipped.push({ id: entry.id, reason: `unreadable asset ${entry.path}` });
      continue;
    }
    if (cap === null) {
      skipped.push({ id: entry.id, reason: "empty asset" });
      continue;
    }
    rows.push({
      clip_id: entry.id,
      caption: cap.caption,
      valence: cap.valence,
      arousal: cap.arousal,
    });
  }
  writeText(job.outPath, renderCaptionsFile(rows));
  return { written: rows.length, skipped };
}
