import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { ModelUnavailable } from "./errors.js";
import { byteStats, keyedBucket, keyedFloat, l2Normalize, sha256Hex, tokenize } from "./hash.js";

export type Modality = "audio" | "image" | "text";

export interface ModelSpec {
  algorithm: string;
  modalities: Modality[];
  dim?: number;
  seed: string;
  blocks?: number;
  notes?: string;
}

const LOCKFILE = join(dirname(fileURLToPath(import.meta.url)), "..", "models.lock.json");

let cachedLock: Record<string, ModelSpec> | null = null;

export function loadLockfile(): Record<string, ModelSpec> {
  if (cachedLock === null) {
    cachedLock = JSON.parse(readFileSync(LOCKFILE, "utf8"));
  }
  return cachedLock as Record<string, ModelSpec>;
}

export function resolveModel(modelId: string, modality: Modality): ModelSpec {
  const lock = loadLockfile();
  const spec = lock[modelId];
  if (!spec) {
    throw new ModelUnavailable(
      `model ${JSON.stringify(modelId)} is not pinned in models.lock.json`,
    );
  }
  if (!spec.modalities.includes(modality)) {
    throw new ModelUnavailable(
      `model ${modelId} supports ${spec.modalities.join(", ")}, not ${modality}`,
    );
  }
  return spec;
}

/** Checksum of the pinned model configuration (its "weights"). */
export function modelChecksum(modelId: string): string {
  const lock = loadLockfile();
  return sha256Hex(JSON.stringify({ id: modelId, spec: lock[modelId] })).slice(0, 16);
}

/** Signed unigram+bigram feature hashing; returns null for empty text. */
export function embedText(text: string, spec: ModelSpec): number[] | null {
  const dim = spec.dim ?? 64;
  const tokens = tokenize(text);
  if (tokens.length === 0) {
    return null;
  }
  const grams = [...tokens];
  for (let i = 0; i + 1 < tokens.length; i++) {
    grams.push(`${tokens[i]} ${tokens[i + 1]}`);
  }
  const vec = new Array<number>(dim).fill(0);
  for (const gram of grams) {
    const { index, sign } = keyedBucket(`${spec.seed}|${gram}`, dim);
    vec[index] += sign;
  }
  return l2Normalize(vec);
}

/** Byte-statistics features through a seeded random projection. */
export function embedBytes(data: Buffer, spec: ModelSpec): number[] | null {
  const dim = spec.dim ?? 64;
  const blocks = spec.blocks ?? 16;
  const stats = byteStats(data, blocks);
  if (stats === null) {
    return null;
  }
  const vec = new Array<number>(dim).fill(0);
  for (let i = 0; i < dim; i++) {
    let acc = 0;
    for (let j = 0; j < stats.features.length; j++) {
      acc += stats.features[j] * keyedFloat(`${spec.seed}|w|${i}|${j}`);
    }
    vec[i] = acc;
  }
  return l2Normalize(vec);
}

const TEMPO_WORDS = ["slow", "unhurried", "steady", "brisk", "frantic"];
const ENERGY_WORDS = [
  "hushed ambient textures",
  "soft sustained chords",
  "rolling mid-tempo grooves",
  "driving percussive layers",
  "relentless saturated noise",
];
const MOOD_WORDS = ["somber", "wistful", "balanced", "warm", "euphoric"];
const INSTRUMENT_WORDS = [
  "piano", "strings", "guitar", "synth", "brass", "choir", "drums", "organ",
];

function bucket(x: number, n: number): number {
  return Math.max(0, Math.min(n - 1, Math.floor(x * n)));
}

export interface AudioCaption {
  caption: string;
  valence: number;
  arousal: number;
}

/** Deterministic template caption plus a VA estimate from byte statistics. */
export function captionBytes(
  data: Buffer,
  spec: ModelSpec,
  assetId: string,
): AudioCaption | null {
  const stats = byteStats(data, 16);
  if (stats === null) {
    return null;
  }
  const arousal = Math.min(1, Math.max(0, 0.15 + 2.2 * stats.meanSpread));
  const valence = Math.min(1, Math.max(0, stats.meanByte));
  const tempo = TEMPO_WORDS[bucket(Math.min(1, stats.blockChange * 4), TEMPO_WORDS.length)];
  const energy = ENERGY_WORDS[bucket(arousal, ENERGY_WORDS.length)];
  const mood = MOOD_WORDS[bucket(valence, MOOD_WORDS.length)];
  const { index } = keyedBucket(`${spec.seed}|instrument|${assetId}`, INSTRUMENT_WORDS.length);
  const instrument = INSTRUMENT_WORDS[index];
  const caption =
    `a ${tempo} ${mood} piece led by ${instrument}, built on ${energy}`;
  return { caption, valence, arousal };
}
