import { createHash } from "node:crypto";

export function sha256Hex(data: string | Buffer): string {
  return createHash("sha256").update(data).digest("hex");
}

function digestBytes(key: string): Buffer {
  return createHash("sha256").update(key, "utf8").digest();
}

/** Deterministic float in [-1, 1) derived from a string key. */
export function keyedFloat(key: string): number {
  const d = digestBytes(key);
  // 52 bits of entropy keeps the double exact and platform-independent
  const hi = d.readUInt32BE(0);
  const lo = d.readUInt32BE(4) >>> 12;
  const u = hi * 2 ** 20 + lo; // 52-bit unsigned
  return (u / 2 ** 51) - 1.0;
}

/** Deterministic bucket index plus a sign bit for feature hashing. */
export function keyedBucket(key: string, buckets: number): { index: number; sign: number } {
  const d = digestBytes(key);
  const index = Number(d.readBigUInt64BE(0) % BigInt(buckets));
  const sign = (d[8] & 1) === 1 ? 1 : -1;
  return { index, sign };
}

export function l2Normalize(vec: number[]): number[] | null {
  const norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0));
  if (norm === 0) {
    return null;
  }
  return vec.map((x) => x / norm);
}

export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .replace(/[^\p{L}\p{N}]+/gu, " ")
    .split(/\s+/)
    .filter((t) => t.length > 0);
}

export interface ByteStats {
  /** per-block [mean, spread, distinct-ratio] features, flattened */
  features: number[];
  meanByte: number;
  meanSpread: number;
  blockChange: number;
}

/** Fixed-size statistics over a byte stream, independent of its length. */
export function byteStats(data: Buffer, blocks: number): ByteStats | null {
  if (data.length === 0) {
    return null;
  }
  const features: number[] = [];
  const blockMeans: number[] = [];
  const size = Math.max(1, Math.ceil(data.length / blocks));
  for (let b = 0; b < blocks; b++) {
    const start = Math.min(b * size, data.length - 1);
    const end = Math.min((b + 1) * size, data.length);
    const slice = data.subarray(start, Math.max(end, start + 1));
    let sum = 0;
    const seen = new Set<number>();
    for (const byte of slice) {
      sum += byte;
      seen.add(byte);
    }
    const mean = sum / slice.length;
    let varSum = 0;
    for (const byte of slice) {
      varSum += (byte - mean) ** 2;
    }
    const spread = Math.sqrt(varSum / slice.length);
    features.push(mean / 255, spread / 255, seen.size / 256);
    blockMeans.push(mean / 255);
  }
  let change = 0;
  for (let i = 1; i < blockMeans.length; i++) {
    change += Math.abs(blockMeans[i] - blockMeans[i - 1]);
  }
  const meanByte = blockMeans.reduce((a, x) => a + x, 0) / blockMeans.length;
  const spreads = features.filter((_, i) => i % 3 === 1);
  const meanSpread = spreads.reduce((a, x) => a + x, 0) / spreads.length;
  return {
    features,
    meanByte,
    meanSpread,
    blockChange: change / (blockMeans.length - 1 || 1),
  };
}
