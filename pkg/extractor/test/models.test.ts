import { describe, expect, it } from "vitest";
import { ModelUnavailable } from "../src/errors.js";
import {
  captionBytes,
  embedBytes,
  embedText,
  modelChecksum,
  resolveModel,
} from "../src/models.js";

const textSpec = resolveModel("feathash-64-v1", "text");
const byteSpec = resolveModel("bytestat-64-v1", "audio");
const capSpec = resolveModel("rulecap-v1", "audio");

function norm(vec: number[]): number {
  return Math.sqrt(vec.reduce((a, x) => a + x * x, 0));
}

describe("model registry", () => {
  it("resolves pinned models", () => {
    expect(textSpec.algorithm).toBe("feature-hash");
    expect(byteSpec.dim).toBe(64);
  });

  it("rejects unknown model ids", () => {
    expect(() => resolveModel("gpt-imaginary", "text")).toThrow(ModelUnavailable);
  });

  it("rejects unsupported modalities", () => {
    expect(() => resolveModel("feathash-64-v1", "audio")).toThrow(ModelUnavailable);
  });

  it("checksums are stable", () => {
    expect(modelChecksum("feathash-64-v1")).toBe(modelChecksum("feathash-64-v1"));
    expect(modelChecksum("feathash-64-v1")).not.toBe(modelChecksum("bytestat-64-v1"));
  });
});

describe("embedText", () => {
  it("is deterministic and unit-norm", () => {
    const a = embedText("a calm piano piece", textSpec)!;
    const b = embedText("a calm piano piece", textSpec)!;
    expect(a).toEqual(b);
    expect(norm(a)).toBeCloseTo(1.0, 12);
  });

  it("distinguishes different texts", () => {
    const a = embedText("a calm piano piece", textSpec)!;
    const b = embedText("frantic electric drums", textSpec)!;
    expect(a).not.toEqual(b);
  });

  it("returns null for empty text", () => {
    expect(embedText("   ", textSpec)).toBeNull();
  });
});

describe("embedBytes", () => {
  const payload = Buffer.from(
    Array.from({ length: 4096 }, (_, i) => (i * 37 + 11) % 256),
  );

  it("is deterministic and unit-norm", () => {
    const a = embedBytes(payload, byteSpec)!;
    const b = embedBytes(payload, byteSpec)!;
    expect(a).toEqual(b);
    expect(a).toHaveLength(64);
    expect(norm(a)).toBeCloseTo(1.0, 12);
  });

  it("returns null for empty buffers", () => {
    expect(embedBytes(Buffer.alloc(0), byteSpec)).toBeNull();
  });

  it("changes with content", () => {
    const other = Buffer.from(payload);
    other[0] = (other[0] + 101) % 256;
    expect(embedBytes(other, byteSpec)).not.toEqual(embedBytes(payload, byteSpec));
  });
});

describe("captionBytes", () => {
  const payload = Buffer.from(Array.from({ length: 2048 }, (_, i) => (i * 13) % 251));

  it("produces a non-empty caption with VA in range", () => {
    const cap = captionBytes(payload, capSpec, "clip01")!;
    expect(cap.caption.length).toBeGreaterThan(0);
    expect(cap.valence).toBeGreaterThanOrEqual(0);
    expect(cap.valence).toBeLessThanOrEqual(1);
    expect(cap.arousal).toBeGreaterThanOrEqual(0);
    expect(cap.arousal).toBeLessThanOrEqual(1);
  });

  it("is deterministic per (bytes, id)", () => {
    expect(captionBytes(payload, capSpec, "clip01")).toEqual(
      captionBytes(payload, capSpec, "clip01"),
    );
  });

  it("returns null for empty audio", () => {
    expect(captionBytes(Buffer.alloc(0), capSpec, "x")).toBeNull();
  });
});
