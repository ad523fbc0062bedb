import { writeFileSync } from "node:fs";

/**
 * The embedding file contract shared with the pipeline's loaders: optional
 * `#` comment lines, one JSON header line {dim, modality, count}, then one
 * {id, vec} JSON row per vector.
 */
export function renderEmbeddingFile(
  dim: number,
  modality: string,
  rows: Array<{ id: string; vec: number[] }>,
  comments: string[],
): string {
  const lines: string[] = comments.map((c) => `# ${c}`);
  lines.push(JSON.stringify({ dim, modality, count: rows.length }));
  for (const row of rows) {
    lines.push(JSON.stringify({ id: row.id, vec: row.vec }));
  }
  return lines.join("\n") + "\n";
}

export function renderCaptionsFile(
  rows: Array<{ clip_id: string; caption: string; valence?: number; arousal?: number }>,
): string {
  return rows.map((r) => JSON.stringify(r)).join("\n") + (rows.length ? "\n" : "");
}

export function writeText(path: string, text: string): void {
  writeFileSync(path, text, "utf8");
}
