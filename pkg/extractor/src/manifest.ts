import { readFileSync } from "node:fs";
import { ManifestError } from "./errors.js";

export interface ManifestEntry {
  id: string;
  path: string;
}

/** Parse an `id<TAB>path` manifest; blank lines and #-comments are skipped. */
export function parseManifest(text: string): ManifestEntry[] {
  const entries: ManifestEntry[] = [];
  const seen = new Set<string>();
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line || line.startsWith("#")) {
      continue;
    }
    const tab = line.indexOf("\t");
    if (tab <= 0 || tab === line.length - 1) {
      throw new ManifestError(`line ${i + 1}: expected id<TAB>path, got ${JSON.stringify(line)}`);
    }
    const id = line.slice(0, tab).trim();
    const path = line.slice(tab + 1).trim();
    if (!id || !path) {
      throw new ManifestError(`line ${i + 1}: empty id or path`);
    }
    if (seen.has(id)) {
      throw new ManifestError(`line ${i + 1}: duplicate id ${JSON.stringify(id)}`);
    }
    seen.add(id);
    entries.push({ id, path });
  }
  return entries;
}

export function loadManifest(path: string): ManifestEntry[] {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new ManifestError(`cannot read manifest ${path}: ${(err as Error).message}`);
  }
  return parseManifest(text);
}
