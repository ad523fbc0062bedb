#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { argv as processArgv, exit } from "node:process";
import { fileURLToPath } from "node:url";
import { ExtractorError, ModelUnavailable } from "./errors.js";
import { captionAudio, extract, ExtractionResult } from "./extract.js";
import { Modality } from "./models.js";

const USAGE = `usage:
  m2i-extract extract --manifest M --modality audio|image|text --model ID --out F
  m2i-extract caption --manifest M --out F [--model ID]

Manifest lines are id<TAB>path. Skipped assets are listed on stderr and in
<out>.skips.json when any occur. Exit codes: 0 ok (possibly with skips),
1 usage/manifest error, 2 model unavailable.`;

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new ExtractorError(`bad arguments near ${JSON.stringify(key)}`);
    }
    flags.set(key.slice(2), value);
  }
  return flags;
}

function need(flags: Map<string, string>, name: string): string {
  const value = flags.get(name);
  if (!value) {
    throw new ExtractorError(`missing required flag --${name}`);
  }
  return value;
}

function reportSkips(outPath: string, result: ExtractionResult): void {
  if (result.skipped.length > 0) {
    console.error(`skipped ${result.skipped.length} asset(s):`);
    for (const skip of result.skipped) {
      console.error(`  ${skip.id}: ${skip.reason}`);
    }
    writeFileSync(`${outPath}.skips.json`, JSON.stringify(result.skipped, null, 2) + "\n");
  }
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "extract") {
      const flags = parseFlags(rest);
      const modality = need(flags, "modality") as Modality;
      if (!["audio", "image", "text"].includes(modality)) {
        throw new ExtractorError(`unknown modality ${JSON.stringify(modality)}`);
      }
      const outPath = need(flags, "out");
      const result = extract({
        manifestPath: need(flags, "manifest"),
        modality,
        modelId: need(flags, "model"),
        outPath,
      });
      console.error(`wrote ${result.written} vector(s) to ${outPath}`);
      reportSkips(outPath, result);
      return 0;
    }
    if (command === "caption") {
      const flags = parseFlags(rest);
      const outPath = need(flags, "out");
      const result = captionAudio({
        manifestPath: need(flags, "manifest"),
        modality: "audio",
        modelId: flags.get("model") ?? "rulecap-v1",
        outPath,
      });
      if (result.written === 0) {
        console.error("warning: empty manifest produced an empty captions file");
      }
      console.error(`wrote ${result.written} caption(s) to ${outPath}`);
      reportSkips(outPath, result);
      return 0;
    }
    console.error(USAGE);
    return command === undefined || command === "--help" ? 0 : 1;
  } catch (err) {
    if (err instanceof ExtractorError) {
      console.error(`error: ${err.message}`);
      return err instanceof ModelUnavailable ? 2 : 1;
    }
    throw err;
  }
}

if (processArgv[1] && fileURLToPath(import.meta.url) === processArgv[1]) {
  exit(main(processArgv.slice(2)));
}
