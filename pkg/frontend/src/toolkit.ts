import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { runToolkit, runToolkitJson } from "./bridge.js";
import { decodeHistogram, encodeHistogram } from "./phst.js";
import { encodePngRgb8 } from "./png.js";
import type { AugmentationKind } from "./pcnd.js";
import type { BoundHistogram } from "./phst.js";

/** Overrides for the toolkit's distance configuration. */
export interface DistanceOptions {
  /** Clip point for the ground color difference. */
  threshold?: number;
  /** Exponent applied to the clipped, rescaled ground difference. */
  sharpenExponent?: number;
  /** Mass normalization exponent of the quadratic-chi form. */
  qcExponent?: number;
}

export interface PaletteOptions {
  method?: "median-cut" | "kmeans";
  size?: number;
  /** Clustering seed; only the kmeans method reads it. */
  seed?: number;
}

export interface Palette {
  colors: string[];
  weights?: number[];
}

export interface ConditionOptions {
  /** Omit to let the toolkit sample a type from its dropout table. */
  augmentation?: AugmentationKind;
  /** Sampling seed; only read when `augmentation` is omitted. */
  seed?: number;
  /** Hex colors for palette conditions; extracted from the image when omitted. */
  palette?: readonly string[];
  /** Applies only when `augmentation` is set; sampled records draw it from the table. */
  textPresent?: boolean;
  /** Same scope as `textPresent`. */
  dropEntropy?: boolean;
  distance?: DistanceOptions;
}

export interface EvalOptions {
  /** Keep cases whose captions never mention a color. */
  keepAllCaptions?: boolean;
  distance?: DistanceOptions;
}

export interface EvalReport {
  case_count: number;
  mean_distance: number;
  std_distance: number;
  std_kind: string;
  scores: Record<string, number>;
  failed: string[];
  cases_total: number;
  cases_filtered_out: number;
}

function withWorkspace<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "palette-forge-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function configArgs(dir: string, options: DistanceOptions | undefined): string[] {
  const doc: Record<string, number> = {};
  if (options?.threshold !== undefined) doc.threshold = options.threshold;
  if (options?.sharpenExponent !== undefined) {
    doc.sharpen_exponent = options.sharpenExponent;
  }
  if (options?.qcExponent !== undefined) doc.qc_exponent = options.qcExponent;
  if (Object.keys(doc).length === 0) {
    return [];
  }
  const path = join(dir, "config.json");
  writeFileSync(path, JSON.stringify(doc));
  return ["--config", path];
}

function writePng(
  dir: string,
  name: string,
  pixels: Uint8Array,
  width: number,
  height: number,
): string {
  const path = join(dir, name);
  writeFileSync(path, encodePngRgb8(pixels, width, height));
  return path;
}

/**
 * Histogram of a raw RGB pixel buffer, computed by the toolkit and
 * returned as a view over its serialized output.
 */
export function histogramOfImage(
  pixels: Uint8Array,
  width: number,
  height: number,
): BoundHistogram {
  return withWorkspace((dir) => {
    const png = writePng(dir, "image.png", pixels, width, height);
    const out = join(dir, "image.phst");
    runToolkit(["hist", png, "-o", out]);
    return decodeHistogram(readFileSync(out));
  });
}

function histogramDistance(
  metric: "emd" | "qc",
  a: BoundHistogram,
  b: BoundHistogram,
  options: DistanceOptions | undefined,
): number {
  return withWorkspace((dir) => {
    const pa = join(dir, "a.phst");
    writeFileSync(pa, encodeHistogram(a));
    const pb = join(dir, "b.phst");
    writeFileSync(pb, encodeHistogram(b));
    const args = [...configArgs(dir, options), "dist", pa, pb, "--metric", metric];
    return runToolkitJson<{ distance: number }>(args).distance;
  });
}

/** Exact transport distance between two histograms. */
export function emd(
  a: BoundHistogram,
  b: BoundHistogram,
  options?: DistanceOptions,
): number {
  return histogramDistance("emd", a, b, options);
}

/** Cross-bin quadratic-chi distance between two histograms. */
export function quadraticChi(
  a: BoundHistogram,
  b: BoundHistogram,
  options?: DistanceOptions,
): number {
  return histogramDistance("qc", a, b, options);
}

/** Shannon entropy of a histogram, in bits. */
export function entropyBits(hist: BoundHistogram): number {
  return withWorkspace((dir) => {
    const path = join(dir, "h.phst");
    writeFileSync(path, encodeHistogram(hist));
    return runToolkitJson<{ entropy_bits: number }>(["entropy", path]).entropy_bits;
  });
}

/** Representative palette of a raw RGB pixel buffer. */
export function extractPalette(
  pixels: Uint8Array,
  width: number,
  height: number,
  options: PaletteOptions = {},
): Palette {
  return withWorkspace((dir) => {
    const png = writePng(dir, "image.png", pixels, width, height);
    const args = ["extract", png, "--method", options.method ?? "median-cut"];
    if (options.size !== undefined) {
      args.push("-k", String(options.size));
    }
    if (options.seed !== undefined) {
      args.push("--seed", String(options.seed));
    }
    return runToolkitJson<Palette>(args);
  });
}

/**
 * Build a serialized condition record for a raw RGB pixel buffer.
 * The returned bytes are exactly what the toolkit wrote; feed them to
 * `decodeConditionRecord` for a structured view.
 */
export function encodeCondition(
  pixels: Uint8Array,
  width: number,
  height: number,
  options: ConditionOptions = {},
): Buffer {
  return withWorkspace((dir) => {
    const png = writePng(dir, "image.png", pixels, width, height);
    const out = join(dir, "record.pcnd");
    const args = [...configArgs(dir, options.distance), "encode", png, "-o", out];
    if (options.augmentation !== undefined) {
      args.push("--aug", options.augmentation);
    }
    if (options.seed !== undefined) {
      args.push("--seed", String(options.seed));
    }
    if (options.palette !== undefined) {
      const pal = join(dir, "palette.json");
      writeFileSync(pal, JSON.stringify({ colors: options.palette }));
      args.push("--palette", pal);
    }
    if (options.textPresent === false) {
      args.push("--no-text");
    }
    if (options.dropEntropy === true) {
      args.push("--drop-entropy");
    }
    runToolkit(args);
    return readFileSync(out);
  });
}

/**
 * Score generated images against their target palettes. `casesPath`
 * names a JSONL manifest and `generatedDir` the directory of images to
 * score; both stay on disk, only the report crosses back.
 */
export function evaluateCases(
  casesPath: string,
  generatedDir: string,
  options: EvalOptions = {},
): EvalReport {
  return withWorkspace((dir) => {
    const args = [
      ...configArgs(dir, options.distance),
      "eval",
      "--cases",
      casesPath,
      "--generated",
      generatedDir,
    ];
    if (options.keepAllCaptions === true) {
      args.push("--no-filter");
    }
    return runToolkitJson<EvalReport>(args);
  });
}
