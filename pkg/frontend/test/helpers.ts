import { execFileSync } from "node:child_process";

/** Deterministic pixel noise from a 32-bit linear congruential generator. */
export function seededPixels(count: number, seed: number): Uint8Array {
  const out = new Uint8Array(count);
  let state = seed >>> 0;
  for (let i = 0; i < count; i += 1) {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    out[i] = state >>> 24;
  }
  return out;
}

export function solidPixels(
  width: number,
  height: number,
  rgb: readonly [number, number, number],
): Uint8Array {
  const out = new Uint8Array(width * height * 3);
  for (let i = 0; i < out.length; i += 3) {
    out[i] = rgb[0];
    out[i + 1] = rgb[1];
    out[i + 2] = rgb[2];
  }
  return out;
}

const DECODE_SCRIPT = [
  "import struct, sys",
  "from PIL import Image",
  "im = Image.open(sys.argv[1]).convert('RGB')",
  "sys.stdout.buffer.write(struct.pack('<II', im.width, im.height))",
  "sys.stdout.buffer.write(im.tobytes())",
].join("\n");

/**
 * Decode a PNG with the same image stack the toolkit uses, returning
 * raw RGB bytes. Keeps the PNG writer's round-trip check independent of
 * the writer itself.
 */
export function decodeWithPillow(pngPath: string): {
  width: number;
  height: number;
  pixels: Buffer;
} {
  const out = execFileSync("python3", ["-c", DECODE_SCRIPT, pngPath], {
    maxBuffer: 64 * 1024 * 1024,
  });
  return {
    width: out.readUInt32LE(0),
    height: out.readUInt32LE(4),
    pixels: out.subarray(8),
  };
}
