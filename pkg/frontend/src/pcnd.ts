import { readHistogramAt } from "./phst.js";
import type { BoundHistogram } from "./phst.js";

const MAGIC = "PCND";
const FORMAT_VERSION = 1;
const HEADER_BYTES = 16;

/** Wire codes 0, 1, 2 in this order. */
export type AugmentationKind = "histogram" | "palette" | "none";
const AUG_NAMES: readonly AugmentationKind[] = ["histogram", "palette", "none"];

export interface ConditionRecord {
  readonly augmentation: AugmentationKind;
  readonly textPresent: boolean;
  /** Stored at float32 precision, so expect rounding against fresh computations. */
  readonly distance: number;
  readonly entropy: number;
  readonly histogram: BoundHistogram;
}

/** Decode a serialized condition record; trailing bytes are rejected. */
export function decodeConditionRecord(data: Uint8Array): ConditionRecord {
  if (data.byteLength < HEADER_BYTES) {
    throw new RangeError(
      `condition record needs at least ${HEADER_BYTES} bytes, got ${data.byteLength}`,
    );
  }
  const view = new DataView(data.buffer, data.byteOffset, HEADER_BYTES);
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== MAGIC) {
    throw new RangeError("bad magic: not a condition record");
  }
  const version = view.getUint16(4, true);
  if (version !== FORMAT_VERSION) {
    throw new RangeError(`unsupported condition record version ${version}`);
  }
  const augRaw = view.getUint8(6);
  if (augRaw >= AUG_NAMES.length) {
    throw new RangeError(`unknown augmentation code ${augRaw}`);
  }
  const augmentation = AUG_NAMES[augRaw];
  const textRaw = view.getUint8(7);
  if (textRaw > 1) {
    throw new RangeError(`text flag must be 0 or 1, got ${textRaw}`);
  }
  const { histogram, bytesConsumed } = readHistogramAt(data, HEADER_BYTES);
  if (HEADER_BYTES + bytesConsumed !== data.byteLength) {
    throw new RangeError(
      `${data.byteLength - HEADER_BYTES - bytesConsumed} trailing bytes ` +
        "after the condition record",
    );
  }
  return {
    augmentation,
    textPresent: textRaw === 1,
    distance: view.getFloat32(8, true),
    entropy: view.getFloat32(12, true),
    histogram,
  };
}
