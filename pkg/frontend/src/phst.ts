const MAGIC = "PHST";
const FORMAT_VERSION = 1;
const HEADER_BYTES = 12;

const HOST_IS_LE = new Uint8Array(Uint16Array.of(1).buffer)[0] === 1;

/** Bin counts along the hue, saturation, and value axes. */
export interface HistogramDims {
  readonly hue: number;
  readonly saturation: number;
  readonly value: number;
}

/**
 * Float32Array stripped of its mutating surface. Typed arrays cannot be
 * frozen at runtime, so immutability is enforced by this type alone;
 * `slice()` returns an ordinary mutable copy when one is needed.
 */
export interface ReadonlyFloat32Array extends ArrayLike<number>, Iterable<number> {
  readonly buffer: ArrayBufferLike;
  readonly byteOffset: number;
  readonly byteLength: number;
  slice(start?: number, end?: number): Float32Array;
}

/** Dense per-bin masses plus axis metadata, value axis fastest. */
export interface BoundHistogram {
  readonly dims: HistogramDims;
  readonly mass: ReadonlyFloat32Array;
}

function binCount(dims: HistogramDims): number {
  return dims.hue * dims.saturation * dims.value;
}

/**
 * Float view over `count` little-endian f32 values at `offset` into
 * `data`. Zero-copy when the platform allows it (little-endian host,
 * 4-byte aligned slice); the view then aliases the input bytes.
 */
function massView(data: Uint8Array, offset: number, count: number): Float32Array {
  const absolute = data.byteOffset + offset;
  if (HOST_IS_LE && absolute % 4 === 0) {
    return new Float32Array(data.buffer, absolute, count);
  }
  const copy = new Float32Array(count);
  const view = new DataView(data.buffer, absolute, count * 4);
  for (let i = 0; i < count; i += 1) {
    copy[i] = view.getFloat32(i * 4, true);
  }
  return copy;
}

/**
 * Decode one serialized histogram starting at `offset` and report how
 * many bytes it occupied. Bytes after the block are left for the caller,
 * which lets container formats embed histogram blocks.
 */
export function readHistogramAt(
  data: Uint8Array,
  offset: number,
): { histogram: BoundHistogram; bytesConsumed: number } {
  if (data.byteLength - offset < HEADER_BYTES) {
    throw new RangeError(
      `histogram block needs at least ${HEADER_BYTES} bytes, ` +
        `got ${data.byteLength - offset}`,
    );
  }
  const view = new DataView(data.buffer, data.byteOffset + offset, HEADER_BYTES);
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== MAGIC) {
    throw new RangeError("bad magic: not a serialized histogram");
  }
  const version = view.getUint16(4, true);
  if (version !== FORMAT_VERSION) {
    throw new RangeError(`unsupported histogram format version ${version}`);
  }
  const dims: HistogramDims = {
    hue: view.getUint16(6, true),
    saturation: view.getUint16(8, true),
    value: view.getUint16(10, true),
  };
  const count = binCount(dims);
  if (count === 0) {
    throw new RangeError("histogram header declares an empty bin grid");
  }
  const bytesConsumed = HEADER_BYTES + count * 4;
  if (data.byteLength - offset < bytesConsumed) {
    throw new RangeError(
      `histogram block truncated: header promises ${bytesConsumed} bytes, ` +
        `got ${data.byteLength - offset}`,
    );
  }
  return {
    histogram: { dims, mass: massView(data, offset + HEADER_BYTES, count) },
    bytesConsumed,
  };
}

/** Decode a standalone serialized histogram; trailing bytes are rejected. */
export function decodeHistogram(data: Uint8Array): BoundHistogram {
  const { histogram, bytesConsumed } = readHistogramAt(data, 0);
  if (bytesConsumed !== data.byteLength) {
    throw new RangeError(
      `${data.byteLength - bytesConsumed} trailing bytes after the histogram block`,
    );
  }
  return histogram;
}

/** Serialize a histogram to the exact byte layout the toolkit writes. */
export function encodeHistogram(hist: BoundHistogram): Buffer {
  const { hue, saturation, value } = hist.dims;
  for (const [axis, bins] of [
    ["hue", hue],
    ["saturation", saturation],
    ["value", value],
  ] as const) {
    if (!Number.isInteger(bins) || bins <= 0 || bins > 0xffff) {
      throw new RangeError(`${axis} axis needs 1..65535 bins, got ${bins}`);
    }
  }
  const count = binCount(hist.dims);
  if (hist.mass.length !== count) {
    throw new RangeError(
      `mass array holds ${hist.mass.length} bins, ` +
        `dims ${hue}x${saturation}x${value} need ${count}`,
    );
  }
  const out = Buffer.alloc(HEADER_BYTES + count * 4);
  out.write(MAGIC, 0, "latin1");
  out.writeUInt16LE(FORMAT_VERSION, 4);
  out.writeUInt16LE(hue, 6);
  out.writeUInt16LE(saturation, 8);
  out.writeUInt16LE(value, 10);
  if (HOST_IS_LE) {
    out.set(
      new Uint8Array(hist.mass.buffer, hist.mass.byteOffset, hist.mass.byteLength),
      HEADER_BYTES,
    );
  } else {
    const view = new DataView(out.buffer, out.byteOffset + HEADER_BYTES);
    for (let i = 0; i < count; i += 1) {
      view.setFloat32(i * 4, hist.mass[i], true);
    }
  }
  return out;
}
