export { VERSION } from "./version.js";
export {
  ToolkitError,
  runToolkit,
  runToolkitJson,
  toolkitBin,
  toolkitVersion,
} from "./bridge.js";
export { encodePngRgb8 } from "./png.js";
export { decodeHistogram, encodeHistogram, readHistogramAt } from "./phst.js";
export type { BoundHistogram, HistogramDims, ReadonlyFloat32Array } from "./phst.js";
export { decodeConditionRecord } from "./pcnd.js";
export type { AugmentationKind, ConditionRecord } from "./pcnd.js";
export {
  emd,
  encodeCondition,
  entropyBits,
  evaluateCases,
  extractPalette,
  histogramOfImage,
  quadraticChi,
} from "./toolkit.js";
export type {
  ConditionOptions,
  DistanceOptions,
  EvalOptions,
  EvalReport,
  Palette,
  PaletteOptions,
} from "./toolkit.js";
