/** Must match the version reported by the toolkit executable. */
export const VERSION = "0.1.0";
