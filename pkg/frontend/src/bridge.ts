import { spawnSync } from "node:child_process";

/** Executable resolved at call time; override with PALETTE_FORGE_BIN. */
export function toolkitBin(): string {
  return process.env.PALETTE_FORGE_BIN ?? "palette-forge";
}

const MAX_OUTPUT = 64 * 1024 * 1024;

export class ToolkitError extends Error {
  constructor(
    readonly args: readonly string[],
    readonly exitCode: number | null,
    message: string,
  ) {
    super(message);
    this.name = "ToolkitError";
  }
}

function errorDetail(stderr: Buffer): string {
  const text = stderr.toString("utf8").trim();
  try {
    const doc = JSON.parse(text);
    if (doc !== null && typeof doc.error === "string") {
      return doc.error;
    }
  } catch {
    // stderr was not the usual JSON error document; report it verbatim
  }
  return text === "" ? "toolkit exited with an error" : text;
}

/** Run one toolkit subcommand and return its raw stdout. */
export function runToolkit(args: readonly string[]): Buffer {
  const proc = spawnSync(toolkitBin(), args as string[], {
    maxBuffer: MAX_OUTPUT,
    windowsHide: true,
  });
  if (proc.error !== undefined) {
    const code = (proc.error as NodeJS.ErrnoException).code;
    const detail =
      code === "ENOENT"
        ? `${toolkitBin()} is not on PATH; install the toolkit or set PALETTE_FORGE_BIN`
        : proc.error.message;
    throw new ToolkitError(args, null, detail);
  }
  if (proc.status !== 0) {
    throw new ToolkitError(args, proc.status, errorDetail(proc.stderr));
  }
  return proc.stdout;
}

/** Run one toolkit subcommand and parse its JSON stdout. */
export function runToolkitJson<T>(args: readonly string[]): T {
  return JSON.parse(runToolkit(args).toString("utf8")) as T;
}

/** Version string reported by the installed toolkit executable. */
export function toolkitVersion(): string {
  const line = runToolkit(["--version"]).toString("utf8").trim();
  const match = /^palette-forge (\S+)$/.exec(line);
  if (match === null) {
    throw new ToolkitError(["--version"], 0, `unrecognized version line: ${line}`);
  }
  return match[1];
}
