import { execFileSync, spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";
import { PNG } from "pngjs";

export const EXPORTER_ROOT = path.resolve(__dirname, "..");
export const CLI = path.join(EXPORTER_ROOT, "dist", "cli.js");

/** The retrieval engine, consumed strictly through its CLI. */
export const ENGINE = process.env.MVDR_PYTHON ?? "python3";

export function engineAvailable(): boolean {
  const probe = spawnSync(ENGINE, ["-m", "mvdr", "--help"], { encoding: "utf-8" });
  return probe.status === 0;
}

export function runEngine(args: string[]): { status: number; stdout: string; stderr: string } {
  const result = spawnSync(ENGINE, ["-m", "mvdr", ...args], { encoding: "utf-8" });
  return { status: result.status ?? -1, stdout: result.stdout, stderr: result.stderr };
}

export function runCli(args: string[]): { status: number; stdout: string; stderr: string } {
  const result = spawnSync("node", [CLI, ...args], { encoding: "utf-8" });
  return { status: result.status ?? -1, stdout: result.stdout, stderr: result.stderr };
}

export function buildCli(): void {
  execFileSync(path.join(EXPORTER_ROOT, "node_modules", ".bin", "tsc"), ["-p", "tsconfig.json"], {
    cwd: EXPORTER_ROOT,
  });
}

/** Deterministic synthetic "document pages" with structure per page. */
export function writeTestPages(dir: string, count = 3): string[] {
  fs.mkdirSync(dir, { recursive: true });
  const paths: string[] = [];
  for (let n = 0; n < count; n++) {
    const width = 40;
    const height = 28;
    const png = new PNG({ width, height });
    for (let y = 0; y < height; y++) {
      for (let x = 0; x < width; x++) {
        const i = (y * width + x) * 4;
        const inBlock =
          (n % 3 === 0 && x < 14 && y < 12) ||
          (n % 3 === 1 && x >= 24 && y < 12) ||
          (n % 3 === 2 && y >= 18 && x >= 10 && x < 30);
        const stripe = (x + 3 * n) % 7 === 0 ? 60 : 0;
        const value = inBlock ? 40 + 10 * n : 235 - stripe;
        png.data[i] = value;
        png.data[i + 1] = value;
        png.data[i + 2] = Math.min(255, value + 8 * n);
        png.data[i + 3] = 255;
      }
    }
    const file = path.join(dir, `page${n}.png`);
    fs.writeFileSync(file, PNG.sync.write(png));
    paths.push(file);
  }
  return paths;
}

export function inspectDoc(corpusPath: string, docId: string): Record<string, unknown> {
  const result = runEngine(["inspect", "--corpus", corpusPath, "--doc-id", docId]);
  if (result.status !== 0) {
    throw new Error(`engine inspect failed: ${result.stderr}`);
  }
  return JSON.parse(result.stdout);
}
