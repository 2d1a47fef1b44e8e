/**
 * Export pipelines: images -> MVDR corpus, query text -> MVDQ file.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { performance } from "node:perf_hooks";
import { Checkpoint } from "./checkpoint";
import { decodeImage } from "./image";
import { averageHeads, encodePage, encodeQuery } from "./model";
import {
  DocumentExport,
  QueryExport,
  encodeCorpus,
  encodeQueries,
  writeAtomic,
} from "./mvdr";

export interface CorpusExportOptions {
  imagesDir: string;
  outPath: string;
  maxSide: number;
  /** Emit per-head attention instead of pre-averaged importance. */
  perHead: boolean;
  nfpPrompt?: string;
  timing: boolean;
}

export interface CorpusExportSummary {
  documents: number;
  meanEncodeMs: number;
}

const IMAGE_EXTENSIONS = new Set([".png", ".ppm"]);

export function listImages(imagesDir: string): string[] {
  const entries = fs
    .readdirSync(imagesDir)
    .filter((name) => IMAGE_EXTENSIONS.has(path.extname(name).toLowerCase()))
    .sort();
  return entries.map((name) => path.join(imagesDir, name));
}

export function exportCorpus(checkpoint: Checkpoint, options: CorpusExportOptions): CorpusExportSummary {
  const imagePaths = listImages(options.imagesDir);
  const docs: DocumentExport[] = [];
  const timings: number[] = [];

  for (const imagePath of imagePaths) {
    const docId = path.basename(imagePath).replace(/\.[^.]+$/, "");
    try {
      const started = performance.now();
      const image = decodeImage(imagePath);
      const page = encodePage(checkpoint, image, {
        maxSide: options.maxSide,
        nfpPrompt: options.nfpPrompt,
      });
      timings.push(performance.now() - started);
      docs.push({
        docId,
        embeddings: page.patchEmbeddings,
        gridRows: page.gridRows,
        gridCols: page.gridCols,
        importance: options.perHead ? null : averageHeads(page.headAttention),
        headAttention: options.perHead ? page.headAttention : null,
        globalEmbedding: page.globalEmbedding,
      });
    } catch (err) {
      // fail the whole export: a partial corpus must never be written
      throw new Error(`document ${docId} (${imagePath}): ${(err as Error).message}`);
    }
  }

  writeAtomic(options.outPath, encodeCorpus(docs));
  const meanEncodeMs = timings.length
    ? timings.reduce((a, b) => a + b, 0) / timings.length
    : 0;
  if (options.timing) {
    docs.forEach((doc, i) => {
      process.stderr.write(`encode ${doc.docId}: ${timings[i].toFixed(1)} ms\n`);
    });
    process.stderr.write(`mean per-document encode: ${meanEncodeMs.toFixed(1)} ms over ${docs.length} pages\n`);
  }
  return { documents: docs.length, meanEncodeMs };
}

export interface QueryExportOptions {
  queriesPath: string;
  outPath: string;
}

export function exportQueries(checkpoint: Checkpoint, options: QueryExportOptions): number {
  const lines = fs.readFileSync(options.queriesPath, "utf-8").split(/\r?\n/);
  const queries: QueryExport[] = [];
  lines.forEach((line, index) => {
    const isTrailingNewlineArtifact = index === lines.length - 1 && line === "";
    if (line.trim().length === 0) {
      if (!isTrailingNewlineArtifact) {
        process.stderr.write(`warning: skipping empty query line ${index + 1}\n`);
      }
      return;
    }
    const encoded = encodeQuery(checkpoint, line);
    if (!encoded) {
      process.stderr.write(`warning: no tokens in query line ${index + 1}, skipped\n`);
      return;
    }
    queries.push({ queryId: `q${String(index + 1).padStart(4, "0")}`, embeddings: encoded.tokenEmbeddings });
  });
  writeAtomic(options.outPath, encodeQueries(queries));
  return queries.length;
}
