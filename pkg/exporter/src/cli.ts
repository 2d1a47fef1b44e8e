#!/usr/bin/env node
/**
 * Export tool: runs page images and query text through the bundled (or
 * a user-supplied) vision-language encoder and writes the MVDR/MVDQ
 * container files the retrieval engine consumes.
 */

import * as fs from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { generateCheckpoint, resolveModel, saveCheckpoint } from "./checkpoint";
import { exportCorpus, exportQueries } from "./export";

function requireCpu(device: string): void {
  if (device !== "cpu") {
    throw new Error(`device "${device}" not available; this encoder runs on cpu only`);
  }
}

async function main(): Promise<void> {
  await yargs(hideBin(process.argv))
    .scriptName("vdr-export")
    .command(
      "export-corpus",
      "encode a directory of page images into an MVDR corpus",
      (cmd) =>
        cmd
          .option("model", { type: "string", demandOption: true, describe: "bundled model name or checkpoint path" })
          .option("images", { type: "string", demandOption: true, describe: "directory of .png/.ppm pages" })
          .option("out", { type: "string", demandOption: true })
          .option("per-head", { type: "boolean", default: false, describe: "store head-resolved attention instead of pre-averaged importance" })
          .option("nfp-prompt", { type: "string", describe: "file with a noise-filtering prompt prepended to the visual input" })
          .option("max-side", { type: "number", default: 64, describe: "downscale so the longest image side fits" })
          .option("device", { type: "string", default: "cpu" })
          .option("timing", { type: "boolean", default: false, describe: "report per-document encode latency" }),
      (argv) => {
        requireCpu(argv.device);
        const checkpoint = resolveModel(argv.model);
        const nfpPrompt = argv.nfpPrompt ? fs.readFileSync(argv.nfpPrompt, "utf-8").trim() : undefined;
        const summary = exportCorpus(checkpoint, {
          imagesDir: argv.images,
          outPath: argv.out,
          maxSide: argv.maxSide,
          perHead: argv.perHead,
          nfpPrompt,
          timing: argv.timing,
        });
        console.log(`wrote ${summary.documents} documents to ${argv.out}`);
      },
    )
    .command(
      "export-queries",
      "encode a text file (one query per line) into an MVDQ file",
      (cmd) =>
        cmd
          .option("model", { type: "string", demandOption: true })
          .option("queries", { type: "string", demandOption: true })
          .option("out", { type: "string", demandOption: true })
          .option("device", { type: "string", default: "cpu" }),
      (argv) => {
        requireCpu(argv.device);
        const checkpoint = resolveModel(argv.model);
        const count = exportQueries(checkpoint, { queriesPath: argv.queries, outPath: argv.out });
        console.log(`wrote ${count} queries to ${argv.out}`);
      },
    )
    .command(
      "save-checkpoint",
      "materialize a bundled model (or a fresh seed) as a checkpoint file",
      (cmd) =>
        cmd
          .option("model", { type: "string", default: "tiny-vdr" })
          .option("seed", { type: "number", describe: "generate from this seed instead of the bundled one" })
          .option("out", { type: "string", demandOption: true }),
      (argv) => {
        const checkpoint =
          argv.seed === undefined
            ? resolveModel(argv.model)
            : generateCheckpoint(argv.model, argv.seed, resolveModel(argv.model).config);
        saveCheckpoint(checkpoint, argv.out);
        console.log(`wrote checkpoint ${checkpoint.name} to ${argv.out}`);
      },
    )
    .demandCommand(1)
    .strict()
    .fail((message, error) => {
      console.error(`vdr-export: ${message ?? error?.message}`);
      process.exit(error ? 2 : 1);
    })
    .parseAsync();
}

main().catch((error) => {
  console.error(`vdr-export: ${(error as Error).message}`);
  process.exit(2);
});
