/**
 * Encoder checkpoints: a JSON weight container plus deterministic
 * generation of the bundled tiny models.
 *
 * `--model` accepts either a bundled model name (weights regenerated
 * from a fixed seed, nothing touches disk) or a path to a checkpoint
 * file produced by `save-checkpoint`.
 */

import * as fs from "node:fs";
import { Rng, hashString } from "./rng";

export interface EncoderConfig {
  patchSize: number;
  hiddenSize: number;
  numHeads: number;
  numLayers: number;
  outputDim: number;
  /** Mixed into token hashes so different models embed text differently. */
  tokenSeed: number;
}

export interface LayerWeights {
  wq: Float64Array;
  wk: Float64Array;
  wv: Float64Array;
  wo: Float64Array;
  ln1Gain: Float64Array;
  ln1Bias: Float64Array;
  ln2Gain: Float64Array;
  ln2Bias: Float64Array;
  mlpUp: Float64Array;
  mlpUpBias: Float64Array;
  mlpDown: Float64Array;
  mlpDownBias: Float64Array;
}

export interface Checkpoint {
  name: string;
  config: EncoderConfig;
  patchProj: Float64Array; // (featureDim x hidden)
  patchBias: Float64Array;
  globalToken: Float64Array;
  layers: LayerWeights[];
  lnFinalGain: Float64Array;
  lnFinalBias: Float64Array;
  outProj: Float64Array; // (hidden x outputDim)
}

export function featureDim(config: EncoderConfig): number {
  return config.patchSize * config.patchSize * 3;
}

const BUILTIN_MODELS: Record<string, { seed: number; config: EncoderConfig }> = {
  "tiny-vdr": {
    seed: 0x5eed,
    config: {
      patchSize: 8,
      hiddenSize: 32,
      numHeads: 4,
      numLayers: 2,
      outputDim: 16,
      tokenSeed: 0x70cc3,
    },
  },
  "tiny-vdr-wide": {
    seed: 0x31de,
    config: {
      patchSize: 8,
      hiddenSize: 64,
      numHeads: 8,
      numLayers: 3,
      outputDim: 32,
      tokenSeed: 0xba5e,
    },
  },
};

export function generateCheckpoint(name: string, seed: number, config: EncoderConfig): Checkpoint {
  const rng = new Rng(seed);
  const hidden = config.hiddenSize;
  const feature = featureDim(config);
  const mlpWidth = hidden * 4;

  const gaussianArray = (length: number, fanIn: number) =>
    rng.fillGaussian(new Float64Array(length), 1.0 / Math.sqrt(fanIn));
  const ones = (length: number) => new Float64Array(length).fill(1);

  const layers: LayerWeights[] = [];
  for (let i = 0; i < config.numLayers; i++) {
    layers.push({
      wq: gaussianArray(hidden * hidden, hidden),
      wk: gaussianArray(hidden * hidden, hidden),
      wv: gaussianArray(hidden * hidden, hidden),
      wo: gaussianArray(hidden * hidden, hidden),
      ln1Gain: ones(hidden),
      ln1Bias: new Float64Array(hidden),
      ln2Gain: ones(hidden),
      ln2Bias: new Float64Array(hidden),
      mlpUp: gaussianArray(hidden * mlpWidth, hidden),
      mlpUpBias: new Float64Array(mlpWidth),
      mlpDown: gaussianArray(mlpWidth * hidden, mlpWidth),
      mlpDownBias: new Float64Array(hidden),
    });
  }

  return {
    name,
    config,
    patchProj: gaussianArray(feature * hidden, feature),
    patchBias: new Float64Array(hidden),
    globalToken: gaussianArray(hidden, hidden),
    layers,
    lnFinalGain: ones(hidden),
    lnFinalBias: new Float64Array(hidden),
    outProj: gaussianArray(hidden * config.outputDim, hidden),
  };
}

export function resolveModel(identifier: string): Checkpoint {
  const builtin = BUILTIN_MODELS[identifier];
  if (builtin) {
    return generateCheckpoint(identifier, builtin.seed, builtin.config);
  }
  if (fs.existsSync(identifier)) {
    return loadCheckpoint(identifier);
  }
  const known = Object.keys(BUILTIN_MODELS).join(", ");
  throw new Error(`unknown model "${identifier}": not a bundled name (${known}) or a checkpoint path`);
}

export function saveCheckpoint(checkpoint: Checkpoint, path: string): void {
  const serializeLayer = (layer: LayerWeights) =>
    Object.fromEntries(Object.entries(layer).map(([key, value]) => [key, Array.from(value as Float64Array)]));
  const payload = {
    format: "vdr-encoder",
    version: 1,
    name: checkpoint.name,
    config: checkpoint.config,
    patchProj: Array.from(checkpoint.patchProj),
    patchBias: Array.from(checkpoint.patchBias),
    globalToken: Array.from(checkpoint.globalToken),
    layers: checkpoint.layers.map(serializeLayer),
    lnFinalGain: Array.from(checkpoint.lnFinalGain),
    lnFinalBias: Array.from(checkpoint.lnFinalBias),
    outProj: Array.from(checkpoint.outProj),
  };
  fs.writeFileSync(path, JSON.stringify(payload));
}

export function loadCheckpoint(path: string): Checkpoint {
  const payload = JSON.parse(fs.readFileSync(path, "utf-8"));
  if (payload.format !== "vdr-encoder" || payload.version !== 1) {
    throw new Error(`${path}: not a vdr-encoder v1 checkpoint`);
  }
  const toArray = (value: number[]) => Float64Array.from(value);
  return {
    name: payload.name,
    config: payload.config,
    patchProj: toArray(payload.patchProj),
    patchBias: toArray(payload.patchBias),
    globalToken: toArray(payload.globalToken),
    layers: payload.layers.map((layer: Record<string, number[]>) => ({
      wq: toArray(layer.wq),
      wk: toArray(layer.wk),
      wv: toArray(layer.wv),
      wo: toArray(layer.wo),
      ln1Gain: toArray(layer.ln1Gain),
      ln1Bias: toArray(layer.ln1Bias),
      ln2Gain: toArray(layer.ln2Gain),
      ln2Bias: toArray(layer.ln2Bias),
      mlpUp: toArray(layer.mlpUp),
      mlpUpBias: toArray(layer.mlpUpBias),
      mlpDown: toArray(layer.mlpDown),
      mlpDownBias: toArray(layer.mlpDownBias),
    })),
    lnFinalGain: toArray(payload.lnFinalGain),
    lnFinalBias: toArray(payload.lnFinalBias),
    outProj: toArray(payload.outProj),
  };
}

export function tokenEmbeddingSeed(token: string, config: EncoderConfig): number {
  return (hashString(token) ^ config.tokenSeed) >>> 0;
}
