/**
 * The vision-language encoder forward pass.
 *
 * A page image is split into a grid of patches; patch features, any
 * prompt tokens, and a trailing global token run through a small
 * pre-norm transformer. Patch embeddings are the final hidden states
 * at the patch positions projected to the retrieval dimension and
 * L2-normalized, mirroring how late-interaction retrievers emit
 * multi-vector representations. The per-head attention the global
 * token pays to each patch at the final layer is recorded alongside.
 */

import {
  Checkpoint,
  EncoderConfig,
  featureDim,
  tokenEmbeddingSeed,
} from "./checkpoint";
import { RgbImage, limitSize } from "./image";
import { Rng } from "./rng";
import {
  Mat,
  addBiasInPlace,
  addInPlace,
  fromRows,
  geluInPlace,
  l2NormalizeRowsInPlace,
  layerNorm,
  matmul,
  row,
  softmaxInPlace,
  zeros,
} from "./tensor";

export interface PageEncoding {
  /** (numPatches x outputDim), rows L2-normalized. */
  patchEmbeddings: Mat;
  /** Final hidden state of the global token, projected and normalized. */
  globalEmbedding: Float64Array;
  /** (numHeads x numPatches): final-layer attention from the global token. */
  headAttention: Mat;
  gridRows: number;
  gridCols: number;
}

export interface QueryEncoding {
  /** (numTokens x outputDim), rows L2-normalized. */
  tokenEmbeddings: Mat;
}

export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z0-9]+/)
    .filter((token) => token.length > 0);
}

function tokenEmbedding(token: string, config: EncoderConfig): Float64Array {
  const rng = new Rng(tokenEmbeddingSeed(token, config));
  return rng.fillGaussian(new Float64Array(config.hiddenSize), 1.0 / Math.sqrt(config.hiddenSize));
}

function addPositionalEncoding(sequence: Mat): void {
  const dim = sequence.cols;
  for (let pos = 0; pos < sequence.rows; pos++) {
    const base = pos * dim;
    for (let i = 0; i < dim; i += 2) {
      const angle = pos / Math.pow(10000, i / dim);
      sequence.data[base + i] += Math.sin(angle);
      if (i + 1 < dim) sequence.data[base + i + 1] += Math.cos(angle);
    }
  }
}

interface ForwardResult {
  hidden: Mat;
  /** Final-layer attention rows of the last (global) position, per head. */
  globalAttention: Mat; // (numHeads x seqLen)
}

function forward(checkpoint: Checkpoint, sequence: Mat): ForwardResult {
  const { hiddenSize, numHeads, numLayers } = checkpoint.config;
  const headDim = hiddenSize / numHeads;
  const seqLen = sequence.rows;
  const scale = 1.0 / Math.sqrt(headDim);

  let hidden = sequence;
  let globalAttention = zeros(numHeads, seqLen);

  for (let layerIdx = 0; layerIdx < numLayers; layerIdx++) {
    const layer = checkpoint.layers[layerIdx];
    const normed = layerNorm(hidden, layer.ln1Gain, layer.ln1Bias);
    const q = matmul(normed, { rows: hiddenSize, cols: hiddenSize, data: layer.wq });
    const k = matmul(normed, { rows: hiddenSize, cols: hiddenSize, data: layer.wk });
    const v = matmul(normed, { rows: hiddenSize, cols: hiddenSize, data: layer.wv });

    const context = zeros(seqLen, hiddenSize);
    const probs = new Float64Array(seqLen);
    for (let head = 0; head < numHeads; head++) {
      const offset = head * headDim;
      for (let i = 0; i < seqLen; i++) {
        for (let j = 0; j < seqLen; j++) {
          let score = 0;
          for (let d = 0; d < headDim; d++) {
            score += q.data[i * hiddenSize + offset + d] * k.data[j * hiddenSize + offset + d];
          }
          probs[j] = score * scale;
        }
        softmaxInPlace(probs);
        if (layerIdx === numLayers - 1 && i === seqLen - 1) {
          globalAttention.data.set(probs, head * seqLen);
        }
        for (let j = 0; j < seqLen; j++) {
          const weight = probs[j];
          if (weight === 0) continue;
          for (let d = 0; d < headDim; d++) {
            context.data[i * hiddenSize + offset + d] += weight * v.data[j * hiddenSize + offset + d];
          }
        }
      }
    }
    addInPlace(hidden, matmul(context, { rows: hiddenSize, cols: hiddenSize, data: layer.wo }));

    const normed2 = layerNorm(hidden, layer.ln2Gain, layer.ln2Bias);
    const up = addBiasInPlace(
      matmul(normed2, { rows: hiddenSize, cols: hiddenSize * 4, data: layer.mlpUp }),
      layer.mlpUpBias,
    );
    const down = addBiasInPlace(
      matmul(geluInPlace(up), { rows: hiddenSize * 4, cols: hiddenSize, data: layer.mlpDown }),
      layer.mlpDownBias,
    );
    addInPlace(hidden, down);
  }

  return { hidden, globalAttention };
}

function project(checkpoint: Checkpoint, hidden: Mat): Mat {
  const { hiddenSize, outputDim } = checkpoint.config;
  const normed = layerNorm(hidden, checkpoint.lnFinalGain, checkpoint.lnFinalBias);
  const projected = matmul(normed, { rows: hiddenSize, cols: outputDim, data: checkpoint.outProj });
  return l2NormalizeRowsInPlace(projected);
}

function patchFeatures(image: RgbImage, patchSize: number): { patches: Float64Array[]; rows: number; cols: number } {
  const rows = Math.ceil(image.height / patchSize);
  const cols = Math.ceil(image.width / patchSize);
  const patches: Float64Array[] = [];
  for (let pr = 0; pr < rows; pr++) {
    for (let pc = 0; pc < cols; pc++) {
      const feature = new Float64Array(patchSize * patchSize * 3);
      for (let y = 0; y < patchSize; y++) {
        const sy = pr * patchSize + y;
        if (sy >= image.height) continue; // zero padding below the image
        for (let x = 0; x < patchSize; x++) {
          const sx = pc * patchSize + x;
          if (sx >= image.width) continue;
          const src = (sy * image.width + sx) * 3;
          const dst = (y * patchSize + x) * 3;
          feature[dst] = image.pixels[src];
          feature[dst + 1] = image.pixels[src + 1];
          feature[dst + 2] = image.pixels[src + 2];
        }
      }
      patches.push(feature);
    }
  }
  return { patches, rows, cols };
}

export function encodePage(
  checkpoint: Checkpoint,
  image: RgbImage,
  options: { maxSide: number; nfpPrompt?: string },
): PageEncoding {
  const config = checkpoint.config;
  const resized = limitSize(image, options.maxSide);
  const { patches, rows, cols } = patchFeatures(resized, config.patchSize);

  const promptEmbeds = options.nfpPrompt
    ? tokenize(options.nfpPrompt).map((token) => tokenEmbedding(token, config))
    : [];

  const feature = featureDim(config);
  const patchMatrix = matmul(fromRows(patches), {
    rows: feature,
    cols: config.hiddenSize,
    data: checkpoint.patchProj,
  });
  addBiasInPlace(patchMatrix, checkpoint.patchBias);

  const sequenceRows: Float64Array[] = [
    ...promptEmbeds,
    ...Array.from({ length: patches.length }, (_, i) => row(patchMatrix, i)),
    checkpoint.globalToken,
  ];
  const sequence = fromRows(sequenceRows);
  addPositionalEncoding(sequence);

  const { hidden, globalAttention } = forward(checkpoint, sequence);
  const projected = project(checkpoint, hidden);

  const promptLen = promptEmbeds.length;
  const numPatches = patches.length;
  const patchEmbeddings = zeros(numPatches, config.outputDim);
  for (let i = 0; i < numPatches; i++) {
    patchEmbeddings.data.set(row(projected, promptLen + i), i * config.outputDim);
  }

  // only the patch columns of the attention row are exported; prompt and
  // global positions are not patches and the engine indexes patches only
  const headAttention = zeros(config.numHeads, numPatches);
  for (let head = 0; head < config.numHeads; head++) {
    for (let i = 0; i < numPatches; i++) {
      headAttention.data[head * numPatches + i] =
        globalAttention.data[head * sequence.rows + promptLen + i];
    }
  }

  return {
    patchEmbeddings,
    globalEmbedding: Float64Array.from(row(projected, sequence.rows - 1)),
    headAttention,
    gridRows: rows,
    gridCols: cols,
  };
}

export function encodeQuery(checkpoint: Checkpoint, text: string): QueryEncoding | null {
  const config = checkpoint.config;
  const tokens = tokenize(text);
  if (tokens.length === 0) return null;

  const sequence = fromRows([
    ...tokens.map((token) => tokenEmbedding(token, config)),
    checkpoint.globalToken,
  ]);
  addPositionalEncoding(sequence);
  const { hidden } = forward(checkpoint, sequence);
  const projected = project(checkpoint, hidden);

  const tokenEmbeddings = zeros(tokens.length, config.outputDim);
  for (let i = 0; i < tokens.length; i++) {
    tokenEmbeddings.data.set(row(projected, i), i * config.outputDim);
  }
  return { tokenEmbeddings };
}

export function averageHeads(headAttention: Mat): Float64Array {
  const averaged = new Float64Array(headAttention.cols);
  for (let head = 0; head < headAttention.rows; head++) {
    for (let i = 0; i < headAttention.cols; i++) {
      averaged[i] += headAttention.data[head * headAttention.cols + i];
    }
  }
  for (let i = 0; i < averaged.length; i++) averaged[i] /= headAttention.rows;
  return averaged;
}
