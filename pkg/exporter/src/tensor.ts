/**
 * Minimal dense matrix math over Float64Array, row-major.
 *
 * Just the operations the encoder forward pass needs; sizes are tiny
 * (dozens of tokens, hidden width under a hundred), so clarity beats
 * cleverness here.
 */

export interface Mat {
  rows: number;
  cols: number;
  data: Float64Array;
}

export function zeros(rows: number, cols: number): Mat {
  return { rows, cols, data: new Float64Array(rows * cols) };
}

export function fromRows(rows: Float64Array[]): Mat {
  const out = zeros(rows.length, rows[0]?.length ?? 0);
  rows.forEach((row, r) => out.data.set(row, r * out.cols));
  return out;
}

export function row(mat: Mat, r: number): Float64Array {
  return mat.data.subarray(r * mat.cols, (r + 1) * mat.cols);
}

/** out = a @ b, (n x k) @ (k x m). */
export function matmul(a: Mat, b: Mat): Mat {
  if (a.cols !== b.rows) {
    throw new Error(`matmul shape mismatch: ${a.rows}x${a.cols} @ ${b.rows}x${b.cols}`);
  }
  const out = zeros(a.rows, b.cols);
  for (let i = 0; i < a.rows; i++) {
    for (let k = 0; k < a.cols; k++) {
      const scale = a.data[i * a.cols + k];
      if (scale === 0) continue;
      const bRow = k * b.cols;
      const oRow = i * out.cols;
      for (let j = 0; j < b.cols; j++) {
        out.data[oRow + j] += scale * b.data[bRow + j];
      }
    }
  }
  return out;
}

export function addBiasInPlace(mat: Mat, bias: Float64Array): Mat {
  for (let r = 0; r < mat.rows; r++) {
    const base = r * mat.cols;
    for (let c = 0; c < mat.cols; c++) {
      mat.data[base + c] += bias[c];
    }
  }
  return mat;
}

export function addInPlace(target: Mat, other: Mat): Mat {
  for (let i = 0; i < target.data.length; i++) {
    target.data[i] += other.data[i];
  }
  return target;
}

/** Row-wise layer normalization with learned gain/bias. */
export function layerNorm(mat: Mat, gain: Float64Array, bias: Float64Array, eps = 1e-5): Mat {
  const out = zeros(mat.rows, mat.cols);
  for (let r = 0; r < mat.rows; r++) {
    const base = r * mat.cols;
    let mean = 0;
    for (let c = 0; c < mat.cols; c++) mean += mat.data[base + c];
    mean /= mat.cols;
    let variance = 0;
    for (let c = 0; c < mat.cols; c++) {
      const dev = mat.data[base + c] - mean;
      variance += dev * dev;
    }
    variance /= mat.cols;
    const inv = 1.0 / Math.sqrt(variance + eps);
    for (let c = 0; c < mat.cols; c++) {
      out.data[base + c] = (mat.data[base + c] - mean) * inv * gain[c] + bias[c];
    }
  }
  return out;
}

export function geluInPlace(mat: Mat): Mat {
  for (let i = 0; i < mat.data.length; i++) {
    const x = mat.data[i];
    mat.data[i] = 0.5 * x * (1 + Math.tanh(Math.sqrt(2 / Math.PI) * (x + 0.044715 * x * x * x)));
  }
  return mat;
}

/** Numerically stable softmax over a contiguous slice, in place. */
export function softmaxInPlace(values: Float64Array): Float64Array {
  let max = -Infinity;
  for (const v of values) max = Math.max(max, v);
  let total = 0;
  for (let i = 0; i < values.length; i++) {
    values[i] = Math.exp(values[i] - max);
    total += values[i];
  }
  for (let i = 0; i < values.length; i++) values[i] /= total;
  return values;
}

export function l2NormalizeRowsInPlace(mat: Mat): Mat {
  for (let r = 0; r < mat.rows; r++) {
    const base = r * mat.cols;
    let norm = 0;
    for (let c = 0; c < mat.cols; c++) norm += mat.data[base + c] ** 2;
    norm = Math.sqrt(norm);
    if (norm > 0) {
      for (let c = 0; c < mat.cols; c++) mat.data[base + c] /= norm;
    }
  }
  return mat;
}
