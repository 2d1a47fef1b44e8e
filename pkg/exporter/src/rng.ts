/**
 * Deterministic random number generation.
 *
 * Checkpoint weights and token embeddings must be reproducible across
 * runs and platforms, so everything derives from splitmix32 streams
 * seeded by integers or string hashes. No Math.random anywhere.
 */

export function hashString(text: string): number {
  // FNV-1a, 32-bit
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

export class Rng {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  /** Uniform in [0, 1). */
  next(): number {
    // splitmix32
    this.state = (this.state + 0x9e3779b9) >>> 0;
    let z = this.state;
    z ^= z >>> 16;
    z = Math.imul(z, 0x21f0aaad);
    z ^= z >>> 15;
    z = Math.imul(z, 0x735a2d97);
    z ^= z >>> 15;
    return (z >>> 0) / 4294967296;
  }

  /** Standard normal via Box-Muller. */
  gaussian(): number {
    const u = Math.max(this.next(), 1e-12);
    const v = this.next();
    return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * v);
  }

  fillGaussian(out: Float64Array, scale: number): Float64Array {
    for (let i = 0; i < out.length; i++) {
      out[i] = this.gaussian() * scale;
    }
    return out;
  }
}
