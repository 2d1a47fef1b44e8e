/**
 * Image loading: PNG (via pngjs) and binary PPM (P6), plus the
 * max-side downscale applied before patchification.
 */

import * as fs from "node:fs";
import { PNG } from "pngjs";

export interface RgbImage {
  width: number;
  height: number;
  /** RGB interleaved, values in [0, 1]. */
  pixels: Float64Array;
}

export function decodeImage(path: string): RgbImage {
  const raw = fs.readFileSync(path);
  if (raw.length >= 8 && raw[0] === 0x89 && raw[1] === 0x50) {
    return fromPng(raw, path);
  }
  if (raw.length >= 2 && raw[0] === 0x50 && raw[1] === 0x36) {
    return fromPpm(raw, path);
  }
  throw new Error(`${path}: unsupported image format (PNG or binary PPM expected)`);
}

function fromPng(raw: Buffer, path: string): RgbImage {
  let png: PNG;
  try {
    png = PNG.sync.read(raw);
  } catch (err) {
    throw new Error(`${path}: PNG decode failed: ${(err as Error).message}`);
  }
  const pixels = new Float64Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    pixels[i * 3] = png.data[i * 4] / 255;
    pixels[i * 3 + 1] = png.data[i * 4 + 1] / 255;
    pixels[i * 3 + 2] = png.data[i * 4 + 2] / 255;
  }
  return { width: png.width, height: png.height, pixels };
}

function fromPpm(raw: Buffer, path: string): RgbImage {
  // header: "P6" <width> <height> <maxval> then binary RGB triples
  let offset = 2;
  const fields: number[] = [];
  while (fields.length < 3 && offset < raw.length) {
    while (offset < raw.length && /\s/.test(String.fromCharCode(raw[offset]))) offset++;
    if (raw[offset] === 0x23) {
      while (offset < raw.length && raw[offset] !== 0x0a) offset++;
      continue;
    }
    let token = "";
    while (offset < raw.length && !/\s/.test(String.fromCharCode(raw[offset]))) {
      token += String.fromCharCode(raw[offset]);
      offset++;
    }
    fields.push(Number.parseInt(token, 10));
  }
  offset++; // single whitespace after maxval
  const [width, height, maxval] = fields;
  if (!width || !height || !maxval) {
    throw new Error(`${path}: malformed PPM header`);
  }
  const expected = width * height * 3;
  if (raw.length - offset < expected) {
    throw new Error(`${path}: truncated PPM payload`);
  }
  const pixels = new Float64Array(expected);
  for (let i = 0; i < expected; i++) {
    pixels[i] = raw[offset + i] / maxval;
  }
  return { width, height, pixels };
}

/** Box-filter downscale so that max(width, height) <= maxSide. */
export function limitSize(image: RgbImage, maxSide: number): RgbImage {
  const longest = Math.max(image.width, image.height);
  if (longest <= maxSide) return image;
  const scale = maxSide / longest;
  const width = Math.max(1, Math.round(image.width * scale));
  const height = Math.max(1, Math.round(image.height * scale));
  const pixels = new Float64Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    const y0 = Math.floor((y * image.height) / height);
    const y1 = Math.max(y0 + 1, Math.floor(((y + 1) * image.height) / height));
    for (let x = 0; x < width; x++) {
      const x0 = Math.floor((x * image.width) / width);
      const x1 = Math.max(x0 + 1, Math.floor(((x + 1) * image.width) / width));
      let r = 0;
      let g = 0;
      let b = 0;
      let count = 0;
      for (let sy = y0; sy < y1; sy++) {
        for (let sx = x0; sx < x1; sx++) {
          const src = (sy * image.width + sx) * 3;
          r += image.pixels[src];
          g += image.pixels[src + 1];
          b += image.pixels[src + 2];
          count++;
        }
      }
      const dst = (y * width + x) * 3;
      pixels[dst] = r / count;
      pixels[dst + 1] = g / count;
      pixels[dst + 2] = b / count;
    }
  }
  return { width, height, pixels };
}
