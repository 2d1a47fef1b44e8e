/**
 * Writers (and readers, used by the tests) for the engine's binary
 * container formats.
 *
 * Corpus files: magic "MVDR", u32 version 1, u64 record count, then per
 * document: u32-length-prefixed UTF-8 id, u32 patch count, u32 dim,
 * u32 grid rows (0 = absent), u32 grid cols, one flags byte
 * (bit0 importance, bit1 head attention, bit2 global embedding), and
 * the binary32 little-endian payloads in that order. Query files:
 * magic "MVDQ", same framing, id + u32 token count + u32 dim +
 * embeddings. Everything little-endian.
 */

import * as fs from "node:fs";
import { Mat } from "./tensor";

export interface DocumentExport {
  docId: string;
  /** (numPatches x dim) */
  embeddings: Mat;
  gridRows: number | null;
  gridCols: number | null;
  importance: Float64Array | null;
  /** (numHeads x numPatches) */
  headAttention: Mat | null;
  globalEmbedding: Float64Array | null;
}

export interface QueryExport {
  queryId: string;
  /** (numTokens x dim) */
  embeddings: Mat;
}

class ByteWriter {
  private chunks: Buffer[] = [];

  u8(value: number): void {
    const buf = Buffer.allocUnsafe(1);
    buf.writeUInt8(value);
    this.chunks.push(buf);
  }

  u32(value: number): void {
    const buf = Buffer.allocUnsafe(4);
    buf.writeUInt32LE(value);
    this.chunks.push(buf);
  }

  u64(value: number): void {
    const buf = Buffer.allocUnsafe(8);
    buf.writeBigUInt64LE(BigInt(value));
    this.chunks.push(buf);
  }

  utf8(text: string): void {
    const raw = Buffer.from(text, "utf-8");
    this.u32(raw.length);
    this.chunks.push(raw);
  }

  f32Array(values: Float64Array | number[]): void {
    const buf = Buffer.allocUnsafe(values.length * 4);
    for (let i = 0; i < values.length; i++) {
      buf.writeFloatLE(Math.fround(values[i] as number), i * 4);
    }
    this.chunks.push(buf);
  }

  raw(buf: Buffer): void {
    this.chunks.push(buf);
  }

  bytes(): Buffer {
    return Buffer.concat(this.chunks);
  }
}

export function encodeCorpus(docs: DocumentExport[]): Buffer {
  const writer = new ByteWriter();
  writer.raw(Buffer.from("MVDR", "ascii"));
  writer.u32(1);
  writer.u64(docs.length);
  for (const doc of docs) {
    let flags = 0;
    if (doc.importance) flags |= 0x01;
    if (doc.headAttention) flags |= 0x02;
    if (doc.globalEmbedding) flags |= 0x04;
    writer.utf8(doc.docId);
    writer.u32(doc.embeddings.rows);
    writer.u32(doc.embeddings.cols);
    writer.u32(doc.gridRows ?? 0);
    writer.u32(doc.gridCols ?? 0);
    writer.u8(flags);
    writer.f32Array(doc.embeddings.data);
    if (doc.importance) writer.f32Array(doc.importance);
    if (doc.headAttention) {
      writer.u32(doc.headAttention.rows);
      writer.f32Array(doc.headAttention.data);
    }
    if (doc.globalEmbedding) writer.f32Array(doc.globalEmbedding);
  }
  return writer.bytes();
}

export function encodeQueries(queries: QueryExport[]): Buffer {
  const writer = new ByteWriter();
  writer.raw(Buffer.from("MVDQ", "ascii"));
  writer.u32(1);
  writer.u64(queries.length);
  for (const query of queries) {
    writer.utf8(query.queryId);
    writer.u32(query.embeddings.rows);
    writer.u32(query.embeddings.cols);
    writer.f32Array(query.embeddings.data);
  }
  return writer.bytes();
}

/** Write via a temp file and rename: partial output is never visible. */
export function writeAtomic(path: string, payload: Buffer): void {
  const temp = `${path}.tmp-${process.pid}`;
  try {
    fs.writeFileSync(temp, payload);
    fs.renameSync(temp, path);
  } catch (err) {
    fs.rmSync(temp, { force: true });
    throw err;
  }
}

class ByteReader {
  private offset = 0;

  constructor(private buf: Buffer, private path: string) {}

  private need(count: number): number {
    if (this.offset + count > this.buf.length) {
      throw new Error(`${this.path}: truncated at offset ${this.offset}`);
    }
    const at = this.offset;
    this.offset += count;
    return at;
  }

  u8(): number {
    return this.buf.readUInt8(this.need(1));
  }

  u32(): number {
    return this.buf.readUInt32LE(this.need(4));
  }

  u64(): number {
    return Number(this.buf.readBigUInt64LE(this.need(8)));
  }

  utf8(): string {
    const length = this.u32();
    const at = this.need(length);
    return this.buf.subarray(at, at + length).toString("utf-8");
  }

  f32Array(count: number): Float64Array {
    const at = this.need(count * 4);
    const out = new Float64Array(count);
    for (let i = 0; i < count; i++) {
      out[i] = this.buf.readFloatLE(at + i * 4);
    }
    return out;
  }
}

export function readCorpus(path: string): DocumentExport[] {
  const reader = new ByteReader(fs.readFileSync(path), path);
  const magic = String.fromCharCode(reader.u8(), reader.u8(), reader.u8(), reader.u8());
  if (magic !== "MVDR") throw new Error(`${path}: bad magic ${magic}`);
  if (reader.u32() !== 1) throw new Error(`${path}: unsupported version`);
  const count = reader.u64();
  const docs: DocumentExport[] = [];
  for (let i = 0; i < count; i++) {
    const docId = reader.utf8();
    const numPatches = reader.u32();
    const dim = reader.u32();
    const gridRows = reader.u32();
    const gridCols = reader.u32();
    const flags = reader.u8();
    const embeddings: Mat = { rows: numPatches, cols: dim, data: reader.f32Array(numPatches * dim) };
    const importance = flags & 0x01 ? reader.f32Array(numPatches) : null;
    let headAttention: Mat | null = null;
    if (flags & 0x02) {
      const heads = reader.u32();
      headAttention = { rows: heads, cols: numPatches, data: reader.f32Array(heads * numPatches) };
    }
    const globalEmbedding = flags & 0x04 ? reader.f32Array(dim) : null;
    docs.push({
      docId,
      embeddings,
      gridRows: gridRows || null,
      gridCols: gridCols || null,
      importance,
      headAttention,
      globalEmbedding,
    });
  }
  return docs;
}
