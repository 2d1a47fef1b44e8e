"""Binary container formats for corpora and queries, plus qrels parsing.

Corpus files (magic ``MVDR``) and query files (magic ``MVDQ``) share the
same conventions: every integer is little-endian, every floating-point
payload is IEEE-754 binary32, and ids are UTF-8 with a u32 length
prefix.  Values are promoted to float64 on load.

Corpus record layout, in file order::

    id_len:u32  id:bytes  L_d:u32  P:u32  grid_rows:u32  grid_cols:u32
    flags:u8
    embeddings        L_d*P f32, row-major, patch-major
    [importance       L_d f32]          present when flags bit 0 set
    [H:u32 attention  H*L_d f32]        present when flags bit 1 set
    [global_embedding P f32]            present when flags bit 2 set

grid_rows/grid_cols of zero mean "absent"; when present their product
must equal L_d.  Query records are ``id_len:u32 id L_q:u32 P:u32
embeddings:L_q*P f32``.

Qrels are plain text, one judgment per line::

    query_id 0 doc_id grade
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    InvariantViolation,
    ParseError,
    TruncatedFile,
    UnsupportedVersion,
)

CORPUS_MAGIC = b"MVDR"
QUERY_MAGIC = b"MVDQ"
FORMAT_VERSION = 1

FLAG_IMPORTANCE = 0x01
FLAG_HEAD_ATTENTION = 0x02
FLAG_GLOBAL_EMBEDDING = 0x04

_F32 = np.dtype("<f4")


@dataclass(frozen=True)
class DocumentRecord:
    """One document page: patch embeddings plus importance provenance."""

    doc_id: str
    embeddings: np.ndarray  # (L_d, P) float64
    grid_rows: int | None = None
    grid_cols: int | None = None
    importance: np.ndarray | None = None  # (L_d,)
    head_attention: np.ndarray | None = None  # (H, L_d)
    global_embedding: np.ndarray | None = None  # (P,)

    @property
    def num_patches(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass(frozen=True)
class QueryRecord:
    """Token-level query embeddings."""

    query_id: str
    embeddings: np.ndarray  # (L_q, P) float64

    @property
    def num_tokens(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass
class Qrels:
    """Relevance judgments keyed by (query_id, doc_id)."""

    grades: dict[tuple[str, str], int] = field(default_factory=dict)

    def for_query(self, query_id: str) -> dict[str, int]:
        return {
            doc_id: grade
            for (qid, doc_id), grade in self.grades.items()
            if qid == query_id
        }

    def has_relevant(self, query_id: str) -> bool:
        return any(
            grade > 0 for (qid, _), grade in self.grades.items() if qid == query_id
        )


def validate_document(doc: DocumentRecord) -> None:
    """Check every DocumentRecord invariant; raise InvariantViolation."""
    def bad(msg: str, fld: str):
        return InvariantViolation(msg, doc_id=doc.doc_id, field=fld)

    emb = doc.embeddings
    if emb.ndim != 2 or emb.shape[0] < 1 or emb.shape[1] < 1:
        raise bad(f"embeddings must be a non-empty 2-D matrix, got shape {emb.shape}", "embeddings")
    if not np.all(np.isfinite(emb)):
        raise bad("non-finite embedding values", "embeddings")
    num_patches = emb.shape[0]

    if (doc.grid_rows is None) != (doc.grid_cols is None):
        raise bad("grid_rows and grid_cols must be present together", "grid")
    if doc.grid_rows is not None:
        if doc.grid_rows < 1 or doc.grid_cols < 1:
            raise bad("grid dimensions must be positive", "grid")
        if doc.grid_rows * doc.grid_cols != num_patches:
            raise bad(
                f"grid {doc.grid_rows}x{doc.grid_cols} does not cover {num_patches} patches",
                "grid",
            )

    if doc.importance is None and doc.head_attention is None:
        raise bad("at least one of importance/head_attention required", "importance")

    if doc.importance is not None:
        imp = doc.importance
        if imp.ndim != 1 or imp.shape[0] != num_patches:
            raise bad(f"importance length {imp.shape} != patch count {num_patches}", "importance")
        if not np.all(np.isfinite(imp)):
            raise bad("non-finite importance values", "importance")
        if np.any(imp < 0.0):
            raise bad("negative importance values", "importance")

    if doc.head_attention is not None:
        att = doc.head_attention
        if att.ndim != 2 or att.shape[0] < 1 or att.shape[1] != num_patches:
            raise bad(
                f"head_attention shape {att.shape} incompatible with {num_patches} patches",
                "head_attention",
            )
        if not np.all(np.isfinite(att)):
            raise bad("non-finite attention values", "head_attention")

    if doc.global_embedding is not None:
        glob = doc.global_embedding
        if glob.ndim != 1 or glob.shape[0] != emb.shape[1]:
            raise bad(f"global_embedding length {glob.shape} != dim {emb.shape[1]}", "global_embedding")
        if not np.all(np.isfinite(glob)):
            raise bad("non-finite global embedding values", "global_embedding")


def validate_query(query: QueryRecord) -> None:
    emb = query.embeddings
    if emb.ndim != 2 or emb.shape[0] < 1 or emb.shape[1] < 1:
        raise InvariantViolation(
            f"query embeddings must be a non-empty 2-D matrix, got shape {emb.shape}",
            doc_id=query.query_id,
            field="embeddings",
        )
    if not np.all(np.isfinite(emb)):
        raise InvariantViolation(
            "non-finite query embedding values", doc_id=query.query_id, field="embeddings"
        )


class _Cursor:
    """Sequential reader over an in-memory byte buffer."""

    def __init__(self, data: bytes, path: str):
        self.data = data
        self.path = path
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(
                f"{self.path}: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.data)}"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def utf8(self) -> str:
        length = self.u32()
        return self.take(length).decode("utf-8")

    def f32_array(self, count: int, shape: tuple[int, ...]) -> np.ndarray:
        raw = self.take(count * 4)
        return np.frombuffer(raw, dtype=_F32).astype(np.float64).reshape(shape)

    def done(self) -> bool:
        return self.pos == len(self.data)


def read_corpus(path) -> list[DocumentRecord]:
    """Read and fully validate an MVDR corpus file."""
    path = Path(path)
    cur = _Cursor(path.read_bytes(), str(path))
    if cur.take(4) != CORPUS_MAGIC:
        raise BadMagic(f"{path}: not an MVDR corpus file")
    version = cur.u32()
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: corpus format version {version}, expected {FORMAT_VERSION}")
    count = cur.u64()

    records = []
    for _ in range(count):
        doc_id = cur.utf8()
        num_patches = cur.u32()
        dim = cur.u32()
        grid_rows = cur.u32()
        grid_cols = cur.u32()
        flags = cur.u8()
        if num_patches < 1 or dim < 1:
            raise InvariantViolation(
                f"patch count {num_patches} / dim {dim} must be positive",
                doc_id=doc_id,
                field="shape",
            )
        embeddings = cur.f32_array(num_patches * dim, (num_patches, dim))
        importance = None
        head_attention = None
        global_embedding = None
        if flags & FLAG_IMPORTANCE:
            importance = cur.f32_array(num_patches, (num_patches,))
        if flags & FLAG_HEAD_ATTENTION:
            heads = cur.u32()
            if heads < 1:
                raise InvariantViolation(
                    "head count must be positive", doc_id=doc_id, field="head_attention"
                )
            head_attention = cur.f32_array(heads * num_patches, (heads, num_patches))
        if flags & FLAG_GLOBAL_EMBEDDING:
            global_embedding = cur.f32_array(dim, (dim,))

        record = DocumentRecord(
            doc_id=doc_id,
            embeddings=embeddings,
            grid_rows=grid_rows or None,
            grid_cols=grid_cols or None,
            importance=importance,
            head_attention=head_attention,
            global_embedding=global_embedding,
        )
        validate_document(record)
        records.append(record)

    if not cur.done():
        raise InvariantViolation(
            f"{path}: {len(cur.data) - cur.pos} trailing bytes after last record"
        )
    return records


def _pack_str(value: str) -> bytes:
    raw = value.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def _pack_f32(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype=_F32).tobytes()


def write_corpus(path, records) -> None:
    """Write records to an MVDR file; read_corpus(write_corpus(x)) == x."""
    chunks = [CORPUS_MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(records))]
    for doc in records:
        validate_document(doc)
        flags = 0
        if doc.importance is not None:
            flags |= FLAG_IMPORTANCE
        if doc.head_attention is not None:
            flags |= FLAG_HEAD_ATTENTION
        if doc.global_embedding is not None:
            flags |= FLAG_GLOBAL_EMBEDDING
        chunks.append(_pack_str(doc.doc_id))
        chunks.append(
            struct.pack(
                "<IIIIB",
                doc.num_patches,
                doc.dim,
                doc.grid_rows or 0,
                doc.grid_cols or 0,
                flags,
            )
        )
        chunks.append(_pack_f32(doc.embeddings))
        if doc.importance is not None:
            chunks.append(_pack_f32(doc.importance))
        if doc.head_attention is not None:
            chunks.append(struct.pack("<I", doc.head_attention.shape[0]))
            chunks.append(_pack_f32(doc.head_attention))
        if doc.global_embedding is not None:
            chunks.append(_pack_f32(doc.global_embedding))
    Path(path).write_bytes(b"".join(chunks))


def read_queries(path) -> list[QueryRecord]:
    """Read and validate an MVDQ query file."""
    path = Path(path)
    cur = _Cursor(path.read_bytes(), str(path))
    if cur.take(4) != QUERY_MAGIC:
        raise BadMagic(f"{path}: not an MVDQ query file")
    version = cur.u32()
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"{path}: query format version {version}, expected {FORMAT_VERSION}")
    count = cur.u64()

    records = []
    for _ in range(count):
        query_id = cur.utf8()
        num_tokens = cur.u32()
        dim = cur.u32()
        if num_tokens < 1 or dim < 1:
            raise InvariantViolation(
                f"token count {num_tokens} / dim {dim} must be positive",
                doc_id=query_id,
                field="shape",
            )
        embeddings = cur.f32_array(num_tokens * dim, (num_tokens, dim))
        record = QueryRecord(query_id=query_id, embeddings=embeddings)
        validate_query(record)
        records.append(record)

    if not cur.done():
        raise InvariantViolation(
            f"{path}: {len(cur.data) - cur.pos} trailing bytes after last record"
        )
    return records


def write_queries(path, records) -> None:
    chunks = [QUERY_MAGIC, struct.pack("<IQ", FORMAT_VERSION, len(records))]
    for query in records:
        validate_query(query)
        chunks.append(_pack_str(query.query_id))
        chunks.append(struct.pack("<II", query.num_tokens, query.dim))
        chunks.append(_pack_f32(query.embeddings))
    Path(path).write_bytes(b"".join(chunks))


def read_qrels(path) -> Qrels:
    """Parse TREC-style qrels; duplicate (query, doc) pairs keep the last grade."""
    grades: dict[tuple[str, str], int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 4:
                raise ParseError(
                    f"expected 'query_id 0 doc_id grade', got {len(parts)} fields",
                    line_number=line_number,
                )
            query_id, _, doc_id, grade_text = parts
            if not query_id or not doc_id:
                raise ParseError("empty query or document id", line_number=line_number)
            try:
                grade = int(grade_text)
            except ValueError:
                raise ParseError(
                    f"grade {grade_text!r} is not an integer", line_number=line_number
                ) from None
            if grade < 0:
                raise ParseError(f"negative grade {grade}", line_number=line_number)
            grades[(query_id, doc_id)] = grade
    return Qrels(grades=grades)


def write_qrels(path, qrels: Qrels) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for (query_id, doc_id), grade in qrels.grades.items():
            handle.write(f"{query_id} 0 {doc_id} {grade}\n")
