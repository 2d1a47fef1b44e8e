import struct

import numpy as np
import pytest

from mvdr.container import (
    DocumentRecord,
    QueryRecord,
    read_corpus,
    read_qrels,
    read_queries,
    write_corpus,
    write_queries,
)
from mvdr.errors import (
    BadMagic,
    InvariantViolation,
    ParseError,
    TruncatedFile,
    UnsupportedVersion,
)
from mvdr.synthetic import random_corpus

from conftest import f32


def assert_docs_equal(a: DocumentRecord, b: DocumentRecord):
    assert a.doc_id == b.doc_id
    assert np.array_equal(a.embeddings, b.embeddings)
    assert a.grid_rows == b.grid_rows and a.grid_cols == b.grid_cols
    for field in ("importance", "head_attention", "global_embedding"):
        left, right = getattr(a, field), getattr(b, field)
        assert (left is None) == (right is None), field
        if left is not None:
            assert np.array_equal(left, right), field


class TestCorpusRoundTrip:
    def test_empty_corpus(self, tmp_path):
        path = tmp_path / "empty.mvdr"
        write_corpus(path, [])
        assert read_corpus(path) == []

    def test_single_doc_bit_exact(self, tmp_path):
        doc = DocumentRecord(
            doc_id="d1",
            embeddings=f32([[1.5, -2.25], [0.375, 4.0]]),
            importance=f32([0.25, 0.75]),
        )
        path = tmp_path / "one.mvdr"
        write_corpus(path, [doc])
        (back,) = read_corpus(path)
        assert_docs_equal(doc, back)

    def test_optional_field_combinations(self, tmp_path):
        docs = (
            random_corpus(3, 5, 2, 8, seed=1)
            + random_corpus(3, 5, 2, 8, seed=2, with_attention=True)
            + random_corpus(3, 5, 2, 8, seed=3, with_attention=True, with_global=True)
            + random_corpus(3, 5, 2, 8, seed=4, with_grid=True, with_global=True)
        )
        path = tmp_path / "mix.mvdr"
        write_corpus(path, docs)
        back = read_corpus(path)
        assert len(back) == len(docs)
        for a, b in zip(docs, back):
            assert_docs_equal(a, b)

    def test_byte_level_round_trip(self, tmp_path):
        docs = random_corpus(4, 3, 2, 6, seed=9, with_attention=True, with_global=True)
        path_a = tmp_path / "a.mvdr"
        path_b = tmp_path / "b.mvdr"
        write_corpus(path_a, docs)
        write_corpus(path_b, read_corpus(path_a))
        assert path_a.read_bytes() == path_b.read_bytes()


def _valid_corpus_bytes() -> bytearray:
    doc = DocumentRecord(
        doc_id="d1", embeddings=f32([[1.0, 2.0], [3.0, 4.0]]), importance=f32([0.5, 0.5])
    )
    import os, tempfile

    fd, path = tempfile.mkstemp()
    os.close(fd)
    write_corpus(path, [doc])
    with open(path, "rb") as handle:
        data = bytearray(handle.read())
    os.unlink(path)
    return data


class TestCorpusRejection:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mvdr"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(BadMagic):
            read_corpus(path)

    def test_unsupported_version(self, tmp_path):
        data = _valid_corpus_bytes()
        struct.pack_into("<I", data, 4, 99)
        path = tmp_path / "v99.mvdr"
        path.write_bytes(bytes(data))
        with pytest.raises(UnsupportedVersion):
            read_corpus(path)

    def test_truncated(self, tmp_path):
        data = _valid_corpus_bytes()
        path = tmp_path / "cut.mvdr"
        path.write_bytes(bytes(data[:-5]))
        with pytest.raises(TruncatedFile):
            read_corpus(path)

    def test_nan_embedding_rejected(self, tmp_path):
        data = _valid_corpus_bytes()
        # embeddings start right after header(16) + id(4+2) + dims(16) + flags(1)
        offset = 16 + 6 + 16 + 1
        struct.pack_into("<f", data, offset, float("nan"))
        path = tmp_path / "nan.mvdr"
        path.write_bytes(bytes(data))
        with pytest.raises(InvariantViolation) as excinfo:
            read_corpus(path)
        assert excinfo.value.doc_id == "d1"
        assert excinfo.value.field == "embeddings"

    def test_trailing_bytes_rejected(self, tmp_path):
        data = _valid_corpus_bytes() + b"\x00"
        path = tmp_path / "trail.mvdr"
        path.write_bytes(bytes(data))
        with pytest.raises(InvariantViolation):
            read_corpus(path)

    def test_writer_rejects_invalid_records(self, tmp_path):
        no_source = DocumentRecord(doc_id="d", embeddings=f32([[1.0]]))
        with pytest.raises(InvariantViolation):
            write_corpus(tmp_path / "x.mvdr", [no_source])
        bad_grid = DocumentRecord(
            doc_id="d",
            embeddings=f32([[1.0], [2.0], [3.0]]),
            importance=f32([1, 1, 1]),
            grid_rows=2,
            grid_cols=2,
        )
        with pytest.raises(InvariantViolation):
            write_corpus(tmp_path / "y.mvdr", [bad_grid])
        negative = DocumentRecord(
            doc_id="d", embeddings=f32([[1.0]]), importance=f32([-0.5])
        )
        with pytest.raises(InvariantViolation):
            write_corpus(tmp_path / "z.mvdr", [negative])

    def test_corruption_fuzz_never_yields_invalid_records(self, tmp_path, rng):
        from mvdr.container import validate_document
        from mvdr.errors import MvdrError

        base = _valid_corpus_bytes()
        path = tmp_path / "fuzz.mvdr"
        for _ in range(300):
            data = bytearray(base)
            for _ in range(int(rng.integers(1, 4))):
                position = int(rng.integers(0, len(data)))
                data[position] = int(rng.integers(0, 256))
            path.write_bytes(bytes(data))
            try:
                records = read_corpus(path)
            except (MvdrError, UnicodeDecodeError, MemoryError, OverflowError):
                continue
            for record in records:
                validate_document(record)


class TestQueries:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.mvdq"
        write_queries(path, [])
        assert read_queries(path) == []

    def test_round_trip(self, tmp_path):
        query = QueryRecord(query_id="q1", embeddings=f32([[1, 2], [3, 4], [5, 6]]))
        path = tmp_path / "q.mvdq"
        write_queries(path, [query])
        (back,) = read_queries(path)
        assert back.query_id == "q1"
        assert np.array_equal(back.embeddings, query.embeddings)

    def test_zero_dim_rejected(self, tmp_path):
        payload = b"MVDQ" + struct.pack("<IQ", 1, 1)
        payload += struct.pack("<I", 2) + b"q1" + struct.pack("<II", 3, 0)
        path = tmp_path / "zero.mvdq"
        path.write_bytes(payload)
        with pytest.raises(InvariantViolation):
            read_queries(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mvdq"
        path.write_bytes(b"MVDR" + b"\x00" * 12)
        with pytest.raises(BadMagic):
            read_queries(path)


class TestQrels:
    def test_single_line(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d1 1\n")
        qrels = read_qrels(path)
        assert qrels.grades == {("q1", "d1"): 1}

    def test_last_wins(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d1 1\nq1 0 d1 2\n")
        assert read_qrels(path).grades == {("q1", "d1"): 2}

    def test_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("\nq1 0 d1 1\n\n  \nq2 0 d2 3\n")
        assert read_qrels(path).grades == {("q1", "d1"): 1, ("q2", "d2"): 3}

    def test_three_fields_rejected(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 d1 1\n")
        with pytest.raises(ParseError) as excinfo:
            read_qrels(path)
        assert excinfo.value.line_number == 1

    def test_non_integer_grade(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d1 high\n")
        with pytest.raises(ParseError):
            read_qrels(path)

    def test_negative_grade(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d1 -1\n")
        with pytest.raises(ParseError):
            read_qrels(path)

    def test_for_query_and_has_relevant(self, tmp_path):
        path = tmp_path / "q.txt"
        path.write_text("q1 0 d1 2\nq1 0 d2 0\nq2 0 d1 0\n")
        qrels = read_qrels(path)
        assert qrels.for_query("q1") == {"d1": 2, "d2": 0}
        assert qrels.has_relevant("q1")
        assert not qrels.has_relevant("q2")
