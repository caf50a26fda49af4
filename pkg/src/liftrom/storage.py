"""Binary matrix/operator formats and deterministic CSV emission.

Dense matrices ("SPLM"): magic ``SPLM`` (4 bytes), version u32, rows u32,
cols u32 (16 header bytes), then rows*cols float64 values, little-endian,
column-major.

Sparse operators ("SPSO"): magic ``SPSO``, version u32, dimension u32,
nnz u64, then nnz records: ``(row u32, col u32, value f64)`` for linear
operators and ``(row u32, col_i u32, col_j u32, value f64)`` for
quadratic operators.  The record kind is chosen by the caller (the two
loaders are separate functions); a truncated or oversized payload fails
the length check.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .lifting import QuadraticOperator
from .metrics import MetricReport

FORMAT_VERSION = 1
_MATRIX_MAGIC = b"SPLM"
_SPARSE_MAGIC = b"SPSO"


class StorageError(ValueError):
    """Malformed header, magic mismatch or truncated payload."""


def save_matrix(path: str | Path, matrix: np.ndarray) -> None:
    M = np.ascontiguousarray(np.atleast_2d(np.asarray(matrix, dtype=np.float64)))
    if not np.all(np.isfinite(M)):
        raise StorageError("refusing to store non-finite entries")
    rows, cols = M.shape
    with open(path, "wb") as fh:
        fh.write(_MATRIX_MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, rows, cols))
        fh.write(np.asfortranarray(M).tobytes(order="F"))


def load_matrix(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise StorageError(f"{path}: header shorter than 16 bytes")
    if raw[:4] != _MATRIX_MAGIC:
        raise StorageError(f"{path}: magic mismatch {raw[:4]!r}")
    version, rows, cols = struct.unpack("<III", raw[4:16])
    if version != FORMAT_VERSION:
        raise StorageError(f"{path}: unsupported version {version}")
    expected = 16 + rows * cols * 8
    if len(raw) != expected:
        raise StorageError(f"{path}: payload length {len(raw)} != {expected}")
    data = np.frombuffer(raw, dtype="<f8", offset=16)
    return data.reshape((rows, cols), order="F").copy()


def _write_sparse_header(fh, n: int, nnz: int) -> None:
    fh.write(_SPARSE_MAGIC)
    fh.write(struct.pack("<II", FORMAT_VERSION, n))
    fh.write(struct.pack("<Q", nnz))


def _read_sparse_header(raw: bytes, path) -> tuple[int, int]:
    if len(raw) < 20:
        raise StorageError(f"{path}: header shorter than 20 bytes")
    if raw[:4] != _SPARSE_MAGIC:
        raise StorageError(f"{path}: magic mismatch {raw[:4]!r}")
    version, n = struct.unpack("<II", raw[4:12])
    (nnz,) = struct.unpack("<Q", raw[12:20])
    if version != FORMAT_VERSION:
        raise StorageError(f"{path}: unsupported version {version}")
    return n, nnz


def save_linear_operator(path: str | Path, A: sp.spmatrix) -> None:
    coo = sp.coo_matrix(A)
    if coo.shape[0] != coo.shape[1]:
        raise StorageError("linear operator must be square")
    with open(path, "wb") as fh:
        _write_sparse_header(fh, coo.shape[0], coo.nnz)
        rec = np.zeros(coo.nnz, dtype=[("row", "<u4"), ("col", "<u4"), ("val", "<f8")])
        rec["row"], rec["col"], rec["val"] = coo.row, coo.col, coo.data
        fh.write(rec.tobytes())


def load_linear_operator(path: str | Path) -> sp.csr_matrix:
    raw = Path(path).read_bytes()
    n, nnz = _read_sparse_header(raw, path)
    expected = 20 + nnz * 16
    if len(raw) != expected:
        raise StorageError(f"{path}: payload length {len(raw)} != {expected}")
    rec = np.frombuffer(raw, dtype=[("row", "<u4"), ("col", "<u4"), ("val", "<f8")], offset=20)
    return sp.coo_matrix((rec["val"], (rec["row"], rec["col"])), shape=(n, n)).tocsr()


def save_quadratic_operator(path: str | Path, B: QuadraticOperator) -> None:
    with open(path, "wb") as fh:
        _write_sparse_header(fh, B.nbar, B.nnz)
        rec = np.zeros(
            B.nnz,
            dtype=[("row", "<u4"), ("ci", "<u4"), ("cj", "<u4"), ("val", "<f8")],
        )
        rec["row"], rec["ci"], rec["cj"], rec["val"] = B.rows, B.ii, B.jj, B.vals
        fh.write(rec.tobytes())


def load_quadratic_operator(path: str | Path) -> QuadraticOperator:
    raw = Path(path).read_bytes()
    n, nnz = _read_sparse_header(raw, path)
    expected = 20 + nnz * 20
    if len(raw) != expected:
        raise StorageError(f"{path}: payload length {len(raw)} != {expected}")
    rec = np.frombuffer(
        raw, dtype=[("row", "<u4"), ("ci", "<u4"), ("cj", "<u4"), ("val", "<f8")],
        offset=20,
    )
    return QuadraticOperator(
        nbar=n,
        rows=rec["row"].astype(np.intp),
        ii=rec["ci"].astype(np.intp),
        jj=rec["cj"].astype(np.intp),
        vals=rec["val"].astype(float),
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


METRICS_HEADER = [
    "model", "method", "two_r", "reduced_dim", "mu", "regime",
    "rel_err_q", "rel_err_p", "max_fom_energy_err", "max_lifted_energy_err",
]

TIMINGS_HEADER = ["model", "method", "two_r", "mu", "wall_seconds", "efficacy"]


def _sort_key(report: MetricReport):
    return (report.model, report.method, report.two_r, _fmt(report.mu))


def emit_metrics_csv(reports: list[MetricReport], path: str | Path) -> None:
    """Deterministic error table: one row per (model, method, 2r, regime).

    Wall-clock quantities are deliberately excluded (see
    ``emit_timings_csv``) so identical runs re-emit byte-identical files.
    """
    if not reports:
        raise ValueError("no reports to emit")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for rep in sorted(reports, key=_sort_key):
            for regime in sorted(rep.regimes):
                m = rep.regimes[regime]
                writer.writerow(
                    [
                        rep.model, rep.method, rep.two_r, rep.reduced_dim,
                        _fmt(rep.mu), regime, _fmt(m.rel_err_q), _fmt(m.rel_err_p),
                        _fmt(m.max_fom_energy_err), _fmt(m.max_lifted_energy_err),
                    ]
                )


def emit_timings_csv(reports: list[MetricReport], path: str | Path) -> None:
    """Wall-clock seconds and efficacy per ROM run (machine-dependent)."""
    if not reports:
        raise ValueError("no reports to emit")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMINGS_HEADER)
        for rep in sorted(reports, key=_sort_key):
            writer.writerow(
                [
                    rep.model, rep.method, rep.two_r, _fmt(rep.mu),
                    _fmt(rep.wall_seconds), _fmt(rep.efficacy_value),
                ]
            )


def emit_series_csv(t: np.ndarray, values: np.ndarray, path: str | Path) -> None:
    """Long-format (t, value) series, e.g. energy-error histories."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "value"])
        for ti, vi in zip(t, values):
            writer.writerow([repr(float(ti)), repr(float(vi))])
