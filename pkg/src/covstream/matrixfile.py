"""Reading and writing matrix files and persisted states.

Two on-disk formats are supported:

``csv``
    One observation per ROW, comma separated, optional header line. Values
    are written with 17 significant digits so they survive a round trip.

``bin``
    ``b"COVS"``, version ``u16 = 1``, ``m: u32``, ``n: u32`` followed by
    ``m * n`` little-endian float64 values in column-major order (one
    observation after another).

A :class:`~covstream.core.CovarianceState` is persisted as a ``bin`` matrix
with m rows and m + 2 columns: column 0 holds the count (repeated), column 1
the mean and the remaining m columns the scatter matrix.
"""

import csv
import io
import struct
from pathlib import Path

import numpy as np

from covstream.core import CovarianceState
from covstream.errors import MatrixFileError

MAGIC = b"COVS"
VERSION = 1
_HEADER = struct.Struct("<4sHII")


def _format_for(path, fmt):
    if fmt is not None:
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".bin":
        return "bin"
    with open(path, "rb") as fh:
        return "bin" if fh.read(4) == MAGIC else "csv"


def _finite(X, where):
    if not np.all(np.isfinite(X)):
        raise MatrixFileError(f"{where}: non-finite values")
    return X


# ---------------------------------------------------------------------------
# bin
# ---------------------------------------------------------------------------


def encode_bin(X) -> bytes:
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    payload = np.asarray(X.T, dtype="<f8").tobytes(order="C")
    return _HEADER.pack(MAGIC, VERSION, m, n) + payload


def decode_bin(raw: bytes, where="<bytes>"):
    if len(raw) < _HEADER.size:
        raise MatrixFileError(f"{where}: truncated header")
    magic, version, m, n = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MatrixFileError(f"{where}: bad magic {magic!r}")
    if version != VERSION:
        raise MatrixFileError(f"{where}: unsupported version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * m * n:
        raise MatrixFileError(
            f"{where}: header declares {m}x{n} values, payload holds {len(body) // 8}"
        )
    X = np.frombuffer(body, dtype="<f8").reshape(n, m).T.astype(np.float64)
    return _finite(X, where)


# ---------------------------------------------------------------------------
# csv
# ---------------------------------------------------------------------------


def decode_csv(text: str, header=False, where="<text>"):
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if header and rows:
        rows = rows[1:]
    if not rows:
        raise MatrixFileError(f"{where}: no observations")
    width = len(rows[0])
    values = []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise MatrixFileError(f"{where}: row {lineno} has {len(row)} fields, expected {width}")
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise MatrixFileError(f"{where}: row {lineno}: {exc}") from None
    X = np.array(values, dtype=np.float64).T
    return _finite(np.ascontiguousarray(X), where)


def encode_csv(X, header=None) -> str:
    X = np.asarray(X, dtype=np.float64)
    out = io.StringIO()
    if header:
        out.write(",".join(header) + "\n")
    for j in range(X.shape[1]):
        out.write(",".join(format(v, ".17g") for v in X[:, j]) + "\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def read_matrix(path, fmt=None, header=False):
    """Read a data file into an (m, n) column-per-observation matrix."""
    fmt = _format_for(path, fmt)
    if fmt == "bin":
        return decode_bin(Path(path).read_bytes(), str(path))
    if fmt == "csv":
        return decode_csv(Path(path).read_text(), header=header, where=str(path))
    raise ValueError(f"unknown format {fmt!r}")


def write_matrix(path, X, fmt=None, header=None):
    fmt = fmt or ("csv" if Path(path).suffix.lower() == ".csv" else "bin")
    if fmt == "bin":
        Path(path).write_bytes(encode_bin(X))
    elif fmt == "csv":
        Path(path).write_text(encode_csv(X, header))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def state_to_matrix(state: CovarianceState):
    m = state.dim
    return np.column_stack(
        [np.full(m, float(state.count)), state.mean, state.scatter]
    )


def state_from_matrix(P, where="<state>") -> CovarianceState:
    m, cols = P.shape
    if cols != m + 2:
        raise MatrixFileError(f"{where}: a state needs m + 2 = {m + 2} columns, got {cols}")
    counts = P[:, 0]
    count = counts[0]
    if not (np.all(counts == count) and count >= 0 and count == int(count)):
        raise MatrixFileError(f"{where}: invalid count column")
    scatter = np.ascontiguousarray(P[:, 2:])
    if not np.array_equal(scatter, scatter.T):
        raise MatrixFileError(f"{where}: scatter matrix is not symmetric")
    return CovarianceState(int(count), P[:, 1].copy(), scatter)


def write_state(path, state: CovarianceState):
    Path(path).write_bytes(encode_bin(state_to_matrix(state)))


def read_state(path) -> CovarianceState:
    return state_from_matrix(decode_bin(Path(path).read_bytes(), str(path)), str(path))
