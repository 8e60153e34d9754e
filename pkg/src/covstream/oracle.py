"""Brute-force reference computations.

Everything here is deliberately slow and simple: means and products are
accumulated with ``math.fsum`` one entry at a time, and edit scripts are
applied to literal column lists. Nothing in this module calls into the
incremental code paths.
"""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Add:
    columns: np.ndarray


@dataclass(frozen=True)
class Remove:
    indices: Sequence[int]


Edit = Union[Add, Remove]
EditScript = Sequence[Edit]


@dataclass(frozen=True)
class OracleStats:
    count: int
    mean: np.ndarray
    scatter: np.ndarray
    covariance: Union[np.ndarray, None]


def oracle_covariance(columns) -> OracleStats:
    """Two-pass textbook mean and scatter; covariance only when n >= 2."""
    X = np.asarray(columns, dtype=np.float64)
    m, n = X.shape
    if n == 0:
        return OracleStats(0, np.zeros(m), np.zeros((m, m)), None)
    mean = np.array([math.fsum(X[i]) / n for i in range(m)])
    C = X - mean[:, None]
    scatter = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1):
            scatter[i, j] = scatter[j, i] = math.fsum(C[i] * C[j])
    cov = scatter / (n - 1) if n >= 2 else None
    return OracleStats(n, mean, scatter, cov)


def _gram(A):
    m = A.shape[0]
    G = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1):
            G[i, j] = G[j, i] = math.fsum(A[i] * A[j])
    return G


def oracle_scatter_modify(a1, b, mode, indices=None):
    """A2 A2^T computed directly from the edited column set.

    ``mode="add"`` appends the columns of ``b``. ``mode="remove"`` deletes the
    columns of ``a1`` at ``indices``, which must hold exactly ``b``.
    """
    A1 = np.asarray(a1, dtype=np.float64)
    B = np.asarray(b, dtype=np.float64).reshape(A1.shape[0], -1)
    if mode == "add":
        A2 = np.concatenate([A1, B], axis=1)
    elif mode == "remove":
        idx = _check_indices(indices if indices is not None else [], A1.shape[1])
        if len(idx) != B.shape[1] or not np.array_equal(A1[:, idx], B):
            raise ValueError("b does not match the columns at the given indices")
        A2 = np.delete(A1, idx, axis=1)
    else:
        raise ValueError(f"mode must be 'add' or 'remove', got {mode!r}")
    return _gram(A2)


def scatter_identity(a1, b, mode):
    """The same product via A1 A1^T +/- B B^T."""
    A1 = np.asarray(a1, dtype=np.float64)
    B = np.asarray(b, dtype=np.float64).reshape(A1.shape[0], -1)
    sign = {"add": 1.0, "remove": -1.0}[mode]
    return _gram(A1) + sign * _gram(B)


def _check_indices(indices, n):
    idx = [int(i) for i in indices]
    for i in idx:
        if not 0 <= i < n:
            raise IndexError(f"column index {i} out of range for {n} columns")
    if len(set(idx)) != len(idx):
        raise IndexError("duplicate column index in removal")
    return idx


def oracle_apply(script: EditScript, start) -> np.ndarray:
    """Apply adds and index-based removals to a literal column list."""
    X = np.asarray(start, dtype=np.float64)
    cols = [X[:, j].copy() for j in range(X.shape[1])]
    m = X.shape[0]
    for edit in script:
        if isinstance(edit, Add):
            Y = np.asarray(edit.columns, dtype=np.float64).reshape(m, -1)
            cols.extend(Y[:, j].copy() for j in range(Y.shape[1]))
        elif isinstance(edit, Remove):
            drop = set(_check_indices(edit.indices, len(cols)))
            cols = [c for j, c in enumerate(cols) if j not in drop]
        else:
            raise TypeError(f"unknown edit {edit!r}")
    if not cols:
        return np.zeros((m, 0))
    return np.column_stack(cols)
