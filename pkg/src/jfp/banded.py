"""Finite sections of banded operator matrices.

Storage follows the LAPACK general-band layout: entry ``A[i, j]`` lives at
``data[upper + i - j, j]``.  Element types are either ``float64`` or Python
objects (mpmath numbers); all operations preserve the element type.

Products of finite sections are *not* sections of the product of the
underlying infinite matrices: rows/columns near the truncation edge are
corrupted.  Callers pad by the total bandwidth and cut afterwards
(:meth:`BandedMatrix.section`).
"""

from __future__ import annotations

import numpy as np

__all__ = ["BandedMatrix", "bandwidths", "solve_lower_banded", "solve_tridiagonal"]


class BandedMatrix:
    """``rows x cols`` matrix with bandwidths ``(lower, upper)``."""

    __slots__ = ("data", "rows", "cols", "lower", "upper")

    def __init__(self, data: np.ndarray, rows: int, cols: int, lower: int, upper: int):
        if lower < 0 or upper < 0:
            raise ValueError(f"bandwidths must be non-negative, got ({lower}, {upper})")
        if data.shape != (lower + upper + 1, cols):
            raise ValueError(f"band storage of shape {data.shape} does not match "
                             f"({lower + upper + 1}, {cols})")
        self.data = data
        self.rows = int(rows)
        self.cols = int(cols)
        self.lower = int(lower)
        self.upper = int(upper)

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, rows, cols, lower, upper, dtype=object):
        data = np.zeros((lower + upper + 1, cols), dtype=dtype)
        if dtype is object:
            data[...] = 0
        return cls(data, rows, cols, lower, upper)

    @classmethod
    def identity(cls, n, one=1.0, dtype=None):
        dtype = dtype or (float if isinstance(one, float) else object)
        m = cls.zeros(n, n, 0, 0, dtype)
        m.data[0, :] = one
        return m

    @classmethod
    def diagonal_matrix(cls, values, dtype=None):
        values = list(values)
        dtype = dtype or (float if values and isinstance(values[0], float) else object)
        m = cls.zeros(len(values), len(values), 0, 0, dtype)
        m.data[0, :] = values
        return m

    @classmethod
    def from_dense(cls, dense, lower, upper):
        """Band part of ``dense``.  Entries outside the band must be exactly zero."""
        dense = np.asarray(dense)
        rows, cols = dense.shape
        m = cls.zeros(rows, cols, lower, upper, dense.dtype if dense.dtype != object else object)
        for i in range(rows):
            for j in range(cols):
                v = dense[i, j]
                if -upper <= i - j <= lower:
                    m.data[upper + i - j, j] = v
                elif v != 0:
                    raise ValueError(f"entry ({i}, {j}) = {v} lies outside bandwidths ({lower}, {upper})")
        return m

    # -- access -------------------------------------------------------------

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def bandwidths(self):
        return (self.lower, self.upper)

    def _row_range(self, j):
        return max(0, j - self.upper), min(self.rows, j + self.lower + 1)

    def __getitem__(self, idx):
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(idx)
        if -self.upper <= i - j <= self.lower:
            return self.data[self.upper + i - j, j]
        return 0.0 if self.data.dtype != object else 0

    def __setitem__(self, idx, value):
        i, j = idx
        if not (-self.upper <= i - j <= self.lower):
            raise IndexError(f"({i}, {j}) is outside bandwidths {self.bandwidths}")
        self.data[self.upper + i - j, j] = value

    def column(self, j):
        """``(first_row, values)`` of the structurally nonzero part of column ``j``."""
        r0, r1 = self._row_range(j)
        return r0, self.data[self.upper + r0 - j: self.upper + r1 - j, j]

    def diagonal(self, k=0):
        """Entries of the ``k``-th diagonal (``k > 0`` above, ``k < 0`` below the main)."""
        if not -self.lower <= k <= self.upper:
            n = min(self.rows, self.cols)
            return np.zeros(max(0, n - abs(k)), dtype=self.data.dtype)
        start = max(k, 0)
        stop = min(self.cols, self.rows + k)
        return self.data[self.upper - k, start:stop].copy()

    def to_dense(self, dtype=None):
        dtype = dtype or self.data.dtype
        out = np.zeros((self.rows, self.cols), dtype=dtype)
        if dtype is object:
            out[...] = 0
        for j in range(self.cols):
            r0, vals = self.column(j)
            out[r0: r0 + len(vals), j] = vals
        return out

    def astype(self, dtype):
        if dtype is float or dtype == np.float64:
            data = np.array([[float(v) for v in row] for row in self.data], dtype=float).reshape(self.data.shape)
        else:
            data = self.data.astype(dtype)
        return BandedMatrix(data, self.rows, self.cols, self.lower, self.upper)

    def section(self, rows, cols=None):
        """Leading ``rows x cols`` block, keeping the bandwidths."""
        cols = rows if cols is None else cols
        if rows > self.rows or cols > self.cols:
            raise ValueError(f"section {rows}x{cols} exceeds {self.rows}x{self.cols}")
        data = self.data[:, :cols].copy()
        out = BandedMatrix(data, rows, cols, self.lower, self.upper)
        # clear entries that refer to rows past the new edge
        for j in range(cols):
            for d in range(self.lower + self.upper + 1):
                i = j + d - self.upper
                if i < 0 or i >= rows:
                    out.data[d, j] = 0.0 if data.dtype != object else 0
        return out

    def effective_bandwidths(self, tol=0.0):
        """Smallest ``(lower, upper)`` covering every entry with magnitude above ``tol``."""
        lo = up = 0
        for d in range(self.lower + self.upper + 1):
            k = self.upper - d  # superdiagonal index
            if any(abs(v) > tol for v in self.data[d]):
                if k >= 0:
                    up = max(up, k)
                else:
                    lo = max(lo, -k)
        return lo, up

    # -- arithmetic ---------------------------------------------------------

    def _zero(self):
        return 0.0 if self.data.dtype != object else 0

    def __neg__(self):
        return BandedMatrix(-self.data, self.rows, self.cols, self.lower, self.upper)

    def scale(self, c):
        return BandedMatrix(self.data * c, self.rows, self.cols, self.lower, self.upper)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def widen(self, lower, upper):
        """Same matrix stored with (larger) bandwidths ``(lower, upper)``."""
        if lower < self.lower or upper < self.upper:
            raise ValueError("can only widen")
        out = BandedMatrix.zeros(self.rows, self.cols, lower, upper, self.data.dtype)
        shift = upper - self.upper
        out.data[shift: shift + self.data.shape[0], :] = self.data
        return out

    def __add__(self, other):
        if not isinstance(other, BandedMatrix):
            return NotImplemented
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        lo, up = max(self.lower, other.lower), max(self.upper, other.upper)
        a, b = self.widen(lo, up), other.widen(lo, up)
        return BandedMatrix(a.data + b.data, self.rows, self.cols, lo, up)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, other):
        if isinstance(other, BandedMatrix):
            return self._matmul_banded(other)
        other = np.asarray(other)
        if other.ndim == 1:
            return self._matvec(other)
        return self._matmul_dense(other)

    def __rmatmul__(self, other):
        # dense @ banded
        other = np.asarray(other)
        if other.ndim == 1:
            return self.transpose()._matvec(other)
        return self.transpose()._matmul_dense(other.T).T

    def transpose(self):
        out = BandedMatrix.zeros(self.cols, self.rows, self.upper, self.lower, self.data.dtype)
        for j in range(self.cols):
            r0, vals = self.column(j)
            for t, v in enumerate(vals):
                out[j, r0 + t] = v
        return out

    @property
    def T(self):
        return self.transpose()

    def _matmul_banded(self, other: "BandedMatrix") -> "BandedMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        lo, up = self.lower + other.lower, self.upper + other.upper
        dtype = object if object in (self.data.dtype, other.data.dtype) else float
        out = BandedMatrix.zeros(self.rows, other.cols, lo, up, dtype)
        for j in range(other.cols):
            k0, bvals = other.column(j)
            for t, b in enumerate(bvals):
                if b == 0:
                    continue
                k = k0 + t
                i0, avals = self.column(k)
                if len(avals) == 0:
                    continue
                # out[i, j] for i in [i0, i0+len) -> data row up + i - j
                d0 = up + i0 - j
                out.data[d0: d0 + len(avals), j] += avals * b
        return out

    def _matvec(self, v):
        if len(v) != self.cols:
            raise ValueError(f"vector of length {len(v)} for {self.shape} matrix")
        dtype = object if object in (self.data.dtype, np.asarray(v).dtype) else float
        out = np.zeros(self.rows, dtype=dtype)
        if dtype is object:
            out[...] = 0
        for j in range(self.cols):
            if v[j] == 0:
                continue
            r0, vals = self.column(j)
            out[r0: r0 + len(vals)] += vals * v[j]
        return out

    def _matmul_dense(self, B):
        if self.cols != B.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {B.shape}")
        dtype = object if object in (self.data.dtype, B.dtype) else float
        out = np.zeros((self.rows, B.shape[1]), dtype=dtype)
        if dtype is object:
            out[...] = 0
        for j in range(self.cols):
            r0, vals = self.column(j)
            if len(vals) == 0:
                continue
            out[r0: r0 + len(vals), :] += np.outer(vals, B[j, :]) if dtype is object \
                else vals[:, None] * B[j, :][None, :]
        return out

    def power(self, p: int) -> "BandedMatrix":
        if p < 1:
            raise ValueError("power must be >= 1")
        out = self
        for _ in range(p - 1):
            out = out @ self
        return out

    def __repr__(self):
        return f"BandedMatrix({self.rows}x{self.cols}, bandwidths=({self.lower}, {self.upper}), dtype={self.data.dtype})"


def bandwidths(dense, tol=0.0):
    """Bandwidths ``(lower, upper)`` of a dense matrix: entries with ``|a_ij| > tol`` only."""
    dense = np.asarray(dense)
    lo = up = 0
    rows, cols = dense.shape
    for i in range(rows):
        for j in range(cols):
            if abs(dense[i, j]) > tol:
                if i > j:
                    lo = max(lo, i - j)
                else:
                    up = max(up, j - i)
    return lo, up


def solve_lower_banded(A, rhs, lower: int):
    """Solve ``A x = rhs`` for a square matrix with lower bandwidth ``lower``.

    Gaussian elimination with partial pivoting restricted to the ``lower``
    subdiagonals, so the cost is ``O(lower * n**2)``.  Works for float and
    object (mpmath) arrays; the input arrays are not modified.
    """
    A = np.array(A, dtype=object if np.asarray(A).dtype == object else float, copy=True)
    x = np.array(rhs, dtype=A.dtype, copy=True)
    n = A.shape[0]
    for k in range(n):
        last = min(n, k + lower + 1)
        piv = k + int(np.argmax([abs(A[i, k]) for i in range(k, last)]))
        if A[piv, k] == 0:
            raise np.linalg.LinAlgError(f"singular matrix: zero pivot in column {k}")
        if piv != k:
            A[[k, piv], k:] = A[[piv, k], k:]
            x[[k, piv]] = x[[piv, k]]
        for i in range(k + 1, last):
            f = A[i, k] / A[k, k]
            if f != 0:
                A[i, k:] -= f * A[k, k:]
                x[i] -= f * x[k]
    for k in range(n - 1, -1, -1):
        s = x[k] - np.dot(A[k, k + 1:], x[k + 1:]) if k + 1 < n else x[k]
        x[k] = s / A[k, k]
    return x


def solve_tridiagonal(sub, diag, sup, rhs):
    """Solve a tridiagonal system by elimination with partial pivoting.

    ``sub``/``sup`` have length ``n - 1``.  This is LAPACK's ``gtsv``
    algorithm written for arbitrary element types, so mpmath numbers keep
    their precision.  Row swaps create one extra superdiagonal.
    """
    n = len(diag)
    d = list(diag)
    dl = list(sub)
    du = list(sup)
    b = list(rhs)
    du2 = [0] * max(n - 2, 0)
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if d[i] == 0:
                raise np.linalg.LinAlgError(f"singular matrix: zero pivot in row {i}")
            f = dl[i] / d[i]
            d[i + 1] -= f * du[i]
            b[i + 1] -= f * b[i]
        else:
            f = d[i] / dl[i]
            d[i] = dl[i]
            tmp = d[i + 1]
            d[i + 1] = du[i] - f * tmp
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -f * du2[i]
            du[i] = tmp
            b[i], b[i + 1] = b[i + 1], b[i] - f * b[i + 1]
    if d[n - 1] == 0:
        raise np.linalg.LinAlgError(f"singular matrix: zero pivot in row {n - 1}")
    x = [0] * n
    x[n - 1] = b[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    plain = all(isinstance(v, (float, int, np.floating)) for v in x)
    return np.array(x, dtype=float if plain else object)
