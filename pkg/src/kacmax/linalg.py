"""Complex scalar/vector/matrix kernels shared by the rest of the package.

Vectors and matrices are plain numpy arrays of dtype complex128; the helpers
``as_vector`` and ``as_matrix`` enforce finiteness at the boundary.
"""

import numpy as np

from .errors import DimensionError, InvalidInputError, SizeError

PERMANENT_MAX_DIM = 20
PIVOT_FLOOR = 1e-300


def as_vector(values):
    """Return ``values`` as a finite 1-d complex array."""
    z = np.atleast_1d(np.asarray(values, dtype=complex))
    if z.ndim != 1:
        raise InvalidInputError(f"expected a 1-d sequence, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("input contains NaN or Inf")
    return z


def as_matrix(m):
    """Return ``m`` as a finite 2-d complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix contains NaN or Inf")
    return a


def leja_order(values):
    """Indices putting ``values`` in Leja order.

    Start at the largest modulus, then repeatedly take the point maximising
    the product of distances to those already chosen. Multiplying out
    ``prod (1 + t z)`` in this order keeps intermediate coefficients from
    growing far beyond the final ones.
    """
    z = np.asarray(values, dtype=complex)
    return leja_order_batch(z[None, :])[0]


def leja_order_batch(points):
    """Row-wise Leja ordering of a ``(B, n)`` array (see ``leja_order``)."""
    z = np.asarray(points, dtype=complex)
    batch, n = z.shape
    order = np.empty((batch, n), dtype=np.int64)
    if n == 0:
        return order
    rows = np.arange(batch)
    current = np.argmax(np.abs(z), axis=1)
    score = np.zeros((batch, n))
    used = np.zeros((batch, n), dtype=bool)
    for m in range(n):
        order[:, m] = current
        used[rows, current] = True
        with np.errstate(divide="ignore"):
            score += np.log(np.abs(z - z[rows, current][:, None]))
        if m + 1 < n:
            current = np.argmax(np.where(used, -np.inf, np.nan_to_num(score, nan=-np.inf)), axis=1)
    return order


def elementary_symmetric(values, leja=True):
    """Elementary symmetric polynomials ``(e_0, ..., e_n)`` of ``values``.

    Uses the one-value-at-a-time recurrence ``e_k <- e_k + z * e_{k-1}``,
    i.e. multiplies out ``prod (1 + t z)``. With ``leja=True`` (default) the
    values are first put in Leja order, which is what makes the recurrence
    accurate for a few hundred points spread around a circle.

    >>> elementary_symmetric([2, 3])
    array([1.+0.j, 5.+0.j, 6.+0.j])
    """
    z = as_vector(values) if np.size(values) else np.zeros(0, dtype=complex)
    if leja and z.size > 2:
        z = z[leja_order(z)]
    e = np.zeros(z.size + 1, dtype=complex)
    e[0] = 1.0
    for m, zm in enumerate(z, start=1):
        e[1 : m + 1] = e[1 : m + 1] + zm * e[0:m]
    return e


def elementary_symmetric_batch(points, leja=True):
    """Row-wise elementary symmetric polynomials of a ``(B, n)`` array."""
    z = np.asarray(points, dtype=complex)
    if z.ndim != 2:
        raise DimensionError(f"expected (batch, n) array, got shape {z.shape}")
    batch, n = z.shape
    if leja and n > 2:
        z = np.take_along_axis(z, leja_order_batch(z), axis=1)
    e = np.zeros((batch, n + 1), dtype=complex)
    e[:, 0] = 1.0
    for m in range(1, n + 1):
        e[:, 1 : m + 1] = e[:, 1 : m + 1] + z[:, m - 1, None] * e[:, 0:m]
    return e


def vandermonde_abs2(values):
    """Squared modulus of the Vandermonde product ``prod_{i<j} |z_i - z_j|^2``.

    Accumulated as a sum of logarithms so that a few hundred points neither
    overflow nor underflow before the final exponential.
    """
    z = as_vector(values) if np.size(values) else np.zeros(0, dtype=complex)
    if z.size < 2:
        return 1.0
    i, j = np.triu_indices(z.size, k=1)
    d = np.abs(z[i] - z[j])
    if np.any(d == 0.0):
        return 0.0
    return float(np.exp(2.0 * np.sum(np.log(d))))


def vandermonde(values):
    """Signed Vandermonde product ``prod_{i<j} (a_i - a_j)``."""
    z = as_vector(values) if np.size(values) else np.zeros(0, dtype=complex)
    if z.size < 2:
        return 1.0 + 0.0j
    i, j = np.triu_indices(z.size, k=1)
    return complex(np.prod(z[i] - z[j]))


def determinant(m):
    """Determinant by LU factorisation with partial pivoting.

    A pivot of magnitude below ``PIVOT_FLOOR`` is treated as an exact zero
    and the determinant returned is ``0``.
    """
    a = as_matrix(m).copy()
    rows, cols = a.shape
    if rows != cols:
        raise DimensionError(f"determinant needs a square matrix, got {a.shape}")
    det = 1.0 + 0.0j
    for col in range(rows):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) < PIVOT_FLOOR:
            return 0.0 + 0.0j
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            det = -det
        det *= a[col, col]
        if col + 1 < rows:
            factors = a[col + 1 :, col] / a[col, col]
            a[col + 1 :, col:] -= factors[:, None] * a[col, col:][None, :]
    return complex(det)


def _gray_flips(dim):
    """Column index toggled at each step of the reflected Gray code."""
    steps = np.arange(1, 2**dim, dtype=np.int64)
    # index of the lowest set bit
    return np.log2(steps & -steps).astype(np.int64)


def permanent(m):
    """Permanent via Ryser's formula with Gray-code subset order.

    Cost is ``O(2^k k)``; dimensions above ``PERMANENT_MAX_DIM`` are refused.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if rows != cols:
        raise DimensionError(f"permanent needs a square matrix, got {a.shape}")
    if rows > PERMANENT_MAX_DIM:
        raise SizeError(f"permanent dimension {rows} exceeds cap {PERMANENT_MAX_DIM}")
    if rows == 0:
        return 1.0 + 0.0j
    return complex(permanent_batch(a[None, :, :])[0])


def permanent_batch(stack):
    """Permanents of a ``(B, k, k)`` stack, vectorised over the batch."""
    a = np.asarray(stack, dtype=complex)
    batch, k, k2 = a.shape
    if k != k2:
        raise DimensionError(f"expected square matrices, got {a.shape[1:]}")
    if k > PERMANENT_MAX_DIM:
        raise SizeError(f"permanent dimension {k} exceeds cap {PERMANENT_MAX_DIM}")
    if k == 0:
        return np.ones(batch, dtype=complex)
    row_sums = np.zeros((batch, k), dtype=complex)
    in_set = np.zeros(k, dtype=bool)
    total = np.zeros(batch, dtype=complex)
    size = 0
    for j in _gray_flips(k):
        if in_set[j]:
            row_sums -= a[:, :, j]
            size -= 1
        else:
            row_sums += a[:, :, j]
            size += 1
        in_set[j] = not in_set[j]
        sign = -1.0 if size % 2 else 1.0
        total += sign * np.prod(row_sums, axis=1)
    return (-1.0) ** k * total
