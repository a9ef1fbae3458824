"""Partitions, Kostka numbers and torus norms of Schur polynomials.

``torus_schur_norm(lam, k)`` is the mean of ``|s_lam(u)|^2`` over the
``k``-torus, i.e. the sum of squared monomial coefficients of ``s_lam`` in
``k`` variables. Those coefficients are Kostka numbers, so everything here is
exact integer arithmetic. ``cauchy_series_J`` sums the Cauchy identity
``prod_{i,j} 1/(1 - y^2 u_i conj(u_j)) = sum_lam y^(2|lam|) |s_lam(u)|^2``
degree by degree to get the torus integral of the left-hand side.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb, factorial

from .errors import DomainError, InvalidInputError

TAIL_RELATIVE = 1e-12
MAX_DEGREE_CUT = 2000


class Partition(tuple):
    """Weakly decreasing tuple of positive integers."""

    def __new__(cls, parts=()):
        parts = tuple(int(p) for p in parts)
        if any(p <= 0 for p in parts):
            raise InvalidInputError(f"partition parts must be positive, got {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise InvalidInputError(f"partition parts must be weakly decreasing, got {parts}")
        return super().__new__(cls, parts)

    @property
    def weight(self):
        return sum(self)

    def __repr__(self):
        return f"Partition{tuple(self)!r}"


def _as_partition(p):
    return p if isinstance(p, Partition) else Partition(p)


def partitions(n, max_parts=None):
    """All partitions of ``n`` with at most ``max_parts`` parts, largest first part first.

    >>> [tuple(p) for p in partitions(4, 2)]
    [(4,), (3, 1), (2, 2)]
    """
    n = int(n)
    if n < 0:
        raise InvalidInputError(f"cannot partition a negative integer ({n})")
    limit = n if max_parts is None else int(max_parts)
    return [Partition(p) for p in _partitions(n, n, limit)]


@lru_cache(maxsize=None)
def _partitions(n, largest, slots):
    if n == 0:
        return ((),)
    if slots == 0:
        return ()
    out = []
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first, slots - 1):
            out.append((first,) + rest)
    return tuple(out)


def dominates(lam, mu):
    """True when ``lam`` dominates ``mu`` (partial sums of ``lam`` never fall behind)."""
    a = b = 0
    for i in range(max(len(lam), len(mu))):
        a += lam[i] if i < len(lam) else 0
        b += mu[i] if i < len(mu) else 0
        if a < b:
            return False
    return True


def kostka(lam, mu):
    """Number of semistandard tableaux of shape ``lam`` and content ``mu``.

    ``mu`` may be any composition; the count does not depend on its order.

    >>> kostka((2, 1), (1, 1, 1))
    2
    """
    lam = _as_partition(lam)
    content = tuple(int(c) for c in mu)
    if any(c < 0 for c in content):
        raise InvalidInputError(f"content entries must be nonnegative, got {content}")
    if sum(lam) != sum(content):
        raise InvalidInputError(f"weights differ: |lambda|={sum(lam)}, |mu|={sum(content)}")
    key = tuple(sorted((c for c in content if c), reverse=True))
    return _kostka(tuple(lam), key)


@lru_cache(maxsize=None)
def _kostka(lam, mu):
    # peel the cells holding the largest letter: a horizontal strip of size mu[-1]
    if not mu:
        return 1 if not lam else 0
    if len(lam) > len(mu) or not dominates(lam, mu):
        return 0
    strip = mu[-1]
    rest = mu[:-1]
    total = 0
    for nu in _strip_removals(lam, strip):
        total += _kostka(nu, rest)
    return total


def _strip_removals(lam, size):
    """Partitions ``nu`` with ``lam / nu`` a horizontal strip of ``size`` cells."""
    rows = len(lam)
    out = []

    def walk(i, left, acc):
        if i == rows:
            if left == 0:
                out.append(tuple(p for p in acc if p))
            return
        floor = lam[i + 1] if i + 1 < rows else 0
        for take in range(min(left, lam[i] - floor) + 1):
            walk(i + 1, left - take, acc + (lam[i] - take,))

    walk(0, size, ())
    return out


def rearrangements(mu, k):
    """Number of distinct orderings of ``mu`` padded with zeros to ``k`` slots."""
    parts = [int(p) for p in mu if p]
    if len(parts) > k:
        return 0
    counts = {}
    for p in parts + [0] * (k - len(parts)):
        counts[p] = counts.get(p, 0) + 1
    out = factorial(k)
    for c in counts.values():
        out //= factorial(c)
    return out


@lru_cache(maxsize=None)
def _torus_norm(lam, k):
    if len(lam) > k:
        return 0
    total = 0
    for mu in _partitions(sum(lam), sum(lam), k):
        kk = _kostka(lam, mu)
        if kk:
            total += rearrangements(mu, k) * kk * kk
    return total


def torus_schur_norm(lam, k):
    """Mean of ``|s_lam(u)|^2`` over the ``k``-torus, an exact integer.

    Zero when ``lam`` has more than ``k`` parts (``s_lam`` vanishes).

    >>> torus_schur_norm((2,), 2)
    3
    """
    k = int(k)
    if k < 0:
        raise InvalidInputError(f"number of variables must be >= 0, got {k}")
    return _torus_norm(tuple(_as_partition(lam)), k)


@dataclass
class KostkaTable:
    """All Kostka numbers ``K[lam, mu]`` of one weight, restricted to at most ``max_parts`` parts."""

    weight: int
    max_parts: int
    entries: dict = field(default_factory=dict)

    @classmethod
    def build(cls, weight, max_parts=None):
        shapes = partitions(weight, max_parts)
        table = cls(int(weight), len(shapes[0]) if max_parts is None and shapes else int(max_parts or 0))
        for lam in shapes:
            for mu in shapes:
                table.entries[(lam, mu)] = kostka(lam, mu)
        return table

    def __getitem__(self, pair):
        lam, mu = pair
        return self.entries[(_as_partition(lam), _as_partition(mu))]


def degree_sum(n, k):
    """``sum_{lam |- n, len <= k} torus_schur_norm(lam, k)``."""
    return sum(_torus_norm(lam, k) for lam in _partitions(n, n, k))


def _tail_bound(k, y2, cut):
    """Bound on ``sum_{n > cut} y^(2n) C(n + k^2 - 1, k^2 - 1)``.

    The degree-``n`` sum counts ``k x k`` nonnegative integer matrices with
    equal row and column sums, so it is at most the number of all such
    matrices of total ``n``. Beyond the point where the term ratio drops
    below one the tail is dominated by a geometric series.
    """
    if y2 == 0.0:
        return 0.0
    d = k * k - 1
    n = cut + 1
    ratio = y2 * (n + d + 1) / (n + 1)
    if ratio >= 1.0:
        return float("inf")
    return y2**n * comb(n + d, d) / (1.0 - ratio)


@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float
    degree_cut: int
    terms: tuple


def cauchy_series_J(k, y, degree_cut=None):
    """Torus integral of ``prod_{i,j} 1/(1 - y^2 u_i conj(u_j))`` over ``k`` variables.

    Summed degree by degree via Schur norms. With ``degree_cut=None`` the cut
    is the first degree where the rigorous tail bound drops below
    ``1e-12`` of the partial sum.
    """
    k = int(k)
    y = float(y)
    if k < 0:
        raise InvalidInputError(f"k must be >= 0, got {k}")
    if not 0.0 <= y < 1.0:
        raise DomainError(f"the series needs 0 <= y < 1, got {y}")
    y2 = y * y
    if k == 0 or y2 == 0.0:
        return SeriesValue(1.0, 0.0, 0, (1.0,))
    terms = []
    total = 0.0
    n = 0
    while True:
        term = y2**n * degree_sum(n, k)
        terms.append(term)
        total += term
        if degree_cut is not None:
            if n >= degree_cut:
                break
        else:
            if _tail_bound(k, y2, n) < TAIL_RELATIVE * total:
                break
            if n >= MAX_DEGREE_CUT:
                raise DomainError(f"series needs more than {MAX_DEGREE_CUT} degrees at k={k}, y={y}")
        n += 1
    return SeriesValue(total, _tail_bound(k, y2, n), n, tuple(terms))


def series_cost(k, y):
    """Rough number of Kostka evaluations the automatic cut would need."""
    y2 = float(y) ** 2
    if k <= 1 or y2 == 0.0:
        return 1
    cut = 0
    while _tail_bound(k, y2, cut) >= TAIL_RELATIVE * (1.0 / (1.0 - y2)) and cut < MAX_DEGREE_CUT:
        cut += 1
    count = len(_partitions(cut, cut, k))
    return count * count * cut
