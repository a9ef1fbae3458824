import itertools
from collections import Counter
from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kacmax.deviations import quadrature_J
from kacmax.errors import DomainError, InvalidInputError
from kacmax.symfunc import (
    KostkaTable,
    Partition,
    cauchy_series_J,
    degree_sum,
    dominates,
    kostka,
    partitions,
    rearrangements,
    series_cost,
    torus_schur_norm,
)


def partition_count(n):
    # Euler's recurrence via generalised pentagonal numbers
    p = [1] + [0] * n
    for m in range(1, n + 1):
        k, total = 1, 0
        while True:
            g1 = k * (3 * k - 1) // 2
            g2 = k * (3 * k + 1) // 2
            if g1 > m:
                break
            sign = 1 if k % 2 else -1
            total += sign * p[m - g1]
            if g2 <= m:
                total += sign * p[m - g2]
            k += 1
        p[m] = total
    return p[n]


def ssyt_contents(shape, k):
    """Content vectors of every semistandard tableau of ``shape`` with entries in 1..k, by brute force."""
    cells = [(r, c) for r, row in enumerate(shape) for c in range(row)]
    out = Counter()
    for fill in itertools.product(range(1, k + 1), repeat=len(cells)):
        t = dict(zip(cells, fill))
        if any(c and t[(r, c - 1)] > t[(r, c)] for r, c in cells):
            continue
        if any(r and t[(r - 1, c)] >= t[(r, c)] for r, c in cells):
            continue
        out[tuple(fill.count(v) for v in range(1, k + 1))] += 1
    return out


def weyl_dimension(lam, k):
    lam = list(lam) + [0] * (k - len(lam))
    d = Fraction(1)
    for i in range(k):
        for j in range(i + 1, k):
            d *= Fraction(lam[i] - lam[j] + j - i, j - i)
    return int(d)


def balanced_matrix_count(n, k):
    """k x k nonnegative integer matrices of total n whose row sums equal column sums."""
    count = 0
    for entries in itertools.product(range(n + 1), repeat=k * k):
        if sum(entries) != n:
            continue
        m = np.array(entries).reshape(k, k)
        count += np.array_equal(m.sum(axis=0), m.sum(axis=1))
    return count


# -- partitions -----------------------------------------------------------------


def test_partitions_examples():
    assert [tuple(p) for p in partitions(0)] == [()]
    assert [tuple(p) for p in partitions(4, 2)] == [(4,), (3, 1), (2, 2)]
    assert len(partitions(20, 20)) == partition_count(20) == 627


def test_partitions_are_distinct_and_valid():
    ps = partitions(12, 4)
    assert len(set(ps)) == len(ps)
    assert all(p.weight == 12 and len(p) <= 4 for p in ps)


def test_partition_validation():
    with pytest.raises(InvalidInputError):
        Partition((1, 2))
    with pytest.raises(InvalidInputError):
        Partition((2, 0))
    with pytest.raises(InvalidInputError):
        partitions(-1)


def test_dominance():
    assert dominates((3, 1), (2, 2))
    assert not dominates((2, 2), (3, 1))
    assert dominates((2, 1, 1), (1, 1, 1, 1))


# -- Kostka numbers -------------------------------------------------------------


def test_kostka_examples():
    assert kostka((3, 1), (3, 1)) == 1
    assert kostka((2, 1), (1, 1, 1)) == 2
    assert kostka((1, 1), (2,)) == 0
    with pytest.raises(InvalidInputError):
        kostka((2,), (1,))


def test_kostka_frozen_row():
    assert [kostka((3, 2, 1), m) for m in [(3, 2, 1), (2, 2, 2), (2, 2, 1, 1), (1,) * 6]] == [1, 2, 4, 16]


def test_kostka_content_order_is_irrelevant():
    assert kostka((3, 2), (1, 2, 2)) == kostka((3, 2), (2, 2, 1)) == kostka((3, 2), (2, 1, 2))


@pytest.mark.parametrize("weight", range(1, 13))
def test_kostka_dominance_and_unitriangularity(weight):
    shapes = partitions(weight)
    for lam in shapes:
        assert kostka(lam, lam) == 1
        for mu in shapes:
            if not dominates(lam, mu):
                assert kostka(lam, mu) == 0


@pytest.mark.parametrize("lam", [(2, 1), (3, 1), (2, 2), (2, 1, 1), (3, 2)])
def test_kostka_matches_tableau_enumeration(lam):
    k = 4
    contents = ssyt_contents(lam, k)
    for mu in partitions(sum(lam), k):
        padded = tuple(mu) + (0,) * (k - len(mu))
        assert kostka(lam, mu) == contents.get(padded, 0)


def test_kostka_table():
    t = KostkaTable.build(4)
    assert t[(2, 1, 1), (1, 1, 1, 1)] == 3
    assert t[(4,), (2, 2)] == 1
    assert t[(2, 2), (3, 1)] == 0
    assert len(t.entries) == 25


# -- torus norms ----------------------------------------------------------------


def test_torus_norm_examples():
    assert torus_schur_norm((1,), 2) == 2
    assert torus_schur_norm((2,), 2) == 3
    assert torus_schur_norm((1, 1, 1), 2) == 0


@pytest.mark.parametrize("lam,k", [((2, 1), 3), ((2, 2), 3), ((3, 1), 2), ((2, 1, 1), 4)])
def test_torus_norm_brute_force(lam, k):
    contents = ssyt_contents(lam, k)
    assert torus_schur_norm(lam, k) == sum(c * c for c in contents.values())


def test_torus_norm_frozen():
    got = [torus_schur_norm(l, 3) for l in [(1,), (2,), (1, 1), (2, 1), (3,), (2, 2), (3, 1, 1)]]
    assert got == [3, 6, 3, 10, 10, 6, 6]


@pytest.mark.parametrize("lam,k", [((3, 1), 3), ((4, 2, 1), 3), ((2, 2, 1), 4), ((5,), 2), ((3, 3, 2), 5)])
def test_row_sum_is_weyl_dimension(lam, k):
    total = sum(rearrangements(mu, k) * kostka(lam, mu) for mu in partitions(sum(lam), k))
    assert total == weyl_dimension(lam, k)


def test_rearrangements():
    assert rearrangements((2, 1), 3) == 6
    assert rearrangements((1, 1), 3) == 3
    assert rearrangements((1, 1, 1, 1), 3) == 0


@pytest.mark.parametrize("n,k", [(n, 2) for n in range(7)] + [(n, 3) for n in range(5)])
def test_degree_sum_counts_balanced_matrices(n, k):
    assert degree_sum(n, k) == balanced_matrix_count(n, k)


def test_degree_sum_frozen():
    assert [degree_sum(n, 2) for n in range(8)] == [1, 2, 4, 6, 9, 12, 16, 20]
    assert [degree_sum(n, 3) for n in range(6)] == [1, 3, 9, 21, 45, 87]


def hook_length_count(lam):
    n = sum(lam)
    cols = [sum(1 for r in lam if r > c) for c in range(lam[0])]
    hooks = 1
    for i, r in enumerate(lam):
        for c in range(r):
            hooks *= (r - c - 1) + (cols[c] - i - 1) + 1
    return factorial(n) // hooks


def test_big_integers_are_exact():
    # standard tableaux of the staircase (8, ..., 1) number more than 2^64
    stair = tuple(range(8, 0, -1))
    big = kostka(stair, (1,) * 36)
    assert big > 2**64
    assert big == hook_length_count(stair) == 29258366996258488320
    assert kostka((1,) * 25, (1,) * 25) == 1
    n = torus_schur_norm((6, 5, 4, 3, 2, 1), 6)
    assert isinstance(n, int) and n > 0


# -- the Cauchy series for J_k --------------------------------------------------


def test_series_edge_cases():
    assert cauchy_series_J(3, 0.0).value == 1.0
    assert cauchy_series_J(0, 0.7).value == 1.0
    with pytest.raises(DomainError):
        cauchy_series_J(2, 1.0)


@pytest.mark.parametrize("y", [0.1, 0.5, 0.9])
def test_series_single_variable_is_geometric(y):
    s = cauchy_series_J(1, y)
    exact = 1 / (1 - y * y)
    assert abs(s.value - exact) <= s.tail_bound + 1e-15
    assert abs(s.value - exact) <= 1e-12 * exact


def test_series_k2_matches_quadrature():
    s = cauchy_series_J(2, 0.5, 40)
    assert s.value == pytest.approx(1.8962962962962961, rel=1e-14)
    assert abs(s.value - quadrature_J(2, 0.5, 64)) <= 1e-8
    assert s.degree_cut == 40 and len(s.terms) == 41


def test_series_k3_frozen():
    s = cauchy_series_J(3, 0.3)
    assert s.value == pytest.approx(1.3617749898137412, rel=1e-13)
    assert s.tail_bound < 1e-12 * s.value


def test_series_monotone_in_cut_and_y():
    values = [cauchy_series_J(2, 0.6, cut).value for cut in range(0, 30, 3)]
    assert all(a <= b for a, b in zip(values, values[1:]))
    ys = [0.1, 0.3, 0.5, 0.7]
    values = [cauchy_series_J(2, y).value for y in ys]
    assert all(a < b for a, b in zip(values, values[1:]))


def test_series_cost_grows_with_k():
    assert series_cost(1, 0.6) == 1
    assert series_cost(2, 0.6) < series_cost(3, 0.6) < series_cost(4, 0.6)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.0, max_value=0.7), st.integers(min_value=1, max_value=2))
def test_series_tail_bound_holds(y, k):
    short = cauchy_series_J(k, y, 8)
    full = cauchy_series_J(k, y)
    assert full.value - short.value <= short.tail_bound * (1 + 1e-9) + 1e-15
