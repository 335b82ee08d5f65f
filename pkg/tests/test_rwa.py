from __future__ import annotations

import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ponfog.errors import InvalidParams, OutOfRange, SelfPair, TooLarge
from ponfog.rwa import (
    COLUMN_CLASH,
    MISSING_PAIR,
    OUT_OF_RANGE,
    ROW_CLASH,
    SELF_PAIR,
    RoutingMap,
    construct_cyclic,
    from_csv,
    minimal_wavelengths_bruteforce,
    relabel,
    solve,
    to_csv,
    used_wavelengths,
    verify,
    wavelength,
)

TABLE1_ROWS = [
    [None, 3, 2, 5, 4, 1, 6],
    [3, None, 1, 4, 2, 6, 5],
    [2, 5, None, 1, 6, 3, 4],
    [4, 1, 6, None, 5, 2, 3],
    [1, 6, 5, 3, None, 4, 2],
    [5, 2, 4, 6, 3, None, 1],
    [6, 4, 3, 2, 1, 5, None],
]


def naive_valid(rmap: RoutingMap) -> bool:
    """Independent restatement of the invariants, used as an oracle."""
    n = rmap.n_endpoints
    m = rmap.assignment
    if any(s == d for s, d in m):
        return False
    for s in range(n):
        row = [m.get((s, d)) for d in range(n) if d != s]
        col = [m.get((d, s)) for d in range(n) if d != s]
        for line in (row, col):
            if None in line or len(set(line)) != len(line):
                return False
            if not all(1 <= x <= rmap.n_wavelengths for x in line):
                return False
    return True


def reference_lex_min(n: int, k: int):
    """Plain depth-first search over pairs in row-major order."""
    cells = [(s, d) for s in range(n) for d in range(n) if s != d]
    chosen: dict = {}

    def go(i: int) -> bool:
        if i == len(cells):
            return True
        s, d = cells[i]
        for lam in range(1, k + 1):
            if any(chosen.get((s, x)) == lam for x in range(n)):
                continue
            if any(chosen.get((x, d)) == lam for x in range(n)):
                continue
            chosen[(s, d)] = lam
            if go(i + 1):
                return True
            del chosen[(s, d)]
        return False

    return dict(chosen) if go(0) else None


# -- the published map ---------------------------------------------------------


def test_bundled_map_fixture_values(table1):
    assert table1.labels == ("G1", "G2", "G3", "G4", "G5", "G6", "OLT")
    assert table1.matrix() == TABLE1_ROWS


def test_bundled_map_is_valid_with_six_wavelengths(table1):
    assert verify(table1).valid
    assert naive_valid(table1)
    assert used_wavelengths(table1) == set(range(1, 7))
    assert table1.n_wavelengths == 6


def test_bundled_map_mutation_g1_g2(table1):
    m = dict(table1.assignment)
    m[(0, 1)] = 2
    report = verify(replace(table1, assignment=m))
    kinds = {(v.kind, v.endpoints[0], v.wavelength) for v in report.violations}
    assert (ROW_CLASH, 0, 2) in kinds
    assert (COLUMN_CLASH, 1, 2) in kinds
    row = next(v for v in report.violations if v.kind == ROW_CLASH)
    assert row.endpoints == (0, 1, 2)
    col = next(v for v in report.violations if v.kind == COLUMN_CLASH)
    assert col.endpoints == (1, 0, 5)


def test_missing_pair(table1):
    m = dict(table1.assignment)
    del m[(5, 6)]
    report = verify(replace(table1, assignment=m))
    assert not report.valid
    assert report.violations[0].kind == MISSING_PAIR
    assert report.violations[0].endpoints == (5, 6)


def test_self_pair_and_out_of_range(table1):
    m = dict(table1.assignment)
    m[(2, 2)] = 1
    m[(0, 1)] = 9
    kinds = {v.kind for v in verify(replace(table1, assignment=m)).violations}
    assert {SELF_PAIR, OUT_OF_RANGE} <= kinds


@pytest.mark.parametrize(
    "src, dst, lam",
    [("G3", "OLT", 4), ("OLT", "G5", 1), ("OLT", "G3", 3), ("G3", "G5", 6), ("G5", "G3", 5), (0, 3, 5), (3, 0, 4)],
)
def test_wavelength_lookup(table1, src, dst, lam):
    assert wavelength(table1, src, dst) == lam


def test_wavelength_errors(table1):
    with pytest.raises(SelfPair):
        wavelength(table1, "G2", "G2")
    with pytest.raises(OutOfRange):
        wavelength(table1, 0, 7)
    with pytest.raises(OutOfRange):
        wavelength(table1, "G9", "OLT")


def test_csv_round_trip(table1):
    text = to_csv(table1)
    assert text.splitlines()[0] == ",G1,G2,G3,G4,G5,G6,OLT"
    assert text.splitlines()[1] == "G1,-,L3,L2,L5,L4,L1,L6"
    assert from_csv(text) == table1


def test_csv_rejects_garbage():
    with pytest.raises(InvalidParams):
        from_csv(",A,B\nA,-,Lx\nB,L1,-\n")
    with pytest.raises(InvalidParams):
        from_csv(",A,B\nA,-,L1\n")
    with pytest.raises(InvalidParams):
        from_csv(",A,B\nB,-,L1\nA,L1,-\n")


def test_csv_blank_entry_is_missing_pair():
    rmap = from_csv(",A,B\nA,-,\nB,L1,-\n")
    assert [v.kind for v in verify(rmap).violations] == [MISSING_PAIR]


# -- solver ----------------------------------------------------------------------


def test_solve_two_endpoints():
    m = solve(2)
    assert m.assignment == {(0, 1): 1, (1, 0): 1}
    assert m.n_wavelengths == 1


def test_solve_seven():
    m = solve(7)
    assert verify(m).valid
    assert m.n_wavelengths == 6 == len(used_wavelengths(m))


def test_solve_invalid():
    for bad in (1, 0, -3):
        with pytest.raises(InvalidParams):
            solve(bad)
        with pytest.raises(InvalidParams):
            construct_cyclic(bad)


def test_solve_is_deterministic():
    assert solve(9) == solve(9)


@pytest.mark.parametrize("n", range(2, 12))
def test_solve_is_lexicographically_first(n):
    assert solve(n).assignment == reference_lex_min(n, n - 1)


def _feasible_by_enumeration(n: int, k: int) -> bool:
    """Check all k**(n*(n-1)) assignments at once with numpy."""
    pairs = [(s, d) for s in range(n) for d in range(n) if s != d]
    grid = np.array(list(itertools.product(range(k), repeat=len(pairs))), dtype=np.int8)
    ok = np.ones(len(grid), dtype=bool)
    for i, (s1, d1) in enumerate(pairs):
        for j, (s2, d2) in enumerate(pairs):
            if j > i and (s1 == s2 or d1 == d2):
                ok &= grid[:, i] != grid[:, j]
    return bool(ok.any())


def test_four_endpoints_need_exactly_three():
    assert _feasible_by_enumeration(4, 3)
    assert not _feasible_by_enumeration(4, 2)
    assert solve(4).n_wavelengths == 3


def test_three_endpoints_by_enumeration():
    assert _feasible_by_enumeration(3, 2)
    assert not _feasible_by_enumeration(3, 1)


@pytest.mark.parametrize("n, expected", [(2, 1), (3, 2), (4, 3), (5, 4)])
def test_bruteforce_minimum(n, expected):
    assert minimal_wavelengths_bruteforce(n) == expected == solve(n).n_wavelengths


def test_bruteforce_bounds():
    with pytest.raises(TooLarge):
        minimal_wavelengths_bruteforce(6)
    with pytest.raises(InvalidParams):
        minimal_wavelengths_bruteforce(1)


# -- cyclic construction -------------------------------------------------------------


def test_cyclic_examples():
    m = construct_cyclic(7)
    assert wavelength(m, 0, 1) == 1
    assert verify(m).valid and m.n_wavelengths == 6
    three = construct_cyclic(3)
    for e in range(3):
        assert {three.assignment[(e, d)] for d in range(3) if d != e} == {1, 2}
        assert {three.assignment[(s, e)] for s in range(3) if s != e} == {1, 2}


@pytest.mark.parametrize("n", range(2, 65))
def test_cyclic_valid(n):
    m = construct_cyclic(n)
    assert verify(m).valid and naive_valid(m)
    assert m.n_wavelengths == n - 1


@pytest.mark.parametrize("n", range(2, 17))
def test_solve_valid(n):
    m = solve(n)
    assert verify(m).valid and naive_valid(m)
    assert m.n_wavelengths == n - 1 == construct_cyclic(n).n_wavelengths


# -- properties ----------------------------------------------------------------------


@st.composite
def valid_maps(draw, max_n=12):
    """Cyclic map with endpoints and wavelengths shuffled."""
    n = draw(st.integers(2, max_n))
    perm = draw(st.permutations(range(n)))
    colors = draw(st.permutations(range(1, n)))
    base = relabel(construct_cyclic(n), perm)
    assignment = {k: colors[v - 1] for k, v in base.assignment.items()}
    return replace(base, assignment=assignment)


@settings(max_examples=300, deadline=None)
@given(rmap=valid_maps(), data=st.data())
def test_permutation_symmetry(rmap, data):
    assert verify(rmap).valid
    perm = data.draw(st.permutations(range(rmap.n_endpoints)))
    moved = relabel(rmap, perm)
    assert verify(moved).valid
    assert naive_valid(moved)


@settings(max_examples=300, deadline=None)
@given(rmap=valid_maps(), data=st.data())
def test_verify_agrees_with_naive_oracle(rmap, data):
    m = dict(rmap.assignment)
    keys = sorted(m)
    for _ in range(data.draw(st.integers(0, 3))):
        key = data.draw(st.sampled_from(keys))
        m[key] = data.draw(st.integers(1, rmap.n_wavelengths + 1))
    mutated = replace(rmap, assignment=m)
    assert verify(mutated).valid == naive_valid(mutated)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(3, 10), data=st.data())
def test_too_few_wavelengths_always_fail(n, data):
    k = data.draw(st.integers(1, n - 2))
    pairs = [(s, d) for s in range(n) for d in range(n) if s != d]
    values = data.draw(st.lists(st.integers(1, k), min_size=len(pairs), max_size=len(pairs)))
    rmap = RoutingMap(n, k, dict(zip(pairs, values)))
    report = verify(rmap)
    assert not report.valid
    assert any(v.kind == ROW_CLASH for v in report.violations)


@settings(max_examples=100, deadline=None)
@given(rmap=valid_maps(max_n=9))
def test_any_single_cell_change_is_caught(rmap):
    for key, lam in rmap.assignment.items():
        for other in range(1, rmap.n_wavelengths + 1):
            if other != lam:
                m = dict(rmap.assignment)
                m[key] = other
                assert not verify(replace(rmap, assignment=m)).valid
