import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkinst.lattice import (
    BpsStructure,
    ChargeLattice,
    LatticeError,
    charge_gcds,
    complete_darboux_basis,
    darboux_coordinates,
    ext_gcd,
    gram,
    pairing_eval,
    saturate,
    validate_mutual_locality,
)
from qkinst.suites import check_darboux, point_rng, random_darboux_case, random_unimodular


def standard(m):
    return ChargeLattice.standard(m)


def test_pairing_examples():
    assert pairing_eval(standard(1), (1, 0), (0, 1)) == 1
    assert pairing_eval(standard(1), (0, 1), (1, 0)) == -1
    assert pairing_eval(standard(2), (0, 0, 1, 0), (0, 0, 0, 1)) == 0


@given(st.lists(st.integers(-50, 50), min_size=4, max_size=4),
       st.lists(st.integers(-50, 50), min_size=4, max_size=4))
def test_pairing_antisymmetric(a, b):
    L = standard(2)
    assert pairing_eval(L, a, b) == -pairing_eval(L, b, a)
    assert pairing_eval(L, a, a) == 0


def test_pairing_dimension_mismatch():
    with pytest.raises(LatticeError):
        pairing_eval(standard(2), (1, 0), (0, 1))


def test_lattice_rejects_bad_pairings():
    with pytest.raises(LatticeError):
        ChargeLattice(3)
    with pytest.raises(LatticeError):
        ChargeLattice(2, ((0, 1), (1, 0)))  # symmetric
    with pytest.raises(LatticeError):
        ChargeLattice(2, ((0, 2), (-2, 0)))  # not unimodular


def test_mutual_locality_examples():
    L = standard(1)
    assert validate_mutual_locality(L, BpsStructure([((0, 1), 1)]))
    assert not validate_mutual_locality(L, BpsStructure([((1, 0), 1), ((0, 1), 1)]))
    assert validate_mutual_locality(L, BpsStructure([]))


def test_bps_symmetrized_and_conflicts():
    b = BpsStructure([((0, 0, 1, 0), 3)])
    assert b.omega((0, 0, -1, 0)) == 3
    assert set(b.support) == {(0, 0, 1, 0), (0, 0, -1, 0)}
    assert len(b.half_support()) == 1
    with pytest.raises(LatticeError):
        BpsStructure([((0, 1), 1), ((0, -1), 2)])
    assert BpsStructure([]).is_empty


def test_charge_gcds():
    b = BpsStructure([((0, 0, 4, 6), 1), ((0, 0, 6, 0), 1)])
    assert charge_gcds(b, 2) == [2, 6]
    assert charge_gcds(BpsStructure([((0, 0, 0, 3), 1)]), 2) == [None, 3]


@given(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=1, max_size=6))
def test_ext_gcd_bezout(vals):
    g, x = ext_gcd(vals)
    assert sum(a * b for a, b in zip(vals, x)) == g
    from math import gcd
    from functools import reduce
    assert g == reduce(gcd, vals, 0)


def test_saturate_primitive_closure():
    # span{(2, 0, 0, 0)} saturates to span{(1, 0, 0, 0)}
    assert saturate([(2, 0, 0, 0)], 4) in ([(1, 0, 0, 0)], [(-1, 0, 0, 0)])


def test_darboux_already_standard():
    B = complete_darboux_basis(standard(1), [(0, 1)])
    assert B == [(1, 0), (0, 1)]


def test_darboux_rank4_non_primitive_support():
    L = standard(2)
    S = [(0, 0, 2, 0), (0, 0, 0, 3)]
    B = complete_darboux_basis(L, S)
    assert gram(L, B) == [list(r) for r in L.pairing]
    for s in S:
        c = darboux_coordinates(L, B, s)
        assert c[:2] == (0, 0)


def test_darboux_rank2_bezout():
    L = standard(1)
    B = complete_darboux_basis(L, [(1, 1)])
    assert B[1] in ((1, 1), (-1, -1))
    assert pairing_eval(L, B[0], B[1]) == 1


def test_darboux_rejects_non_isotropic():
    with pytest.raises(LatticeError):
        complete_darboux_basis(standard(1), [(1, 0), (0, 1)])


def test_random_unimodular_inverse():
    rng = point_rng(7, 0)
    for dim in (2, 4, 6):
        U, Ui = random_unimodular(rng, dim)
        prod = [[sum(U[i][k] * Ui[k][j] for k in range(dim)) for j in range(dim)] for i in range(dim)]
        assert prod == [[int(i == j) for j in range(dim)] for i in range(dim)]


@pytest.mark.parametrize("seed", range(3))
def test_darboux_randomized_1000(seed):
    # ~333 cases per seed, 1000 overall
    for i in range(334 if seed < 2 else 332):
        lattice, support = random_darboux_case(point_rng(seed, i))
        basis = complete_darboux_basis(lattice, support)
        assert check_darboux(lattice, support, basis)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_darboux_property(seed):
    lattice, support = random_darboux_case(np.random.default_rng(seed))
    basis = complete_darboux_basis(lattice, support)
    B = np.array(basis, dtype=object).T
    P = np.array(lattice.pairing, dtype=object)
    assert (B.T.dot(P).dot(B) == np.array(standard(lattice.m).pairing, dtype=object)).all()
