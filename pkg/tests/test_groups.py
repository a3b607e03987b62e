"""Group arithmetic, shapes, and invariance predicates."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foltile.errors import InvalidInput
from foltile.groups import (Heisenberg, Lamplighter, Shape, Zd, boundary,
                            get_model, invariance_defect, is_invariant,
                            multiply_set, propagate_invariance,
                            spot_check_associativity)

Z1 = get_model("z1")
Z2 = get_model("z2")
HEIS = get_model("heis")
LAMP = get_model("lamplighter")

CROSS1 = Z2.shape([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)])
KZ1 = Z1.shape([(-1,), (0,), (1,)])


def test_multiply_set_identity_case():
    F = Z1.folner(10)
    assert multiply_set(Z1.shape([(0,)]), F) == F


def test_multiply_set_interval():
    F = Z1.folner(100)
    prod = multiply_set(KZ1, F)
    assert len(prod) == 102
    assert prod.elements[0] == (-1,) and prod.elements[-1] == (100,)


def test_multiply_set_cross_on_box():
    # brute-force oracle over all pairs
    F = Z2.box(10, 10)
    expected = sorted({Z2.mul(k, f) for k in CROSS1 for f in F})
    got = multiply_set(CROSS1, F)
    assert len(got) == 140
    assert list(got.elements) == expected


@pytest.mark.parametrize("model,k,f", [
    ("z1", 7, 31), ("z2", 4, 9), ("heis", 3, 2),
])
def test_multiply_set_matches_brute_force(model, k, f):
    m = get_model(model)
    K = m.folner(k)
    F = m.folner(f) if len(m.folner(f)) <= 50 else m.folner(2)
    slow = sorted({m.mul(a, b) for a in K for b in F}, key=m.sort_key)
    assert list(multiply_set(K, F).elements) == slow


def test_invariance_defect_interval():
    assert invariance_defect(KZ1, Z1.folner(100)) == Fraction(2, 100)


def test_invariance_defect_identity_k():
    for F in (Z1.folner(5), Z2.box(3, 7)):
        K = F.model.shape([F.model.identity()])
        assert invariance_defect(K, F) == 0


def test_invariance_defect_cross_on_box():
    # 4 sides of 10 cells escape the 10x10 box
    assert invariance_defect(CROSS1, Z2.box(10, 10)) == Fraction(40, 100)


def test_invariance_defect_empty_errors():
    with pytest.raises(InvalidInput):
        invariance_defect(KZ1, Z1.shape([]))


def test_is_invariant_strict():
    F = Z1.folner(100)
    assert is_invariant(KZ1, Fraction(3, 100), F)
    assert not is_invariant(KZ1, Fraction(2, 100), F)  # strict inequality


def test_boundary_one_sided():
    A = Z1.folner(10)
    assert boundary(Z1.shape([(0,), (1,)]), A).elements == ((9,),)


def test_boundary_identity_window():
    A = Z1.folner(10)
    assert len(boundary(Z1.shape([(0,)]), A)) == 0


def test_boundary_symmetric_window():
    A = Z1.folner(10)
    assert boundary(KZ1, A).elements == ((0,), (9,))


def test_boundary_monotone_in_window():
    A = Z2.box(6, 6)
    small = boundary(CROSS1, A)
    big = boundary(Z2.box(3, 3), A)
    assert set(small.elements) <= set(big.elements)


def test_folner_z2_box():
    F = Z2.folner(8)
    assert len(F) == 64
    assert F.elements[0] == (0, 0)


@pytest.mark.parametrize("n", [10, 20, 40])
def test_folner_z1_defect_value(n):
    assert invariance_defect(KZ1, Z1.folner(n)) == Fraction(2, n)


def test_folner_heis_defect_trend():
    # anisotropic boxes: defect under the generator cross falls like 1/n
    K = HEIS.generators()
    defects = [invariance_defect(K, HEIS.folner(n)) for n in (4, 8, 16)]
    assert defects[1] < Fraction(3, 5) * defects[0]
    assert defects[2] < Fraction(3, 5) * defects[1]


def test_folner_lamplighter_defect_shrinks():
    K = LAMP.generators()
    d4 = invariance_defect(K, LAMP.folner(4))
    d8 = invariance_defect(K, LAMP.folner(8))
    assert d8 < d4 < 1


def test_folner_monotone_quality():
    # for every K, delta there is an index beyond which boxes qualify
    K = CROSS1
    assert is_invariant(K, Fraction(1, 4), Z2.folner(17))
    assert is_invariant(K, Fraction(1, 8), Z2.folner(33))


def test_propagate_invariance_values():
    K2 = Z1.shape([(0,), (1,)])
    assert propagate_invariance(K2, Fraction(1, 10), Fraction(1, 20)) == \
        Fraction(5, 19)
    assert propagate_invariance(K2, Fraction(1, 7), Fraction(0)) == Fraction(1, 7)
    K5 = Z1.shape([(i,) for i in range(5)])
    assert propagate_invariance(K5, Fraction(0), Fraction(1, 100)) == \
        Fraction(6, 99)


def test_propagate_invariance_rejects_eps_one():
    with pytest.raises(InvalidInput):
        propagate_invariance(KZ1, Fraction(1, 10), Fraction(1))


def test_propagate_invariance_soundness_sampled():
    rng = np.random.default_rng(7)
    K = CROSS1
    for _ in range(25):
        m = int(rng.integers(8, 20))
        F = Z2.box(m, m)
        delta = invariance_defect(K, F) + Fraction(1, 100)
        # toggle fewer than eps|F| elements
        eps = Fraction(1, 8)
        budget = (eps.numerator * len(F)) // eps.denominator - 1
        flips = int(rng.integers(1, max(budget, 2)))
        elems = set(F.elements)
        for _ in range(flips):
            if rng.random() < 0.5 and len(elems) > 1:
                elems.remove(sorted(elems)[int(rng.integers(0, len(elems)))])
            else:
                elems.add((int(rng.integers(-2, m + 2)),
                           int(rng.integers(-2, m + 2))))
        Fp = Z2.shape(elems)
        actual_eps = Fraction(len(set(F.elements) ^ set(Fp.elements)), len(F))
        if actual_eps >= eps:
            continue
        bound = propagate_invariance(K, delta, eps)
        assert invariance_defect(K, Fp) < bound


def test_shape_canonical_order_and_dedup():
    s = Z2.shape([(1, 0), (0, 0), (1, 0), (0, 1)])
    assert s.elements == ((0, 0), (0, 1), (1, 0))
    assert len(s) == 3


def test_shape_inverse_and_symmetrize():
    s = Z1.shape([(0,), (1,), (2,)])
    assert s.inverse().elements == ((-2,), (-1,), (0,))
    sym = s.symmetrize()
    assert sym.is_symmetric()
    assert sym.elements == tuple((i,) for i in range(-2, 3))


def test_heisenberg_group_law():
    a, b = (1, 2, 3), (4, 5, 6)
    assert HEIS.mul(a, b) == (5, 7, 14)
    assert HEIS.mul(a, HEIS.inv(a)) == (0, 0, 0)
    assert HEIS.mul(HEIS.inv(a), a) == (0, 0, 0)


def test_lamplighter_group_law():
    a = ((0, 2), 1)
    b = ((1,), -1)
    ab = LAMP.mul(a, b)
    assert LAMP.mul(ab, LAMP.inv(b)) == a
    assert LAMP.mul(a, LAMP.inv(a)) == ((), 0)


@pytest.mark.parametrize("name", ["z1", "z2", "z3", "heis", "lamplighter"])
def test_associativity_spot_checks(name):
    spot_check_associativity(get_model(name), np.random.default_rng(3))


@given(st.lists(st.tuples(st.integers(-9, 9), st.integers(-9, 9)),
                min_size=1, max_size=12),
       st.lists(st.tuples(st.integers(-9, 9), st.integers(-9, 9)),
                min_size=1, max_size=12))
@settings(max_examples=60, deadline=None)
def test_multiply_set_size_bound(k_elems, f_elems):
    K = Z2.shape(k_elems)
    F = Z2.shape(f_elems)
    prod = multiply_set(K, F)
    assert len(prod) <= len(K) * len(F)
    if (0, 0) in K:
        assert set(F.elements) <= set(prod.elements)


@given(st.integers(2, 40), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_defect_formula_when_identity_in_k(m, r):
    # identity in K makes KF contain F, so the defect is (|KF|-|F|)/|F|
    K = Z1.shape([(i,) for i in range(-r, r + 1)])
    F = Z1.folner(m)
    kf = multiply_set(K, F)
    assert invariance_defect(K, F) == Fraction(len(kf) - len(F), len(F))


def test_generators_symmetric_with_identity():
    for name in ("z1", "z2", "z3", "heis", "lamplighter"):
        model = get_model(name)
        gens = model.generators()
        assert model.identity() in gens
        assert gens.is_symmetric()
