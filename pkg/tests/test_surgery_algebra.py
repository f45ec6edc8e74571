from math import gcd

import pytest
from hypothesis import given, strategies as st

from fibretool.errors import DegenerateSurgery, NotCoprime, NotPrimitive
from fibretool.surgery_algebra import (
    SurgeryData, det3, direction_normalizer, ext_gcd, gluing_matrix, is_integral,
    matvec, solve_k, surgery_class,
)


def brute_k(p, q):
    # smallest non-negative residue found by exhaustive search
    return next(k for k in range(p) if (q * k + 1) % p == 0)


coprime_pq = st.tuples(st.integers(1, 300), st.integers(-300, 300)).filter(lambda t: gcd(*t) == 1)
primitive = st.tuples(st.integers(-500, 500), st.integers(-500, 500)).filter(lambda t: gcd(*t) == 1)


def test_ext_gcd_identity():
    for a in range(-30, 31):
        for b in range(-30, 31):
            g, x, y = ext_gcd(a, b)
            assert g == gcd(a, b)
            assert a * x + b * y == g


def test_solve_k_matches_brute_force():
    for p in range(1, 60):
        for q in range(-60, 61):
            if gcd(p, q) == 1:
                assert solve_k(p, q) == brute_k(p, q)


def test_known_matrices():
    assert gluing_matrix(SurgeryData(2, 1)) == ((1, 0, 0), (0, 1, 1), (0, 1, 2))
    # 3k + 1 = 0 mod 2 -> k = 1, center (3+1)/2
    assert gluing_matrix(SurgeryData(2, 3)) == ((1, 0, 0), (0, 2, 3), (0, 1, 2))
    # 2k + 1 = 0 mod 5 -> k = 2, center 1
    assert gluing_matrix(SurgeryData(5, 2)) == ((1, 0, 0), (0, 1, 2), (0, 2, 5))
    assert gluing_matrix(SurgeryData(1, 7)) == ((1, 0, 0), (0, 1, 7), (0, 0, 1))


def test_p_zero():
    d = SurgeryData(0, 1)
    assert d.k == -1
    assert gluing_matrix(d) == ((1, 0, 0), (0, 0, 1), (0, -1, 0))
    assert det3(gluing_matrix(d)) == 1
    assert det3(gluing_matrix(SurgeryData(0, -1))) == 1
    with pytest.raises(DegenerateSurgery):
        SurgeryData(0, 2)


def test_rejections():
    with pytest.raises(NotCoprime):
        SurgeryData(4, 6)
    with pytest.raises(NotPrimitive):
        SurgeryData(3, 1, (2, 4))
    with pytest.raises(ValueError):
        SurgeryData(-1, 1)
    with pytest.raises(ValueError):
        SurgeryData(5, 2, k=3)


def test_normalizer_examples():
    assert direction_normalizer((0, 1)) == ((1, 0), (0, 1))
    assert direction_normalizer((1, 0)) == ((0, -1), (1, 0))
    with pytest.raises(NotPrimitive):
        direction_normalizer((2, 2))


def test_integral():
    assert is_integral(SurgeryData(5, 1))
    assert is_integral(SurgeryData(5, -1))
    assert not is_integral(SurgeryData(5, 2))


@given(coprime_pq, primitive)
def test_gluing_invariants(pq, alpha):
    p, q = pq
    d = SurgeryData(p, q, alpha)
    G = gluing_matrix(d)
    assert det3(G) == 1
    assert matvec(G, (0, 0, 1)) == (0, q, p)
    assert 0 <= d.k < p
    assert (q * d.k + 1) % p == 0
    gamma = surgery_class(d)
    assert gamma.is_primitive()
    assert gamma.coeffs == (q * alpha[0], q * alpha[1], p)


@given(primitive)
def test_normalizer_properties(alpha):
    M = direction_normalizer(alpha)
    assert matvec(M, alpha) == (0, 1)
    assert abs(M[0][0] * M[1][1] - M[0][1] * M[1][0]) == 1
    assert M[0][0] >= 0
    # normalized gamma has zero first-factor part
    d = SurgeryData(3, 2, alpha)
    g = surgery_class(d)
    assert matvec(M, g.coeffs[:2]) == (0, 2)
