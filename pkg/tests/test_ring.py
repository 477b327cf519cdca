import pytest
from hypothesis import given, settings, strategies as st

from bkfil.errors import DomainError, UsageError
from bkfil.ring import (
    EisensteinPoly, PolyQuotient, Prec, SeriesElt, eval_is_unit, frobenius, max_e_adic_order,
    poly_pow, series_add, series_mul, weierstrass_divide,
)

from oracles import pmul


def S(coeffs, prec):
    return SeriesElt.make(coeffs, prec)


def test_product_of_conjugates():
    P = Prec(5, 3, 6)
    assert (S([1, 1], P) * S([1, -1], P)).coeffs == S([1, 0, -1], P).coeffs


def test_square_mod_nine():
    P = Prec(3, 2, 4)
    x = S([3, 1], P)
    assert (x * x).coeffs == (0, 6, 1, 0)


def test_mismatched_precision_is_usage_error():
    with pytest.raises(UsageError):
        S([1], Prec(3, 2, 4)) + S([1], Prec(3, 2, 5))


def test_effective_precision_takes_minimum():
    P = Prec(3, 2, 6)
    a, b = SeriesElt.make([1, 2], P, eff_u=3), SeriesElt.make([1], P, eff_u=5)
    assert (a * b).eff_u == 3 and (a + b).eff_u == 3


def test_frobenius_examples():
    P = Prec(2, 3, 8)
    assert frobenius(S([1, 1, 0, 1], P)).coeffs == S([1, 0, 1, 0, 0, 0, 1], P).coeffs
    assert frobenius(S([0, 1], Prec(3, 2, 8))).coeffs == S([0, 0, 0, 1], Prec(3, 2, 8)).coeffs
    assert frobenius(S([7], P)).coeffs == S([7], P).coeffs


def test_frobenius_precision_ledger():
    P = Prec(3, 2, 10)
    assert frobenius(SeriesElt.make([1, 1], P, eff_u=2)).eff_u == 6
    assert frobenius(SeriesElt.make([1, 1], P, eff_u=5)).eff_u == 10


def test_weierstrass_examples():
    p, N, M = 3, 4, 10
    P, E = Prec(p, N, M), EisensteinPoly.default(p, N)
    q, exact = weierstrass_divide(S([-9, 0, 1], P), E, 1)
    assert exact and q.reliable()[:2] == (3, 1) and not any(q.reliable()[2:])
    _, exact = weierstrass_divide(S([0, 1], P), E, 1)
    assert not exact
    with pytest.raises(DomainError) as info:
        weierstrass_divide(S([0, 1], P), E, 1, require_exact=True)
    assert info.value.remainder is not None
    q, exact = weierstrass_divide(S(E.power(3), P), E, 2)
    assert exact and list(q.reliable()[:2]) == [(-3) % 81, 1] and not any(q.reliable()[2:])


def test_division_loses_precision():
    p, N, M = 3, 3, 12
    P, E = Prec(p, N, M), EisensteinPoly.default(p, N)
    q, exact = weierstrass_divide(S(E.power(2), P), E, 2)
    assert exact and q.eff_u < M


def test_unit_test_examples():
    P = Prec(3, 2, 4)
    assert eval_is_unit(S([1, 1], P))
    assert not eval_is_unit(S([3, 1], P))
    assert eval_is_unit(S([2], P))


def test_eisenstein_validation():
    with pytest.raises(UsageError):
        EisensteinPoly((9, 1), 3, 3)  # constant term has valuation 2
    with pytest.raises(UsageError):
        EisensteinPoly((3, 1, 2), 3, 3)  # not monic
    E = EisensteinPoly((3, 3, 1), 3, 3)
    assert E.e == 2
    with pytest.raises(UsageError):
        E.a("crys")
    D = EisensteinPoly.default(5, 2)
    assert D.a("crys") == 1 and D.a("log") == 5


def _binomial_order(eff, p, N):
    # u^eff = sum_j C(eff, j) p^j E^(eff-j); it dies mod (p^N, E^K) iff every term with eff-j < K does
    from math import comb
    K = 0
    while all(comb(eff, j) * p ** j % p ** N == 0 for j in range(eff + 1) if eff - j < K + 1):
        K += 1
    return K


def test_e_adic_order_for_linear_e():
    for p, N in ((2, 3), (3, 2), (5, 4)):
        E = EisensteinPoly.default(p, N)
        for eff in range(N, N + 6):
            assert max_e_adic_order(eff, E) == _binomial_order(eff, p, N) >= eff - N + 1


def test_quotient_ring_reduction():
    E = EisensteinPoly.default(3, 3)
    Q = PolyQuotient.e_adic(E, 2)
    assert not any(Q.reduce(E.power(2)))
    assert Q.is_unit(Q.reduce([1, 1]))
    a = Q.reduce([2, 5, 7])
    T = Q.mult_matrix(a)
    x = Q.reduce([1, 2])
    assert tuple(int(v) % 27 for v in T.dot(list(x))) == Q.mul(a, x)


# ---------------------------------------------------------------- properties

coef = st.integers(min_value=0, max_value=10 ** 6)
params = st.sampled_from([(2, 3, 6), (3, 2, 5), (5, 2, 4)])


@st.composite
def triples(draw):
    p, N, M = draw(params)
    P = Prec(p, N, M)
    mk = lambda: S(draw(st.lists(coef, min_size=M, max_size=M)), P)
    return P, mk(), mk(), mk()


@settings(max_examples=60, deadline=None)
@given(triples())
def test_ring_axioms(t):
    P, x, y, z = t
    assert ((x * y) * z).coeffs == (x * (y * z)).coeffs
    assert (x * (y + z)).coeffs == (x * y + x * z).coeffs
    assert series_add(x, y).coeffs == series_add(y, x).coeffs
    assert series_mul(x, S([0], P)).coeffs == S([0], P).coeffs


@settings(max_examples=60, deadline=None)
@given(triples())
def test_frobenius_is_ring_map(t):
    _, x, y, _ = t
    assert frobenius(x * y).coeffs == (frobenius(x) * frobenius(y)).coeffs
    assert frobenius(x + y).coeffs == (frobenius(x) + frobenius(y)).coeffs


@settings(max_examples=60, deadline=None)
@given(triples())
def test_multiplication_matches_naive(t):
    P, x, y, _ = t
    assert list((x * y).coeffs) == pmul(list(x.coeffs), list(y.coeffs), P.modulus, P.n_u)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 3), (3, 2), (5, 2)]), st.integers(0, 3),
       st.lists(st.integers(0, 10 ** 4), min_size=1, max_size=3))
def test_division_round_trip(pn, n, g):
    p, N = pn
    E = EisensteinPoly.default(p, N)
    M = 12
    P = Prec(p, N, M)
    f = S(pmul(poly_pow(E.poly(), n, p ** N), g, p ** N), P)
    q, exact = weierstrass_divide(f, E, n)
    assert exact
    back = S(E.power(n), P) * q
    assert back.coeffs[:q.eff_u] == f.coeffs[:q.eff_u]
