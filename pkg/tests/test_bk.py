import random

import pytest
from hypothesis import given, settings, strategies as st

from bkfil import corpus
from bkfil.bk import (
    BKModule, adapted_basis, base_change_check, chain_check, conjugate_filtration, hodge_graded,
    matching_check, minimal_height, nygaard, phi_image, torsion_crosscheck, weak_frobenius_check,
)
from bkfil.errors import InsufficientPrecision, NotEffective, UsageError
from bkfil.modules import GradedInvariants, Submodule
from bkfil.ring import EisensteinPoly, Prec

from oracles import ppow


def build(A, p=3, N=4, n_u=None, **kw):
    E = EisensteinPoly.default(p, N)
    return BKModule(A, E, Prec(p, N, n_u or 12), **kw)


def E_pow(p, N, r):
    return ppow([-p % p ** N, 1], r, p ** N)


def diag(p, N, ws, **kw):
    return corpus.diagonal(p, tuple(ws), N).build()


def free(p, N, k=1):
    return GradedInvariants((), k, p, N)


# ---------------------------------------------------------------- heights


def test_height_rank_one():
    p, N = 3, 4
    for r in range(4):
        h, _ = minimal_height([[E_pow(p, N, r)]], EisensteinPoly.default(p, N), Prec(p, N, r + N + 2))
        assert h == r


def test_height_witness_solves_equation():
    p, N = 3, 3
    m = build([[[-3, 1], [3]], [[0], [-3, 1]]], p=p, N=N, n_u=8)
    Q = m.Q
    Eh = Q.reduce(m.E.power(m.h))
    zero = Q.reduce([0])
    for i in range(2):
        for j in range(2):
            acc = zero
            for k in range(2):
                acc = Q.add(acc, Q.mul(m.A_Q[i][k], m.B[k][j]))
            assert tuple(acc) == (tuple(Eh) if i == j else tuple(zero))


def test_height_identity():
    h, _ = minimal_height([[[1], [0]], [[0], [1]]], EisensteinPoly.default(3, 3), Prec(3, 3, 8))
    assert h == 0


def test_height_triangular_example():
    # E^2 A^-1 = [[E, -p], [0, E]] is integral while E A^-1 has entry -p/E, so h = 2
    p, N = 3, 3
    A = [[[-3, 1], [3]], [[0], [-3, 1]]]
    h, _ = minimal_height(A, EisensteinPoly.default(p, N), Prec(p, N, 8))
    assert h == 2


def test_not_effective():
    with pytest.raises(NotEffective):
        build([[[3]]])
    with pytest.raises(NotEffective):
        build([[[0, 0, 1]]], p=3, N=2, n_u=8)
    # a zero determinant looks divisible by every available E-power
    with pytest.raises(InsufficientPrecision):
        build([[[1], [0]], [[0], [0]]])


def test_insufficient_precision_reports_need():
    with pytest.raises(InsufficientPrecision) as info:
        build([[E_pow(3, 4, 5)]], n_u=6)
    assert info.value.needed.get("n_u", 0) > 6


def test_declared_weights_validated():
    with pytest.raises(UsageError):
        build([[E_pow(3, 4, 2)]], weights=[1])
    with pytest.raises(UsageError):
        build([[E_pow(3, 4, 2)]], weights=[0, 2])


# ---------------------------------------------------------------- filtrations


def test_phi_image_examples():
    m = build([[[1], [0]], [[0], [1]]])
    assert phi_image(m) == m.full
    m = build([[[-3, 1], [0]], [[0], [-3, 1]]])
    assert phi_image(m) == m.e_power_full(1)


def test_rank_one_closed_forms():
    p, N = 3, 6
    for r in range(2 * p + 1):
        m = corpus.rank1(p, r, N=N).build()
        assert m.h == r
        for n in range(m.h + 2):
            assert nygaard(m)[n] == m.e_power_full(max(n, r))
            assert hodge_graded(m)[n] == (free(p, N) if n == r else free(p, N, 0))
            conj = conjugate_filtration(m)[n]
            assert conj == (Submodule.full(m.ht_ring, 1) if n >= r else Submodule.zero(m.ht_ring, 1))


def test_diagonal_closed_forms():
    p, N = 3, 5
    for ws in [(0, 2), (1, 1), (0, 4), (2, 5)]:
        m = diag(p, N, ws)
        assert m.crystalline and m.declared_weights == tuple(sorted(ws))
        for n in range(m.h + 2):
            want = sum(1 for r in ws if r == n)
            assert m.hodge_graded[n] == free(p, N, want)
            assert m.conj_graded[n] == free(p, N, want)
            # Fil_n is spanned by the coordinates with r_i <= n
            rows = [[1 if j == i else 0 for j in range(2)] for i, r in enumerate(ws) if r <= n]
            assert m.conj(n) == Submodule.from_rows(m.ht_ring, 2, rows) if rows else m.conj(n).cardinality_log() == 0
        assert m.derived_weights == tuple(ws)
        assert matching_check(m).ok and chain_check(m).ok


def test_fil_h_is_everything():
    m = diag(2, 4, (1, 3))
    assert m.conj(m.h) == Submodule.full(m.ht_ring, 2)


def test_scrambled_diagonal_matches_split():
    rng = random.Random(3)
    p, N = 3, 4
    base = corpus.diagonal(p, (0, 1, 3), N)
    for _ in range(3):
        U = corpus.random_gl(rng, p, N, 3)
        m, m2 = base.build(), corpus.base_change(base, U).build()
        assert all(m.hodge_graded[n] == m2.hodge_graded[n] for n in range(m.h + 2))
        assert base_change_check(m, U).ok


# ---------------------------------------------------------------- precision loss


def test_torsion_example_weights_and_loss():
    p, N = 3, 4
    A = [[[-3, 1], [3]], [[0], [-3, 1]]]
    m = build(A, p=p, N=N, n_u=10)
    assert m.h == 2 and m.loss == 1
    g = [m.graded(n) for n in range(3)]
    assert g[0] == free(p, N - 1) and g[2] == free(p, N - 1)
    assert g[1] == GradedInvariants((1,), 0, p, N - 1)
    assert m.derived_weights == (0, 2)
    assert matching_check(m).ok
    wf = weak_frobenius_check(m)
    assert wf.ok and wf.detail == {"torsion_free": False, "adapted_basis": False, "decomposable": False, "agree": True}
    assert torsion_crosscheck(m).ok is None


# ---------------------------------------------------------------- adapted bases


def test_adapted_basis_diagonal():
    p, N = 3, 4
    m = diag(p, N, (1, 3))
    basis = adapted_basis(m)
    assert basis is not None
    wf = weak_frobenius_check(m)
    assert wf.ok and all(wf.detail[k] for k in ("torsion_free", "adapted_basis", "decomposable"))


def test_adapted_basis_rank_one():
    m = corpus.rank1(3, 2, N=4).build()
    assert adapted_basis(m) is not None


def test_torsion_crosscheck_torsion_free_cases():
    for ws in [(2,), (0, 3), (1, 1)]:
        res = torsion_crosscheck(diag(3, 4, ws))
        assert res.ok and res.detail["n"] == 0


# ---------------------------------------------------------------- universal properties


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["e", "tri"]))
def test_matching_and_chains_on_fuzz(seed, kind):
    rng = random.Random(seed)
    p = rng.choice((2, 3))
    hs = [rng.randrange(3) for _ in range(2)]
    gen = corpus.fuzz_isogeny if kind == "e" else corpus.triangular_isogeny
    m = gen(rng, p, 3, 2, hs).build()
    assert matching_check(m).ok
    assert chain_check(m).ok is not False
    wf = weak_frobenius_check(m, raise_on_disagree=False)
    assert wf.ok is not False


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_base_change_invariance_on_fuzz(seed):
    rng = random.Random(seed)
    m = corpus.triangular_isogeny(rng, 2, 3, 2, [rng.randrange(3), rng.randrange(3)]).build()
    assert base_change_check(m, corpus.random_gl(rng, 2, 3, 2)).ok


def test_fuzz_height_is_max_exponent():
    rng = random.Random(5)
    for _ in range(5):
        hs = [rng.randrange(4) for _ in range(2)]
        m = corpus.fuzz_isogeny(rng, 3, 3, 2, hs).build()
        assert m.h == max(hs) and m.s == sum(hs)
        assert sorted(m.derived_weights) == sorted(hs)


def test_de_rham_side_survives_base_change():
    # the height witness satisfies A B = E^h only modulo E^K, so coordinates come from solving A y = v
    rng = random.Random(2)
    base = corpus.direct_sum([corpus.rank1(3, 0), corpus.rank1(3, 3)])
    for _ in range(4):
        m = corpus.base_change(base, corpus.random_gl(rng, 3, base.n_p, 2)).build()
        assert [m.hodge_dr[n].cardinality_log() for n in range(m.h + 2)] == \
            [base.build().hodge_dr[n].cardinality_log() for n in range(m.h + 2)]
        assert torsion_crosscheck(m).ok
