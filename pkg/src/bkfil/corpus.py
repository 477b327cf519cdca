"""Module constructors: certified families and fuzzed isogenies.

Certified families carry ``crystalline = True`` with their known weights:
rank-one twists c*E^r, direct sums, tensor products and constant base
changes of these.  Fuzzed families are effective by construction but make no
crystallinity claim, so only the universal checks apply to them.
"""

from __future__ import annotations

import random
from itertools import combinations_with_replacement
from typing import Optional, Sequence

from .errors import UsageError
from .linalg import Zpn
from .ring import EisensteinPoly, poly_mul, poly_pow
from .spec_io import ModuleSpec

DEFAULT_N = 6

# Rank-2 module with weights {0, p+1} whose weak Frobenius verdict fails.
# No explicit matrix is available; the conditional torsion check stays inactive
# until this slot is filled with a ModuleSpec.
NON_SPLIT_SLOT: Optional[ModuleSpec] = None


def default_n_u(h: int, p: int, N: int, s: Optional[int] = None) -> int:
    """Enough u-precision for the mod-p engine (h+p+4) and for reading det(A) mod E^(s+1)."""
    s = h if s is None else s
    return max(h + p + 4, h + N + 1, s + N + 1)


def _E(p: int, N: int, E=None) -> tuple:
    return tuple(EisensteinPoly.default(p, N).coeffs if E is None else EisensteinPoly(E, p, N).coeffs)


def _trunc(f, M: int, q: int) -> tuple:
    f = [int(c) % q for c in f[:M]]
    return tuple(f + [0] * (M - len(f)))


def _pmul(a, b, M: int, q: int) -> tuple:
    return _trunc(poly_mul(a, b, q), M, q)


def _matmul(X, Y, M: int, q: int):
    d, k, e = len(X), len(Y), len(Y[0])
    out = []
    for r in range(d):
        row = []
        for c in range(e):
            acc = [0] * M
            for t in range(k):
                for i, v in enumerate(_pmul(X[r][t], Y[t][c], M, q)):
                    acc[i] = (acc[i] + v) % q
            row.append(tuple(acc))
        out.append(tuple(row))
    return tuple(out)


def _zero(M):
    return tuple([0] * M)


def _const(c, M, q):
    return _trunc([c], M, q)


# ---------------------------------------------------------------- certified families


def rank1(p: int, r: int, c=1, N: int = DEFAULT_N, n_u: Optional[int] = None, E=None) -> ModuleSpec:
    """phi(e) = c E^r e for a unit c (an integer or a coefficient list)."""
    q = p ** N
    Ec = _E(p, N, E)
    c = [c] if isinstance(c, int) else list(c)
    if c[0] % p == 0:
        raise UsageError("twisting constant must be a unit")
    M = n_u or default_n_u(r, p, N)
    entry = _trunc(poly_mul(c, poly_pow(Ec, r, q), q), M, q)
    return ModuleSpec(p, N, M, Ec, ((entry,),), (r,), True, "crys", None, f"rank1-p{p}-r{r}")


def direct_sum(specs: Sequence[ModuleSpec], n_u: Optional[int] = None) -> ModuleSpec:
    s0 = specs[0]
    if any((s.p, s.n_p, s.E) != (s0.p, s0.n_p, s0.E) for s in specs):
        raise UsageError("direct sum needs a common p, n_p and E")
    q = s0.modulus
    weights = None
    if all(s.weights is not None for s in specs):
        weights = tuple(sorted(w for s in specs for w in s.weights))
    if weights is not None:
        M = n_u or default_n_u(max(weights), s0.p, s0.n_p, sum(weights))
    else:
        M = n_u or sum(s.n_u for s in specs)
    d = sum(s.d for s in specs)
    A = [[_zero(M) for _ in range(d)] for _ in range(d)]
    off = 0
    for s in specs:
        for r in range(s.d):
            for c in range(s.d):
                A[off + r][off + c] = _trunc(list(s.A[r][c]), M, q)
        off += s.d
    label = "sum(" + ",".join(s.label for s in specs) + ")"
    return ModuleSpec(s0.p, s0.n_p, M, s0.E, tuple(map(tuple, A)), weights,
                      all(s.crystalline for s in specs), "crys", None, label)


def tensor(a: ModuleSpec, b: ModuleSpec, n_u: Optional[int] = None) -> ModuleSpec:
    """Kronecker product; basis e_i (x) f_j sits at index i * d_b + j."""
    if (a.p, a.n_p, a.E) != (b.p, b.n_p, b.E):
        raise UsageError("tensor product needs a common p, n_p and E")
    q = a.modulus
    weights = None
    if a.weights is not None and b.weights is not None:
        weights = tuple(sorted(x + y for x in a.weights for y in b.weights))
    if n_u:
        M = n_u
    elif weights is not None:
        M = default_n_u(max(weights), a.p, a.n_p, sum(weights))
    else:
        M = max(a.n_u, b.n_u)
    da, db = a.d, b.d
    A = []
    for i in range(da):
        for j in range(db):
            A.append(tuple(_pmul(a.A[i][k], b.A[j][l], M, q) for k in range(da) for l in range(db)))
    return ModuleSpec(a.p, a.n_p, M, a.E, tuple(A), weights, a.crystalline and b.crystalline,
                      "crys", None, f"tensor({a.label},{b.label})")


def random_gl(rng: random.Random, p: int, N: int, d: int) -> list:
    """Uniform-ish element of GL_d(Z/p^N): retry until invertible mod p."""
    Z = Zpn(p, N)
    q = p ** N
    while True:
        U = [[rng.randrange(q) for _ in range(d)] for _ in range(d)]
        if Z.inv(U) is not None:
            return U


def base_change(spec: ModuleSpec, U) -> ModuleSpec:
    """Constant change of basis: A -> U^-1 A U (Frobenius fixes constants)."""
    Z = Zpn(spec.p, spec.n_p)
    Ui = Z.inv(U)
    if Ui is None:
        raise UsageError("base change matrix is not invertible")
    q, M = spec.modulus, spec.n_u
    Uc = [[_const(int(x), M, q) for x in row] for row in U]
    Uic = [[_const(int(x), M, q) for x in row] for row in Ui]
    A = _matmul(_matmul(Uic, spec.A, M, q), Uc, M, q)
    label = f"bc({spec.label})"
    return ModuleSpec(spec.p, spec.n_p, M, spec.E, A, spec.weights, spec.crystalline,
                      spec.flavor, None, label)


# ---------------------------------------------------------------- fuzzed families


def random_unit_matrix(rng: random.Random, p: int, N: int, M: int, d: int, degree: int = 2):
    """Matrix over (Z/p^N)[u]/u^M whose constant term is invertible mod p."""
    q = p ** N
    U0 = random_gl(rng, p, N, d)
    return tuple(tuple(_trunc([U0[r][c]] + [rng.randrange(q) for _ in range(degree)], M, q)
                       for c in range(d)) for r in range(d))


def fuzz_isogeny(rng: random.Random, p: int, N: int, d: int, heights, n_u: Optional[int] = None,
                 E=None) -> ModuleSpec:
    """A = U diag(E^s_i) V with random unit matrices U, V; height max(s_i), no crystallinity claim."""
    q = p ** N
    Ec = _E(p, N, E)
    h = max(heights)
    M = n_u or default_n_u(h, p, N, sum(heights))
    D = [[_zero(M) for _ in range(d)] for _ in range(d)]
    for i, s in enumerate(heights):
        D[i][i] = _trunc(poly_pow(Ec, s, q), M, q)
    U = random_unit_matrix(rng, p, N, M, d)
    V = random_unit_matrix(rng, p, N, M, d)
    A = _matmul(_matmul(U, D, M, q), V, M, q)
    return ModuleSpec(p, N, M, Ec, A, None, False, "crys", None,
                      f"fuzz-p{p}-d{d}-s{'.'.join(map(str, heights))}")


def triangular_isogeny(rng: random.Random, p: int, N: int, d: int, heights, n_u: Optional[int] = None,
                       degree: int = 2, E=None) -> ModuleSpec:
    """Upper-triangular A with diagonal E^s_i and random entries above it.

    Unlike the U diag V family these need not split, so their gradeds can
    carry torsion.  Effective with height at most sum(s_i).
    """
    q = p ** N
    Ec = _E(p, N, E)
    M = n_u or default_n_u(sum(heights), p, N, sum(heights))
    A = [[_zero(M) for _ in range(d)] for _ in range(d)]
    for i, s in enumerate(heights):
        A[i][i] = _trunc(poly_pow(Ec, s, q), M, q)
        for j in range(i + 1, d):
            A[i][j] = _trunc([rng.randrange(q) for _ in range(degree + 1)], M, q)
    return ModuleSpec(p, N, M, Ec, tuple(map(tuple, A)), None, False, "crys", None,
                      f"tri-p{p}-d{d}-s{'.'.join(map(str, heights))}")


# ---------------------------------------------------------------- corpus driver


def weight_tuples(max_weight: int, d: int):
    return list(combinations_with_replacement(range(max_weight + 1), d))


def diagonal(p: int, weights, N: int = DEFAULT_N) -> ModuleSpec:
    return direct_sum([rank1(p, r, N=N) for r in weights]) if len(weights) > 1 else rank1(p, weights[0], N=N)


def certified(p: int, seed: int = 0, N: int = DEFAULT_N, max_weight: Optional[int] = None,
              max_rank: int = 3, samples: int = 6) -> list:
    """Families (a)-(d) with all weights at most max_weight (default 2p).

    Rank-one twists and rank-two sums are exhaustive.  Rank-three sums,
    tensor products and base changes are sampled with the given seed.
    """
    rng = random.Random(seed)
    mw = 2 * p if max_weight is None else max_weight
    q = p ** N
    out = []
    units = [c for c in range(1, q) if c % p]
    for r in range(mw + 1):
        out.append(rank1(p, r, c=rng.choice(units), N=N))
    sums = [diagonal(p, w, N) for w in weight_tuples(mw, 2)]
    out += sums
    if max_rank >= 3:
        for w in rng.sample(weight_tuples(mw, 3), min(samples, len(weight_tuples(mw, 3)))):
            out.append(diagonal(p, w, N))
    for _ in range(samples):
        a = rank1(p, rng.randrange(mw // 2 + 1), c=rng.choice(units), N=N)
        r1, r2 = sorted(rng.sample(range(mw // 2 + 1), 2))
        b = diagonal(p, (r1, r2), N)
        out.append(tensor(a, b))
    for s in rng.sample(sums, min(samples, len(sums))):
        out.append(base_change(s, random_gl(rng, p, N, s.d)))
    return out


KINDS = ("a", "b", "c", "d", "e", "tri", "certified")


def corpus_generate(kind: str, params: Optional[dict] = None, seed: int = 0) -> list:
    """Build a list of ModuleSpec for one family.

    kind: a (rank one), b (direct sums), c (tensor products), d (base changes),
    e (fuzzed U diag V isogenies), tri (fuzzed triangular isogenies),
    certified (a-d together).
    """
    params = dict(params or {})
    p = params.get("p", 3)
    N = params.get("n_p", DEFAULT_N)
    mw = params.get("max_weight", 2 * p)
    count = params.get("count", 8)
    rng = random.Random(seed)
    if kind == "a":
        return [rank1(p, r, N=N) for r in range(mw + 1)]
    if kind == "b":
        return [diagonal(p, w, N) for w in weight_tuples(mw, params.get("d", 2))]
    if kind == "c":
        out = []
        for _ in range(count):
            r1, r2 = rng.randrange(mw // 2 + 1), rng.randrange(mw // 2 + 1)
            out.append(tensor(rank1(p, r1, N=N), rank1(p, r2, N=N)))
        return out
    if kind == "d":
        out = []
        for _ in range(count):
            w = sorted(rng.randrange(mw + 1) for _ in range(params.get("d", 2)))
            out.append(base_change(diagonal(p, w, N), random_gl(rng, p, N, len(w))))
        return out
    if kind in ("e", "tri"):
        d = params.get("d", 2)
        hmax = params.get("max_height", 3)
        out = []
        for _ in range(count):
            hs = [rng.randrange(hmax + 1) for _ in range(d)]
            if kind == "e":
                out.append(fuzz_isogeny(rng, p, N, d, hs, n_u=params.get("n_u")))
            else:
                out.append(triangular_isogeny(rng, p, N, d, hs, n_u=params.get("n_u")))
        return out
    if kind == "certified":
        return certified(p, seed=seed, N=N, max_weight=mw, samples=count)
    raise UsageError(f"unknown corpus kind {kind!r}; expected one of {', '.join(KINDS)}")
